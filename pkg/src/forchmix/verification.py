"""Manufactured solution and error norms for convergence studies.

The reference pressure ramps linearly in time and vanishes on the boundary
of the unit square:

    p(x, y, t) = t * x(1-x) * y(1-y)

Its gradient s = grad p, the flux u = -K(|s|) s and the source
f = p_t + div u follow from the chosen momentum law by the chain rule, so
any law with a well-defined mobility derivative can be manufactured, the
default being the quadratic drag g(s) = 1 + s whose mobility has the
closed form 2 / (1 + sqrt(1 + 4 xi)).
"""

import numpy as np

from forchmix.law import ForchheimerLaw
from forchmix.mesh import quadrature
from forchmix.solver import ProblemData
from forchmix.spaces import rt0_values


class ManufacturedSolution:
    """Exact fields and source for the time-ramped polynomial pressure."""

    def __init__(self, law=None):
        self.law = law if law is not None else ForchheimerLaw((1.0, 1.0),
                                                              (1.0,))

    def p(self, x, y, t):
        return t * x * (1.0 - x) * y * (1.0 - y)

    def p_t(self, x, y, t):
        return x * (1.0 - x) * y * (1.0 - y) + 0.0 * t

    def s(self, x, y, t):
        return np.stack(np.broadcast_arrays(
            t * (1.0 - 2.0 * x) * y * (1.0 - y),
            t * x * (1.0 - x) * (1.0 - 2.0 * y)), axis=-1)

    def u(self, x, y, t):
        return self.law.flux_of_gradient(self.s(x, y, t))

    def f(self, x, y, t):
        """Source p_t + div u, assembled by the chain rule.

        div(K(|s|) s) = K(|s|) lap(p) + K'(|s|) (s . H s) / |s| with H the
        pressure Hessian; the second term vanishes continuously as s -> 0.
        """
        x, y, t = np.broadcast_arrays(x, y, np.asarray(t, dtype=float))
        svec = self.s(x, y, t)
        smag = np.linalg.norm(svec, axis=-1)
        lap = -2.0 * t * (x * (1.0 - x) + y * (1.0 - y))
        h11 = -2.0 * t * y * (1.0 - y)
        h22 = -2.0 * t * x * (1.0 - x)
        h12 = t * (1.0 - 2.0 * x) * (1.0 - 2.0 * y)
        s1, s2 = svec[..., 0], svec[..., 1]
        quad_form = s1 * s1 * h11 + 2.0 * s1 * s2 * h12 + s2 * s2 * h22
        kval = np.asarray(self.law.mobility(smag))
        kink = np.zeros_like(smag)
        pos = smag > 0.0
        if np.any(pos):
            kprime = self.law.mobility_prime(smag[pos])
            kink[pos] = kprime * quad_form[pos] / smag[pos]
        return self.p_t(x, y, t) - (kval * lap + kink)

    def problem_data(self, t_final=1.0):
        """Solver inputs for this solution: zero initial pressure and
        homogeneous boundary values."""
        return ProblemData(law=self.law, f=self.f, p0=None, grad_p0=None,
                           t_final=t_final)


def _exact_vector(exact, x, y, t):
    vals = exact(x, y, t)
    if isinstance(vals, tuple):
        vals = np.stack(np.broadcast_arrays(*vals), axis=-1)
    return np.asarray(vals, dtype=float)


def error_p_L2(mesh, p_coeffs, exact, t, degree=4):
    """L2 distance between a piecewise-constant pressure and exact(x,y,t)."""
    rule = quadrature(degree)
    pts = mesh.mapped_points(rule)
    diff = p_coeffs[None, :] - exact(pts[:, :, 0], pts[:, :, 1], t)
    cell = np.einsum("q,qt->t", rule.weights, diff**2)
    return float(np.sqrt(np.sum(mesh.areas * cell)))


def error_p_Linf(mesh, p_coeffs, exact, t, degree=4):
    """Max pointwise pressure mismatch over the rule's sample points."""
    rule = quadrature(degree)
    pts = mesh.mapped_points(rule)
    diff = p_coeffs[None, :] - exact(pts[:, :, 0], pts[:, :, 1], t)
    return float(np.max(np.abs(diff)))


def error_vec_Lbeta(mesh, coeffs, exact, t, beta, degree=4):
    """L^beta distance between a discrete vector field and exact(x,y,t).

    ``coeffs`` with shape (nt, 2) is read as a piecewise-constant field,
    a flat array of edge values as a flux-space field.
    """
    rule = quadrature(degree)
    pts = mesh.mapped_points(rule)
    coeffs = np.asarray(coeffs)
    if coeffs.ndim == 2:
        vals = np.broadcast_to(coeffs[None, :, :], pts.shape)
    else:
        vals = rt0_values(mesh, coeffs, rule)
    diff = vals - _exact_vector(exact, pts[:, :, 0], pts[:, :, 1], t)
    mag = np.linalg.norm(diff, axis=-1)
    cell = np.einsum("q,qt->t", rule.weights, mag**beta)
    return float(np.sum(mesh.areas * cell) ** (1.0 / beta))


def convergence_rates(errors):
    """Error-reduction factor between consecutive study rows.

    ``errors`` is a list of (mesh size, error) pairs on a doubling ladder;
    entry i of the result is errors[i-1] / errors[i], the convention used
    for reporting, with None where a ratio is undefined.
    """
    rates = []
    for (_, prev), (_, cur) in zip(errors, errors[1:]):
        if prev > 0.0 and cur > 0.0:
            rates.append(prev / cur)
        else:
            rates.append(None)
    return rates
