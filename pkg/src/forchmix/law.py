"""Nonlinear momentum law for porous-media flow.

The velocity u and pressure gradient are linked through a monomial drag
polynomial g: g(|u|) u = -grad p.  Inverting the scalar relation
s*g(s) = xi (s = |u|, xi = |grad p|) gives the mobility K(xi) = 1/g(s(xi)),
so the flux can be written u = -K(|grad p|) grad p.  A constant g recovers
linear Darcy flow.
"""

import numpy as np
from scipy.integrate import quad


class RootfindError(RuntimeError):
    """Raised when the scalar inversion s*g(s) = xi fails to converge.

    Attributes
    ----------
    residual : float
        Largest relative residual |s*g(s) - xi| / max(xi, 1) at abort.
    """

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


def _validate(coefficients, exponents):
    if len(coefficients) != len(exponents) + 1:
        raise ValueError("need one more coefficient than exponents")
    if coefficients[0] <= 0.0:
        raise ValueError("constant drag coefficient must be positive")
    if any(c < 0.0 for c in coefficients):
        raise ValueError("drag coefficients must be nonnegative")
    if exponents and coefficients[-1] <= 0.0:
        raise ValueError("leading drag coefficient must be positive")
    if any(e <= 0.0 for e in exponents):
        raise ValueError("drag exponents must be positive")
    if any(b <= a for a, b in zip(exponents, exponents[1:])):
        raise ValueError("drag exponents must be strictly increasing")


class ForchheimerLaw:
    """Drag polynomial g(s) = a0 + a1*s**e1 + ... and derived mobility.

    Parameters
    ----------
    coefficients : sequence of float
        (a0, a1, ..., aN) with a0 > 0, aN > 0, middle terms >= 0.
    exponents : sequence of float
        (e1, ..., eN), strictly increasing positives.  Empty for Darcy.

    All evaluation methods accept scalars or numpy arrays.
    """

    def __init__(self, coefficients, exponents=()):
        coefficients = tuple(float(c) for c in coefficients)
        exponents = tuple(float(e) for e in exponents)
        _validate(coefficients, exponents)
        self.coefficients = coefficients
        self.exponents = exponents

    def __repr__(self):
        return "ForchheimerLaw(%r, %r)" % (self.coefficients, self.exponents)

    @property
    def is_darcy(self):
        return not self.exponents

    @property
    def decay_exponent(self):
        """Exponent a in (0,1) governing the large-gradient decay K ~ xi**-a.

        Equals eN/(eN+1) for top drag power eN; zero in the Darcy case.
        """
        if self.is_darcy:
            return 0.0
        top = self.exponents[-1]
        return top / (top + 1.0)

    # -- drag polynomial ----------------------------------------------------

    def g(self, s):
        """Evaluate the drag polynomial at speed s >= 0."""
        s = np.asarray(s, dtype=float)
        if np.any(s < 0.0):
            raise ValueError("speed must be nonnegative")
        out = np.full_like(s, self.coefficients[0])
        for c, e in zip(self.coefficients[1:], self.exponents):
            out = out + c * s**e
        return out if out.ndim else float(out)

    def _g_prime(self, s):
        out = np.zeros_like(np.asarray(s, dtype=float))
        for c, e in zip(self.coefficients[1:], self.exponents):
            out = out + c * e * s ** (e - 1.0)
        return out

    def _s_g_prime(self, s):
        # s*g'(s) summed termwise, finite at s = 0 for any exponent > 0
        out = np.zeros_like(np.asarray(s, dtype=float))
        for c, e in zip(self.coefficients[1:], self.exponents):
            out = out + c * e * s**e
        return out

    # -- inversion of s*g(s) = xi -------------------------------------------

    def speed(self, xi, max_iter=100):
        """Solve s*g(s) = xi for the speed s >= 0.

        Since s*g(s) >= a0*s the root lies in [0, xi/a0]; s*g(s) is convex
        and increasing there, so Newton started at the upper endpoint
        converges monotonically.  Two-term and Darcy laws use closed forms.
        Relative residual at exit is below 1e-12.
        """
        xi = np.asarray(xi, dtype=float)
        if np.any(xi < 0.0):
            raise ValueError("gradient magnitude must be nonnegative")
        scalar = xi.ndim == 0
        xi = np.atleast_1d(xi)
        a0 = self.coefficients[0]
        if self.is_darcy:
            s = xi / a0
        elif self.exponents == (1.0,):
            # a1*s^2 + a0*s - xi = 0, stable quadratic root
            a1 = self.coefficients[1]
            s = 2.0 * xi / (a0 + np.sqrt(a0 * a0 + 4.0 * a1 * xi))
        else:
            s = self._speed_newton(xi, max_iter)
        return float(s[0]) if scalar else s

    def _speed_newton(self, xi, max_iter):
        a0 = self.coefficients[0]
        s = xi / a0
        scale = np.where(xi > 0.0, xi, 1.0)
        res = s * self.g(s) - xi
        for _ in range(max_iter):
            if np.all(np.abs(res) <= 1e-13 * scale):
                return s
            slope = self.g(s) + self._s_g_prime(s)
            s = np.maximum(s - res / slope, 0.0)
            res = s * self.g(s) - xi
        worst = float(np.max(np.abs(res) / scale))
        if worst > 1e-12:
            raise RootfindError("speed inversion stalled", worst)
        return s

    # -- mobility and friends -----------------------------------------------

    def mobility(self, xi):
        """Mobility K(xi) = 1/g(s(xi)); nonincreasing, K(0) = 1/a0."""
        return 1.0 / self.g(self.speed(xi))

    def mobility_prime(self, xi):
        """Derivative dK/dxi for xi > 0, by implicit differentiation.

        With s'(xi) = 1/(g + s g'), K'(xi) = -g'(s) s'(xi) / g(s)^2.
        """
        xi = np.asarray(xi, dtype=float)
        if np.any(xi <= 0.0):
            raise ValueError("mobility derivative needs xi > 0")
        scalar = xi.ndim == 0
        xi = np.atleast_1d(xi)
        s = np.atleast_1d(self.speed(xi))
        if self.is_darcy:
            out = np.zeros_like(xi)
        else:
            gval = self.g(s)
            gp = self._g_prime(s)
            out = -gp / (gval + s * gp) / gval**2
        return float(out[0]) if scalar else out

    def mobility_integral(self, xi):
        """Integral of K(sqrt(t)) dt over [0, xi^2].

        Substituting t = r^2 turns the integrand into the smooth 2*r*K(r)
        on [0, xi]; adaptive quadrature then resolves it to ~1e-12 relative.
        """
        xi = np.asarray(xi, dtype=float)
        if np.any(xi < 0.0):
            raise ValueError("gradient magnitude must be nonnegative")
        scalar = xi.ndim == 0

        def _one(z):
            if z == 0.0:
                return 0.0
            val, _ = quad(lambda r: 2.0 * r * self.mobility(r), 0.0, z,
                          epsabs=1e-14, epsrel=1e-12, limit=200)
            return val

        if scalar:
            return _one(float(xi))
        return np.array([_one(float(z)) for z in np.ravel(xi)]).reshape(xi.shape)

    # -- vector forms ---------------------------------------------------------

    def flux_of_gradient(self, grad):
        """Velocity -K(|y|) y for a gradient 2-vector y (or (n,2) array)."""
        grad = np.asarray(grad, dtype=float)
        xi = np.linalg.norm(grad, axis=-1)
        return -np.asarray(self.mobility(xi))[..., None] * grad

    def gradient_of_flux(self, flux):
        """Gradient -g(|u|) u driving a given velocity u; inverse of
        flux_of_gradient up to roundoff."""
        flux = np.asarray(flux, dtype=float)
        mag = np.linalg.norm(flux, axis=-1)
        return -np.asarray(self.g(mag))[..., None] * flux
