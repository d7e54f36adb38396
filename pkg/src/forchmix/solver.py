"""Backward-Euler time stepping for the three-field flow system.

Each step solves, for pressure p, flux gradient s and flux u,

    (p^n - p^{n-1}) / dt + div u^n = f^n - dPsi/dt,
    u^n + K(|s^n|) s^n = 0           (elementwise),
    s^n = grad p^n + grad Psi^n      (weakly, through the flux space),

with the nonlinearity handled by freezing the mobility at the previous
iterate.  Because s is piecewise constant it is eliminated elementwise,
s_T = -avg_T(u) / K_T, leaving a symmetric saddle system in (u, p) that a
sparse direct factorization solves each pass.  Boundary pressure data
enters only through the extension field Psi (its gradient and time
derivative); homogeneous problems leave those callables unset.

Runs are deterministic: identical inputs produce bit-identical states.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from forchmix.mesh import quadrature
from forchmix.spaces import l2_project_scalar, l2_project_vector, rt0_interpolate


class PicardDivergenceError(RuntimeError):
    """Raised when the mobility-freezing iteration exhausts its budget.

    Attributes
    ----------
    last_increment : float
        L2 norm of the final gradient update.
    """

    def __init__(self, message, last_increment):
        super().__init__(message)
        self.last_increment = last_increment


@dataclass
class ProblemData:
    """Coefficients and data of one initial-boundary-value problem.

    ``f(x, y, t)``, ``grad_Psi(x, y, t)``, ``Psi_t(x, y, t)``, ``p0(x, y)``,
    ``grad_p0(x, y)`` and ``Psi0(x, y)`` are vectorized callables; any left
    as None is treated as zero, except ``grad_p0`` which falls back to
    differencing ``p0``.
    """

    law: object
    f: object = None
    grad_Psi: object = None
    Psi_t: object = None
    p0: object = None
    grad_p0: object = None
    Psi0: object = None
    t_final: float = 1.0


@dataclass
class SolverConfig:
    dt: float
    nonlinear_tol: float = 1e-6
    max_picard: int = 50


@dataclass
class DiscreteState:
    """Solution coefficients at one time level: pressures per element,
    gradient vectors per element, fluxes per edge."""

    t: float
    p: np.ndarray
    s: np.ndarray
    u: np.ndarray


@dataclass
class PicardStats:
    iterations: int
    increments: list = field(default_factory=list)


@dataclass
class StepDiagnostics:
    step: int
    t: float
    picard_iterations: int
    l2_pressure: float
    l2_weighted_gradient: float
    linf_pressure: float


def _grad_from_p0(p0, h=1e-6):
    def grad(x, y):
        return ((p0(x + h, y) - p0(x - h, y)) / (2.0 * h),
                (p0(x, y + h) - p0(x, y - h)) / (2.0 * h))

    return grad


def initialize(mesh, system, data):
    """Project the initial data onto the discrete spaces.

    The pressure starts from the averages of p0 - Psi(.,0); the gradient
    field from the averages of grad p0; the flux from the edge interpolant
    of -K(|grad p0|) grad p0.
    """
    if data.p0 is None:
        pbar = np.zeros(system.layout.n_p)
    elif data.Psi0 is None:
        pbar = l2_project_scalar(mesh, data.p0)
    else:
        pbar = l2_project_scalar(
            mesh, lambda x, y: data.p0(x, y) - data.Psi0(x, y))

    if data.grad_p0 is not None:
        grad = data.grad_p0
    elif data.p0 is not None:
        grad = _grad_from_p0(data.p0)
    else:
        grad = None

    if grad is None:
        s = np.zeros((system.layout.n_p, 2))
        u = np.zeros(system.layout.n_u)
    else:
        s = l2_project_vector(mesh, grad)
        u = rt0_interpolate(
            mesh, lambda x, y: data.law.flux_of_gradient(
                np.stack(np.broadcast_arrays(*grad(x, y)), axis=-1)))
    return DiscreteState(0.0, pbar, s, u)


def _load_vectors(mesh, system, data, t):
    """Elementwise source integrals F and flux-space boundary load G."""
    rule = quadrature(4)
    pts = mesh.mapped_points(rule)
    x, y = pts[:, :, 0], pts[:, :, 1]

    F = np.zeros(system.layout.n_p)
    if data.f is not None:
        F += mesh.areas * np.einsum("q,qt->t", rule.weights,
                                    np.broadcast_to(data.f(x, y, t), x.shape))
    if data.Psi_t is not None:
        F -= mesh.areas * np.einsum(
            "q,qt->t", rule.weights,
            np.broadcast_to(data.Psi_t(x, y, t), x.shape))

    G = np.zeros(system.layout.n_u)
    if data.grad_Psi is not None:
        vals = data.grad_Psi(x, y, t)
        if isinstance(vals, tuple):
            vals = np.stack(np.broadcast_arrays(*vals), axis=-1)
        vals = np.broadcast_to(np.asarray(vals, dtype=float), pts.shape)
        factors = (mesh.tri_edge_signs * mesh.edge_lengths[mesh.tri_edges]
                   / (2.0 * mesh.areas[:, None]))
        for k in range(3):
            vk = mesh.vertices[mesh.triangles[:, k]]
            phi = factors[:, k][None, :, None] * (pts - vk[None, :, :])
            contrib = mesh.areas * np.einsum("q,qtd,qtd->t", rule.weights,
                                             vals, phi)
            np.add.at(G, mesh.tri_edges[:, k], contrib)
    return F, G


def picard_step(system, data, state_prev, t_new, config):
    """Advance one backward-Euler step by mobility-freezing iteration.

    Stops when the L2 norm of the gradient update drops to the nonlinear
    tolerance, or at once when the frozen mobilities reproduce themselves
    exactly (then the iterate already solves the nonlinear system, as in
    the Darcy case).  Returns the new state and iteration statistics.
    """
    mesh = system.mesh
    areas = mesh.areas
    dt = config.dt
    F, G = _load_vectors(mesh, system, data, t_new)
    rhs_p = F + areas * state_prev.p / dt
    storage = sp.diags(areas / dt)

    s_cur = state_prev.s
    k_cur = np.asarray(data.law.mobility(np.linalg.norm(s_cur, axis=1)))
    stats = PicardStats(0)
    for sweep in range(1, config.max_picard + 1):
        weight = sp.diags(np.repeat(1.0 / (k_cur * areas), 2))
        M_K = (system.C.T @ weight @ system.C).tocsc()
        saddle = sp.bmat([[-M_K, system.B.T], [system.B, storage]],
                         format="csc")
        sol = splu(saddle).solve(np.concatenate([G, rhs_p]))
        u = sol[:system.layout.n_u]
        p = sol[system.layout.n_u:]
        s_new = -system.flux_averages(u) / k_cur[:, None]

        increment = float(np.sqrt(np.sum(
            areas * np.sum((s_new - s_cur) ** 2, axis=1))))
        stats.iterations = sweep
        stats.increments.append(increment)
        k_new = np.asarray(data.law.mobility(np.linalg.norm(s_new, axis=1)))
        if increment <= config.nonlinear_tol or np.array_equal(k_new, k_cur):
            return DiscreteState(t_new, p, s_new, u), stats
        s_cur, k_cur = s_new, k_new
    raise PicardDivergenceError(
        "no contraction to %g within %d sweeps at t=%g"
        % (config.nonlinear_tol, config.max_picard, t_new),
        stats.increments[-1])


def _diagnose(step, state, system, law):
    areas = system.mesh.areas
    smag = np.linalg.norm(state.s, axis=1)
    weighted = np.sqrt(np.sum(
        areas * np.asarray(law.mobility(smag)) * smag**2))
    return StepDiagnostics(
        step, state.t, 0,
        float(np.sqrt(np.sum(areas * state.p**2))),
        float(weighted),
        float(np.max(np.abs(state.p))) if len(state.p) else 0.0)


def run(mesh, system, data, config, on_step=None):
    """March the scheme from t=0 to t_final.

    The horizon must be an integer number of steps.  Per-step diagnostics
    (including a row for the initial state) record the iteration count, the
    pressure norms and the mobility-weighted gradient norm.  A discrete
    mass-balance identity is verified every step.  ``on_step``, if given,
    is called with (previous state, new state, stats) after each step.
    """
    n_steps = round(data.t_final / config.dt)
    if n_steps < 1 or abs(n_steps * config.dt - data.t_final) > 1e-12 * max(
            1.0, data.t_final):
        raise ValueError("time horizon is not a whole number of steps")

    state = initialize(mesh, system, data)
    diagnostics = [_diagnose(0, state, system, data.law)]
    for step in range(1, n_steps + 1):
        t_new = step * config.dt
        new_state, stats = picard_step(system, data, state, t_new, config)
        _check_mass_balance(mesh, system, data, state, new_state, config)
        row = _diagnose(step, new_state, system, data.law)
        row.picard_iterations = stats.iterations
        diagnostics.append(row)
        if on_step is not None:
            on_step(state, new_state, stats)
        state = new_state
    return state, diagnostics


def _check_mass_balance(mesh, system, data, prev, new, config):
    """Summing the pressure rows: storage change plus boundary outflow
    must equal the integrated source, up to direct-solver roundoff."""
    F, _ = _load_vectors(mesh, system, data, new.t)
    storage = np.sum(mesh.areas * (new.p - prev.p)) / config.dt
    outflow = np.sum(system.B @ new.u)
    source = np.sum(F)
    scale = max(1.0, abs(storage) + abs(outflow) + abs(source))
    if abs(storage + outflow - source) > 1e-10 * scale:
        raise RuntimeError("mass balance violated at t=%g" % new.t)
