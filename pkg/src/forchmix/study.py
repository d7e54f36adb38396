"""Convergence studies over a ladder of refined meshes, with reports.

A study solves the same problem on each mesh of a doubling ladder, measures
the pressure, gradient and flux errors against the exact fields at the
final time, and reports one row per mesh together with the error-reduction
factor between consecutive rows.  Reports render as CSV (stable header) or
a markdown table, deterministically: the same configuration always yields
byte-identical text.  When a report is written to a file, a log-log error
figure is rendered next to it.
"""

import os
from dataclasses import dataclass, field

import numpy as np

from forchmix.law import ForchheimerLaw
from forchmix.mesh import StructuredTriMesh
from forchmix.spaces import assemble
from forchmix.solver import ProblemData, SolverConfig, run
from forchmix.verification import (ManufacturedSolution, convergence_rates,
                                   error_p_L2, error_vec_Lbeta)

CSV_HEADER = "N,err_p_L2,rate_p,err_s_Lbeta,rate_s,err_u_Lbeta,rate_u"

PROBLEMS = ("manufactured", "zero")
FORMATS = ("csv", "markdown")


class StudyError(RuntimeError):
    """A solve inside a study failed; carries the offending mesh size."""

    def __init__(self, mesh_size, cause):
        super().__init__("mesh N=%d failed: %s" % (mesh_size, cause))
        self.mesh_size = mesh_size


@dataclass
class StudyConfig:
    """What to solve, on which meshes, and how to report it.

    ``dt`` fixes the time step for every mesh; leaving it None applies
    ``dt_rule`` ("1/N": one step per mesh interval).  The law defaults to
    quadratic drag.  ``problem`` selects the time-ramped polynomial
    solution or the zero-data problem (whose exact solution vanishes).
    """

    mesh_sizes: tuple = (4, 8, 16, 32, 64)
    dt: float = None
    dt_rule: str = "1/N"
    t_final: float = 1.0
    nonlinear_tol: float = 1e-6
    coefficients: tuple = (1.0, 1.0)
    exponents: tuple = (1.0,)
    problem: str = "manufactured"
    output_format: str = "csv"
    output_path: str = None
    diagnostics: bool = False


@dataclass
class StudyRow:
    n: int
    dt: float
    err_p: float
    err_s: float
    err_u: float


@dataclass
class StudyResult:
    rows: list = field(default_factory=list)
    rate_p: list = field(default_factory=list)
    rate_s: list = field(default_factory=list)
    rate_u: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    beta: float = 2.0


def validate_config(config):
    """Reject inconsistent configurations with a ValueError."""
    sizes = tuple(int(n) for n in config.mesh_sizes)
    if not sizes:
        raise ValueError("mesh size list is empty")
    if any(n < 1 for n in sizes):
        raise ValueError("mesh sizes must be positive")
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError("mesh sizes must be strictly increasing")
    first = sizes[0]
    for n in sizes[1:]:
        ratio, rem = divmod(n, first)
        if rem or ratio & (ratio - 1):
            raise ValueError(
                "mesh size %d is not a power-of-two multiple of %d"
                % (n, first))
    if config.t_final <= 0.0:
        raise ValueError("final time must be positive")
    if config.dt is not None:
        if config.dt <= 0.0:
            raise ValueError("time step must be positive")
        if config.dt > config.t_final:
            raise ValueError("time step exceeds the final time")
    elif config.dt_rule != "1/N":
        raise ValueError("unknown time-step rule %r" % (config.dt_rule,))
    if config.nonlinear_tol <= 0.0:
        raise ValueError("nonlinear tolerance must be positive")
    if config.problem not in PROBLEMS:
        raise ValueError("unknown problem %r" % (config.problem,))
    if config.output_format not in FORMATS:
        raise ValueError("unknown output format %r" % (config.output_format,))
    # constructing the law validates coefficients and exponents
    ForchheimerLaw(config.coefficients, config.exponents)


def _zero_scalar(x, y, t):
    return 0.0 * x


def _zero_vector(x, y, t):
    return 0.0 * x, 0.0 * y


def run_study(config):
    """Solve every mesh of the ladder and collect errors and rates."""
    validate_config(config)
    law = ForchheimerLaw(config.coefficients, config.exponents)
    beta = 2.0 - law.decay_exponent

    if config.problem == "manufactured":
        exact = ManufacturedSolution(law)
        data = exact.problem_data(config.t_final)
        exact_p, exact_s, exact_u = exact.p, exact.s, exact.u
    else:
        data = ProblemData(law=law, t_final=config.t_final)
        exact_p, exact_s, exact_u = _zero_scalar, _zero_vector, _zero_vector

    result = StudyResult(beta=beta)
    for n in config.mesh_sizes:
        dt = config.dt if config.dt is not None else 1.0 / n
        try:
            mesh = StructuredTriMesh(n)
            system = assemble(mesh)
            solver = SolverConfig(dt=dt, nonlinear_tol=config.nonlinear_tol)
            state, diag = run(mesh, system, data, solver)
        except Exception as exc:
            raise StudyError(n, exc) from exc
        t = state.t
        result.rows.append(StudyRow(
            n, dt,
            error_p_L2(mesh, state.p, exact_p, t),
            error_vec_Lbeta(mesh, state.s, exact_s, t, beta),
            error_vec_Lbeta(mesh, state.u, exact_u, t, beta)))
        if config.diagnostics:
            result.diagnostics[n] = diag

    pairs = [(row.n, row.err_p) for row in result.rows]
    result.rate_p = convergence_rates(pairs)
    result.rate_s = convergence_rates(
        [(row.n, row.err_s) for row in result.rows])
    result.rate_u = convergence_rates(
        [(row.n, row.err_u) for row in result.rows])
    return result


def _cells(result, blank):
    for i, row in enumerate(result.rows):
        rates = []
        for column in (result.rate_p, result.rate_s, result.rate_u):
            value = column[i - 1] if i > 0 else None
            rates.append(blank if value is None else "%.2f" % value)
        yield (str(row.n), "%.6e" % row.err_p, rates[0],
               "%.6e" % row.err_s, rates[1], "%.6e" % row.err_u, rates[2])


def render_csv(result):
    lines = [CSV_HEADER]
    lines.extend(",".join(cells) for cells in _cells(result, ""))
    return "\n".join(lines) + "\n"


def render_markdown(result):
    header = CSV_HEADER.split(",")
    lines = ["| " + " | ".join(header) + " |",
             "|" + "---:|" * len(header)]
    lines.extend("| " + " | ".join(cells) + " |"
                 for cells in _cells(result, "-"))
    return "\n".join(lines) + "\n"


def render_report(result, output_format):
    if output_format == "markdown":
        return render_markdown(result)
    return render_csv(result)


def _figure_path(output_path):
    stem, _ = os.path.splitext(output_path)
    return stem + ".png"


def render_figure(result, path):
    """Log-log error decay plot saved next to the report.

    Returns the figure path, or None when every error is zero (nothing to
    draw on logarithmic axes)."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    sizes = np.array([row.n for row in result.rows], dtype=float)
    series = [
        ("pressure, L2", [row.err_p for row in result.rows], "o-"),
        ("gradient, L^%.3g" % result.beta,
         [row.err_s for row in result.rows], "s-"),
        ("flux, L^%.3g" % result.beta,
         [row.err_u for row in result.rows], "^-"),
    ]
    if not any(e > 0.0 for _, errs, _ in series for e in errs):
        return None

    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    for label, errs, style in series:
        errs = np.asarray(errs)
        mask = errs > 0.0
        if mask.any():
            ax.loglog(sizes[mask], errs[mask], style, label=label)
    ax.set_xlabel("mesh size N")
    ax.set_ylabel("error at final time")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def _diagnostics_path(output_path, n):
    stem, _ = os.path.splitext(output_path)
    return "%s.diag-N%d.csv" % (stem, n)


def write_outputs(result, config):
    """Write the report, figure and any diagnostics; list written paths."""
    report = render_report(result, config.output_format)
    written = []
    if config.output_path:
        with open(config.output_path, "w") as handle:
            handle.write(report)
        written.append(config.output_path)
        figure = render_figure(result, _figure_path(config.output_path))
        if figure:
            written.append(figure)
        for n, rows in sorted(result.diagnostics.items()):
            path = _diagnostics_path(config.output_path, n)
            with open(path, "w") as handle:
                handle.write("step,t,picard_iterations,l2_pressure,"
                             "l2_weighted_gradient,linf_pressure\n")
                for row in rows:
                    handle.write("%d,%.10g,%d,%.6e,%.6e,%.6e\n" % (
                        row.step, row.t, row.picard_iterations,
                        row.l2_pressure, row.l2_weighted_gradient,
                        row.linf_pressure))
            written.append(path)
    return report, written
