"""Command-line front end for convergence studies.

Example
-------
    forchmix --mesh-sizes 4,8,16 --out report.csv

solves the default problem (quadratic drag, time-ramped polynomial
pressure) on meshes of 4, 8 and 16 cells per side, writes a CSV report,
and renders the error-decay figure next to it.
"""

import argparse
import sys

from forchmix.study import (FORMATS, PROBLEMS, StudyConfig, StudyError,
                            run_study, validate_config, write_outputs)


def _int_list(text):
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(
            "expected comma-separated integers, got %r" % (text,))


def _float_list(text):
    if text.strip() == "":
        return ()
    try:
        return tuple(float(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(
            "expected comma-separated numbers, got %r" % (text,))


def build_parser():
    parser = argparse.ArgumentParser(
        prog="forchmix",
        description="Mixed-element convergence studies for nonlinear "
                    "momentum laws of porous-media flow.")
    parser.add_argument("--mesh-sizes", type=_int_list, default=(4, 8, 16, 32, 64),
                        metavar="N1,N2,...",
                        help="cells per side, a doubling ladder "
                             "(default 4,8,16,32,64)")
    stepping = parser.add_mutually_exclusive_group()
    stepping.add_argument("--dt", type=float, default=None,
                          help="fixed time step for every mesh")
    stepping.add_argument("--dt-rule", choices=["1/N"], default="1/N",
                          help="per-mesh step rule when --dt is not given "
                               "(default 1/N)")
    parser.add_argument("--t-final", type=float, default=1.0,
                        help="time horizon (default 1.0)")
    parser.add_argument("--tol", type=float, default=1e-6,
                        help="nonlinear iteration tolerance (default 1e-6)")
    parser.add_argument("--g-coeffs", type=_float_list, default=(1.0, 1.0),
                        metavar="C0,C1,...",
                        help="drag polynomial coefficients (default 1,1)")
    parser.add_argument("--g-exponents", type=_float_list, default=(1.0,),
                        metavar="E1,E2,...",
                        help="drag polynomial exponents; pass '' for a "
                             "linear law (default 1)")
    parser.add_argument("--problem", choices=list(PROBLEMS),
                        default="manufactured",
                        help="problem to solve (default manufactured)")
    parser.add_argument("--format", choices=list(FORMATS), default="csv",
                        help="report format (default csv)")
    parser.add_argument("--out", default=None, metavar="PATH",
                        help="report file; the error figure and any "
                             "diagnostics are written next to it "
                             "(default: print the report)")
    parser.add_argument("--diagnostics", action="store_true",
                        help="also write per-step diagnostic tables")
    return parser


def parse_config(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    config = StudyConfig(
        mesh_sizes=args.mesh_sizes,
        dt=args.dt,
        dt_rule=args.dt_rule,
        t_final=args.t_final,
        nonlinear_tol=args.tol,
        coefficients=args.g_coeffs,
        exponents=args.g_exponents,
        problem=args.problem,
        output_format=args.format,
        output_path=args.out,
        diagnostics=args.diagnostics)
    try:
        validate_config(config)
    except ValueError as exc:
        parser.error(str(exc))
    return config


def main(argv=None):
    config = parse_config(argv)
    try:
        result = run_study(config)
    except StudyError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    report, written = write_outputs(result, config)
    if config.output_path:
        for path in written:
            print("wrote %s" % path)
    else:
        print(report, end="")
    return 0


if __name__ == "__main__":
    sys.exit(main())
