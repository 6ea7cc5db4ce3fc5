"""Command line entry point ``subspace-perturb``.

Exit codes: 0 when no violations were found, 2 when an experiment reports
violations, 1 for usage, configuration or input errors.
"""

from __future__ import annotations

import argparse
import json
import sys

from .harness import EXPERIMENTS, ConfigError, load_config, run_experiment, write_report
from .linalg import ArgumentError, matrix_norm, read_matrix, two_to_inf_norm
from .procrustes import align
from .subspace import canonical_angles, sin_theta_norms

EXIT_OK, EXIT_ERROR, EXIT_VIOLATIONS = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="subspace-perturb", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", help="JSON config file (defaults are used when omitted)")
        p.add_argument("--seed", type=int, help="override base_seed")
        p.add_argument("--replicates", type=int, help="override replicates")
        p.add_argument("--out", help="report path (stdout when omitted)")
        p.add_argument("--format", choices=("csv", "json"), help="report format")
    p = sub.add_parser("norms", help="print the norms of a matrix file")
    p.add_argument("--matrix", required=True)
    p = sub.add_parser("align", help="Procrustes-align two orthonormal frames")
    p.add_argument("--u", required=True)
    p.add_argument("--uhat", required=True)
    return parser


def _norms(path):
    a = read_matrix(path)
    out = {kind: matrix_norm(a, kind) for kind in ("spectral", "frobenius", "one", "infinity", "max")}
    out["two_to_inf"] = two_to_inf_norm(a)
    return out


def _align(u_path, uhat_path):
    u, uhat = read_matrix(u_path), read_matrix(uhat_path)
    res = align(u, uhat)
    spec, frob = sin_theta_norms(u, uhat)
    return {
        "w": res.w.tolist(),
        "residual_frobenius": res.residual_frobenius,
        "residual_spectral": res.residual_spectral,
        "residual_two_to_inf": res.residual_two_to_inf,
        "non_unique": res.non_unique,
        "canonical_angles": canonical_angles(u, uhat).tolist(),
        "sin_theta_spectral": spec,
        "sin_theta_frobenius": frob,
    }


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "norms":
            print(json.dumps(_norms(args.matrix), indent=2))
            return EXIT_OK
        if args.command == "align":
            print(json.dumps(_align(args.u, args.uhat), indent=2))
            return EXIT_OK
        config = load_config(
            args.config,
            experiment=args.command,
            base_seed=args.seed,
            replicates=args.replicates,
            output_format=args.format,
            output_path=args.out,
        )
        report = run_experiment(config)
        text = write_report(report, config.output_format, config.output_path)
        if config.output_path is None:
            sys.stdout.write(text)
        else:
            print(f"{report.experiment}: violations={report.violations} -> {config.output_path}", file=sys.stderr)
        return EXIT_VIOLATIONS if report.violations else EXIT_OK
    except (ConfigError, ArgumentError, OSError) as exc:
        print(f"subspace-perturb: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
