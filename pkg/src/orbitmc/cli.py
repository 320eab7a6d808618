"""Command-line front end. Exit codes: 0 all checks pass, 1 a check failed, 2 usage or config error."""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigParse
from .experiments import EXAMPLES, ExperimentConfig, run


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--seed", type=_u64, default=d(0), help="random seed (default 0)")
    parser.add_argument("--out", default=d(None), help="write the report here instead of stdout")
    parser.add_argument("--format", choices=("json", "csv"), default=d("json"), dest="fmt")
    parser.add_argument("--tol", type=float, default=d(None), help="override every equality-check tolerance")


def _model_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", help="JSON file with pi, matrix and a 1-based partition")
    parser.add_argument("--example", choices=sorted(EXAMPLES), help="built-in model (default three-state)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="orbitmc", description=__doc__)
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="kind", required=True)

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text, description=help_text)
        _global_flags(p, suppress=True)
        return p

    p = add("kernel", "Orbit kernels (Gibbs, Metropolis-Hastings, Barker) and their sandwiches QPQ, "
                      "with the closed-form GPG cross-check.")
    _model_flags(p)

    p = add("spectra", "Spectra of P and its orbit sandwiches, projection and restriction chains, "
                       "escape probability, the decomposition gap bound and the MH constant theta.")
    _model_flags(p)

    p = add("kl", "KL divergences to the invariant set: Pythagorean identity for GPG, its failure for MPM "
                  "on the four-state example, and data-processing gaps.")
    _model_flags(p)

    p = add("design", "KL-optimal k-orbit partition, star orbit sampler and exact samplers with GPG = Pi.")
    p.add_argument("--pi", type=float, nargs="+", help="target distribution (default: five-state example)")
    p.add_argument("--k", type=int, help="number of orbits")

    p = add("altproj", "Alternating orbit projections: grid partitions, cosine vs operator norm, "
                       "the c^(2t-1) rate, the recursive exact schedule and the V-shaped model.")
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--schedule-d", type=int, default=4, dest="schedule_d")

    p = add("curie-weiss", "Curie-Weiss star sampler vs Glauber dynamics: orbit masses, exact mixing times "
                           "and their bounds, optional streaming-sampler chi-square check.")
    p.add_argument("--d", type=int, default=8)
    p.add_argument("--beta", type=float, default=2.25)
    p.add_argument("--kcut", default="auto", help="integer or 'auto' (smallest with delta > 0.05)")
    p.add_argument("--eps", type=float, default=0.25)
    p.add_argument("--samples", type=int, default=0, help="streamed star moves for the chi-square check")
    p.add_argument("--start", type=int, default=0, help="start state (integer bit code) for streaming")

    p = add("tune", "Learn an orbit partition from trajectories: adaptive block tuning or an exploratory hot chain.")
    tsub = p.add_subparsers(dest="mode", required=True)
    a = tsub.add_parser("adaptive", help="adaptive tuning of G from G_t P G_t blocks")
    _global_flags(a, suppress=True)
    _model_flags(a)
    a.add_argument("--k", type=int, default=2)
    a.add_argument("--block", type=int, default=50)
    a.add_argument("--steps", type=int, default=5000)
    a.add_argument("--rank-by", choices=("energy", "frequency"), default="energy", dest="rank_by")
    e = tsub.add_parser("explore", help="learn G at a hot temperature, use it at the target temperature")
    _global_flags(e, suppress=True)
    e.add_argument("--d", type=int, default=4, help="Curie-Weiss spins")
    e.add_argument("--beta-explore", type=float, default=0.2, dest="beta_explore")
    e.add_argument("--beta-target", type=float, default=3.0, dest="beta_target")
    e.add_argument("--k", type=int, default=2)
    e.add_argument("--steps", type=int, default=2000)

    add("golden", "Regression suite over every worked example value.")
    return parser


GLOBAL = ("kind", "seed", "out", "fmt", "tol")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    params = {k: v for k, v in sorted(vars(args).items()) if k not in GLOBAL}
    try:
        config = ExperimentConfig(args.kind, params, args.seed, args.tol, args.out, args.fmt)
        report = run(config)
    except (ConfigParse, FileNotFoundError, ValueError) as exc:
        print(f"orbitmc: error: {exc}", file=sys.stderr)
        return 2
    if not args.out:
        sys.stdout.write(report.render())
    failed = [c["name"] for c in report.checks if not c["passed"]]
    if failed:
        print(f"orbitmc: failed checks: {', '.join(failed)}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
