"""Command-line interface: gen-plant, check, cost, synthesize, reproduce-example.

Exit codes are stable across commands: 0 on success, 1 on domain failures
(non-stabilizing parameters, exhausted initialization, out-of-tolerance
checks), 2 on usage or parse failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .cost import (
    cost_equivalent_forms,
    cost_rational_oracle,
    evaluate,
    gradient_from,
    second_gateaux_from,
)
from .descent import (
    TERMINATION_GRADIENT_SMALL,
    DescentConfig,
    multi_start,
)
from .errors import CqlqgError, DimensionError, NoStabilizerError, ParseError, StabilityError
from .example import EXAMPLE_MIN_COST, example_optimum, example_problem
from .linalg import frobenius_norm, spectral_report
from .model import assemble_closed_loop, check_ccr_preservation, pr_residuals, random_pr_plant
from .problem import (
    Problem,
    load_params,
    load_problem,
    save_controller,
    save_params,
    save_problem,
    write_trace,
)

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_USAGE = 2


def _fmt_spectrum(eigs: np.ndarray) -> str:
    parts = []
    for ev in sorted(eigs, key=lambda z: (-z.real, -abs(z.imag))):
        if abs(ev.imag) < 1e-12:
            parts.append(f"{ev.real:.6g}")
        else:
            sign = "+" if ev.imag >= 0 else "-"
            parts.append(f"{ev.real:.6g} {sign} {abs(ev.imag):.6g}i")
    return ", ".join(parts)


def _load_problem_arg(args) -> Problem:
    if getattr(args, "example", False):
        return example_problem()
    if args.problem is None:
        raise ParseError("either a problem file or --example is required")
    return load_problem(args.problem, tolerance=args.tolerance, strict=args.strict)


def _print_residuals(label: str, residuals, tolerance: float, scale: float) -> bool:
    threshold = tolerance * (1.0 + scale)
    ok = True
    print(f"{label} (threshold {threshold:.3e}):")
    for name, value in residuals.as_dict().items():
        verdict = "ok" if value <= threshold else "EXCEEDED"
        ok &= value <= threshold
        print(f"  {name:12s} {value:.6e}  {verdict}")
    return ok


def _plant_scale(problem: Problem) -> float:
    return max(frobenius_norm(getattr(problem.plant, m)) for m in "ABCDE")


def cmd_gen_plant(args) -> int:
    """Generate a random PR plant and write it as a problem file."""
    try:
        plant, d, ccr = random_pr_plant(
            args.n, args.m1, args.m2, args.p1, args.p2, args.r,
            seed=args.seed, scale=args.scale,
        )
    except DimensionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    problem = Problem(
        plant=plant, d=d, ccr=ccr, descent=DescentConfig(), theta1_source="provided",
    )
    save_problem(args.out, problem)
    residuals = problem.plant_residuals()
    print(f"wrote {args.out}")
    _print_residuals("PR residuals (zero controller)", residuals, args.tolerance, _plant_scale(problem))
    return EXIT_OK


def cmd_check(args) -> int:
    """Validate a problem file: PR residuals, spectra, CCR preservation."""
    problem = _load_problem_arg(args)
    scale = _plant_scale(problem)
    print(f"theta1: {problem.theta1_source}")
    if problem.theta1_info is not None:
        print(f"  ccr11 residual        {problem.theta1_info.ccr11_residual:.6e}")
        print(f"  ccr12_plant residual  {problem.theta1_info.ccr12_plant_residual:.6e}")
    report = spectral_report(problem.plant.A)
    print(f"plant spectrum: {_fmt_spectrum(report.eigenvalues)}")
    print(f"plant A is {'Hurwitz' if report.is_hurwitz else 'not Hurwitz'}")
    ok = _print_residuals("plant PR residuals", problem.plant_residuals(), args.tolerance, scale)
    if problem.init is not None:
        k = problem.realization_for(problem.init)
        ok &= _print_residuals(
            "controller PR residuals", pr_residuals(problem.plant, k, problem.ccr),
            args.tolerance, scale + problem.init.norm(),
        )
        loop = assemble_closed_loop(problem.plant, k)
        loop_report = spectral_report(loop.A)
        print(f"closed-loop spectrum: {_fmt_spectrum(loop_report.eigenvalues)}")
        print(f"closed loop is {'Hurwitz' if loop_report.is_hurwitz else 'not Hurwitz'}")
        preservation = check_ccr_preservation(loop, problem.ccr)
        threshold = args.tolerance * 10.0 * (1.0 + scale + problem.init.norm())
        verdict = "ok" if preservation <= threshold else "EXCEEDED"
        ok &= preservation <= threshold
        print(f"CCR preservation residual {preservation:.6e}  {verdict}")
    return EXIT_OK if ok else EXIT_DOMAIN


def cmd_cost(args) -> int:
    """Evaluate cost, gradient norm and curvature for a parameter file."""
    problem = _load_problem_arg(args)
    u = load_params(args.params)
    ev = evaluate(u, problem.plant, problem.ccr, problem.d)
    if not ev.stable:
        print(f"non-stabilizing: max closed-loop eigenvalue real part "
              f"{ev.spectrum.max_real_part:.6g}")
        return EXIT_DOMAIN
    g = gradient_from(ev, problem.plant, problem.ccr, problem.d)
    second = second_gateaux_from(ev, g, problem.plant, problem.ccr, problem.d)
    e1, e2, e3 = cost_equivalent_forms(ev.loop, ev.grams)
    oracle = cost_rational_oracle(ev.loop)
    print(f"cost            {ev.cost!r}")
    print(f"gradient norm   {g.norm()!r}")
    print(f"second gateaux  {second!r}")
    print(f"cost forms      {e1!r}  {e2!r}  {e3!r}")
    print(f"rational oracle {oracle!r}")
    return EXIT_OK


def _run_synthesis(problem: Problem, args):
    config = problem.descent
    if args.seed is not None:
        from dataclasses import replace

        config = replace(config, seed=args.seed)
    return multi_start(problem.plant, problem.ccr, problem.d, config, args.starts)


def _write_traces(prefix: str, outcome) -> None:
    for run in outcome.runs:
        write_trace(f"{prefix}_start{run.start_index:02d}.csv", run.trace)


def cmd_synthesize(args) -> int:
    """Synthesize a locally optimal controller from random starts."""
    problem = _load_problem_arg(args)
    try:
        outcome = _run_synthesis(problem, args)
    except NoStabilizerError as exc:
        print(f"initialization failed: {exc} (attempts: {exc.attempts})", file=sys.stderr)
        return EXIT_DOMAIN
    best = outcome.best
    realization = problem.realization_for(best.final_params)
    save_controller(args.out, best, realization)
    if args.trace:
        _write_traces(args.trace, outcome)
    print(f"wrote {args.out}")
    print(f"starts: {len(outcome.runs)} (failed inits: {outcome.failed_inits})")
    for run in outcome.runs:
        print(f"  start {run.start_index:2d}: cost {run.final_cost:.6f} "
              f"after {run.iterations} iterations ({run.termination})")
    print(f"best cost {best.final_cost!r} ({best.termination}, "
          f"|g| = {best.final_grad_norm:.3e})")
    return EXIT_OK


def cmd_reproduce_example(args) -> int:
    """Run the bundled example end to end and emit traces and summaries."""
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    problem = example_problem()
    save_problem(out_dir / "problem.json", problem)
    save_params(out_dir / "reference_optimum.json", example_optimum())
    try:
        outcome = _run_synthesis(problem, args)
    except NoStabilizerError as exc:
        print(f"initialization failed: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    best = outcome.best
    save_controller(out_dir / "best_controller.json", best,
                    problem.realization_for(best.final_params))
    _write_traces(str(out_dir / "trace"), outcome)
    with open(out_dir / "summary.csv", "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["start", "iterations", "final_cost", "final_grad_norm", "termination"])
        for run in outcome.runs:
            writer.writerow([run.start_index, run.iterations, repr(run.final_cost),
                             repr(run.final_grad_norm), run.termination])
    best_cost = best.final_cost
    with open(out_dir / "deviations.csv", "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["start", "k", "relative_deviation"])
        for run in outcome.runs:
            for rec in run.trace:
                writer.writerow([run.start_index, rec.k, repr(rec.cost / best_cost - 1.0)])
    gradient_small = sum(
        1 for run in outcome.runs if run.termination == TERMINATION_GRADIENT_SMALL
    )
    print(f"runs: {len(outcome.runs)}, terminated on small gradient: {gradient_small}")
    for run in outcome.runs:
        print(f"  start {run.start_index:2d}: cost {run.final_cost:.6f} "
              f"after {run.iterations} iterations ({run.termination})")
    print(f"best cost {best_cost:.6f} (reference minimum {EXAMPLE_MIN_COST})")
    print(f"relative gap to reference: {abs(best_cost / EXAMPLE_MIN_COST - 1.0):.3e}")
    print(f"outputs in {out_dir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cqlqg",
        description="Locally optimal coherent quantum LQG controller synthesis",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-plant", help="generate a random PR plant problem file")
    gen.add_argument("--n", type=int, default=2, help="state dimension (even)")
    gen.add_argument("--m1", type=int, default=4, help="plant noise dimension (even)")
    gen.add_argument("--m2", type=int, default=2, help="controller noise dimension (even)")
    gen.add_argument("--p1", type=int, default=2, help="plant output dimension")
    gen.add_argument("--p2", type=int, default=2, help="controller output dimension")
    gen.add_argument("--r", type=int, default=2, help="cost output dimension")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--scale", type=float, default=1.0, help="Gaussian draw scale")
    gen.add_argument("--tolerance", type=float, default=1e-8)
    gen.add_argument("--out", required=True, help="output problem file")
    gen.set_defaults(handler=cmd_gen_plant)

    def add_problem_arg(cmd, with_strict=True):
        cmd.add_argument("problem", nargs="?", help="problem file (JSON)")
        cmd.add_argument("--example", action="store_true",
                         help="use the bundled example problem instead of a file")
        cmd.add_argument("--tolerance", type=float, default=1e-8)
        if with_strict:
            cmd.add_argument("--strict", action="store_true",
                             help="fail loading when PR residuals exceed the tolerance")

    check = sub.add_parser("check", help="validate a problem file")
    add_problem_arg(check)
    check.set_defaults(handler=cmd_check)

    cost_cmd = sub.add_parser("cost", help="evaluate cost and gradient for parameters")
    add_problem_arg(cost_cmd)
    cost_cmd.add_argument("params", help="controller parameter file (JSON with R, b, e)")
    cost_cmd.set_defaults(handler=cmd_cost)

    synth = sub.add_parser("synthesize", help="multi-start gradient descent synthesis")
    add_problem_arg(synth)
    synth.add_argument("--out", required=True, help="output controller file")
    synth.add_argument("--starts", type=int, default=10)
    synth.add_argument("--seed", type=int, default=None, help="override the base seed")
    synth.add_argument("--trace", default=None,
                       help="path prefix for per-start trace CSV files")
    synth.set_defaults(handler=cmd_synthesize)

    repro = sub.add_parser("reproduce-example",
                           help="run the bundled example and emit traces + summary")
    repro.add_argument("out_dir", help="output directory")
    repro.add_argument("--starts", type=int, default=10)
    repro.add_argument("--seed", type=int, default=None, help="override the base seed")
    repro.set_defaults(handler=cmd_reproduce_example)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (StabilityError, NoStabilizerError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except CqlqgError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
