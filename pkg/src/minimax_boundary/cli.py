"""``minimax-boundary`` command line front end.

Subcommands::

    constants   solved constants, both support candidates and both risk constants
    kernel      boundary kernel table (t, psi) and its risk report
    rd-kernel   two-sided RD kernel table and its risk report
    oracle      brute-force verification battery with a pass/fail ledger
    simulate    Monte Carlo risk of the minimax estimator

Exit status is 0 when every requested check passes, 1 on a verification
failure and 2 on invalid usage.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from . import _io
from .exceptions import ConvergenceError, MinimaxBoundaryError
from .kernel_risk import (NoiseModel, boundary_kernel, minimax_risk, modulus, optimal_delta,
                          rd_kernel, rd_minimax_risk, rd_modulus)
from .least_favorable import SmoothnessParams, optimal_solution, scale_solution, solve_constants
from .oracle import run_battery
from .piecewise import PiecewiseQuadratic
from .simulator import (DEFAULT_CELLS_PER_SUPPORT, PathConfig, RDScenario, build_rd_scenario,
                        monte_carlo_risk, rd_monte_carlo)

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2
SCENARIOS = ("f_star", "minus_f_star", "zero", "rd", "rd_zero_jump")


def _positive_float(text: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (math.isfinite(x) and x > 0):
        raise argparse.ArgumentTypeError(f"must be positive and finite, got {text}")
    return x


def _positive_int(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if n <= 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return n


def _seed(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= n < 2**64:
        raise argparse.ArgumentTypeError(f"seed must fit in 64 unsigned bits, got {text}")
    return n


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--sigma", type=_positive_float, default=1.0, help="noise level")
    common.add_argument("--c", type=_positive_float, default=1.0, dest="c_lipschitz",
                        help="curvature bound |f''| <= C")
    common.add_argument("--out", type=Path, default=None,
                        help="output file (directory for kernel commands); stdout if omitted")
    common.add_argument("--format", choices=("json", "csv"), default=None,
                        help="output format (kernel commands default to csv, others to json)")
    common.add_argument("--seed", type=_seed, default=0)
    common.add_argument("--grid-n", type=_positive_int, default=None,
                        help="kernel table steps, oracle grid cells or cells per kernel support")
    common.add_argument("--horizon", type=_positive_float, default=4.0,
                        help="oracle horizon T")
    common.add_argument("--replications", type=_positive_int, default=10_000)
    common.add_argument("--tolerance-profile", choices=("strict", "quick"), default="strict")

    parser = argparse.ArgumentParser(prog="minimax-boundary", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("constants", parents=[common], help="solved constants")
    sub.add_parser("kernel", parents=[common], help="boundary kernel table and risk")
    sub.add_parser("rd-kernel", parents=[common], help="RD kernel table and risk")
    sub.add_parser("oracle", parents=[common], help="verification battery")
    sim = sub.add_parser("simulate", parents=[common], help="Monte Carlo risk")
    sim.add_argument("--scenario", choices=SCENARIOS, default="f_star")
    return parser


def _tagged(values: dict, sources: dict, default: str = "closed_form") -> dict:
    doc = dict(values)
    doc["sources"] = {k: sources.get(k, default) for k in values}
    return doc


def _flat_rows(doc: dict, prefix: str = ""):
    for k, v in doc.items():
        if k == "sources":
            continue
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            yield from _flat_rows(v, key + ".")
        elif isinstance(v, (list, tuple)):
            for i, item in enumerate(v):
                if isinstance(item, dict):
                    yield from _flat_rows(item, f"{key}[{i}].")
                else:
                    yield key + f"[{i}]", item
        else:
            yield key, v


def _render(doc: dict, fmt: str) -> str:
    if fmt == "json":
        return _io.dumps(doc)
    lines = ["key,value"]
    for k, v in _flat_rows(doc):
        if isinstance(v, bool):
            text = "true" if v else "false"
        elif isinstance(v, float):
            text = _io.format_float(v)
        else:
            text = str(v)
        lines.append(f"{k},{text}")
    return "\n".join(lines) + "\n"


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="utf-8", newline="\n")


def constants_document(noise: NoiseModel, params: SmoothnessParams) -> dict:
    c = solve_constants()
    risk = minimax_risk(noise, params, c.I_star)
    values = {
        "k0": c.k0,
        "I0": c.I0,
        "y_star": c.y_star,
        "I_star": c.I_star,
        "f_prime_0": c.f_prime_0,
        "g0_norm_sq": math.sqrt(2.0) / 5.0,
        "t_bar_display": c.t_bar_display,
        "t_bar_recursion": c.t_bar_recursion,
        "t_bar_constructed": c.t_bar_constructed,
        "sigma": noise.sigma,
        "C": params.lipschitz_constant,
        "risk": risk.risk,
        "paper_constant_without_fifth": risk.paper_constant_without_fifth,
    }
    sources = {"t_bar_display": "paper_display", "paper_constant_without_fifth": "paper_display"}
    return _tagged(values, sources)


def _kernel_command(args, noise, params, rd: bool) -> int:
    sol = optimal_solution()
    if rd:
        kernel = rd_kernel(noise, params, sol)
        report = rd_minimax_risk(noise, params, sol.norm_sq)
        stem = "rd_kernel"
    else:
        kernel = boundary_kernel(noise, params, sol)
        report = minimax_risk(noise, params, sol.norm_sq)
        stem = "kernel"
    t, psi = kernel.tabulate(args.grid_n or 2048)
    values = report.to_dict()
    sources = values.pop("sources")
    values.update(side=kernel.side, amplitude=kernel.amplitude,
                  time_rescale=kernel.time_rescale, support_end=kernel.support_end)
    doc = _tagged(values, {**sources, "side": "config"})
    fmt = args.format or "csv"
    if args.out is not None:
        _io.write_csv(args.out / f"{stem}.csv", ("t", "psi"), (t, psi))
        _io.write_json(args.out / f"{stem}_risk.json", doc)
        return EXIT_OK
    if fmt == "csv":
        lines = ["t,psi"] + [f"{_io.format_float(a)},{_io.format_float(b)}" for a, b in zip(t, psi)]
        sys.stdout.write("\n".join(lines) + "\n")
    else:
        sys.stdout.write(_io.dumps(doc))
    return EXIT_OK


def _oracle_command(args) -> int:
    report = run_battery(args.tolerance_profile, grid_n=args.grid_n or 4000,
                         horizon=args.horizon)
    doc = report.to_dict()
    _emit(_render(doc, args.format or "json"), args.out)
    for name in report.failed():
        print(f"FAILED: {name}", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_FAILED


def _simulate_command(args, noise, params) -> int:
    sol = optimal_solution()
    cells = args.grid_n or DEFAULT_CELLS_PER_SUPPORT
    delta = optimal_delta(noise)
    if args.scenario.startswith("rd"):
        kernel = rd_kernel(noise, params, sol)
        b = rd_modulus(delta, params, sol.norm_sq).b_value
        if args.scenario == "rd":
            scenario = build_rd_scenario(b, params, sol)
        else:
            half = scale_solution(sol, b / 2.0, params).shape
            scenario = RDScenario(half, half, 0.0)
        config = PathConfig.for_kernel(kernel, args.seed, cells_per_support=cells)
        report = rd_monte_carlo(kernel, scenario, noise, config, args.replications)
    else:
        kernel = boundary_kernel(noise, params, sol)
        b = modulus(delta, params, sol.norm_sq).b_value
        f_star = scale_solution(sol, b, params).shape
        f, f0 = {"f_star": (f_star, b), "minus_f_star": (-f_star, -b),
                 "zero": (PiecewiseQuadratic.zero(), 0.0)}[args.scenario]
        config = PathConfig.for_kernel(kernel, args.seed, cells_per_support=cells)
        report = monte_carlo_risk(kernel, f, f0, noise, config, args.replications)

    if args.scenario == "rd_zero_jump":
        passed = abs(report.empirical_bias) <= 3.0 * report.bias_stderr
    else:
        passed = report.within(3.0)
    values = {"scenario": args.scenario, **report.to_dict(), "passed": passed}
    sources = {"analytic_risk": "closed_form", "scenario": "config", "seed": "config",
               "delta_t": "config", "horizon": "config", "replications": "config"}
    doc = _tagged(values, sources, default="monte_carlo")
    _emit(_render(doc, args.format or "json"), args.out)
    return EXIT_OK if passed else EXIT_FAILED


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    noise = NoiseModel(args.sigma)
    params = SmoothnessParams(args.c_lipschitz)
    try:
        if args.command == "constants":
            _emit(_render(constants_document(noise, params), args.format or "json"), args.out)
            return EXIT_OK
        if args.command in ("kernel", "rd-kernel"):
            return _kernel_command(args, noise, params, rd=args.command == "rd-kernel")
        if args.command == "oracle":
            return _oracle_command(args)
        return _simulate_command(args, noise, params)
    except ConvergenceError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_FAILED
    except (MinimaxBoundaryError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
