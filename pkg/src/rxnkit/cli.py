"""Command-line front end.

Subcommands: simulate, ssa, leap, volpert, steps, decompose, fit.  Every
subcommand accepts ``--config FILE.json`` whose keys are the long option
names (dashes or underscores); flags given on the command line override
the file.  Exit status: 0 success, 1 usage or input error, 2 computational
failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .builtins import BUILTINS
from .decomposition import (
    INITIAL_PRESETS,
    SPECIES_FIXTURES,
    ElementaryStep,
    NoDecomposition,
    SearchBudgetExceeded,
    atomic_matrix,
    enumerate_decompositions,
    generate_steps,
    load_species_fixture,
    lp_bounds,
    overall_imbalance,
    reactant_complexes,
    volpert_filter,
)
from .deterministic import IntegrationError, IntegratorConfig, simulate
from .estimation import FitConfig, IllPosedError, fit_rates
from .fileio import atomic_write, ensemble_csv, events_csv, fit_json, read_dataset, trajectory_csv
from .formula import FormulaError
from .graphs import export_dot, volpert_index
from .network import ReactionNetwork
from .parser import ParseError, format_step, parse_network, parse_reaction, parse_species_file, parse_steps
from .stochastic import DEFAULT_MAX_EVENTS, LeapConfig, SimulationError, ensemble, simulate_jumps, stochastic_rates
from .svgplot import line_plot

EXIT_OK, EXIT_USAGE, EXIT_FAILURE = 0, 1, 2


class UsageError(Exception):
    pass


class ComputationError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# ---------------------------------------------------------------- helpers

def _floats(value, name: str) -> Optional[np.ndarray]:
    if value is None:
        return None
    if isinstance(value, (int, float)):
        return np.array([float(value)])
    if isinstance(value, str):
        value = [v for v in value.replace(";", ",").split(",") if v.strip()]
    try:
        return np.array([float(v) for v in value])
    except (TypeError, ValueError):
        raise UsageError(f"--{name}: expected a comma-separated list of numbers, got {value!r}") from None


def _names(value) -> list[str]:
    if value is None:
        return []
    if isinstance(value, str):
        return [v.strip() for v in value.split(",") if v.strip()]
    return [str(v) for v in value]


def _mapping(value, name: str) -> dict[str, float]:
    """``A=1,P=0.5`` or a JSON object."""
    if value is None:
        return {}
    if isinstance(value, dict):
        return {str(k): float(v) for k, v in value.items()}
    out = {}
    for item in _names(value):
        key, sep, v = item.partition("=")
        if not sep:
            raise UsageError(f"--{name}: expected NAME=VALUE pairs, got {item!r}")
        try:
            out[key.strip()] = float(v)
        except ValueError:
            raise UsageError(f"--{name}: not a number: {v!r}") from None
    return out


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from None


def _check_out(path: Optional[str]) -> None:
    if path and path != "-":
        parent = Path(path).resolve().parent
        if not parent.is_dir():
            raise UsageError(f"output directory does not exist: {parent}")


def _emit(path: Optional[str], text: str) -> None:
    if not path or path == "-":
        sys.stdout.write(text)
    else:
        atomic_write(path, text)


def _load_network(args):
    """``(network, builtin entry or None)`` from --builtin, --file or the positional name."""
    if args.builtin:
        if args.builtin not in BUILTINS:
            raise UsageError(f"unknown builtin {args.builtin!r}; choose from {', '.join(sorted(BUILTINS))}")
        return BUILTINS[args.builtin].network, BUILTINS[args.builtin]
    path = args.file
    if path is None and args.network:
        if args.network in BUILTINS:
            return BUILTINS[args.network].network, BUILTINS[args.network]
        path = args.network
    if path is None:
        raise UsageError("no network given (use a builtin name, --builtin or --file)")
    return parse_network(_read_text(path)), None


def _network_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("network", nargs="?", help="builtin name or network file")
    p.add_argument("--builtin", help=f"builtin network: {', '.join(sorted(BUILTINS))}")
    p.add_argument("--file", help="network file (skips builtin lookup)")
    p.add_argument("--k", help="rate coefficients, comma separated")
    p.add_argument("--external", help="external species values, NAME=VALUE,...")


def _rates(args, network: ReactionNetwork) -> np.ndarray:
    k = _floats(args.k, "k")
    if k is None:
        return network.rates
    if k.size != len(network.steps):
        raise UsageError(f"--k: expected {len(network.steps)} values, got {k.size}")
    return k


def _initial(value, network: ReactionNetwork, default, name: str) -> np.ndarray:
    v = _floats(value, name)
    if v is None:
        if default is None:
            raise UsageError(f"--{name} is required for this network")
        return np.asarray(default, dtype=float)
    n = len(network.internal_species)
    if v.size != n:
        raise UsageError(f"--{name}: expected {n} values ({', '.join(network.internal_species)}), got {v.size}")
    return v


# ---------------------------------------------------------------- simulate

def _output_grid(t0: float, t1: float, points: int, logt: bool, tmin: Optional[float]) -> np.ndarray:
    if points < 2:
        raise UsageError("--points must be at least 2")
    if not logt:
        return np.linspace(t0, t1, points)
    first = tmin if tmin is not None else t0 + min(1e-6, (t1 - t0) * 1e-6)
    if not t0 < first < t1:
        raise UsageError("--tmin must lie strictly between t0 and t1")
    return np.concatenate([[t0], t0 + np.geomspace(first - t0, t1 - t0, points - 1)])


def cmd_simulate(args) -> int:
    network, entry = _load_network(args)
    _check_out(args.out)
    _check_out(args.plot)
    k = _rates(args, network)
    c0 = _initial(args.c0, network, entry.c0 if entry else None, "c0")
    if not args.t1 > args.t0:
        raise UsageError("--t1 must exceed --t0")
    grid = _output_grid(args.t0, args.t1, args.points, args.logt, args.tmin)
    grid[-1] = args.t1
    config = IntegratorConfig(method=args.method, rtol=args.rtol, atol=args.atol, output_times=grid)
    try:
        traj = simulate(network, k, c0, (args.t0, args.t1), config, _mapping(args.external, "external"))
    except IntegrationError as exc:
        raise ComputationError(f"integration failed at t={exc.t_reached:g}: {exc}") from None
    _emit(args.out, trajectory_csv(traj.times, traj.states, traj.species))
    if args.plot:
        atomic_write(args.plot, line_plot(traj.times, traj.states.T, traj.species, ylabel="concentration",
                                          logx=args.logt))
    print(f"# {traj.n_steps} steps, {traj.n_rejected} rejected ({traj.method})", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------- ssa / leap

def cmd_jump(args) -> int:
    network, entry = _load_network(args)
    _check_out(args.out)
    _check_out(args.plot)
    k = _rates(args, network)
    volume = args.volume if args.volume is not None else (entry.volume if entry else None)
    rates_as = args.rates_as
    if rates_as is None:
        rates_as = "stochastic" if (entry and entry.rates_are_stochastic) or volume is None else "deterministic"
    if rates_as == "deterministic":
        if volume is None:
            raise UsageError("--volume is required to convert deterministic rate coefficients")
        if not volume > 0:
            raise UsageError("--volume must be positive")
        rates = stochastic_rates(network, k, volume, _mapping(args.external, "external"))
    else:
        rates = stochastic_rates(network, k, None, _mapping(args.external, "external"))
    x0 = _floats(args.x0, "x0")
    if x0 is None:
        if entry is None or entry.x0 is None:
            raise UsageError("--x0 is required for this network")
        x0 = entry.x0
    if x0.size != len(rates.species) or np.any(x0 < 0) or np.any(x0 != np.round(x0)):
        raise UsageError(f"--x0: expected {len(rates.species)} nonnegative integers")
    if not args.T > 0:
        raise UsageError("--T must be positive")
    try:
        config = LeapConfig(epsilon=args.epsilon, critical_threshold=args.critical, tau=args.tau)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    x0 = x0.astype(np.int64)
    if args.runs < 1:
        raise UsageError("--runs must be >= 1")
    if args.max_events < 1:
        raise UsageError("--max-events must be >= 1")
    if args.runs == 1:
        traj = simulate_jumps(rates, x0, args.T, args.method, args.seed, config, max_events=args.max_events)
        _emit(args.out, events_csv(traj.times, traj.counts, traj.fired, traj.species))
        if args.plot:
            atomic_write(args.plot, line_plot(traj.times, traj.counts.T, traj.species, ylabel="count", step=True))
        extra = ", absorbed" if traj.absorbed else ""
        print(f"# {args.method}: {len(traj.times) - 1} records{extra}; {traj.stats}", file=sys.stderr)
    else:
        grid = np.linspace(0.0, args.T, args.points)
        stats = ensemble(rates, x0, grid, args.runs, args.method, args.seed, config, args.max_events)
        _emit(args.out, ensemble_csv(stats.times, stats.mean, stats.var, stats.species))
        if args.plot:
            atomic_write(args.plot, line_plot(stats.times, stats.mean.T, [f"mean {s}" for s in stats.species],
                                              ylabel="count"))
    return EXIT_OK


# ---------------------------------------------------------------- volpert

def cmd_volpert(args) -> int:
    network, _ = _load_network(args)
    _check_out(args.dot)
    initial = _names(args.initial)
    if not initial:
        raise UsageError("--initial needs at least one species")
    try:
        idx = volpert_index(network, initial)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    print(idx.table())
    if args.dot:
        _emit(args.dot, export_dot(idx))
    return EXIT_OK


# ---------------------------------------------------------------- steps / decompose

def _load_species(args):
    """Species list and the fixture's overall reaction (or None)."""
    src = args.species
    if src is None:
        raise UsageError("no species given (fixture name or species file)")
    if src in SPECIES_FIXTURES and not args.file_species:
        return load_species_fixture(src), SPECIES_FIXTURES[src][1]
    return parse_species_file(_read_text(src)), None


def _species_args(p) -> None:
    p.add_argument("species", nargs="?", help=f"species fixture ({', '.join(SPECIES_FIXTURES)}) or species file")
    p.add_argument("--file-species", action="store_true", help="treat SPECIES as a file even if it names a fixture")
    p.add_argument("--max-order", type=int, default=2, help="largest reactant order")
    p.add_argument("--max-product-order", type=int, help="largest product order (default: unrestricted)")
    p.add_argument("--allow-shared", action="store_true", help="allow a species on both sides of a step")


def _generate(args, species):
    if any(s.composition is None for s in species):
        missing = [s.name for s in species if s.composition is None]
        raise UsageError(f"species without formula: {', '.join(missing)}")
    atomic = atomic_matrix(species)
    steps = generate_steps(species, atomic, args.max_order, args.max_product_order, args.allow_shared)
    return atomic, steps


def _steps_text(species, steps) -> str:
    names = [s.name for s in species]
    lines = [f"species: {', '.join(names)}"]
    lines += [format_step(s.as_reaction_step(), names, rate=False) for s in steps]
    return "\n".join(lines) + "\n"


def cmd_steps(args) -> int:
    species, _ = _load_species(args)
    _check_out(args.out)
    atomic, steps = _generate(args, species)
    n_cplx = len(reactant_complexes([s.name for s in species], args.max_order))
    _emit(args.out, _steps_text(species, steps))
    print(f"examined {n_cplx} reactant complexes; generated {len(steps)} elementary steps "
          f"({len(species)} species, {atomic.shape[0]}-row atomic matrix)", file=sys.stderr)
    return EXIT_OK


def _frac(v: Fraction) -> str:
    return str(v.numerator) if v.denominator == 1 else f"{v} (~{float(v):.4g})"


def cmd_decompose(args) -> int:
    species, default_overall = _load_species(args)
    _check_out(args.out)
    overall_text = args.overall or default_overall
    if not overall_text:
        raise UsageError("--overall is required")
    overall = ElementaryStep.from_reaction_step(parse_reaction(overall_text))
    if args.steps_file:
        net = parse_steps(_read_text(args.steps_file))
        steps = [ElementaryStep.from_reaction_step(s) for s in net.steps]
        atomic = atomic_matrix(species)
        n_cplx = None
    else:
        atomic, steps = _generate(args, species)
        n_cplx = len(reactant_complexes([s.name for s in species], args.max_order))
    names = [s.name for s in species]
    unknown = [n for n in (*overall.reactants, *overall.products) if n not in names]
    if unknown:
        raise UsageError(f"overall reaction uses unknown species: {', '.join(unknown)}")
    imbalance = overall_imbalance(overall, atomic)
    if imbalance:
        raise ComputationError(f"infeasible: overall reaction is not balanced ({imbalance})")
    report = []
    if n_cplx is not None:
        report.append(f"# examined {n_cplx} reactant complexes; generated {len(steps)} elementary steps")
    # a step identical to the overall reaction decomposes it trivially
    steps = [s for s in steps if s != overall]
    initial = args.initial
    if initial:
        initial_names = list(INITIAL_PRESETS[initial]) if initial in INITIAL_PRESETS else _names(initial)
        bad = [n for n in initial_names if n not in names]
        if bad:
            raise UsageError(f"--initial: unknown species {', '.join(bad)}")
        steps, ungenerable = volpert_filter(steps, initial_names, names)
        report.append(f"# after Volpert filtering from {{{', '.join(initial_names)}}}: {len(steps)} steps; "
                      f"never formed: {', '.join(ungenerable) or 'none'}")
    report.append(f"# overall: {overall}")
    try:
        bounds = lp_bounds(steps, overall, names, per_step=not args.no_per_step)
    except NoDecomposition:
        raise ComputationError("infeasible: the overall reaction is not a nonnegative combination of the steps")
    report.append(f"# LP lower bound on the number of steps: {_frac(bounds.min_total_steps)}")
    for step, lb in bounds.lower_bounds.items():
        report.append(f"# present in every decomposition: {step}  (multiplicity >= {_frac(lb)})")
    if args.bounds_only:
        _emit(args.out, "\n".join(report) + "\n")
        return EXIT_OK
    max_steps = args.max_steps if args.max_steps is not None else math.ceil(bounds.min_total_steps)
    status = EXIT_OK
    try:
        sols = enumerate_decompositions(steps, overall, max_steps, names, node_limit=args.node_limit)
        complete = True
    except SearchBudgetExceeded as exc:
        sols, complete = exc.partial, False
        status = EXIT_FAILURE
    report.append(f"# decompositions with at most {max_steps} steps: {len(sols)}"
                  + ("" if complete else " (search stopped at the node limit; incomplete)"))
    for i, sol in enumerate(sorted(sols, key=lambda s: (s.total_steps, s.vector)), start=1):
        report.append(f"## solution {i}: {sol.total_steps} steps")
        report.append(str(sol))
    _emit(args.out, "\n".join(report) + "\n")
    if not complete:
        print("error: node limit reached; result incomplete", file=sys.stderr)
    return status


# ---------------------------------------------------------------- fit

def cmd_fit(args) -> int:
    network, entry = _load_network(args)
    _check_out(args.out)
    _check_out(args.plot)
    if not args.data:
        raise UsageError("--data is required")
    dataset = read_dataset(_read_text(args.data))
    k0 = _floats(args.k0, "k0")
    if k0 is None:
        raise UsageError("--k0 is required")
    if k0.size != len(network.steps) or np.any(~(k0 > 0)):
        raise UsageError(f"--k0: expected {len(network.steps)} positive values")
    c0 = _initial(args.c0, network, entry.c0 if entry else None, "c0")
    free = None if args.free is None else [int(v) - 1 for v in _floats(args.free, "free")]
    if free is not None and any(not 0 <= r < len(network.steps) for r in free):
        raise UsageError("--free: step numbers are 1-based and must exist")
    config = FitConfig(max_iter=args.max_iter)
    try:
        result = fit_rates(network, dataset, k0, c0, config, free)
    except IllPosedError as exc:
        raise ComputationError(str(exc)) from None
    except IntegrationError as exc:
        raise ComputationError(f"model evaluation failed: {exc}") from None
    _emit(args.out, fit_json(result.as_dict()))
    if args.plot:
        fine = np.linspace(0.0, dataset.times[-1], 200)
        traj = simulate(network, result.k_hat, c0, (0.0, fine[-1]), IntegratorConfig(rtol=1e-8, output_times=fine))
        cols = [traj.species.index(n) for n in dataset.observed_species]
        markers = [(dataset.times, col, f"data {n}") for n, col in zip(dataset.observed_species, dataset.observations.T)]
        atomic_write(args.plot, line_plot(fine, traj.states[:, cols].T, [f"fit {n}" for n in dataset.observed_species],
                                          ylabel="concentration", markers=markers))
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rxnkit", description="Reaction kinetics toolkit.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_, description=help_)
        p.set_defaults(func=func)
        p.add_argument("--config", help="JSON file of option values (flags override)")
        return p

    p = add("simulate", cmd_simulate, "Integrate the mass-action ODE.")
    _network_args(p)
    p.add_argument("--c0", help="initial concentrations of the internal species")
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--t1", type=float, default=1.0)
    p.add_argument("--rtol", type=float, default=1e-6)
    p.add_argument("--atol", type=float, default=1e-12)
    p.add_argument("--method", choices=("stiff", "explicit"), default="stiff")
    p.add_argument("--points", type=int, default=201, help="number of output times")
    p.add_argument("--logt", action="store_true", help="log-spaced output times and log time axis")
    p.add_argument("--tmin", type=float, help="first positive output time with --logt")
    p.add_argument("--out", help="trajectory CSV (default: standard output)")
    p.add_argument("--plot", help="SVG plot file")

    for name, methods, default, help_ in (
        ("ssa", ("direct", "explicit", "implicit", "trapezoidal"), "direct", "Exact stochastic simulation."),
        ("leap", ("explicit", "implicit", "trapezoidal"), "explicit", "tau-leaping simulation."),
    ):
        p = add(name, cmd_jump, help_)
        _network_args(p)
        p.add_argument("--method", choices=methods, default=default)
        p.add_argument("--x0", help="initial counts of the internal species")
        p.add_argument("--volume", type=float, help="reaction volume in dm^3")
        p.add_argument("--rates-as", choices=("deterministic", "stochastic"),
                       help="interpret --k as deterministic (converted with --volume) or stochastic constants")
        p.add_argument("--T", type=float, default=1.0, help="final time")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--runs", type=int, default=1, help="ensemble size; 1 writes the event trajectory")
        p.add_argument("--points", type=int, default=101, help="ensemble output times")
        p.add_argument("--epsilon", type=float, default=0.03, help="leap condition tolerance")
        p.add_argument("--tau", type=float, help="fixed leap size")
        p.add_argument("--critical", type=int, default=10, help="critical reaction threshold")
        p.add_argument("--max-events", type=int, default=DEFAULT_MAX_EVENTS,
                       help="events (leaps plus exact steps) allowed per run")
        p.add_argument("--out", help="CSV output (default: standard output)")
        p.add_argument("--plot", help="SVG plot file")

    p = add("volpert", cmd_volpert, "Volpert indexing from a set of initial species.")
    _network_args(p)
    p.add_argument("--initial", help="initial species, comma separated")
    p.add_argument("--dot", help="write the indexed Volpert graph as DOT")

    p = add("steps", cmd_steps, "Generate elementary steps balanced in atoms and charge.")
    _species_args(p)
    p.add_argument("--out", help="step file (default: standard output)")

    p = add("decompose", cmd_decompose, "Decompose an overall reaction into elementary steps.")
    _species_args(p)
    p.add_argument("--overall", help="overall reaction, e.g. 'H2 + Br2 -> 2 HBr'")
    p.add_argument("--steps-file", help="use the steps in this file instead of generating them")
    p.add_argument("--initial", help=f"initial species (comma separated) or preset: {', '.join(INITIAL_PRESETS)}")
    p.add_argument("--max-steps", type=int, help="largest total number of steps (default: the LP bound)")
    p.add_argument("--node-limit", type=int, default=10**6, help="search node budget")
    p.add_argument("--no-per-step", action="store_true", help="skip the per-step LP bounds")
    p.add_argument("--bounds-only", action="store_true", help="report the LP bounds without enumerating")
    p.add_argument("--out", help="report file (default: standard output)")

    p = add("fit", cmd_fit, "Fit rate coefficients to concentration data.")
    _network_args(p)
    p.add_argument("--data", help="CSV with header t,<species...>; blank cells are missing")
    p.add_argument("--k0", help="initial rate coefficients")
    p.add_argument("--c0", help="initial concentrations (default: builtin values)")
    p.add_argument("--free", help="1-based indices of the fitted steps (default: all)")
    p.add_argument("--max-iter", type=int, default=50)
    p.add_argument("--out", help="JSON report (default: standard output)")
    p.add_argument("--plot", help="SVG plot of data and fitted model")
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if getattr(args, "config", None) is None:
        return args
    try:
        cfg = json.loads(_read_text(args.config))
    except json.JSONDecodeError as exc:
        raise UsageError(f"{args.config}: invalid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise UsageError(f"{args.config}: expected a JSON object")
    subparser = parser._subparsers._group_actions[0].choices[args.command]
    dests = {a.dest for a in subparser._actions if a.dest not in ("help", "config", "func")}
    values = {}
    for key, v in cfg.items():
        dest = key.lstrip("-").replace("-", "_")
        if dest not in dests:
            raise UsageError(f"{args.config}: unknown option {key!r} for '{args.command}'")
        values[dest] = v
    subparser.set_defaults(**values)
    return parser.parse_args(argv)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _apply_config(parser, argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, FormulaError) as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ComputationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except (IntegrationError, SimulationError, ArithmeticError, NoDecomposition) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
