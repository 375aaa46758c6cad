"""Continuous-time Markov jump simulation of mass-action networks.

Counts ``x`` are integers.  The propensity of step ``r`` is the binomial
count of reactant combinations times a stochastic rate constant ``c_r``::

    kappa_r(x) = c_r * prod_m C(x_m, alpha[m, r])

With ``c_r = k_r * prod(alpha!) * (N_A V) ** (1 - order)`` deterministic
and stochastic means agree in the large-volume limit.

Every run draws from ``Generator(Philox(SeedSequence(seed, spawn_key=(run,))))``
so a trajectory is a pure function of its inputs, the seed and the run index.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from . import _kernels
from .builtins import AVOGADRO
from .network import KineticSystem, ReactionNetwork

__all__ = [
    "SimulationError",
    "StochasticRates",
    "JumpTrajectory",
    "LeapConfig",
    "EnsembleStats",
    "propensity",
    "propensities",
    "convert_rate",
    "stochastic_rates",
    "select_tau",
    "highest_reactant_order",
    "direct_method",
    "explicit_tau_leap",
    "implicit_tau_leap",
    "trapezoidal_tau_leap",
    "simulate_jumps",
    "ensemble_samples",
    "ensemble",
    "run_generator",
    "METHODS",
    "DEFAULT_MAX_EVENTS",
]

METHODS = ("direct", "explicit", "implicit", "trapezoidal")
_LEAP_CODE = {"explicit": _kernels.EXPLICIT, "implicit": _kernels.IMPLICIT, "trapezoidal": _kernels.TRAPEZOIDAL}
# events (or leaps plus exact steps) per run before giving up
DEFAULT_MAX_EVENTS = 10_000_000


class SimulationError(RuntimeError):
    """A run exhausted its event budget or its counts grew past 2**53.

    Both usually mean the network blows up in finite time, as
    ``2 A -> 3 A`` does.
    """


@dataclass(frozen=True)
class StochasticRates:
    """Per-step stochastic rate constants (1/time) for the internal species.

    ``alpha`` and ``gamma`` are the internal rows of the stoichiometry;
    external species are already folded into ``c``.
    """

    c: np.ndarray
    alpha: np.ndarray
    gamma: np.ndarray
    species: tuple[str, ...]
    volume: Optional[float] = None
    derived_from: Optional[np.ndarray] = None

    def __post_init__(self):
        c = np.ascontiguousarray(self.c, dtype=float)
        if np.any(~(c >= 0)):
            raise ValueError("stochastic rate constants must be nonnegative")
        if self.volume is not None and not self.volume > 0:
            raise ValueError(f"volume must be positive, got {self.volume!r}")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "alpha", np.ascontiguousarray(self.alpha, dtype=np.int64))
        object.__setattr__(self, "gamma", np.ascontiguousarray(self.gamma, dtype=np.int64))
        object.__setattr__(self, "species", tuple(self.species))


@dataclass(frozen=True)
class JumpTrajectory:
    """Recorded states of one stochastic run.

    ``fired[i]`` is the step index that produced row ``i``; ``-1`` marks
    the initial row and tau-leaps (which fire many steps at once).
    """

    times: np.ndarray
    counts: np.ndarray
    fired: np.ndarray
    species: tuple[str, ...]
    t_end: float
    absorbed: bool
    method: str
    stats: dict = field(default_factory=dict)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.counts[:, self.species.index(name)]

    @property
    def final(self) -> np.ndarray:
        return self.counts[-1]

    def at(self, t) -> np.ndarray:
        """Counts at times ``t`` by last-value interpolation."""
        idx = np.searchsorted(self.times, np.asarray(t, dtype=float), side="right") - 1
        return self.counts[np.clip(idx, 0, None)]


@dataclass(frozen=True)
class LeapConfig:
    epsilon: float = 0.03
    newton_tol: float = 1e-10
    newton_max_iter: int = 50
    critical_threshold: int = 10
    tau: Optional[float] = None  # fixed leap size; None selects it adaptively

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon!r}")
        if self.newton_max_iter < 1 or not self.newton_tol > 0:
            raise ValueError("newton_max_iter must be >= 1 and newton_tol > 0")
        if self.critical_threshold < 0:
            raise ValueError("critical_threshold must be >= 0")
        if self.tau is not None and not self.tau > 0:
            raise ValueError(f"fixed tau must be positive, got {self.tau!r}")


@dataclass(frozen=True)
class EnsembleStats:
    times: np.ndarray
    mean: np.ndarray  # (n_times, M)
    var: np.ndarray  # (n_times, M), unbiased; 0 for a single run
    n_runs: int
    species: tuple[str, ...]


def propensity(alpha_col, x, c_r: float) -> float:
    """``c_r * prod_m C(x_m, alpha_m)``; zero when some ``x_m < alpha_m``."""
    alpha_col = np.asarray(alpha_col, dtype=np.int64)
    x = np.asarray(x)
    if alpha_col.shape != x.shape:
        raise ValueError("alpha column and state must have equal length")
    out = float(c_r)
    for n, xm in zip(alpha_col, x):
        if n:
            out *= math.comb(int(xm), int(n)) if xm >= n else 0
    return out


def propensities(rates: StochasticRates, x) -> np.ndarray:
    out = np.empty(len(rates.c))
    _kernels.propensities(rates.alpha, rates.c, np.asarray(x, dtype=np.int64), out)
    return out


def convert_rate(k_det: float, alpha_col, volume: float, avogadro: float = AVOGADRO) -> float:
    """Stochastic constant of one step from its deterministic coefficient."""
    if not volume > 0:
        raise ValueError(f"volume must be positive, got {volume!r}")
    alpha_col = [int(a) for a in np.asarray(alpha_col).ravel()]
    order = sum(alpha_col)
    fact = math.prod(math.factorial(a) for a in alpha_col)
    return float(k_det) * fact * (avogadro * volume) ** (1 - order)


def stochastic_rates(
    network: ReactionNetwork,
    k=None,
    volume: Optional[float] = None,
    external: Optional[Mapping[str, float]] = None,
    avogadro: float = AVOGADRO,
) -> StochasticRates:
    """Rate constants for jump simulation.

    With ``volume`` the coefficients ``k`` are deterministic and get
    converted per step, and external concentrations (default 1) are
    folded in.  Without it ``k`` is taken as already stochastic and
    external values multiply ``c`` as plain powers of constant counts.
    """
    ks = KineticSystem(network, k, external)
    if volume is None:
        c = ks.k
    else:
        c = np.array([convert_rate(ks.k[r], ks.alpha[:, r], volume, avogadro) for r in range(len(ks.k))])
    return StochasticRates(c, ks.alpha, ks.gamma, tuple(ks.species), volume,
                           None if volume is None else (network.rates if k is None else np.asarray(k, float)))


def highest_reactant_order(alpha) -> np.ndarray:
    """Per species, the largest reactant coefficient with which it enters any step."""
    alpha = np.asarray(alpha, dtype=np.int64)
    return alpha.max(axis=1) if alpha.shape[1] else np.zeros(alpha.shape[0], dtype=np.int64)


def select_tau(x, props, gamma, epsilon: float, g=None) -> float:
    """Leap size from the bounded-relative-change condition.

    ``g`` holds the highest reactant order per species; species with
    ``g = 0`` never influence a propensity and are skipped.  Defaults to 1
    for every species.
    """
    x = np.asarray(x, dtype=np.int64)
    gamma = np.ascontiguousarray(gamma, dtype=np.int64)
    g = np.ones(len(x), dtype=np.int64) if g is None else np.asarray(g, dtype=np.int64)
    props = np.asarray(props, dtype=float)
    return float(_kernels.select_tau(x, props, gamma, g, float(epsilon), np.ones(len(props), dtype=np.bool_)))


def run_generator(seed: int, run: int = 0) -> np.random.Generator:
    """Independent counter-based stream for run ``run`` of seed ``seed``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(run,))))


def _coerce(rates: StochasticRates, x0, t0: float, T: float) -> np.ndarray:
    x0 = np.asarray(x0)
    if x0.shape != (len(rates.species),):
        raise ValueError(f"x0 must have length {len(rates.species)}, got shape {x0.shape}")
    if np.any(x0 < 0) or np.any(np.asarray(x0, dtype=float) != np.round(x0)):
        raise ValueError("x0 must hold nonnegative integers")
    if not T > t0:
        raise ValueError(f"final time must exceed the start time, got T={T!r}")
    return np.ascontiguousarray(x0, dtype=np.int64)


def _run(rates, x0, T, method, config, rng, grid, record, t0=0.0, max_events=DEFAULT_MAX_EVENTS):
    if max_events < 1:
        raise ValueError(f"max_events must be >= 1, got {max_events!r}")
    if method == "direct":
        times, counts, fired, gstates, status = _kernels.direct(
            rates.alpha, rates.gamma, rates.c, x0, float(t0), float(T), rng, grid, record, int(max_events))
        stats = {"events": int(len(times) - 1) if record else None}
    elif method in _LEAP_CODE:
        config = config or LeapConfig()
        g = highest_reactant_order(rates.alpha)
        times, counts, fired, gstates, status, st = _kernels.leap(
            rates.alpha, rates.gamma, rates.c, g, x0, float(t0), float(T), rng, _LEAP_CODE[method],
            float(config.epsilon), int(config.critical_threshold), float(config.newton_tol),
            int(config.newton_max_iter), float(config.tau or 0.0), grid, record, int(max_events))
        stats = dict(zip(("leaps", "rejected", "ssa_steps", "newton_failures"), map(int, st)))
    else:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    if status == _kernels.BUDGET:
        raise SimulationError(f"{method} run used its budget of {max_events} events before T={T}")
    if status == _kernels.OVERFLOW:
        raise SimulationError(f"{method} run: counts or propensities overflowed before T={T}")
    return times, counts, fired, gstates, status == _kernels.ABSORBED, stats


def simulate_jumps(
    rates: StochasticRates,
    x0,
    T: float,
    method: str = "direct",
    seed: int = 0,
    config: Optional[LeapConfig] = None,
    run: int = 0,
    t0: float = 0.0,
    max_events: int = DEFAULT_MAX_EVENTS,
) -> JumpTrajectory:
    """Single recorded trajectory on ``[t0, T]`` with any of :data:`METHODS`.

    Raises :class:`SimulationError` if the run needs more than
    ``max_events`` events or its counts overflow.
    """
    x0 = _coerce(rates, x0, t0, T)
    times, counts, fired, _, absorbed, stats = _run(
        rates, x0, T, method, config, run_generator(seed, run), np.empty(0), True, t0, max_events)
    return JumpTrajectory(times, counts, fired, rates.species, float(T), absorbed, method, stats)


def _as_rates(network_or_rates) -> StochasticRates:
    if isinstance(network_or_rates, StochasticRates):
        return network_or_rates
    if isinstance(network_or_rates, ReactionNetwork):
        return stochastic_rates(network_or_rates)
    raise TypeError("expected StochasticRates or ReactionNetwork")


def direct_method(network, rates: Optional[StochasticRates], x0, T: float, seed: int = 0, run: int = 0) -> JumpTrajectory:
    """Exact direct-method run.  ``rates`` defaults to the network's coefficients taken as stochastic."""
    return simulate_jumps(rates or _as_rates(network), x0, T, "direct", seed, None, run)


def explicit_tau_leap(network, rates, x0, T, config: Optional[LeapConfig] = None, seed: int = 0, run: int = 0):
    return simulate_jumps(rates or _as_rates(network), x0, T, "explicit", seed, config, run)


def implicit_tau_leap(network, rates, x0, T, config: Optional[LeapConfig] = None, seed: int = 0, run: int = 0):
    return simulate_jumps(rates or _as_rates(network), x0, T, "implicit", seed, config, run)


def trapezoidal_tau_leap(network, rates, x0, T, config: Optional[LeapConfig] = None, seed: int = 0, run: int = 0):
    return simulate_jumps(rates or _as_rates(network), x0, T, "trapezoidal", seed, config, run)


def _threads(n_runs: int) -> int:
    env = os.environ.get("RXNKIT_THREADS")
    try:
        cap = int(env) if env else (os.cpu_count() or 1)
    except ValueError:
        raise ValueError(f"RXNKIT_THREADS must be an integer, got {env!r}") from None
    return max(1, min(cap, n_runs))


def ensemble_samples(
    rates: StochasticRates,
    x0,
    output_times: Sequence[float],
    n_runs: int,
    method: str = "direct",
    seed: int = 0,
    config: Optional[LeapConfig] = None,
    max_events: int = DEFAULT_MAX_EVENTS,
) -> np.ndarray:
    """States of ``n_runs`` runs at ``output_times``, shape (n_runs, n_times, M).

    Runs are spread over ``RXNKIT_THREADS`` worker threads (default: CPU
    count); the result does not depend on the thread count.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    grid = np.ascontiguousarray(output_times, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or np.any(np.diff(grid) < 0) or grid[0] < 0:
        raise ValueError("output_times must be a nonempty nondecreasing sequence of times >= 0")
    x0 = _coerce(rates, x0, 0.0, max(grid[-1], 1e-300))
    T = float(grid[-1])
    out = np.empty((n_runs, grid.size, len(rates.species)), dtype=np.int64)

    def work(lo, hi):
        for i in range(lo, hi):
            out[i] = _run(rates, x0, T, method, config, run_generator(seed, i), grid, False,
                          max_events=max_events)[3]

    n_threads = _threads(n_runs)
    if n_threads == 1:
        work(0, n_runs)
    else:
        bounds = np.linspace(0, n_runs, n_threads + 1).astype(int)
        with ThreadPoolExecutor(n_threads) as pool:
            for f in [pool.submit(work, lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:])]:
                f.result()
    return out


def ensemble(
    rates: StochasticRates,
    x0,
    output_times: Sequence[float],
    n_runs: int,
    method: str = "direct",
    seed: int = 0,
    config: Optional[LeapConfig] = None,
    max_events: int = DEFAULT_MAX_EVENTS,
) -> EnsembleStats:
    """Per-time mean and unbiased variance over independent runs."""
    samples = ensemble_samples(rates, x0, output_times, n_runs, method, seed, config, max_events).astype(float)
    mean = samples.mean(axis=0)
    var = samples.var(axis=0, ddof=1) if n_runs > 1 else np.zeros_like(mean)
    return EnsembleStats(np.asarray(output_times, dtype=float), mean, var, n_runs, rates.species)
