"""Least-squares estimation of rate coefficients from concentration data.

The model is the deterministic mass-action ODE.  Parameters are fitted in
log space (which keeps every trial ``k`` positive) by Levenberg-Marquardt
with forward-difference Jacobians.  Missing observations are NaN and are
left out of the residual vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .deterministic import IntegrationError, IntegratorConfig, StepLimitExceeded, simulate
from .network import GAS_CONSTANT, ReactionNetwork, arrhenius

__all__ = [
    "Dataset",
    "FitConfig",
    "FitResult",
    "ArrheniusFitResult",
    "IllPosedError",
    "synth_data",
    "model_observations",
    "objective",
    "fit_rates",
    "fit_arrhenius",
    "levenberg_marquardt",
]


class IllPosedError(ValueError):
    """The data cannot identify the requested parameters."""


@dataclass(frozen=True)
class Dataset:
    """Observed concentrations: one row per time, one column per observed species.

    ``c0`` optionally records the initial state over all internal species
    (synthetic data always carry it).
    """

    times: np.ndarray
    observations: np.ndarray
    observed_species: tuple[str, ...]
    c0: Optional[np.ndarray] = None
    noise_spec: Optional[dict] = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float).ravel()
        obs = np.asarray(self.observations, dtype=float)
        if obs.ndim == 1:
            obs = obs.reshape(-1, 1)
        species = tuple(self.observed_species)
        if obs.shape != (times.size, len(species)):
            raise ValueError(f"observations must have shape ({times.size}, {len(species)}), got {obs.shape}")
        if times.size == 0:
            raise ValueError("a dataset needs at least one time point")
        if np.any(np.diff(times) <= 0) or not np.all(np.isfinite(times)):
            raise ValueError("times must be finite and strictly increasing")
        if len(set(species)) != len(species):
            raise ValueError("duplicate observed species")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "observations", obs)
        object.__setattr__(self, "observed_species", species)
        if self.c0 is not None:
            object.__setattr__(self, "c0", np.asarray(self.c0, dtype=float))

    @property
    def n_observed(self) -> int:
        return int(np.isfinite(self.observations).sum())


@dataclass(frozen=True)
class FitConfig:
    max_iter: int = 50
    sse_rtol: float = 1e-10
    gtol: float = 1e-8
    fd_step: float = 1e-6
    lambda0: float = 1e-3
    lambda_max: float = 1e16
    integrator: str = "auto"  # "auto" tries the explicit method under a step cap, then the stiff one
    auto_step_cap: int = 20000
    integrator_rtol: Optional[float] = None  # defaults to 10x tighter than the fit tolerances
    integrator_atol: float = 1e-14

    def __post_init__(self):
        if self.max_iter < 0:
            raise ValueError("max_iter must be >= 0")
        if not (self.sse_rtol > 0 and self.gtol > 0 and self.fd_step > 0 and self.lambda0 > 0):
            raise ValueError("tolerances, fd_step and lambda0 must be positive")
        if self.integrator not in ("auto", "stiff", "explicit"):
            raise ValueError(f"unknown integrator {self.integrator!r}")

    def integrator_configs(self) -> list[IntegratorConfig]:
        rtol = self.integrator_rtol or min(1e-10, self.sse_rtol / 10)
        if self.integrator == "auto":
            return [IntegratorConfig("explicit", rtol, self.integrator_atol, max_steps=self.auto_step_cap),
                    IntegratorConfig("stiff", rtol, self.integrator_atol)]
        return [IntegratorConfig(self.integrator, rtol, self.integrator_atol)]


@dataclass(frozen=True)
class FitResult:
    k_hat: np.ndarray
    sse: float
    iterations: int
    converged: bool
    std_errors: np.ndarray
    message: str = ""
    history: tuple[float, ...] = ()
    n_evaluations: int = 0

    def as_dict(self) -> dict:
        return {
            "k_hat": [float(v) for v in self.k_hat],
            "sse": float(self.sse),
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
            "std_errors": [float(v) for v in self.std_errors],
            "message": self.message,
        }


@dataclass(frozen=True)
class ArrheniusFitResult:
    k0: np.ndarray
    n: np.ndarray
    A: np.ndarray
    fit: FitResult

    def rates(self, T: float, R_gas: float = GAS_CONSTANT) -> np.ndarray:
        return np.array([arrhenius(a, b, c, T, R_gas) for a, b, c in zip(self.k0, self.n, self.A)])


def synth_data(
    network: ReactionNetwork,
    k_true,
    c0,
    times: Sequence[float],
    noise: Mapping | None = None,
    seed: int = 0,
    observed: Optional[Sequence[str]] = None,
    config: Optional[IntegratorConfig] = None,
) -> Dataset:
    """Solution at ``times`` plus i.i.d. noise.

    ``noise`` is ``{"kind": "uniform", "lo": a, "hi": b}``,
    ``{"kind": "gaussian", "sigma": s}`` or None for exact data.
    """
    c0 = np.asarray(c0, dtype=float)
    times = np.asarray(times, dtype=float)
    names = list(network.internal_species)
    observed = tuple(observed or names)
    cols = [names.index(s) for s in observed]
    clean = _solve(network, np.asarray(k_true, dtype=float), c0, times,
                   config or IntegratorConfig(rtol=1e-10, atol=1e-14))[:, cols]
    rng = np.random.default_rng(seed)
    spec = {"kind": "none"} if noise is None else dict(noise)
    kind = spec.get("kind", "none")
    if kind == "none":
        eps = 0.0
    elif kind == "uniform":
        eps = rng.uniform(float(spec["lo"]), float(spec["hi"]), size=clean.shape)
    elif kind == "gaussian":
        eps = rng.normal(0.0, float(spec["sigma"]), size=clean.shape)
    else:
        raise ValueError(f"unknown noise kind {kind!r}")
    spec["seed"] = seed
    return Dataset(times, clean + eps, observed, c0, spec)


def _solve(network, k, c0, times, configs, t0: float = 0.0) -> np.ndarray:
    """Internal-species states at ``times`` (all >= t0).

    ``configs`` are tried in order; a step-limit failure moves on to the next.
    """
    if times[0] < t0:
        raise ValueError(f"data times must not precede the initial time {t0}")
    if times[-1] == t0:
        return np.tile(c0, (times.size, 1))
    if isinstance(configs, IntegratorConfig):
        configs = [configs]
    for i, config in enumerate(configs):
        cfg = IntegratorConfig(config.method, config.rtol, config.atol, config.max_steps, config.initial_step, times)
        try:
            return simulate(network, k, c0, (t0, float(times[-1])), cfg).states
        except StepLimitExceeded:
            if i == len(configs) - 1:
                raise


def _c0(network, dataset: Dataset, c0) -> np.ndarray:
    if c0 is None:
        if dataset.c0 is None:
            raise ValueError("initial concentrations are required (the dataset does not record them)")
        c0 = dataset.c0
    c0 = np.asarray(c0, dtype=float)
    if c0.shape != (len(network.internal_species),):
        raise ValueError(f"c0 must have length {len(network.internal_species)}")
    return c0


def model_observations(network, dataset: Dataset, k, c0=None, config: Optional[FitConfig] = None) -> np.ndarray:
    """Model values aligned with ``dataset.observations``."""
    config = config or FitConfig()
    names = list(network.internal_species)
    missing = [s for s in dataset.observed_species if s not in names]
    if missing:
        raise ValueError(f"observed species not internal to the network: {missing}")
    cols = [names.index(s) for s in dataset.observed_species]
    states = _solve(network, np.asarray(k, dtype=float), _c0(network, dataset, c0), dataset.times,
                    config.integrator_configs())
    return states[:, cols]


def _residuals(network, dataset, k, c0, config) -> np.ndarray:
    diff = model_observations(network, dataset, k, c0, config) - dataset.observations
    return diff[np.isfinite(dataset.observations)]


def objective(network: ReactionNetwork, dataset: Dataset, k, c0=None, config: Optional[FitConfig] = None) -> float:
    """Sum of squared residuals over the non-missing observations."""
    r = _residuals(network, dataset, k, c0, config)
    return float(r @ r)


def levenberg_marquardt(residuals: Callable[[np.ndarray], np.ndarray], theta0, config: FitConfig):
    """Minimize ``|residuals(theta)|^2``.

    ``residuals`` may raise :class:`IntegrationError` (or return non-finite
    values) at a trial point, which is then rejected.  Returns
    ``(theta, r, J, iterations, converged, message, history, n_evaluations)``.
    """
    theta = np.asarray(theta0, dtype=float).copy()
    n_eval = 0

    def evaluate(th):
        nonlocal n_eval
        n_eval += 1
        try:
            r = np.asarray(residuals(th), dtype=float)
        except (IntegrationError, FloatingPointError, OverflowError):
            return None
        return r if np.all(np.isfinite(r)) else None

    r = evaluate(theta)
    if r is None:
        raise IntegrationError("model evaluation failed at the initial parameters", float("nan"))
    sse = float(r @ r)
    history = [sse]
    lam = config.lambda0
    p = theta.size

    def jac(th, r0):
        J = np.empty((r0.size, p))
        for j in range(p):
            h = config.fd_step * max(1.0, abs(th[j]))
            tp = th.copy()
            tp[j] += h
            rp = evaluate(tp)
            if rp is None:  # fall back to a backward difference
                tp[j] = th[j] - h
                rp = evaluate(tp)
                if rp is None:
                    raise IntegrationError("model evaluation failed while differencing", float("nan"))
                h = -h
            J[:, j] = (rp - r0) / h
        return J

    J = jac(theta, r)
    it = 0
    converged = False
    message = "iteration budget exhausted"
    while True:
        g = J.T @ r
        if sse == 0.0 or np.linalg.norm(g) < config.gtol:
            converged, message = True, "gradient norm below tolerance"
            break
        if it >= config.max_iter:
            break
        A = J.T @ J
        d = np.diag(A).copy()
        d[d <= 0] = 1.0
        accepted = False
        while lam <= config.lambda_max:
            try:
                delta = np.linalg.solve(A + lam * np.diag(d), -g)
            except np.linalg.LinAlgError:
                lam *= 10
                continue
            r_new = evaluate(theta + delta)
            if r_new is not None and float(r_new @ r_new) < sse:
                accepted = True
                break
            lam *= 10
        if not accepted:
            converged, message = True, "no downhill step at maximal damping"
            break
        it += 1
        theta = theta + delta
        sse_new = float(r_new @ r_new)
        rel = (sse - sse_new) / sse
        r, sse = r_new, sse_new
        history.append(sse)
        lam = max(lam / 10, 1e-300)
        J = jac(theta, r)
        if rel < config.sse_rtol:
            converged, message = True, "relative SSE change below tolerance"
            break
    return theta, r, J, it, converged, message, tuple(history), n_eval


def _std_errors(J: np.ndarray, sse: float, scale: np.ndarray) -> np.ndarray:
    n, p = J.shape
    if n <= p:
        return np.full(p, np.nan)
    cov = np.linalg.pinv(J.T @ J) * (sse / (n - p))
    return np.sqrt(np.clip(np.diag(cov), 0, None)) * scale


def fit_rates(
    network: ReactionNetwork,
    dataset: Dataset,
    k_init,
    c0=None,
    config: Optional[FitConfig] = None,
    free: Optional[Sequence[int]] = None,
) -> FitResult:
    """Fit rate coefficients to ``dataset`` by Levenberg-Marquardt in log k.

    ``free`` lists the indices of the fitted coefficients; the others stay
    at ``k_init``.  Standard errors are for k (delta method from log k).
    """
    config = config or FitConfig()
    k_init = np.asarray(k_init, dtype=float)
    if k_init.shape != (len(network.steps),):
        raise ValueError(f"k_init must have length {len(network.steps)}")
    if np.any(~(k_init > 0)):
        raise ValueError("initial rate coefficients must be positive")
    free = np.arange(k_init.size) if free is None else np.asarray(free, dtype=int)
    c0 = _c0(network, dataset, c0)
    if dataset.n_observed == 0:
        raise IllPosedError("the dataset contains no observations")

    def full_k(theta):
        k = k_init.copy()
        k[free] = np.exp(theta)
        return k

    theta, r, J, it, conv, msg, hist, n_eval = levenberg_marquardt(
        lambda th: _residuals(network, dataset, full_k(th), c0, config), np.log(k_init[free]), config)
    k_hat = full_k(theta)
    sse = float(r @ r)
    se = np.zeros(k_init.size)
    se[free] = _std_errors(J, sse, k_hat[free])
    return FitResult(k_hat, sse, it, conv, se, msg, hist, n_eval)


def fit_arrhenius(
    network: ReactionNetwork,
    datasets: Sequence[tuple[float, Dataset]],
    k0_init,
    n_init,
    A_init,
    free: Optional[Mapping[int, Sequence[str]]] = None,
    c0=None,
    config: Optional[FitConfig] = None,
    R_gas: float = GAS_CONSTANT,
) -> ArrheniusFitResult:
    """Fit Arrhenius parameters ``k(T) = k0 T^n exp(-A/(R T))`` to data at several temperatures.

    ``datasets`` pairs each temperature with its data.  ``free`` maps a step
    index to the parameters fitted for it (any of ``"k0"``, ``"n"``,
    ``"A"``); by default every step fits all three.  A step can only be
    identified if it has at least as many distinct temperatures as free
    parameters; otherwise :class:`IllPosedError` is raised.
    """
    config = config or FitConfig()
    R = len(network.steps)
    k0_init = np.asarray(k0_init, dtype=float)
    n_init = np.asarray(n_init, dtype=float)
    A_init = np.asarray(A_init, dtype=float)
    if not (k0_init.shape == n_init.shape == A_init.shape == (R,)):
        raise ValueError(f"k0_init, n_init and A_init must each have length {R}")
    if np.any(~(k0_init > 0)):
        raise ValueError("initial pre-exponential factors must be positive")
    if not datasets:
        raise IllPosedError("no datasets given")
    temps = [float(T) for T, _ in datasets]
    if any(not T > 0 for T in temps):
        raise ValueError("temperatures must be positive")
    free = {r: ("k0", "n", "A") for r in range(R)} if free is None else dict(free)
    layout: list[tuple[int, str]] = []
    for r, names in sorted(free.items()):
        for name in names:
            if name not in ("k0", "n", "A"):
                raise ValueError(f"unknown Arrhenius parameter {name!r}")
        if len(set(names)) > len(set(temps)):
            raise IllPosedError(
                f"step {r + 1}: {len(set(names))} Arrhenius parameters cannot be identified "
                f"from {len(set(temps))} distinct temperature(s)")
        layout += [(r, name) for name in ("k0", "n", "A") if name in names]
    # scale A by a typical R T so all parameters are O(1)
    a_scale = R_gas * float(np.mean(temps))

    def unpack(theta):
        k0, n, A = k0_init.copy(), n_init.copy(), A_init.copy()
        for (r, name), v in zip(layout, theta):
            if name == "k0":
                k0[r] = math.exp(v)
            elif name == "n":
                n[r] = v
            else:
                A[r] = v * a_scale
        return k0, n, A

    theta0 = np.array([
        math.log(k0_init[r]) if name == "k0" else (n_init[r] if name == "n" else A_init[r] / a_scale)
        for r, name in layout])
    starts = [_c0(network, ds, c0) for _, ds in datasets]

    def residuals(theta):
        k0, n, A = unpack(theta)
        out = []
        for (T, ds), start in zip(datasets, starts):
            k = np.array([k0[r] * T ** n[r] * np.exp(-A[r] / (R_gas * T)) for r in range(R)])
            if not np.all(np.isfinite(k)):
                raise FloatingPointError("non-finite rate coefficient")
            out.append(_residuals(network, ds, k, start, config))
        return np.concatenate(out)

    theta, r, J, it, conv, msg, hist, n_eval = levenberg_marquardt(residuals, theta0, config)
    k0, n, A = unpack(theta)
    sse = float(r @ r)
    scale = np.array([math.exp(v) if name == "k0" else (1.0 if name == "n" else a_scale)
                      for (rr, name), v in zip(layout, theta)])
    se = _std_errors(J, sse, scale)
    fit = FitResult(np.concatenate([k0, n, A]), sse, it, conv, se, msg, hist, n_eval)
    return ArrheniusFitResult(k0, n, A, fit)
