"""Adaptive integration of the induced kinetic differential equation.

Two methods are available:

``stiff``
    Rodas3, a four-stage, third-order, L-stable Rosenbrock method with an
    embedded second-order error estimate (Sandu et al., 1997).  One
    Jacobian and one LU factorisation per step.
``explicit``
    Dormand-Prince 5(4) with FSAL.  Mostly useful to show how badly an
    explicit method fares on stiff kinetics.

Both use a proportional step-size controller with safety factor 0.9 and
the step-change factor clipped to [0.2, 5].  When output times are given
the integrator steps onto each of them exactly.
"""

from __future__ import annotations

from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .network import KineticSystem, ReactionNetwork

__all__ = [
    "IntegratorConfig",
    "Trajectory",
    "IntegrationError",
    "StepLimitExceeded",
    "StepSizeUnderflow",
    "NonFiniteState",
    "SingularStepError",
    "stiff_step",
    "explicit_step",
    "simulate",
    "integrate",
]

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0


class IntegrationError(RuntimeError):
    """Integration stopped early; ``t_reached`` is the last accepted time."""

    def __init__(self, message: str, t_reached: float):
        super().__init__(f"{message} (last reached t = {t_reached!r})")
        self.t_reached = t_reached


class StepLimitExceeded(IntegrationError):
    pass


class StepSizeUnderflow(IntegrationError):
    pass


class NonFiniteState(IntegrationError):
    pass


class SingularStepError(ArithmeticError):
    """The shifted Jacobian ``I/(h gamma) - J`` is singular."""


@dataclass
class IntegratorConfig:
    method: str = "stiff"
    rtol: float = 1e-6
    atol: float = 1e-12
    max_steps: int = 10**7
    initial_step: Optional[float] = None
    output_times: Optional[Sequence[float]] = None

    def __post_init__(self):
        if self.method not in ("stiff", "explicit"):
            raise ValueError(f"unknown method {self.method!r}; expected 'stiff' or 'explicit'")
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("rtol and atol must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    species: tuple[str, ...] = ()
    n_steps: int = 0
    n_rejected: int = 0
    method: str = ""
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.times)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.states[:, self.species.index(name)]

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


# Rodas3 in the K-formulation:
#   (I/(h g) - J) K_i = f(y + sum_j A_ij K_j) + sum_j C_ij K_j / h
_GAMMA = 0.5
_A = ((), (0.0,), (2.0, 0.0), (2.0, 0.0, 1.0))
_C = ((), (4.0,), (1.0, -1.0), (1.0, -1.0, -8.0 / 3.0))
_ALPHA = (0.0, 0.0, 1.0, 1.0)
_NEW_F = (True, False, True, True)
_M = (2.0, 0.0, 1.0, 1.0)
_E = (0.0, 0.0, 0.0, 1.0)


def stiff_step(y: np.ndarray, t: float, h: float, rhs: Callable, jacobian: Callable,
               f0: Optional[np.ndarray] = None) -> tuple[np.ndarray, np.ndarray]:
    """One Rodas3 step of size ``h`` for the autonomous system ``y' = rhs(t, y)``.

    Returns the third-order solution and the embedded error estimate
    (difference to the second-order solution).
    """
    if not h > 0:
        raise ValueError("step size must be positive")
    y = np.asarray(y, dtype=float)
    n = y.size
    shifted = np.eye(n) / (h * _GAMMA) - jacobian(t, y)
    lu = lu_factor(shifted, check_finite=False)
    if np.any(np.diag(lu[0]) == 0):
        raise SingularStepError(f"singular shifted Jacobian at t={t!r}, h={h!r}")
    K: list[np.ndarray] = []
    f = rhs(t, y) if f0 is None else f0
    for i in range(4):
        if i and _NEW_F[i]:
            ys = y.copy()
            for a, k in zip(_A[i], K):
                if a:
                    ys += a * k
            f = rhs(t + _ALPHA[i] * h, ys)
        b = f.copy()
        for c, k in zip(_C[i], K):
            b += (c / h) * k
        K.append(lu_solve(lu, b, check_finite=False))
    y_new = y + sum(m * k for m, k in zip(_M, K) if m)
    err = sum(e * k for e, k in zip(_E, K) if e)
    return y_new, err


# Dormand-Prince 5(4)
_DP_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_B = _DP_A[6] + (0.0,)
_DP_BHAT = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40)
_DP_E = np.subtract(_DP_B, _DP_BHAT)
_DP_AMAT = np.zeros((7, 7))
for _i, _row in enumerate(_DP_A):
    _DP_AMAT[_i, :len(_row)] = _row
_DP_BVEC = np.array(_DP_B)


def explicit_step(y: np.ndarray, t: float, h: float, rhs: Callable,
                  f0: Optional[np.ndarray] = None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One Dormand-Prince step; returns ``(y_new, error_estimate, rhs(y_new))``."""
    K = np.empty((7, y.size))
    K[0] = rhs(t, y) if f0 is None else f0
    for i in range(1, 7):
        K[i] = rhs(t + _DP_C[i] * h, y + h * (_DP_AMAT[i, :i] @ K[:i]))
    # the last stage is evaluated at y_new (FSAL)
    y_new = y + h * (_DP_BVEC @ K)
    return y_new, h * (_DP_E @ K), K[6]


def _rms(err: np.ndarray, y0: np.ndarray, y1: np.ndarray, rtol: float, atol: float) -> float:
    scale = atol + rtol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.sqrt(np.mean((err / scale) ** 2))) if err.size else 0.0


def _initial_step(rhs, t0, y0, f0, order, rtol, atol, direction_span) -> float:
    # Hairer, Norsett & Wanner, Solving ODEs I, II.4
    scale = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / scale) ** 2)) if y0.size else 0.0
    d1 = np.sqrt(np.mean((f0 / scale) ** 2)) if y0.size else 0.0
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, direction_span)
    y1 = y0 + h0 * f0
    f1 = rhs(t0 + h0, y1)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0 if y0.size else 0.0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / (order + 1))
    return min(100 * h0, h1, direction_span)


def integrate(rhs: Callable, jacobian: Optional[Callable], y0, t_span: tuple[float, float],
              config: IntegratorConfig | None = None) -> Trajectory:
    """Integrate ``y' = rhs(t, y)`` over ``t_span`` with the configured method."""
    config = config or IntegratorConfig()
    t0, t1 = map(float, t_span)
    if not t1 > t0:
        raise ValueError("t_span must satisfy t1 > t0")
    y = np.array(y0, dtype=float)
    if not np.all(np.isfinite(y)):
        raise NonFiniteState("initial state is not finite", t0)
    stiff = config.method == "stiff"
    if stiff and jacobian is None:
        raise ValueError("the stiff method needs a Jacobian")
    order = 3 if stiff else 5
    exponent = 1.0 / (2 + 1) if stiff else 1.0 / (4 + 1)
    rtol, atol = config.rtol, config.atol
    neg_floor = -100.0 * atol

    if config.output_times is not None:
        outs = np.asarray(config.output_times, dtype=float)
        if outs.size and (np.any(np.diff(outs) <= 0) or outs[0] < t0 or outs[-1] > t1):
            raise ValueError("output times must be strictly increasing and inside t_span")
        targets = list(outs)
    else:
        outs = None
        targets = [t1]
    times: list[float] = []
    states: list[np.ndarray] = []
    if outs is None or (outs.size and outs[0] == t0):
        times.append(t0)
        states.append(y.copy())
        if outs is not None:
            targets.pop(0)

    f = rhs(t0, y)
    if not np.all(np.isfinite(f)):
        raise NonFiniteState("right-hand side is not finite at the initial state", t0)
    h = config.initial_step or _initial_step(rhs, t0, y, f, order, rtol, atol, t1 - t0)
    t = t0
    n_steps = n_rejected = attempts = 0
    nonfinite_trial = False
    ti = 0
    while ti < len(targets):
        target = targets[ti]
        if attempts >= config.max_steps:
            raise StepLimitExceeded(f"step limit {config.max_steps} exceeded", t)
        hmin = 16 * np.spacing(abs(t))
        if h < hmin:
            cls = NonFiniteState if nonfinite_trial else StepSizeUnderflow
            raise cls(f"step size underflow (h = {h!r})", t)
        last = t + h >= target - 16 * np.spacing(abs(target))
        h_try = target - t if last else h
        attempts += 1
        try:
            if stiff:
                y_new, err = stiff_step(y, t, h_try, rhs, jacobian, f0=f)
                f_new = None
            else:
                y_new, err, f_new = explicit_step(y, t, h_try, rhs, f0=f)
        except SingularStepError:
            n_rejected += 1
            h = h_try * MIN_FACTOR
            continue
        if not (np.all(np.isfinite(y_new)) and np.all(np.isfinite(err))):
            nonfinite_trial = True
            n_rejected += 1
            h = h_try * MIN_FACTOR
            continue
        e = _rms(err, y, y_new, rtol, atol)
        if e > 1.0 or np.any(y_new < neg_floor):
            n_rejected += 1
            if e > 1.0:
                h = h_try * max(MIN_FACTOR, SAFETY * e ** -exponent)
            else:
                h = h_try * 0.5
            continue
        nonfinite_trial = False
        n_steps += 1
        t = target if last else t + h_try
        y = y_new
        f = f_new if f_new is not None else rhs(t, y)
        if not np.all(np.isfinite(f)):
            raise NonFiniteState("right-hand side became non-finite", t)
        factor = MAX_FACTOR if e == 0 else min(MAX_FACTOR, max(MIN_FACTOR, SAFETY * e ** -exponent))
        # a step shortened to land on an output time does not shrink h
        h = max(h, h_try * factor) if h_try < h else h_try * factor
        if last:
            ti += 1
        if last or outs is None:
            times.append(t)
            states.append(y.copy())
    return Trajectory(np.array(times), np.array(states).reshape(len(times), y.size), (), n_steps,
                      n_rejected, config.method)


def simulate(network: ReactionNetwork, k=None, c0=None, t_span: tuple[float, float] = (0.0, 1.0),
             config: IntegratorConfig | None = None,
             external: Mapping[str, float] | None = None) -> Trajectory:
    """Integrate the mass-action ODE of ``network`` from ``c0`` over ``t_span``.

    ``k`` defaults to the network's rate coefficients; ``c0`` is over the
    internal species.
    """
    system = KineticSystem(network, k, external)
    c0 = np.asarray(c0, dtype=float)
    if c0.shape != (system.n_species,):
        raise ValueError(f"c0 must have length {system.n_species}, got shape {c0.shape}")
    if np.any(c0 < 0):
        raise ValueError("initial concentrations must be nonnegative")
    traj = integrate(lambda t, c: system._rhs(c), lambda t, c: system.jacobian(c), c0, t_span, config)
    return Trajectory(traj.times, traj.states, tuple(system.species), traj.n_steps, traj.n_rejected,
                      traj.method)
