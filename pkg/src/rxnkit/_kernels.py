"""JIT-compiled inner loops for the stochastic simulators.

All kernels work on dense integer matrices ``alpha`` (reactant
stoichiometry) and ``gamma`` (net change), both of shape (M, R), over the
internal species only.  Randomness comes from a numpy ``Generator`` passed
in by the caller, so every run is reproducible from its seed.
"""

import numpy as np
from numba import njit

EXPLICIT, IMPLICIT, TRAPEZOIDAL = 0, 1, 2
THETA = (0.0, 1.0, 0.5)

# run status
DONE, ABSORBED, BUDGET, OVERFLOW = 0, 1, 2, 3
COUNT_LIMIT = 2**53


@njit(cache=True)
def propensities(alpha, c, x, out):
    """Binomial mass-action propensities ``c_r * prod_m C(x_m, alpha_mr)``."""
    M, R = alpha.shape
    for r in range(R):
        a = c[r]
        for m in range(M):
            n = alpha[m, r]
            if n > 0:
                xm = x[m]
                if xm < n:
                    a = 0.0
                    break
                b = 1.0
                for i in range(n):
                    b = b * (xm - i) / (i + 1)
                a *= b
        out[r] = a


@njit(cache=True)
def real_propensities(alpha, c, y, out, jac):
    """Polynomial continuation of the propensities to real states, clipped at 0, and its Jacobian."""
    M, R = alpha.shape
    for r in range(R):
        a = c[r]
        for m in range(M):
            n = alpha[m, r]
            if n > 0:
                b = 1.0
                for i in range(n):
                    b = b * (y[m] - i) / (i + 1)
                a *= b
        if a < 0.0:
            a = 0.0
        out[r] = a
        for j in range(M):
            jac[r, j] = 0.0
        if a == 0.0:
            continue
        for j in range(M):
            nj = alpha[j, r]
            if nj == 0:
                continue
            # d/dy_j of the falling factorial of y_j, times the other factors
            d = 0.0
            for i in range(nj):
                term = 1.0
                for l in range(nj):
                    if l != i:
                        term *= y[j] - l
                d += term
            fact = 1.0
            for i in range(nj):
                fact *= i + 1
            d /= fact
            rest = c[r]
            for m in range(M):
                n = alpha[m, r]
                if n > 0 and m != j:
                    b = 1.0
                    for i in range(n):
                        b = b * (y[m] - i) / (i + 1)
                    rest *= b
            jac[r, j] = rest * d


@njit(cache=True)
def select_tau(x, a, gamma, g, eps, mask):
    """Leap size bounding the expected relative change of each reactant species."""
    M, R = gamma.shape
    tau = np.inf
    for i in range(M):
        if g[i] == 0:
            continue
        mu = 0.0
        s2 = 0.0
        for r in range(R):
            if mask[r]:
                v = gamma[i, r]
                if v != 0:
                    mu += v * a[r]
                    s2 += v * v * a[r]
        bound = max(eps * x[i] / g[i], 1.0)
        if mu != 0.0:
            tau = min(tau, bound / abs(mu))
        if s2 > 0.0:
            tau = min(tau, bound * bound / s2)
    return tau


@njit(cache=True)
def _pick(a, a0, u):
    target = u * a0
    acc = 0.0
    last = -1
    for r in range(a.size):
        if a[r] > 0.0:
            last = r
            acc += a[r]
            if target < acc:
                return r
    return last


@njit(cache=True)
def _push(times, states, fired, n, t, x, f):
    if n == times.size:
        cap = 2 * times.size
        t2 = np.empty(cap)
        s2 = np.empty((cap, states.shape[1]), dtype=np.int64)
        f2 = np.empty(cap, dtype=np.int64)
        t2[:n] = times[:n]
        s2[:n] = states[:n]
        f2[:n] = fired[:n]
        times, states, fired = t2, s2, f2
    times[n] = t
    states[n] = x
    fired[n] = f
    return times, states, fired


@njit(cache=True)
def _fill_grid(grid, gstates, gi, t_next, x):
    while gi < grid.size and grid[gi] < t_next:
        gstates[gi] = x
        gi += 1
    return gi


@njit(cache=True, nogil=True)
def direct(alpha, gamma, c, x0, t0, T, rng, grid, record, max_events):
    """Exact direct-method simulation on ``[t0, T]``.

    With ``record`` every event is stored; otherwise only the states at the
    ``grid`` times (last value before or at each grid time).  The run stops
    early after ``max_events`` events or once a count or the total
    propensity leaves the representable range.
    """
    M, R = alpha.shape
    x = x0.copy()
    a = np.empty(R)
    cap = 1024 if record else 1
    times = np.empty(cap)
    states = np.empty((cap, M), dtype=np.int64)
    fired = np.empty(cap, dtype=np.int64)
    gstates = np.empty((grid.size, M), dtype=np.int64)
    gi = 0
    n = 0
    times, states, fired = _push(times, states, fired, n, t0, x, -1)
    n += 1
    t = t0
    status = DONE
    events = 0
    while True:
        propensities(alpha, c, x, a)
        a0 = a.sum()
        if a0 <= 0.0:
            status = ABSORBED
            break
        if not np.isfinite(a0):
            status = OVERFLOW
            break
        if events >= max_events:
            status = BUDGET
            break
        tau = rng.exponential(1.0) / a0
        if t + tau > T:
            break
        r = _pick(a, a0, rng.random())
        gi = _fill_grid(grid, gstates, gi, t + tau, x)
        for m in range(M):
            x[m] += gamma[m, r]
            if x[m] > COUNT_LIMIT:
                status = OVERFLOW
        t += tau
        events += 1
        if record:
            times, states, fired = _push(times, states, fired, n, t, x, r)
            n += 1
        if status == OVERFLOW:
            break
    gi = _fill_grid(grid, gstates, gi, np.inf, x)
    return times[:n], states[:n], fired[:n], gstates, status


@njit(cache=True)
def _implicit_solve(alpha, gamma, c, x, p, a_x, mask, tau, theta, tol, maxit, a_hat):
    """Solve y = x + sum_r (p_r - theta tau a_r(x) + theta tau a_r(y)) gamma_r by damped Newton."""
    M, R = alpha.shape
    base = x.astype(np.float64)
    for r in range(R):
        if mask[r]:
            w = p[r] - theta * tau * a_x[r]
            for m in range(M):
                base[m] += w * gamma[m, r]
    y = x.astype(np.float64)
    for r in range(R):
        if mask[r]:
            for m in range(M):
                y[m] += p[r] * gamma[m, r]
    ay = np.empty(R)
    D = np.empty((R, M))
    F = np.empty(M)
    J = np.empty((M, M))
    for it in range(maxit):
        real_propensities(alpha, c, y, ay, D)
        for m in range(M):
            s = 0.0
            for r in range(R):
                if mask[r]:
                    s += gamma[m, r] * ay[r]
            F[m] = y[m] - base[m] - theta * tau * s
        for i in range(M):
            for j in range(M):
                s = 0.0
                for r in range(R):
                    if mask[r]:
                        s += gamma[i, r] * D[r, j]
                J[i, j] = (1.0 if i == j else 0.0) - theta * tau * s
        try:
            delta = np.linalg.solve(J, -F)
        except Exception:
            return False, y
        normF = np.abs(F).max() if M else 0.0
        lam = 1.0
        y_try = y + delta
        while lam > 1e-3:
            y_try = y + lam * delta
            real_propensities(alpha, c, y_try, ay, D)
            worst = 0.0
            for m in range(M):
                s = 0.0
                for r in range(R):
                    if mask[r]:
                        s += gamma[m, r] * ay[r]
                v = abs(y_try[m] - base[m] - theta * tau * s)
                if v > worst:
                    worst = v
            if worst <= (1.0 - 1e-4 * lam) * normF or worst <= tol:
                break
            lam *= 0.5
        step = np.abs(lam * delta).max() if M else 0.0
        y = y_try
        if step <= tol * max(1.0, np.abs(y).max()):
            real_propensities(alpha, c, y, a_hat, D)
            return True, y
    return False, y


@njit(cache=True, nogil=True)
def leap(alpha, gamma, c, g, x0, t0, T, rng, method, eps, n_critical, newton_tol, newton_maxit,
         tau_fixed, grid, record, max_events):
    """tau-leaping with critical-reaction handling and a negative-population guard.

    Steps that can exhaust a reactant within ``n_critical`` firings are
    critical: at most one of them fires per leap, chosen exactly.  If the
    noncritical leap is shorter than ten expected SSA steps, 100 exact
    SSA steps are taken instead.  A leap that would make any count
    negative (or whose implicit solve fails) is redrawn with half the
    leap size.

    ``stats`` holds (leaps, rejected leaps, SSA steps, Newton failures).
    Leaps and SSA steps together are limited to ``max_events``.
    """
    M, R = alpha.shape
    theta = THETA[method]
    x = x0.copy()
    a = np.empty(R)
    a_hat = np.empty(R)
    p = np.zeros(R)
    fires = np.zeros(R, dtype=np.int64)
    critical = np.zeros(R, dtype=np.bool_)
    noncrit = np.zeros(R, dtype=np.bool_)
    x_new = np.empty(M, dtype=np.int64)
    cap = 1024 if record else 1
    times = np.empty(cap)
    states = np.empty((cap, M), dtype=np.int64)
    fired = np.empty(cap, dtype=np.int64)
    gstates = np.empty((grid.size, M), dtype=np.int64)
    stats = np.zeros(4, dtype=np.int64)
    gi = 0
    n = 0
    times, states, fired = _push(times, states, fired, n, t0, x, -1)
    n += 1
    t = t0
    status = DONE
    while t < T:
        propensities(alpha, c, x, a)
        a0 = a.sum()
        if a0 <= 0.0:
            status = ABSORBED
            break
        if not np.isfinite(a0):
            status = OVERFLOW
            break
        if stats[0] + stats[2] >= max_events:
            status = BUDGET
            break
        for r in range(R):
            L = np.iinfo(np.int64).max
            for m in range(M):
                if gamma[m, r] < 0:
                    L = min(L, x[m] // (-gamma[m, r]))
            critical[r] = a[r] > 0.0 and L < n_critical
            noncrit[r] = not critical[r]
        if tau_fixed > 0.0:
            tau1 = tau_fixed
        else:
            tau1 = select_tau(x, a, gamma, g, eps, noncrit)
        if tau_fixed <= 0.0 and tau1 < 10.0 / a0:
            # leap too short to pay off: exact steps instead
            for _ in range(100):
                propensities(alpha, c, x, a)
                a0 = a.sum()
                if a0 <= 0.0:
                    break
                tau = rng.exponential(1.0) / a0
                if t + tau > T:
                    t = T
                    break
                r = _pick(a, a0, rng.random())
                gi = _fill_grid(grid, gstates, gi, t + tau, x)
                for m in range(M):
                    x[m] += gamma[m, r]
                t += tau
                stats[2] += 1
                if record:
                    times, states, fired = _push(times, states, fired, n, t, x, r)
                    n += 1
                if stats[0] + stats[2] >= max_events:
                    break
            continue
        a0c = 0.0
        for r in range(R):
            if critical[r]:
                a0c += a[r]
        while True:
            tau2 = rng.exponential(1.0) / a0c if a0c > 0.0 else np.inf
            tau = min(tau1, tau2, T - t)
            for r in range(R):
                p[r] = rng.poisson(a[r] * tau) if noncrit[r] and a[r] > 0.0 else 0.0
            jc = -1
            if tau2 <= tau1 and tau2 < T - t:
                jc = _pick(np.where(critical, a, 0.0), a0c, rng.random())
            ok = True
            if method == EXPLICIT:
                for r in range(R):
                    fires[r] = np.int64(p[r])
            else:
                ok, _ = _implicit_solve(alpha, gamma, c, x, p, a, noncrit, tau, theta, newton_tol,
                                        newton_maxit, a_hat)
                if ok:
                    for r in range(R):
                        if noncrit[r]:
                            fires[r] = np.int64(p[r]) + np.int64(np.rint(theta * tau * (a_hat[r] - a[r])))
                        else:
                            fires[r] = 0
                else:
                    stats[3] += 1
            if ok:
                for m in range(M):
                    v = x[m]
                    for r in range(R):
                        v += fires[r] * gamma[m, r]
                    if jc >= 0:
                        v += gamma[m, jc]
                    x_new[m] = v
                for m in range(M):
                    if x_new[m] < 0:
                        ok = False
            if ok:
                break
            stats[1] += 1
            tau1 *= 0.5
        gi = _fill_grid(grid, gstates, gi, t + tau, x)
        x[:] = x_new
        t += tau
        stats[0] += 1
        if M > 0 and x.max() > COUNT_LIMIT:
            status = OVERFLOW
        if record:
            times, states, fired = _push(times, states, fired, n, t, x, -1)
            n += 1
        if status == OVERFLOW:
            break
    gi = _fill_grid(grid, gstates, gi, np.inf, x)
    return times[:n], states[:n], fired[:n], gstates, status, stats
