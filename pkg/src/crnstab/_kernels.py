"""JIT-compiled cores for the heavy Monte-Carlo routines.

Everything here is deterministic: each trajectory draws from its own
splitmix64 counter stream derived from ``(seed, stream_index)``, so results
are reproducible bit-for-bit and independent of batching.  States are int64,
propensities float64 (exact below 2^53, far beyond any state these runs
visit).

If numba is unavailable the module still imports and runs in pure Python,
just much slower.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap


_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_INV53 = 1.0 / 9007199254740992.0  # 2^-53


@njit(cache=True, nogil=True)
def _mix64(z):
    z = (z + _GOLDEN) & _MASK
    z = ((z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & _MASK
    z = ((z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & _MASK
    return z ^ (z >> np.uint64(31))


@njit(cache=True, nogil=True)
def stream_state(seed, index):
    """Initial counter for the (seed, index) substream."""
    return _mix64(_mix64(np.uint64(seed)) ^ _mix64(np.uint64(index) + np.uint64(0x632BE59BD9B4E019)))


@njit(cache=True, nogil=True)
def _u01(state):
    """Next uniform in (0, 1]; returns (new_state, value)."""
    state = (state + _GOLDEN) & _MASK
    z = _mix64(state)
    return state, ((z >> np.uint64(11)) + np.uint64(1)) * _INV53


@njit(cache=True, nogil=True)
def _propensities(c_in, kappa, x, out):
    m, d = c_in.shape
    total = 0.0
    for r in range(m):
        p = kappa[r]
        for i in range(d):
            c = c_in[r, i]
            if c > 0:
                xi = x[i]
                if xi < c:
                    p = 0.0
                    break
                f = 1.0
                for k in range(c):
                    f *= xi - k
                p *= f
        out[r] = p
        total += p
    return total


@njit(cache=True, nogil=True)
def _one_step(c_in, vec, kappa, x, state, props):
    """Advance one jump in place.  Returns (state, dt); dt < 0 if absorbed."""
    total = _propensities(c_in, kappa, x, props)
    if total <= 0.0:
        return state, -1.0
    state, u = _u01(state)
    dt = -np.log(u) / total
    state, v = _u01(state)
    target = v * total
    acc = 0.0
    r_pick = len(kappa) - 1
    for r in range(len(kappa)):
        acc += props[r]
        if target <= acc:
            r_pick = r
            break
    for i in range(x.shape[0]):
        x[i] += vec[r_pick, i]
    return state, dt


@njit(cache=True, nogil=True)
def run_return_times(c_in, vec, kappa, x0, radius2, n_samples, max_jumps, seed):
    """Return-time samples to the ball ||x||_2^2 <= radius2.

    For each sample: start at x0, simulate until the ball is entered (after
    at least one jump) or the jump budget runs out.  Returns (tau, jumps,
    hit) arrays; censored samples have hit = 0 and tau = elapsed time.
    """
    m, d = c_in.shape
    taus = np.empty(n_samples, dtype=np.float64)
    jumps = np.empty(n_samples, dtype=np.int64)
    hits = np.empty(n_samples, dtype=np.int64)
    props = np.empty(m, dtype=np.float64)
    x = np.empty(d, dtype=np.int64)
    for s in range(n_samples):
        state = stream_state(seed, s)
        for i in range(d):
            x[i] = x0[i]
        t = 0.0
        n = 0
        hit = 0
        while n < max_jumps:
            state, dt = _one_step(c_in, vec, kappa, x, state, props)
            if dt < 0.0:
                break
            t += dt
            n += 1
            r2 = 0.0
            for i in range(d):
                r2 += x[i] * x[i]
            if r2 <= radius2:
                hit = 1
                break
        taus[s] = t
        jumps[s] = n
        hits[s] = hit
    return taus, jumps, hits


@njit(cache=True, nogil=True)
def run_occupation(c_in, vec, kappa, x0, n_jumps, seed, stream):
    """Holding-time-weighted visit measure over one trajectory.

    Returns (keys, times, total): keys encode states as x1 * 2^32 + x2
    (nonnegative counts below 2^32, far beyond any run here).
    """
    m, d = c_in.shape
    acc = {}
    acc[np.int64(0)] = 0.0
    props = np.empty(m, dtype=np.float64)
    x = np.empty(d, dtype=np.int64)
    for i in range(d):
        x[i] = x0[i]
    state = stream_state(seed, stream)
    total = 0.0
    shift = np.int64(1) << np.int64(32)
    for _ in range(n_jumps):
        key = x[0] * shift + x[1]
        state, dt = _one_step(c_in, vec, kappa, x, state, props)
        if dt < 0.0:
            break
        total += dt
        if key in acc:
            acc[key] += dt
        else:
            acc[key] = dt
    keys = np.empty(len(acc), dtype=np.int64)
    times = np.empty(len(acc), dtype=np.float64)
    i = 0
    for k, v in acc.items():
        keys[i] = k
        times[i] = v
        i += 1
    return keys, times, total


@njit(cache=True, nogil=True)
def run_coupling(c_in, vec, kappa, x0, y0, t_max, n_attempts, max_jumps, seed):
    """Independent-until-meeting coupling attempts.

    Each attempt runs two independent copies (union-rate construction: the
    next event belongs to X with probability rate_X / (rate_X + rate_Y));
    the attempt couples when the copies occupy the same state at the same
    instant.  Returns 1 per attempt if NOT coupled by t_max.
    """
    m, d = c_in.shape
    failed = np.empty(n_attempts, dtype=np.int64)
    px = np.empty(m, dtype=np.float64)
    py = np.empty(m, dtype=np.float64)
    x = np.empty(d, dtype=np.int64)
    y = np.empty(d, dtype=np.int64)
    for a in range(n_attempts):
        state = stream_state(seed, a)
        for i in range(d):
            x[i] = x0[i]
            y[i] = y0[i]
        t = 0.0
        coupled = True
        for i in range(d):
            if x[i] != y[i]:
                coupled = False
        n = 0
        while not coupled and n < max_jumps:
            tx = _propensities(c_in, kappa, x, px)
            ty = _propensities(c_in, kappa, y, py)
            total = tx + ty
            if total <= 0.0:
                break
            state, u = _u01(state)
            t += -np.log(u) / total
            if t > t_max:
                break
            state, v = _u01(state)
            target = v * total
            if target <= tx:
                acc = 0.0
                r_pick = m - 1
                for r in range(m):
                    acc += px[r]
                    if target <= acc:
                        r_pick = r
                        break
                for i in range(d):
                    x[i] += vec[r_pick, i]
            else:
                target -= tx
                acc = 0.0
                r_pick = m - 1
                for r in range(m):
                    acc += py[r]
                    if target <= acc:
                        r_pick = r
                        break
                for i in range(d):
                    y[i] += vec[r_pick, i]
            n += 1
            coupled = True
            for i in range(d):
                if x[i] != y[i]:
                    coupled = False
        failed[a] = 0 if (coupled and t <= t_max) else 1
    return failed


@njit(cache=True, nogil=True)
def run_to_time_grid(c_in, vec, kappa, x0, t_grid, seed, stream):
    """States of one trajectory sampled at the given increasing times."""
    m, d = c_in.shape
    out = np.empty((len(t_grid), d), dtype=np.int64)
    props = np.empty(m, dtype=np.float64)
    x = np.empty(d, dtype=np.int64)
    for i in range(d):
        x[i] = x0[i]
    state = stream_state(seed, stream)
    t = 0.0
    g = 0
    while g < len(t_grid):
        total = _propensities(c_in, kappa, x, props)
        if total <= 0.0:
            break
        state, u = _u01(state)
        t_next = t + (-np.log(u) / total)
        while g < len(t_grid) and t_grid[g] < t_next:
            for i in range(d):
                out[g, i] = x[i]
            g += 1
        state, v = _u01(state)
        target = v * total
        acc = 0.0
        r_pick = m - 1
        for r in range(m):
            acc += props[r]
            if target <= acc:
                r_pick = r
                break
        for i in range(d):
            x[i] += vec[r_pick, i]
        t = t_next
    while g < len(t_grid):
        for i in range(d):
            out[g, i] = x[i]
        g += 1
    return out


@njit(cache=True, nogil=True)
def run_tube_exits(c_in, vec, kappa, x0, exit_level, b_cap, n_samples, seed):
    """Exit first-coordinates of the boundary strip {x2 < exit_level}.

    Runs full stochastic simulation from x0 until x2 reaches exit_level
    (recording the exit x1) or until x1 exceeds b_cap (censored, -1).
    """
    m, d = c_in.shape
    out = np.empty(n_samples, dtype=np.int64)
    props = np.empty(m, dtype=np.float64)
    x = np.empty(d, dtype=np.int64)
    for s in range(n_samples):
        state = stream_state(seed, s)
        for i in range(d):
            x[i] = x0[i]
        res = np.int64(-1)
        while x[0] <= b_cap:
            state, dt = _one_step(c_in, vec, kappa, x, state, props)
            if dt < 0.0:
                break
            if x[1] >= exit_level:
                res = x[0]
                break
        out[s] = res
    return out
