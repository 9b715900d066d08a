"""Seeded, parallel Monte Carlo estimation of the LCLT/MLCLT quantities.

Reproducibility scheme: all randomness flows from one 64-bit seed through
counter-based Philox substreams, one per fixed-size sample block (block b
uses key seed + (b << 64)).  Blocks are reduced in block order, so results
are bit-identical for any worker count.

The path kernels are vectorized per block: each sample carries its current
cell, accumulated roof time and accumulated section sums, and all samples
advance one crossing per loop iteration until their time budget is spent.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import EmptySetWarning
from .systems import pm_map

BLOCK_SIZE = 1 << 18
_LATTICE_TOL = 1e-6


@dataclass
class HistogramSpec:
    """Windows for LCLT estimation at flow time t: each window is either
    ("flow", w, lo, hi) — integral in w sqrt(t) + [lo, hi) — or
    ("section", a, l) — H-corrected section value equal to l*a."""
    t: float
    windows: list


@dataclass
class EstimateWithCI:
    point: float
    std_error: float
    n_samples: int
    seed: int

    def within(self, other, k_se, extra=0.0):
        tol = k_se * self.std_error + extra
        return abs(self.point - other) <= tol


def _block_rng(seed: int, b: int):
    return np.random.Generator(np.random.Philox(key=seed + (b << 64)))


def _block_plan(N: int):
    n_blocks = (N + BLOCK_SIZE - 1) // BLOCK_SIZE
    return [(b, min(BLOCK_SIZE, N - b * BLOCK_SIZE)) for b in range(n_blocks)]


def _run_blocks(N, seed, workers, block_fn):
    """Run block_fn(block_index, block_size, rng) for every block and return
    the results in block order regardless of worker count."""
    plan = _block_plan(N)

    def job(item):
        b, n = item
        return block_fn(b, n, _block_rng(seed, b))

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(job, plan))
    return [job(item) for item in plan]


# ---------------------------------------------------------------------------
# path kernels
# ---------------------------------------------------------------------------

def _paths_renewal(system, t, n, rng):
    cur = np.searchsorted(system.size_biased_cum, rng.random(n),
                          side="right").astype(np.int64)
    cur = np.minimum(cur, len(system.ys) - 1)
    start = cur.copy()
    s0 = rng.random(n) * system.ys[cur]
    target = s0 + t
    acc = system.ys[cur].copy()
    psi = np.zeros(n)
    ncross = np.zeros(n, dtype=np.int64)
    alive = acc <= target
    while np.any(alive):
        idx = np.flatnonzero(alive)
        psi[idx] += system.xs[cur[idx]]
        ncross[idx] += 1
        draw = np.searchsorted(system.cum, rng.random(len(idx)),
                               side="right")
        draw = np.minimum(draw, len(system.ys) - 1)
        cur[idx] = draw
        acc[idx] += system.ys[draw]
        alive[idx] = acc[idx] <= target[idx]
    s_end = target - (acc - system.ys[cur])
    raw = (psi - s0 * system.xs[start] / system.ys[start]
           + s_end * system.xs[cur] / system.ys[cur])
    return {"start": start, "s0": s0, "psi": psi, "raw": raw,
            "end": cur, "s_end": s_end, "ncross": ncross}


def _paths_markov(system, t, n, rng):
    ns = system.n_states
    k = np.searchsorted(system.size_biased_cum, rng.random(n), side="right")
    k = np.minimum(k, ns * ns - 1)
    cur_i, cur_j = divmod(k, ns)
    taus = system.f[:, :, 1]
    phis = system.f[:, :, 0]
    start = k.copy()
    s0 = rng.random(n) * taus[cur_i, cur_j]
    target = s0 + t
    acc = taus[cur_i, cur_j].copy()
    psi = np.zeros(n)
    ncross = np.zeros(n, dtype=np.int64)
    alive = acc <= target
    while np.any(alive):
        idx = np.flatnonzero(alive)
        psi[idx] += phis[cur_i[idx], cur_j[idx]]
        ncross[idx] += 1
        u = rng.random(len(idx))
        i_new = cur_j[idx]
        rows = system.cumP[i_new]
        j_new = np.minimum((u[:, None] < rows).argmax(axis=1), ns - 1)
        cur_i[idx] = i_new
        cur_j[idx] = j_new
        acc[idx] += taus[i_new, j_new]
        alive[idx] = acc[idx] <= target[idx]
    s_end = target - (acc - taus[cur_i, cur_j])
    raw = (psi - s0 * phis[start // ns, start % ns]
           / taus[start // ns, start % ns]
           + s_end * phis[cur_i, cur_j] / taus[cur_i, cur_j])
    return {"start": start, "s0": s0, "psi": psi, "raw": raw,
            "end": cur_i * ns + cur_j, "s_end": s_end, "ncross": ncross}


_PM_BURN = 1500


def _pm_stationary_states(system, n, rng):
    """Fresh nu-distributed (roof-size-biased) ambient points: uniform
    starts, vectorized burn-in, then roof-weighted rejection."""
    need = n
    out = []
    while need > 0:
        batch = max(need + need // 3 + 64, 256)
        x = rng.random(batch) * (1 - 1e-9) + 1e-9
        for _ in range(_PM_BURN):
            x = pm_map(x, system.alpha)
        if system.roof_id == "unit":
            keep = x
        else:
            w = system._roof(x)
            keep = x[rng.random(batch) * float(np.max(w)) < w]
        out.append(keep[:need])
        need -= len(out[-1])
    return np.concatenate(out)


def _paths_pm(system, t, n, rng):
    x = _pm_stationary_states(system, n, rng)
    roof = system._roof
    rate = lambda y: system._rate(y) - system.rate_mean
    start = x.copy()
    tau0 = roof(x)
    s0 = rng.random(n) * tau0
    target = s0 + t
    acc = tau0.copy()
    psi = np.zeros(n)
    ncross = np.zeros(n, dtype=np.int64)
    alive = acc <= target
    while np.any(alive):
        idx = np.flatnonzero(alive)
        xi = x[idx]
        psi[idx] += rate(xi) * roof(xi)
        ncross[idx] += 1
        xn = pm_map(xi, system.alpha)
        x[idx] = xn
        acc[idx] += roof(xn)
        alive[idx] = acc[idx] <= target[idx]
    s_end = target - (acc - roof(x))
    raw = psi - s0 * rate(start) + s_end * rate(x)
    return {"start": start, "s0": s0, "psi": psi, "raw": raw,
            "end": x, "s_end": s_end, "ncross": ncross}


_KERNELS = {"renewal": _paths_renewal, "markov": _paths_markov,
            "pm": _paths_pm}


def _paths(system, t, n, rng):
    return _KERNELS[system.kind](system, t, n, rng)


# ---------------------------------------------------------------------------
# estimators
# ---------------------------------------------------------------------------

def full_set(states, s):
    return np.ones(np.shape(s), dtype=bool)


def _window_mask(block, window, t, W_of_t):
    kind = window[0]
    if kind == "flow":
        _, w, lo, hi = window
        val = block["raw"] - W_of_t - w * math.sqrt(t)
        return (val >= lo) & (val < hi)
    if kind == "section":
        _, a, l = window
        val = block["psi"] - W_of_t - l * float(a)
        return np.abs(val) <= _LATTICE_TOL
    raise ValueError(f"unknown window kind {window[0]!r}")


def estimate_mlclt(system, t, N, seed, *, window, setA=full_set, I=None,
                   setB=full_set, J=None, W_of_t=0.0,
                   workers=1) -> EstimateWithCI:
    """sqrt(t) x empirical probability of
    {start in A x I} and {value criterion} and {end in B x J}.

    ``window`` is a ("flow", w, lo, hi) or ("section", a, l) value criterion
    applied to the H-corrected integral; I and J are fiber intervals (None =
    full fiber).  Emits EmptySetWarning when a conditioning set is too thin.
    """
    def block_fn(b, n, rng):
        blk = _paths(system, t, n, rng)
        mask = _window_mask(blk, window, t, W_of_t)
        ma = setA(blk["start"], blk["s0"])
        if I is not None:
            ma &= (blk["s0"] >= I[0]) & (blk["s0"] < I[1])
        mb = setB(blk["end"], blk["s_end"])
        if J is not None:
            mb &= (blk["s_end"] >= J[0]) & (blk["s_end"] < J[1])
        return (int(np.sum(mask & ma & mb)), int(ma.sum()), int(mb.sum()))

    res = _run_blocks(N, seed, workers, block_fn)
    hits = sum(r[0] for r in res)
    na = sum(r[1] for r in res)
    nb = sum(r[2] for r in res)
    if min(na, nb) < 10:
        warnings.warn("conditioning set has near-zero empirical mass",
                      EmptySetWarning)
    p = hits / N
    se = math.sqrt(max(p * (1 - p), 1e-300) / N)
    return EstimateWithCI(math.sqrt(t) * p, math.sqrt(t) * se, N, seed)


def estimate_lclt(system, spec: HistogramSpec, N, seed, workers=1):
    """sqrt(t)-scaled window masses of the flow integral from stationary
    starts, one EstimateWithCI per window, all windows sharing the same
    sample paths."""
    t = spec.t

    def block_fn(b, n, rng):
        blk = _paths(system, t, n, rng)
        return [int(np.sum(_window_mask(blk, w, t, 0.0)))
                for w in spec.windows]

    res = _run_blocks(N, seed, workers, block_fn)
    out = []
    for k in range(len(spec.windows)):
        p = sum(r[k] for r in res) / N
        se = math.sqrt(max(p * (1 - p), 1e-300) / N)
        out.append(EstimateWithCI(math.sqrt(t) * p, math.sqrt(t) * se,
                                  N, seed))
    return out


def sample_flow_integrals(system, t, N, seed, workers=1, field="raw"):
    """Raw flow integrals (or any other per-sample field) as one array in
    block order; intended for distribution-shape tests."""
    def block_fn(b, n, rng):
        return _paths(system, t, n, rng)[field]

    return np.concatenate(_run_blocks(N, seed, workers, block_fn))


# ---------------------------------------------------------------------------
# base-step kernels (no fiber) for variance and moderate deviations
# ---------------------------------------------------------------------------

def _base_stepper(system, n, rng):
    """Initialize n parallel base trajectories; returns (state, advance)
    where advance() yields (phi, tau) arrays for the next step."""
    if system.kind == "renewal":
        def advance(_state):
            idx = np.searchsorted(system.cum, rng.random(n), side="right")
            idx = np.minimum(idx, len(system.ys) - 1)
            return None, system.xs[idx], system.ys[idx]
        return None, advance
    if system.kind == "markov":
        ns = system.n_states
        state = np.searchsorted(np.cumsum(system.stationary), rng.random(n),
                                side="right")
        state = np.minimum(state, ns - 1)

        def advance(i_cur):
            u = rng.random(n)
            j = np.minimum((u[:, None] < system.cumP[i_cur]).argmax(axis=1),
                           ns - 1)
            phi = system.f[i_cur, j, 0]
            tau = system.f[i_cur, j, 1]
            return j, phi, tau
        return state, advance
    if system.kind == "pm":
        x = rng.random(n) * (1 - 1e-9) + 1e-9
        for _ in range(_PM_BURN):
            x = pm_map(x, system.alpha)

        def advance(x_cur):
            phi = ((system._rate(x_cur) - system.rate_mean)
                   * system._roof(x_cur))
            tau = system._roof(x_cur)
            return pm_map(x_cur, system.alpha), phi, tau
        return x, advance
    raise ValueError(f"unknown system kind {system.kind}")


def estimate_sigma(system, n_blocks=2000, block_len=1000, seed=0,
                   workers=1):
    """Batch-means covariance of block sums of (phi_check, tau)/sqrt(L),
    centered at the block means.  Returns (2x2 covariance, 2x2 standard
    errors)."""
    def block_fn(b, n_traj, rng):
        state, advance = _base_stepper(system, n_traj, rng)
        sums = np.zeros((n_traj, 2))
        for _ in range(block_len):
            state, phi, tau = advance(state)
            sums[:, 0] += phi
            sums[:, 1] += tau
        return sums

    # one rng block per chunk of trajectories
    chunk = 512
    all_sums = []
    plan = [(b, min(chunk, n_blocks - b * chunk))
            for b in range((n_blocks + chunk - 1) // chunk)]

    def job(item):
        b, n_traj = item
        return block_fn(b, n_traj, _block_rng(seed, b))

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            all_sums = list(ex.map(job, plan))
    else:
        all_sums = [job(item) for item in plan]
    sums = np.vstack(all_sums) / math.sqrt(block_len)
    cov = np.cov(sums.T)
    se = np.abs(cov) * math.sqrt(2.0 / (len(sums) - 1)) \
        + np.sqrt(np.outer(np.diag(cov), np.diag(cov))
                  / (len(sums) - 1))
    return cov, se


def estimate_correlation(system, setA, setB, t_grid, N, seed, workers=1,
                         I=None, J=None):
    """Correlation series mu(A and Phi^{-t} B) - mu(A) mu(B) over an
    increasing t grid, advancing each sample path incrementally."""
    t_grid = list(t_grid)
    if any(b <= a for a, b in zip(t_grid, t_grid[1:])):
        raise ValueError("t_grid must be increasing")

    def in_set(pred, fiber, states, s):
        m = pred(states, s)
        if fiber is not None:
            m &= (s >= fiber[0]) & (s < fiber[1])
        return m

    def block_fn(b, n, rng):
        blk = _paths(system, t_grid[0], n, rng)
        a0 = in_set(setA, I, blk["start"], blk["s0"])
        rows = []
        cur, s_end = blk["end"], blk["s_end"]
        bmask = in_set(setB, J, cur, s_end)
        rows.append((int((a0 & bmask).sum()), int(a0.sum()),
                     int(bmask.sum())))
        for t_prev, t_next in zip(t_grid, t_grid[1:]):
            blk = _advance(system, cur, s_end, t_next - t_prev, rng)
            cur, s_end = blk["end"], blk["s_end"]
            bmask = in_set(setB, J, cur, s_end)
            rows.append((int((a0 & bmask).sum()), int(a0.sum()),
                         int(bmask.sum())))
        return rows

    res = _run_blocks(N, seed, workers, block_fn)
    series = []
    for k, t in enumerate(t_grid):
        ab = sum(r[k][0] for r in res) / N
        a = sum(r[k][1] for r in res) / N
        bb = sum(r[k][2] for r in res) / N
        corr = ab - a * bb
        pmax = max(ab, a * bb)
        se = math.sqrt(max(pmax * (1 - pmax), 1e-300) / N)
        series.append((t, corr, se))
    return series


def _advance(system, states, s, dt, rng):
    """Continue existing flow points for additional time dt (same kernel
    loop as _paths but with prescribed starting cells/heights)."""
    kind = system.kind
    n = len(s)
    if kind == "renewal":
        cur = states.copy()
        tau_of = lambda c: system.ys[c]
        phi_of = lambda c: system.xs[c]

        def step(idx):
            d = np.searchsorted(system.cum, rng.random(len(idx)),
                                side="right")
            return np.minimum(d, len(system.ys) - 1)
    elif kind == "markov":
        ns = system.n_states
        cur = states.copy()
        tau_of = lambda c: system.f[c // ns, c % ns, 1]
        phi_of = lambda c: system.f[c // ns, c % ns, 0]

        def step(idx):
            i_new = cur[idx] % ns
            u = rng.random(len(idx))
            j = np.minimum((u[:, None] < system.cumP[i_new]).argmax(axis=1),
                           ns - 1)
            return i_new * ns + j
    elif kind == "pm":
        cur = states.copy()
        tau_of = lambda c: system._roof(c)
        phi_of = lambda c: (system._rate(c) - system.rate_mean) \
            * system._roof(c)

        def step(idx):
            return pm_map(cur[idx], system.alpha)
    else:
        raise ValueError(kind)

    target = s + dt
    acc = tau_of(cur).copy() if hasattr(tau_of(cur), "copy") \
        else np.full(n, tau_of(cur))
    psi = np.zeros(n)
    alive = acc <= target
    while np.any(alive):
        idx = np.flatnonzero(alive)
        psi[idx] += phi_of(cur[idx])
        cur[idx] = step(idx)
        acc[idx] += tau_of(cur[idx])
        alive[idx] = acc[idx] <= target[idx]
    s_end = target - (acc - tau_of(cur))
    return {"end": cur, "s_end": s_end, "psi": psi}


def moderate_dev_diagnostic(system, w_list, K_list, R=1.0, seed=0,
                            N=200_000, workers=1):
    """Empirical moderate-deviation table: for each w, the scaled sum
    sqrt(w) * sum_{n : |n - w| > K sqrt(w)} P(S_f(n) in B(w nu(f), R))
    over the K values, plus the truncation point.

    f = (phi_check, tau); the ball is Euclidean in R^2.  The table is
    non-increasing in K by construction (the index sets are nested).
    """
    nu = np.array([getattr(system, "nu_phi", 0.0), system.nu_tau])
    results = {}
    for w in w_list:
        center = w * nu
        n_cap = int(10 * w / system.nu_tau)

        def block_fn(b, n, rng):
            state, advance = _base_stepper(system, n, rng)
            S = np.zeros((n, 2))
            counts = np.zeros(len(K_list))
            step = 0
            while step < n_cap:
                step += 1
                state, phi, tau = advance(state)
                S[:, 0] += phi
                S[:, 1] += tau
                # ball unreachable once the roof sum is far past the center
                if float(np.min(S[:, 1])) > center[1] + R + 1:
                    break
                d2 = (S[:, 0] - center[0]) ** 2 + (S[:, 1] - center[1]) ** 2
                inball = int(np.sum(d2 <= R * R))
                if inball:
                    for kk, K in enumerate(K_list):
                        if abs(step - w) > K * math.sqrt(w):
                            counts[kk] += inball
            return counts, step

        res = _run_blocks(N, seed, workers, block_fn)
        counts = sum(r[0] for r in res)
        truncation = max(r[1] for r in res)
        results[w] = {
            "K": list(K_list),
            "value": [math.sqrt(w) * c / N for c in counts],
            "truncation": truncation,
            "n_samples": N,
        }
    return results
