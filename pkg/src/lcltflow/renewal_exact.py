"""Exact distribution of the reward sum at the last renewal before time t.

For finitely supported reward-renewal processes with integer rewards and
durations in a quadratic ring Z[sqrt(D)], the pair (S_{N_t}, t - t_{N_t}) has
an exactly computable distribution: elapsed times live in the ring, all
probabilities are big rationals, and every comparison against t is exact.
This is the error-free oracle used to arbitrate Monte Carlo estimates and to
exhibit the oscillating sqrt(t)-scaled probabilities that rule out a single
local limit for arithmetic duration supports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import PathExplosion, StateExplosion
from .quadfield import QuadScalar, as_quad

PalmStart = "PalmStart"
StationaryStart = "StationaryStart"

_STATE_CAP = 10 ** 8


def _exact_atoms(atoms):
    out = []
    for x, y, p in atoms:
        if isinstance(x, QuadScalar):
            if not x.is_rational() or x.p.denominator != 1:
                raise ValueError(f"rewards must be integers, got {x}")
            x = int(x.p)
        else:
            x = int(x)
        y = as_quad(y)
        p = Fraction(p)
        if y.sign() <= 0:
            raise ValueError("durations must be positive")
        out.append((x, y, p))
    if sum(p for _, _, p in out) != 1:
        raise ValueError("probabilities must sum to 1")
    return out


def _nu_tau(atoms):
    return sum((y * p for _, y, p in atoms), start=as_quad(0))


def _prune_bound(atoms, t):
    return max(12, math.ceil(12 * math.sqrt(max(float(t), 1.0)
                                            / float(_nu_tau(atoms)))))


@dataclass
class ExactDistribution:
    """Exact distribution over (S, overshoot = t - t_{N_t}); ``pruned_mass``
    is the total rational path mass dropped by the |S| cutoff."""
    mass: dict           # (S: int, overshoot: QuadScalar | None) -> exact
    pruned_mass: Fraction = field(default_factory=lambda: Fraction(0))

    def total(self):
        vals = list(self.mass.values())
        acc = vals[0] if vals else Fraction(0)
        for v in vals[1:]:
            acc = acc + v
        return acc + self.pruned_mass

    def prob_S(self, S: int):
        out = Fraction(0)
        for (s, _), p in self.mass.items():
            if s == S:
                out = out + p
        return out

    def to_json(self):
        def enc(v):
            if isinstance(v, QuadScalar):
                return v.to_pair()
            return [v.numerator, v.denominator]

        return {
            "mass": [[s, None if o is None else enc(o), enc(p)]
                     for (s, o), p in sorted(
                         self.mass.items(),
                         key=lambda kv: (kv[0][0],
                                         0.0 if kv[0][1] is None
                                         else float(kv[0][1])))],
            "pruned_mass": [self.pruned_mass.numerator,
                            self.pruned_mass.denominator],
        }


def _palm_sweep(atoms, t, prune_bound=None, check_zero_integer=False):
    """Renewal measure of the reward-sum process up to horizon t.

    Processes states (S, t_elapsed) in increasing elapsed time, merging all
    paths that meet at the same state (valid because durations are strictly
    positive, so every predecessor is strictly earlier).  Returns
    (states, finals, pruned): ``states`` maps (S, p, q) — elapsed time
    p + q sqrt(D) — to the exact probability that some renewal lands there
    with reward sum S; ``finals`` lists (S, t_elapsed, next_gap, prob) for
    attempted transitions overshooting t; ``pruned`` is the rational mass
    dropped by the |S| cutoff.

    Durations must be quadratic integers so elapsed times are exact integer
    pairs; the comparison against t falls back to exact sign evaluation
    only near the float boundary.
    """
    import heapq

    D = next((y.D for _, y, _ in atoms if y.q != 0), t.D)
    if t.q != 0 and t.D != D:
        raise ValueError("durations and t must share one ring")
    for _, y, _ in atoms:
        if y.p.denominator != 1 or y.q.denominator != 1:
            raise ValueError(
                "durations must be quadratic integers (integral p, q)")
        if y.q != 0 and y.D != D:
            raise ValueError("durations must share one ring")
    ys = [(int(y.p), int(y.q)) for _, y, _ in atoms]
    xs = [x for x, _, _ in atoms]
    ps = [p for _, _, p in atoms]
    t_p, t_q = t.p, t.q
    t_float = float(t)
    sqD = math.sqrt(D)

    def le_t(p, q):
        diff = t_float - (p + q * sqD)
        if abs(diff) > 1e-6:
            return diff >= 0
        return (QuadScalar(t_p - p, t_q - q, D)).sign() >= 0

    pending = {(0, 0, 0): Fraction(1)}
    heap = [(0.0, (0, 0, 0))]
    states = {}
    finals = []
    pruned = Fraction(0)
    while heap:
        _, key = heapq.heappop(heap)
        if key in states:
            continue
        prob = pending.pop(key)
        states[key] = prob
        if len(states) > _STATE_CAP:
            raise StateExplosion(f"DP states exceeded {_STATE_CAP}")
        S, Tp, Tq = key
        if check_zero_integer and S == 0:
            assert Tq == 0, \
                f"zero-reward renewal at non-integer time {Tp}+{Tq}*sqrt"
        for k in range(len(ys)):
            yp, yq = ys[k]
            p2, q2 = Tp + yp, Tq + yq
            w = prob * ps[k]
            if le_t(p2, q2):
                S2 = S + xs[k]
                if prune_bound is not None and abs(S2) > prune_bound:
                    pruned += w
                    continue
                k2 = (S2, p2, q2)
                if k2 in pending:
                    pending[k2] += w
                else:
                    pending[k2] = w
                    heapq.heappush(heap, (p2 + q2 * sqD, k2))
            else:
                finals.append((S, QuadScalar(Tp, Tq, D),
                               QuadScalar(yp, yq, D), w))
    return states, finals, pruned


def _palm_layers(atoms, t, prune_bound=None, check_zero_integer=False):
    """Maximal renewal paths at horizon t: (finals, pruned) as produced by
    the merged-state sweep."""
    _, finals, pruned = _palm_sweep(atoms, t, prune_bound,
                                    check_zero_integer)
    return finals, pruned


def dp_distribution(atoms, t, mode=PalmStart, prune=True) -> ExactDistribution:
    """Exact law of (S_{N_t}, t - t_{N_t}) with N_t = max{n : t_n <= t}.

    PalmStart places a renewal at time 0; overshoots are ring elements.
    StationaryStart draws the first cell size-biased with uniform height and
    integrates it exactly; the overshoot is then continuous, so the returned
    distribution is the exact marginal over the reward sum (overshoot key
    None, values exact ring elements).  Functionals that constrain the start
    height or the overshoot go through stationary_event_probability.
    """
    atoms = _exact_atoms(atoms)
    t = t if isinstance(t, QuadScalar) else as_quad(t)
    bound = _prune_bound(atoms, t) if prune else None
    if mode == PalmStart:
        finals, pruned = _palm_layers(atoms, t, prune_bound=bound)
        mass = {}
        for S, T, _gap, w in finals:
            key = (S, t - T)
            mass[key] = mass.get(key, Fraction(0)) + w
        dist = ExactDistribution(mass, pruned)
        assert dist.total() == 1, "mass leak in Palm DP"
        return dist
    if mode == StationaryStart:
        pieces, pruned_meas = _stationary_pieces(atoms, t, bound)
        zero = t - t
        mass = {}
        for S, _lo, _hi, weight in pieces:
            key = (S, None)
            mass[key] = mass.get(key, zero) + weight
        dist = ExactDistribution(mass, Fraction(0))
        total = dist.total() + pruned_meas
        assert (total - 1).is_zero(), f"mass leak: total = {float(total)}"
        dist.pruned_mass = pruned_meas
        return dist
    raise ValueError(f"unknown mode {mode!r}")


def _stationary_pieces(atoms, t, prune_bound=None, S_filter=None,
                       I=None, J=None):
    """Exact decomposition of the stationary-start event measure.

    A stationary start picks the first cell size-biased with a uniform
    height s0 (joint density p_i / nu(tau) over (cell i, s0)).  After the
    first crossing the process is a Palm renewal path; a renewal state
    (S, T) with next gap y_j is the realized final state exactly when
    s_end = s0 + t - y_i - T lies in [0, y_j).  Every (first cell, state,
    next atom) triple therefore contributes an s0-interval; this returns
    the list of (value, s0_lo, s0_hi, exact weight) pieces intersected with
    the constraints s0 in I and s_end in J, plus the pruned measure.
    """
    nu = _nu_tau(atoms)
    zero = t - t
    states, _finals, pruned = _palm_sweep(atoms, t, prune_bound)
    D = next((y.D for _, y, _ in atoms if y.q != 0), t.D)
    I = None if I is None else (as_quad(I[0]), as_quad(I[1]))
    J = None if J is None else (as_quad(J[0]), as_quad(J[1]))
    pieces = []
    pruned_meas = zero
    for x_i, y_i, p_i in atoms:
        dens = p_i / nu
        i_lo = zero if I is None else I[0]
        i_hi = y_i if I is None or (I[1] - y_i).sign() > 0 else I[1]
        # no-crossing branch: s0 + t < y_i, empty reward sum, s_end = s0 + t
        if S_filter is None or S_filter == 0:
            lo, hi = i_lo, i_hi
            nc_hi = y_i - t
            if (nc_hi - hi).sign() < 0:
                hi = nc_hi
            if J is not None:
                if (J[0] - t - lo).sign() > 0:
                    lo = J[0] - t
                if (J[1] - t - hi).sign() < 0:
                    hi = J[1] - t
            seg = _interval_len(lo, hi)
            if seg.sign() > 0:
                pieces.append((0, lo, hi, dens * seg))
        for (S, Tp, Tq), w in states.items():
            val = S + x_i
            if S_filter is not None and val != S_filter:
                continue
            T = QuadScalar(Tp, Tq, D)
            base = y_i + T - t
            for _x_j, y_j, p_j in atoms:
                lo = base
                hi = base + y_j
                if J is not None:
                    if (base + J[0] - lo).sign() > 0:
                        lo = base + J[0]
                    if (base + J[1] - hi).sign() < 0:
                        hi = base + J[1]
                seg = _overlap(lo, hi, i_lo, i_hi)
                if seg.sign() > 0:
                    pieces.append((val, lo, hi, dens * w * p_j * seg))
        if pruned:
            cross = y_i if (y_i - t).sign() < 0 else t
            pruned_meas = pruned_meas + dens * pruned * cross
    return pieces, pruned_meas


def _interval_len(lo, hi):
    d = hi - lo
    return d if d.sign() > 0 else (lo - lo)


def _overlap(a_lo, a_hi, b_lo, b_hi):
    lo = a_lo if (a_lo - b_lo).sign() >= 0 else b_lo
    hi = a_hi if (a_hi - b_hi).sign() <= 0 else b_hi
    return _interval_len(lo, hi)


def stationary_event_probability(atoms, t, S_target, I=None, J=None):
    """Exact P(s0 in I, value = S_target, s_end in J) for the flow started
    from the invariant measure (size-biased first cell, uniform height s0).

    ``value`` is the section-corrected integral: the sum of the rewards of
    all completed cells, counting the partially started first cell in full
    (the transfer-function convention under which lattice-valued observables
    stay lattice-valued along the flow).  I and J are fiber intervals (lo,
    hi), half-open, exact; None means unconstrained.  Returns an exact
    element of Q(sqrt(D)); pruning is disabled, so this is error-free.
    """
    atoms = _exact_atoms(atoms)
    t = t if isinstance(t, QuadScalar) else as_quad(t)
    pieces, _pruned = _stationary_pieces(atoms, t, prune_bound=None,
                                         S_filter=S_target, I=I, J=J)
    total = t - t
    for _S, _lo, _hi, weight in pieces:
        total = total + weight
    return total


def brute_force_enumerate(atoms, t) -> ExactDistribution:
    """Full path enumeration oracle (Palm start); exact equality with
    dp_distribution is the correctness contract."""
    atoms = _exact_atoms(atoms)
    t = t if isinstance(t, QuadScalar) else as_quad(t)
    min_y = min((y for _, y, _ in atoms), key=float)
    depth = int(float(t) / float(min_y)) + 2
    if len(atoms) ** depth > 10 ** 8:
        raise PathExplosion(
            f"~{len(atoms)}^{depth} paths exceed the enumeration budget")
    mass = {}

    def rec(S, T, prob):
        for x, y, p in atoms:
            T2 = T + y
            if T2 <= t:
                rec(S + x, T2, prob * p)
            else:
                key = (S, t - T)
                mass[key] = mass.get(key, Fraction(0)) + prob * p

    rec(0, t - t, Fraction(1))
    dist = ExactDistribution(mass)
    assert dist.total() == 1
    return dist


# ---------------------------------------------------------------------------
# the oscillation scan
# ---------------------------------------------------------------------------

def section_61_atoms():
    """Three atoms, probability 1/3 each: rewards -1, 0, 1 with durations
    2 - sqrt2, 1, sqrt2 - 1 (mean duration 2/3, zero-mean rewards)."""
    s2 = QuadScalar.sqrtD(2)
    third = Fraction(1, 3)
    return [(-1, as_quad(2) - s2, third), (0, as_quad(1), third),
            (1, s2 - as_quad(1), third)]


def frac_cell(u) -> int:
    """Index of the fractional-part cell in the partition
    [0, sqrt2-1), [sqrt2-1, 2-sqrt2), [2-sqrt2, 1) (exact comparisons)."""
    u = u if isinstance(u, QuadScalar) else as_quad(u)
    u = u.frac()
    s2 = QuadScalar.sqrtD(2)
    if (u - (s2 - 1)).sign() < 0:
        return 0
    if (u - (as_quad(2) - s2)).sign() < 0:
        return 1
    return 2


def _exact_time(t):
    if isinstance(t, QuadScalar):
        return t
    if isinstance(t, float):
        return as_quad(Fraction(t).limit_denominator(10 ** 6))
    return as_quad(t)


def counterexample_scan(t_values, atoms=None):
    """Exact sqrt(t) P(S_{N_t} = 0) over t_values with the cell of frac(t).

    Returns rows (t, cell, sqrt_t_times_p, pruned_mass).  Asserts the
    structural identity that every zero-reward renewal happens at an integer
    time, so the last zero-reward renewal before t is at floor(t) and the
    value factorizes through the cell of frac(t).
    """
    if atoms is None:
        atoms = section_61_atoms()
    atoms = _exact_atoms(atoms)
    rows = []
    for t in t_values:
        t_exact = _exact_time(t)
        if float(t_exact) < 1:
            raise ValueError("scan requires t >= 1")
        finals, pruned = _palm_layers(
            atoms, t_exact, prune_bound=_prune_bound(atoms, t_exact),
            check_zero_integer=True)
        p0 = Fraction(0)
        for S, T, _gap, w in finals:
            if S == 0:
                assert T.frac().is_zero(), "zero-reward renewal off-lattice"
                assert T.floor() == t_exact.floor(), \
                    "last zero-reward renewal is not at floor(t)"
                p0 += w
        rows.append((float(t_exact), frac_cell(t_exact),
                     math.sqrt(float(t_exact)) * float(p0), float(pruned)))
    return rows


def scan_csv_rows(rows):
    yield "t,frac_cell,sqrt_t_times_p,pruned_mass"
    for t, cell, v, pm in rows:
        yield f"{t!r},{cell},{v!r},{pm!r}"
