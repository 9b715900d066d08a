"""Concrete suspension-flow models.

Three base families: iid reward-renewal processes (finite atoms with exact
coordinates), finite-state Markov shifts with per-transition values, and the
intermittent interval map with a neutral fixed point, used both through its
first-return (induced) map and directly as an ambient suspension.

Every system exposes the same small surface used by the flow integrator and
the Monte Carlo kernels: ``tau_of``, ``phi_of`` (per-cell integral of the
observable), ``step``, ``sample_base`` and ``sample_size_biased``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.optimize import brentq

from .errors import MixedRingError, ReturnTimeOverflow
from .quadfield import QuadScalar, as_quad


# ---------------------------------------------------------------------------
# flow plumbing shared by all systems
# ---------------------------------------------------------------------------

@dataclass
class FlowPoint:
    """A point of the suspension space: base state plus fiber height s in
    [0, tau(state))."""
    state: object
    s: float


class ObservableProfile:
    """Intra-cell observable profile.  The default constant-rate profile
    spreads the per-cell integral phi_check(x) uniformly over [0, tau(x))."""

    def __init__(self, mode="constant_rate"):
        if mode != "constant_rate":
            raise ValueError(f"unknown profile mode {mode!r}")
        self.mode = mode

    def rate(self, phi_check, tau):
        return phi_check / tau


def step_base(system, state, rng):
    """One application of the base dynamics (iid draw / chain transition /
    induced-map step)."""
    return system.step(state, rng)


def flow_integrate(system, start: FlowPoint, t: float, rng=None):
    """Integrate the flow observable for time t from ``start``.

    Returns (integral, end FlowPoint, n_crossings).  Full cells contribute
    their exact per-cell integrals; the two partial cells contribute via the
    constant-rate profile.  The crossing count satisfies
    S_tau(n, x) <= t + s < S_tau(n + 1, x).
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    state, s = start.state, float(start.s)
    tau = system.tau_of(state)
    if not 0 <= s < tau:
        raise ValueError(f"fiber height {s} outside [0, {tau})")
    integral = 0.0
    remaining = t
    crossings = 0
    while s + remaining >= tau:
        seg = tau - s
        integral += system.phi_of(state) / tau * seg
        remaining -= seg
        state = system.step(state, rng)
        crossings += 1
        s = 0.0
        tau = system.tau_of(state)
        if tau <= 0:
            raise ValueError("roof must be positive")
    integral += system.phi_of(state) / tau * remaining
    return integral, FlowPoint(state, s + remaining), crossings


def sample_stationary(system, rng) -> FlowPoint:
    """Draw a flow point from the invariant measure nu (x) Leb / nu(tau):
    size-biased base cell, then uniform height."""
    state = system.sample_size_biased(rng)
    s = rng.random() * system.tau_of(state)
    return FlowPoint(state, s)


# ---------------------------------------------------------------------------
# reward renewal
# ---------------------------------------------------------------------------

class RenewalBase:
    """iid atoms (x_i, y_i) with rational probabilities: reward x, duration
    y > 0, zero-mean rewards.  State = atom index."""

    def __init__(self, atoms):
        self.atoms = []
        psum = Fraction(0)
        xsum = as_quad(0)
        for x, y, p in atoms:
            x, y, p = as_quad(x), as_quad(y), Fraction(p)
            if y.sign() <= 0:
                raise ValueError("durations must be positive")
            self.atoms.append((x, y, p))
            psum += p
            xsum = xsum + x * p
        if psum != 1:
            raise ValueError(f"probabilities sum to {psum}, not 1")
        if not xsum.is_zero():
            raise ValueError(f"rewards have nonzero mean {xsum}")
        self.xs = np.array([float(a[0]) for a in self.atoms])
        self.ys = np.array([float(a[1]) for a in self.atoms])
        self.probs = np.array([float(a[2]) for a in self.atoms])
        self.cum = np.cumsum(self.probs)
        try:
            self.nu_tau_exact = sum((a[1] * a[2] for a in self.atoms),
                                    start=as_quad(0))
            self.nu_tau = float(self.nu_tau_exact)
        except MixedRingError:
            # atoms spanning several quadratic rings: keep the mean roof as
            # a float; exact-DP paths are unavailable for such systems
            self.nu_tau_exact = None
            self.nu_tau = float(np.dot(self.probs, self.ys))
        sb = self.probs * self.ys / self.nu_tau
        self.size_biased_cum = np.cumsum(sb / sb.sum())

    kind = "renewal"

    def tau_of(self, i):
        return self.ys[i]

    def phi_of(self, i):
        return self.xs[i]

    def step(self, state, rng):
        return int(np.searchsorted(self.cum, rng.random(), side="right"))

    def sample_base(self, rng):
        return self.step(None, rng)

    def sample_size_biased(self, rng):
        return int(np.searchsorted(self.size_biased_cum, rng.random(),
                                   side="right"))

    def value_group(self):
        """Generators and shift for the support group of (phi_check, tau):
        the closed group generated by the support values, with one value as
        the coset shift."""
        vals = [(a[0], a[1]) for a in self.atoms]
        shift = vals[0]
        gens = [(v[0] - shift[0], v[1] - shift[1]) for v in vals[1:]]
        if not gens:
            gens = [(as_quad(0), as_quad(0))]
        return gens, shift

    def tau_support(self):
        """Duration support as exact scalars, for the 1-d mixing test."""
        return [a[1] for a in self.atoms]

    @classmethod
    def from_json(cls, obj):
        D = obj.get("D", 2)
        atoms = []
        for xp, xq, yp, yq, pn, pd in obj["atoms"]:
            atoms.append((QuadScalar(Fraction(xp), Fraction(xq), D),
                          QuadScalar(Fraction(yp), Fraction(yq), D),
                          Fraction(pn, pd)))
        return cls(atoms)


# ---------------------------------------------------------------------------
# finite Markov shift
# ---------------------------------------------------------------------------

class MarkovShiftBase:
    """Finite-state chain with per-transition values f(i, j) = (phi, tau).
    Flow state = the current edge (i, j): the point sits in the fiber over
    the transition being traversed."""

    def __init__(self, P, f):
        P = np.asarray(P, dtype=float)
        n = P.shape[0]
        if P.shape != (n, n):
            raise ValueError("transition matrix must be square")
        if np.max(np.abs(P.sum(axis=1) - 1)) > 1e-12:
            raise ValueError("rows must sum to 1")
        if np.min(np.linalg.matrix_power(np.where(P > 0, 1.0, 0.0), 2 * n)) \
                <= 0:
            raise ValueError("chain must be irreducible and aperiodic")
        self.P = P
        self.n_states = n
        self.f = np.asarray(f, dtype=float)  # (n, n, 2): [phi, tau]
        if self.f.shape != (n, n, 2):
            raise ValueError("f must give (phi, tau) per transition")
        if np.any(self.f[:, :, 1][P > 0] <= 0):
            raise ValueError("roof values must be positive")
        w, v = np.linalg.eig(P.T)
        k = int(np.argmin(np.abs(w - 1)))
        pi = np.real(v[:, k])
        pi = pi / pi.sum()
        if np.max(np.abs(pi @ P - pi)) > 1e-12:
            raise ValueError("stationary vector inaccurate")
        self.stationary = pi
        self.cumP = np.cumsum(P, axis=1)
        edge_w = pi[:, None] * P
        self.nu_phi = float(np.sum(edge_w * self.f[:, :, 0]))
        self.nu_tau = float(np.sum(edge_w * self.f[:, :, 1]))
        sb = (edge_w * self.f[:, :, 1]).ravel()
        self.size_biased_cum = np.cumsum(sb / sb.sum())

    kind = "markov"

    def tau_of(self, edge):
        return self.f[edge[0], edge[1], 1]

    def phi_of(self, edge):
        return self.f[edge[0], edge[1], 0]

    def step(self, edge, rng):
        i = edge[1]
        j = int(np.searchsorted(self.cumP[i], rng.random(), side="right"))
        return (i, min(j, self.n_states - 1))

    def sample_base(self, rng):
        i = int(np.searchsorted(np.cumsum(self.stationary), rng.random(),
                                side="right"))
        i = min(i, self.n_states - 1)
        j = int(np.searchsorted(self.cumP[i], rng.random(), side="right"))
        return (i, min(j, self.n_states - 1))

    def sample_size_biased(self, rng):
        k = int(np.searchsorted(self.size_biased_cum, rng.random(),
                                side="right"))
        k = min(k, self.n_states ** 2 - 1)
        return divmod(k, self.n_states)

    def value_group(self):
        """Support-value generators for (phi, tau) over the edges.  For a
        chain this is a superset of the true minimal group (cohomology can
        shrink it); the spectral unit-modulus scan is the sound detector."""
        vals = [(Fraction(self.f[i, j, 0]).limit_denominator(10 ** 9),
                 Fraction(self.f[i, j, 1]).limit_denominator(10 ** 9))
                for i in range(self.n_states) for j in range(self.n_states)
                if self.P[i, j] > 0]
        shift = vals[0]
        gens = [(v[0] - shift[0], v[1] - shift[1]) for v in vals[1:]]
        return gens or [(0, 0)], shift

    @classmethod
    def from_json(cls, obj):
        return cls(obj["P"], obj["f"])


# ---------------------------------------------------------------------------
# intermittent (neutral fixed point) interval map
# ---------------------------------------------------------------------------

def _pm_left(x, alpha):
    return x * (1 + (2 ** alpha) * x ** alpha)


def pm_map(x, alpha):
    """The ambient interval map: x(1 + 2^alpha x^alpha) on [0, 1/2],
    2x - 1 on (1/2, 1].  Works on scalars and numpy arrays."""
    x = np.asarray(x, dtype=float)
    out = np.where(x <= 0.5, _pm_left(np.minimum(x, 0.5), alpha),
                   2 * x - 1)
    return float(out) if out.ndim == 0 else out


def pm_first_return(x: float, alpha: float, cap: int = 10 ** 6):
    """First-return map of the ambient map to (1/2, 1]: iterate until the
    orbit re-enters, return (landing point, number of steps)."""
    if not 0.5 < x <= 1:
        raise ValueError("x must lie in (1/2, 1]")
    y = pm_map(x, alpha)
    r = 1
    while not y > 0.5:
        if r >= cap:
            raise ReturnTimeOverflow(f"no return within {cap} steps from {x}")
        y = _pm_left(y, alpha)
        r += 1
    return y, r


_ACIM_CACHE = {}


def _pm_acim_ensemble(alpha, n=200_000, burn=2000, seed=745_197_101):
    """Ensemble of points distributed (approximately) per the absolutely
    continuous invariant measure of the ambient map: uniform starts pushed
    through ``burn`` iterations.  Deterministic given the fixed seed."""
    key = (round(alpha, 12), n, burn, seed)
    if key not in _ACIM_CACHE:
        rng = np.random.default_rng(seed)
        x = rng.random(n) * 0.999999 + 1e-9
        for _ in range(burn):
            x = pm_map(x, alpha)
        _ACIM_CACHE[key] = x
    return _ACIM_CACHE[key]


PM_ROOFS = {
    "unit": lambda y: np.ones_like(np.asarray(y, dtype=float)),
    "affine": lambda y: 1.0 + np.asarray(y, dtype=float) / 2,
}

PM_RATES = {
    # flow rates g(y) before centering; phi_check = (g - m) * roof with m
    # chosen so the flow observable has zero mean
    "x_centered": lambda y: np.asarray(y, dtype=float),
}


class PMTowerBase:
    """The intermittent map used as a suspension base.

    Ambient representation: state = a point of (0, 1], roof = upsilon(state),
    per-cell observable integral = (g(state) - m) * upsilon(state) with m the
    invariant-measure mean of g weighted by upsilon (estimated once from a
    deterministic ensemble).  The induced first-return structure over
    (1/2, 1] is exposed through ``return_time`` and ``induced_map``.
    """

    def __init__(self, alpha, phi_check="x_centered", roof="unit"):
        if not 0 < alpha < 0.5:
            raise ValueError("alpha must lie in (0, 1/2)")
        self.alpha = alpha
        self.roof_id = roof
        self.rate_id = phi_check
        self._roof = PM_ROOFS[roof]
        self._rate = PM_RATES[phi_check]
        ens = _pm_acim_ensemble(alpha)
        wts = self._roof(ens)
        self.rate_mean = float(np.average(self._rate(ens), weights=wts))
        self.nu_tau = float(np.mean(wts))
        # preimage thresholds of 1/2 under the left branch: return time of
        # x in (1/2, 1] is 1 + #{n >= 1 : 2x - 1 <= x_n}
        self.thresholds = self._threshold_table()

    kind = "pm"

    def _threshold_table(self, floor=1e-13, cap=100_000):
        xs = [0.5]
        while xs[-1] > floor and len(xs) < cap:
            target = xs[-1]
            lo, hi = 0.0, target
            xs.append(brentq(lambda y: _pm_left(y, self.alpha) - target,
                             lo, hi, xtol=1e-16, rtol=8.9e-16))
        return np.array(xs)

    # -- ambient suspension interface -----------------------------------

    def tau_of(self, x):
        return float(self._roof(x))

    def phi_of(self, x):
        return float((self._rate(x) - self.rate_mean) * self._roof(x))

    def step(self, x, rng=None):
        return pm_map(x, self.alpha)

    def sample_base(self, rng):
        ens = _pm_acim_ensemble(self.alpha)
        return float(ens[rng.integers(len(ens))])

    def sample_size_biased(self, rng):
        if self.roof_id == "unit":
            return self.sample_base(rng)
        ens = _pm_acim_ensemble(self.alpha)
        w = self._roof(ens)
        cum = np.cumsum(w / w.sum())
        return float(ens[np.searchsorted(cum, rng.random())])

    # -- induced first-return structure ---------------------------------

    def return_time(self, x):
        """Return time of x in (1/2, 1], via the precomputed threshold
        table (vectorized); equals pm_first_return(x, alpha)[1]."""
        z = np.asarray(2 * np.asarray(x, dtype=float) - 1)
        # r = 1 + #{n >= 0 : z <= x_n}: each uncleared threshold costs one
        # extra left-branch step (the table is decreasing, hence the negation)
        k = np.searchsorted(-self.thresholds, -z, side="right")
        out = np.asarray(1 + k)
        return int(out) if out.ndim == 0 else out

    def induced_map(self, x):
        return pm_first_return(x, self.alpha)[0]

    @classmethod
    def from_json(cls, obj):
        return cls(obj["alpha"], obj.get("phi_check", "x_centered"),
                   obj.get("roof", "unit"))


def induced_observable(system: PMTowerBase, f_on_tower, x: float):
    """Sum of f along the excursion of x in (1/2, 1]: f(x) + f(Fx) + ... up
    to the step before the first return."""
    _, r = pm_first_return(x, system.alpha)
    total = 0.0
    y = x
    for _ in range(r):
        total += f_on_tower(y)
        y = pm_map(y, system.alpha)
    return total


# ---------------------------------------------------------------------------
# loading
# ---------------------------------------------------------------------------

_SYSTEM_TYPES = {
    "renewal": RenewalBase,
    "markov": MarkovShiftBase,
    "pm": PMTowerBase,
}


def load_system(spec):
    """Build a system from a JSON object, JSON string, or file path."""
    if isinstance(spec, str):
        try:
            obj = json.loads(spec)
        except json.JSONDecodeError:
            with open(spec) as fh:
                obj = json.load(fh)
    else:
        obj = spec
    kind = obj.get("type")
    if kind not in _SYSTEM_TYPES:
        raise ValueError(f"unknown system type {kind!r}")
    return _SYSTEM_TYPES[kind].from_json(obj)
