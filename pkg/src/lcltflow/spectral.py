"""Twisted transfer operators for finite Markov shifts.

The operator family t -> P_t with (P_t)_{ji} = P(i, j) exp(i <t, f(i, j)>)
is a finite complex matrix, so its leading eigenvalue curve, the quadratic
expansion at 0, the Fourier-inversion point probabilities and the
unit-modulus eigenvalue set are all computable to near machine precision.
These serve as rigorous oracles, independent of Monte Carlo sampling.
"""

from __future__ import annotations

import cmath
import math

import numpy as np

from .errors import IllConditionedFit, NoGapError, QuadratureFailure
from .groups import Group1D
from .systems import MarkovShiftBase


class TwistedOperatorModel:
    """A finite chain plus per-transition value vectors f in R^d (d = 1, 2).

    By default f is taken from the chain's (phi, tau) transition values;
    pass ``components=(0,)`` or ``(1,)`` to restrict to one coordinate, or an
    explicit (n, n, d) array to override.
    """

    def __init__(self, chain: MarkovShiftBase, f=None, components=None):
        self.chain = chain
        if f is None:
            f = chain.f
        f = np.asarray(f, dtype=float)
        if f.ndim == 2:
            f = f[:, :, None]
        if components is not None:
            f = f[:, :, list(components)]
        self.f = f
        self.d = f.shape[2]
        edge_w = chain.stationary[:, None] * chain.P
        self.nu_f = np.array([float(np.sum(edge_w * f[:, :, k]))
                              for k in range(self.d)])
        self.f_max = float(np.max(np.abs(f[chain.P > 0])))


def twisted_matrix(model: TwistedOperatorModel, t) -> np.ndarray:
    """(P_t)_{ji} = P(i,j) exp(i <t, f(i,j)>): the transfer matrix twisted
    by the Fourier character of the transition values."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if t.shape != (model.d,):
        raise ValueError(f"t has shape {t.shape}, expected ({model.d},)")
    phase = np.tensordot(model.f, t, axes=([2], [0]))
    return (model.chain.P * np.exp(1j * phase)).T


def leading_eigenvalue(P_t: np.ndarray, gap_tol: float = 1e-8):
    """Maximal-modulus eigenvalue and its eigenvector, residual <= 1e-12,
    eigenvector phase fixed by making its largest-modulus entry real
    positive.  Raises NoGapError when the top two moduli tie within
    ``gap_tol``."""
    w, V = np.linalg.eig(P_t)
    order = np.argsort(-np.abs(w))
    lam = w[order[0]]
    if len(w) > 1 and abs(abs(w[order[0]]) - abs(w[order[1]])) < gap_tol:
        raise NoGapError(f"leading moduli tie: |{w[order[0]]:.6g}| vs "
                         f"|{w[order[1]]:.6g}|")
    v = V[:, order[0]]
    # one Rayleigh-quotient refinement pass
    lam = complex(np.vdot(v, P_t @ v) / np.vdot(v, v))
    k = int(np.argmax(np.abs(v)))
    v = v * (abs(v[k]) / v[k])
    resid = float(np.linalg.norm(P_t @ v - lam * v))
    if resid > 1e-12 * max(1.0, float(np.linalg.norm(P_t))):
        raise NoGapError(f"eigenpair residual {resid:.3g} above tolerance")
    return lam, v


class EigenCurve:
    """Lazy cache of leading eigendata of a twisted-operator model along
    sampled t values."""

    def __init__(self, model: TwistedOperatorModel, ts=()):
        self.model = model
        self._cache = {}
        for t in ts:
            self.eig(t)

    def eig(self, t):
        key = tuple(np.atleast_1d(np.asarray(t, dtype=float)))
        if key not in self._cache:
            P_t = twisted_matrix(self.model, key)
            w = np.linalg.eig(P_t)[0]
            order = np.argsort(-np.abs(w))
            lam, v = leading_eigenvalue(P_t)
            gap = (abs(w[order[0]]) - abs(w[order[1]])
                   if len(w) > 1 else float("inf"))
            self._cache[key] = (lam, v, float(gap))
        return self._cache[key]

    def lam(self, t):
        return self.eig(t)[0]

    @property
    def samples(self):
        return sorted(self._cache)


def _richardson(F, h):
    """Two-level Richardson extrapolation in h^2: error drops from O(h^2)
    to O(h^6) for an even-in-h error expansion."""
    f1, f2, f4 = F(h), F(h / 2), F(h / 4)
    r1 = (4 * f2 - f1) / 3
    r2 = (4 * f4 - f2) / 3
    return (16 * r2 - r1) / 15


def expansion_fit(curve: EigenCurve, nu_f=None, h=0.02):
    """Quadratic expansion log lambda_t = i <drift, t> - t' m t + O(|t|^3).

    drift and the symmetric matrix m are extracted from odd/even parts of
    log lambda along coordinate (and diagonal) directions with Richardson
    extrapolation; ``residual_order`` is the log-log slope of the remainder
    over |t| in [1e-3, 1e-1].  ``nu_f``, when given, is only used to seed
    the returned record; the fit itself is independent of it.
    """
    model = curve.model
    d = model.d
    if not 0 < h <= 0.1:
        raise IllConditionedFit(f"sample radius h = {h} outside (0, 0.1]")

    def logl(tvec):
        return cmath.log(curve.lam(tvec))

    def dir_vec(k):
        e = np.zeros(d)
        e[k] = 1.0
        return e

    def odd_coef(u):
        def F(hh):
            return ((logl(hh * u) - logl(-hh * u)) / 2 / (1j * hh)).real
        return _richardson(F, h)

    def even_coef(u):
        def F(hh):
            return -((logl(hh * u) + logl(-hh * u)) / 2).real / hh ** 2
        return _richardson(F, h)

    drift = np.array([odd_coef(dir_vec(k)) for k in range(d)])
    m = np.zeros((d, d))
    for k in range(d):
        m[k, k] = even_coef(dir_vec(k))
    for k in range(d):
        for j in range(k + 1, d):
            mixed = even_coef(dir_vec(k) + dir_vec(j))
            m[k, j] = m[j, k] = (mixed - m[k, k] - m[j, j]) / 2

    u = np.ones(d) / math.sqrt(d)
    hs = np.geomspace(1e-3, 1e-1, 13)
    res, hh_used = [], []
    for hh in hs:
        t = hh * u
        r = abs(logl(t) - (1j * float(drift @ t) - float(t @ m @ t)))
        if r > 1e-13:
            res.append(r)
            hh_used.append(hh)
    if len(res) < 3:
        # the quadratic model is exact to roundoff (e.g. deterministic f)
        return drift, m, math.inf
    residual_order = float(np.polyfit(np.log(hh_used), np.log(res), 1)[0])
    return drift, m, residual_order


# ---------------------------------------------------------------------------
# Fourier inversion
# ---------------------------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)


def _gl(fvec, a, b):
    x = 0.5 * (b - a) * _GL_NODES + 0.5 * (a + b)
    return 0.5 * (b - a) * np.sum(_GL_WEIGHTS * fvec(x))


def _adaptive_panel(fvec, a, b, tol, depth):
    whole = _gl(fvec, a, b)
    mid = 0.5 * (a + b)
    split = _gl(fvec, a, mid) + _gl(fvec, mid, b)
    if abs(whole - split) <= tol:
        return split
    if depth <= 0:
        raise QuadratureFailure("adaptive refinement exceeded depth budget")
    return (_adaptive_panel(fvec, a, mid, tol / 2, depth - 1)
            + _adaptive_panel(fvec, mid, b, tol / 2, depth - 1))


def _integrate(fvec, a, b, osc_rate, tol=1e-12, depth=20):
    """Adaptive Gauss-Legendre with oscillation-aware pre-splitting: initial
    panels are sized so the phase advances at most ~pi/2 per panel."""
    n0 = max(1, int(osc_rate * (b - a) / (math.pi / 2)) + 1)
    edges = np.linspace(a, b, n0 + 1)
    return sum(_adaptive_panel(fvec, x, y, tol, depth)
               for x, y in zip(edges, edges[1:]))


def _char_fn(model: TwistedOperatorModel, n: int):
    pi = model.chain.stationary

    def char(t):
        P_t = twisted_matrix(model, t)
        return complex(np.sum(np.linalg.matrix_power(P_t, n) @ pi))

    return char


def fourier_lclt(model: TwistedOperatorModel, n: int, v, mode="LatticeExact",
                 eps=None) -> float:
    """Fourier-inversion oracle for P(S_n - n nu(f) = v) on integer-valued f
    (mode 'LatticeExact'), or the smoothed kernel expectation
    E[h_d(S_n - n nu(f) - v)] with h_1 frequency profile
    (1/eps - |t|/eps^2) 1_{|t|<eps} (mode 'Smoothed').
    """
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if v.shape != (model.d,):
        raise ValueError("v has the wrong dimension")
    if n == 0:
        if mode == "LatticeExact":
            return 1.0 if np.allclose(v + 0.0, np.round(v)) and \
                np.all(np.abs(v) < 1e-12) else 0.0
    char = _char_fn(model, n)
    target = n * model.nu_f + v
    rate = n * model.f_max + float(np.max(np.abs(target))) + 1.0

    if mode == "LatticeExact":
        off = np.abs(model.f - np.round(model.f))[model.chain.P > 0]
        if off.size and float(np.max(off)) > 1e-9:
            raise ValueError("LatticeExact requires integer-valued f")
        if np.max(np.abs(target - np.round(target))) > 1e-9:
            return 0.0

        def outer(t1_arr):
            out = np.empty(len(t1_arr), dtype=complex)
            for i, t1 in enumerate(t1_arr):
                if model.d == 1:
                    out[i] = char([t1]) * cmath.exp(-1j * t1 * target[0])
                else:
                    def inner(t2_arr):
                        vals = np.empty(len(t2_arr), dtype=complex)
                        for j, t2 in enumerate(t2_arr):
                            vals[j] = char([t1, t2]) * cmath.exp(
                                -1j * (t1 * target[0] + t2 * target[1]))
                        return vals
                    out[i] = _integrate(inner, -math.pi, math.pi, rate)
            return out

        val = _integrate(outer, -math.pi, math.pi, rate)
        return float(val.real) / (2 * math.pi) ** model.d

    if mode == "Smoothed":
        if not eps or eps <= 0:
            raise ValueError("Smoothed mode needs eps > 0")

        def hhat(t):
            return np.where(np.abs(t) < eps, 1 / eps - np.abs(t) / eps ** 2,
                            0.0)

        if model.d != 1:
            raise ValueError("Smoothed mode implemented for d = 1")

        def fvec(t_arr):
            out = np.empty(len(t_arr), dtype=complex)
            for i, t in enumerate(t_arr):
                out[i] = hhat(t) * char([t]) * cmath.exp(-1j * t * target[0])
            return out

        val = _integrate(fvec, -eps, eps, rate)
        return float(val.real) / (2 * math.pi)

    raise ValueError(f"unknown mode {mode!r}")


def unit_modulus_scan(model: TwistedOperatorModel, t_grid, tol=1e-8):
    """All grid points whose leading eigenvalue modulus is within ``tol`` of
    1, with the inferred dual lattice (d = 1) and shift.

    Returns {"detections": [(t, lambda)], "inferred_M": Group1D or 'R^d',
    "shift": float or None}.  Nonzero detections at t in t0 Z mean the value
    group is M = (2 pi / t0) Z with coset shift arg(lambda(t0)) / t0.
    """
    detections = []
    for t in t_grid:
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        P_t = twisted_matrix(model, t_arr)
        w = np.linalg.eig(P_t)[0]
        lam = w[np.argmax(np.abs(w))]
        if abs(abs(lam) - 1.0) < tol:
            detections.append((tuple(t_arr), complex(lam)))
    result = {"detections": detections, "inferred_M": None, "shift": None}
    nonzero = [t for t, _ in detections
               if float(np.linalg.norm(t)) > 1e-12]
    if not nonzero:
        result["inferred_M"] = Group1D.full() if model.d == 1 else "R^2"
        result["shift"] = 0.0
        return result
    if model.d == 1:
        t0 = min(abs(t[0]) for t in nonzero)
        # snap all detections to multiples of t0
        if all(abs(t[0] / t0 - round(t[0] / t0)) < 1e-6 for t in nonzero):
            a = 2 * math.pi / t0
            lam0 = next(l for t, l in detections if abs(abs(t[0]) - t0) < 1e-12)
            shift = cmath.phase(lam0) / t0 if t0 > 0 else 0.0
            result["inferred_M"] = Group1D.lattice(a)
            result["shift"] = shift % a
    return result


def eigen_curve_rows(model: TwistedOperatorModel, t_grid):
    """CSV-ready rows (t components..., Re lambda, Im lambda, |lambda|, gap)
    along a grid; ties are reported with gap 0 and the raw top eigenvalue."""
    rows = []
    for t in t_grid:
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        P_t = twisted_matrix(model, t_arr)
        w = np.linalg.eig(P_t)[0]
        order = np.argsort(-np.abs(w))
        lam = w[order[0]]
        gap = (abs(w[order[0]]) - abs(w[order[1]])) if len(w) > 1 else math.inf
        rows.append(list(t_arr) + [lam.real, lam.imag, abs(lam), gap])
    return rows
