"""Ergodic optimization for the weighted shift.

Maximizing periodic orbits, the ergodic maximum from a temperature sweep,
Mane potentials, sub-action defects and calibration residuals.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .potentials import Potential
from .shift import ShiftOperator
from .space import TruncatedVector, _coords
from .thermo import SweepResult

log = logging.getLogger(__name__)

NEG_INF = float("-inf")


# -- periodic orbits ----------------------------------------------------------

@dataclass
class PeriodicOrbitMeasure:
    period: int
    head: np.ndarray
    orbit: np.ndarray = field(repr=False)
    value: float
    residual: float

    def points(self, space) -> list:
        return [TruncatedVector(p, space) for p in self.orbit]

    def to_dict(self) -> dict:
        return {"period": self.period, "head": self.head.tolist(),
                "value": self.value, "residual": self.residual}


def periodic_mean(A: Potential, L: ShiftOperator, head, k: int) -> float:
    """(1/k) S_k A along the periodic orbit with the given head."""
    X = L.periodic_points_array(np.asarray(head, dtype=float), k)
    return float(np.mean(A.values(L.orbit_array(X, k))))


def periodic_orbit(A: Potential, L: ShiftOperator, head, k: int) -> PeriodicOrbitMeasure:
    head = np.asarray(head, dtype=float).reshape(-1)
    X = L.periodic_points_array(head, k)
    orbit = L.orbit_array(X, k)
    return PeriodicOrbitMeasure(k, head, orbit, float(np.mean(A.values(orbit))),
                                L.periodic_residual(X, k))


@dataclass
class MultistartSpec:
    """Starts for the simplex searches.

    ``seeds`` maps a period to a list of explicit heads tried before the
    random starts, which are N(0, scale^2) per coordinate.
    """

    starts: int = 16
    scale: float = 2.0
    seeds: dict = field(default_factory=dict)
    xatol: float = 1e-12
    fatol: float = 1e-14
    maxiter_per_dim: int = 4000
    seed: int = 0


@dataclass
class MaximizeReport:
    m_estimate: float
    best_orbit: PeriodicOrbitMeasure
    per_period: dict
    restarts: list

    def to_dict(self) -> dict:
        return {"m_estimate": self.m_estimate, "best_orbit": self.best_orbit.to_dict(),
                "per_period": {str(k): v for k, v in self.per_period.items()},
                "restarts": self.restarts}


def m_periodic(A: Potential, L: ShiftOperator, k_max: int,
               spec: MultistartSpec | None = None, tie_tol: float = 1e-12) -> MaximizeReport:
    """Best periodic mean (1/k) S_k A over periods k <= k_max.

    Nelder-Mead runs first from the explicit seeds of every period, then
    from the random starts of each period. The value at every start counts,
    so more starts or a larger k_max never lower the result. A later
    candidate replaces the incumbent only if it is better by more than
    ``tie_tol`` (first found wins ties).
    """
    spec = spec or MultistartSpec()
    if k_max < 1 or k_max > L.N / 2:
        raise ValueError(f"k_max must lie in 1..{L.N // 2}")
    streams = np.random.SeedSequence(spec.seed).spawn(k_max)
    rngs = [np.random.default_rng(st) for st in streams]
    best_val, best_head, best_k = NEG_INF, None, None
    per_period = {k: {"value": NEG_INF, "head": None} for k in range(1, k_max + 1)}
    restarts = []
    # explicit seeds for every period first, then the random starts
    jobs = [(k, np.asarray(h, dtype=float).reshape(k))
            for k in range(1, k_max + 1) for h in spec.seeds.get(k, [])]
    for k in range(1, k_max + 1):
        jobs += [(k, s0) for s0 in rngs[k - 1].normal(0.0, spec.scale, size=(spec.starts, k))]
    for k, s0 in jobs:
        def f(h, k=k):
            val = periodic_mean(A, L, h, k)
            return -val if np.isfinite(val) else np.inf

        cands = [(float(-f(s0)), np.array(s0))]
        res = minimize(f, s0, method="Nelder-Mead",
                       options={"xatol": spec.xatol, "fatol": spec.fatol,
                                "maxiter": spec.maxiter_per_dim * k,
                                "maxfev": spec.maxiter_per_dim * k * 2})
        if np.isfinite(res.fun):
            cands.append((float(-res.fun), np.array(res.x)))
        else:
            restarts.append({"period": k, "start": list(map(float, s0)),
                             "reason": "non-finite objective"})
        for val, head in cands:
            if val > per_period[k]["value"] + tie_tol:
                per_period[k] = {"value": val, "head": head.tolist()}
            if val > best_val + tie_tol:
                best_val, best_head, best_k = val, head, k
    if best_head is None:
        raise RuntimeError("no finite periodic mean found")
    return MaximizeReport(best_val, periodic_orbit(A, L, best_head, best_k),
                          per_period, restarts)


# -- ergodic maximum from a sweep ---------------------------------------------

@dataclass
class SpectralMaxReport:
    m_estimate: float
    last_value: float
    fit: dict
    warning: str | None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def m_spectral(sweep: SweepResult, n_fit: int = 3) -> SpectralMaxReport:
    """Extrapolate log(lambda_t)/t to t = infinity.

    Fits log(lambda_t) = m t + a log t + b on the last ``n_fit`` finite
    points (least squares), which removes the leading 1/t and log(t)/t
    corrections of log(lambda_t)/t. Since log(lambda_t)/t is nondecreasing
    in exact arithmetic, a decreasing tail makes the fit untrustworthy: the
    last finite value is returned instead, with a warning.
    """
    ok = np.isfinite(sweep.log_lambda)
    t, ll = sweep.t[ok], sweep.log_lambda[ok]
    if t.size < 3:
        raise ValueError("need at least 3 finite sweep points")
    ratio = ll / t
    last = float(ratio[-1])
    tail = ratio[-n_fit:]
    if np.any(np.diff(tail) < -1e-12 * np.maximum(1.0, np.abs(tail[1:]))):
        msg = "log(lambda_t)/t is not monotone over the fitted tail"
        warnings.warn(msg)
        return SpectralMaxReport(last, last, {}, msg)
    tf, lf = t[-n_fit:], ll[-n_fit:]
    design = np.column_stack([tf, np.log(tf), np.ones_like(tf)])
    coef, *_ = np.linalg.lstsq(design, lf, rcond=None)
    m, a, b = (float(c) for c in coef)
    return SpectralMaxReport(m, last, {"m": m, "log_coeff": a, "intercept": b,
                                       "t": tf.tolist()}, None)


# -- sub-actions ---------------------------------------------------------------

def _values(f, X):
    if isinstance(f, Potential):
        return f.values(X)
    return np.asarray(f(X), dtype=float)


def subaction_defect(V, A: Potential, m: float, x, L: ShiftOperator):
    """V(Lx) - V(x) - A(x) + m; nonnegative everywhere for a sub-action."""
    X = _coords(x)
    out = _values(V, L.apply_array(X)) - _values(V, X) - A.values(X) + m
    return float(out) if np.ndim(out) == 0 else out


def omega_indicator(V, A: Potential, m: float, x, L: ShiftOperator,
                    tol: float = 1e-9) -> bool:
    """Whether x lies in the numerically detected zero-defect set of V."""
    return bool(abs(subaction_defect(V, A, m, x, L)) < tol)


@dataclass
class CalibrationResult:
    residual: float
    r_star: float
    best: float


def calibration_residual(V, A: Potential, m: float, y, L: ShiftOperator,
                         r_range=(-10.0, 10.0), n_grid: int = 2001,
                         xatol: float = 1e-12) -> CalibrationResult:
    """V(y) - max_r [V(p_r) + A(p_r) - m] with p_r = preimage(y, r).

    The max is taken by a grid scan on ``r_range`` followed by a bounded
    scalar refinement on the two cells around the best grid node.
    """
    Y = _coords(y)

    def g(r):
        P = L.preimage_array(Y, r)
        return _values(V, P) + A.values(P) - m

    rs = np.linspace(r_range[0], r_range[1], n_grid)
    vals = g(rs)
    i = int(np.argmax(vals))
    lo, hi = rs[max(i - 1, 0)], rs[min(i + 1, n_grid - 1)]
    res = minimize_scalar(lambda r: -float(g(np.float64(r))), bounds=(lo, hi),
                          method="bounded", options={"xatol": xatol})
    r_star, best = float(rs[i]), float(vals[i])
    if -res.fun > best:
        r_star, best = float(res.x), float(-res.fun)
    return CalibrationResult(float(_values(V, Y)) - best, r_star, best)


# -- Mane potential --------------------------------------------------------------

DEFAULT_EPS = (1.0, 0.5, 0.25, 0.1, 0.05)


@dataclass
class ManeEvaluation:
    x: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    horizons: np.ndarray = field(repr=False)
    eps: np.ndarray = field(repr=False)
    table: np.ndarray = field(repr=False)
    value: float = NEG_INF
    best_n: int | None = None
    trend: list = field(default_factory=list)
    stabilized: bool = False

    @property
    def feasible(self) -> bool:
        return bool(np.isfinite(self.value))

    def to_dict(self) -> dict:
        return {"value": self.value if self.feasible else "-inf", "best_n": self.best_n,
                "eps": self.eps.tolist(), "trend": self.trend,
                "stabilized": self.stabilized}


def birkhoff_sums(A: Potential, L: ShiftOperator, X, n: int) -> np.ndarray:
    """S_n A for each row of X (shape (..., N))."""
    return np.sum(A.values(L.orbit_array(X, n)), axis=0)


def mane_potential(A: Potential, m: float, x, y, L: ShiftOperator, n_max: int,
                   eps_schedule=DEFAULT_EPS, starts: int = 4, max_opt_dim: int = 3,
                   rng=None) -> ManeEvaluation:
    """Finite-epsilon approximation of the Mane potential phi_A(x, y).

    An n-step preimage of y is fixed by its first n coordinates h (the
    rest is y scaled by 1/beta^n), so the table entry for (n, eps) is
    sup S_n(A - m)(h, tail) over heads h with ||x - (h, tail)|| < eps.
    Infeasible entries (tail already eps-far from x) are -inf. Every entry
    evaluates the seed h = x_{1..n}; for n <= ``max_opt_dim`` a multistart
    simplex search inside the ball follows. Columns are processed from the
    smallest eps up, each reusing the optimum of the previous one, so the
    table is nonincreasing as eps shrinks. The value is the sup over n of the
    smallest-eps column.
    """
    X, Y = _coords(x).astype(float), _coords(y).astype(float)
    space = L.space
    if not 1 <= n_max <= L.N - 1:
        raise ValueError(f"n_max must lie in 1..{L.N - 1}")
    eps = np.sort(np.asarray(eps_schedule, dtype=float))[::-1]
    rng = np.random.default_rng(0) if rng is None else rng
    horizons = np.arange(1, n_max + 1)
    table = np.full((n_max, eps.size), NEG_INF)
    for n in horizons:
        tail = L.scaled_tail(Y, n)
        mismatch = float(space.norm(X[n:] - tail))
        xh = X[:n]

        def total(h):
            P = np.concatenate([h, tail])
            return float(birkhoff_sums(A, L, P, n)) - n * m

        best_h = xh.copy()
        best_v = NEG_INF
        for j in range(eps.size - 1, -1, -1):
            e = eps[j]
            if not mismatch < e:
                continue
            if space.norm_kind == "sup":
                rho = e
            else:
                rho = (e ** space.p - mismatch ** space.p) ** (1.0 / space.p)
            rho *= 1.0 - 1e-12
            if best_v == NEG_INF:
                best_v, best_h = total(xh), xh.copy()
            if n <= max_opt_dim and rho > 0:
                def squash(z, rho=rho):
                    z = np.asarray(z, dtype=float)
                    nz = float(space.norm(z))
                    return xh + rho * z / (1.0 + nz)

                def obj(z):
                    return -total(squash(z))

                z_inc = (best_h - xh) / rho
                nz = float(space.norm(z_inc))
                z0s = [np.zeros(n)]
                if nz < 1.0:
                    z0s.append(z_inc / (1.0 - nz))
                z0s += list(rng.normal(0.0, 1.0, size=(starts, n)))
                for z0 in z0s:
                    res = minimize(obj, z0, method="Nelder-Mead",
                                   options={"xatol": 1e-10, "fatol": 1e-13,
                                            "maxiter": 400 * n})
                    if np.isfinite(res.fun) and -res.fun > best_v:
                        best_v, best_h = float(-res.fun), squash(res.x)
            table[n - 1, j] = best_v
    col = table[:, -1]
    if np.all(col == NEG_INF):
        return ManeEvaluation(X, Y, horizons, eps, table, NEG_INF, None, [], False)
    bn = int(np.argmax(col))
    sup_cols = [float(np.max(table[:, j])) for j in range(eps.size)]
    finite = [v for v in sup_cols if np.isfinite(v)]
    stab = len(finite) >= 2 and abs(finite[-1] - finite[-2]) <= 1e-6 * max(1.0, abs(finite[-1]))
    return ManeEvaluation(X, Y, horizons, eps, table, float(col[bn]), int(bn + 1),
                          sup_cols, stab)


def mane_vs_subaction_check(V, values, pairs) -> float:
    """max over pairs of phi(x, y) - (V(y) - V(x)); infeasible pairs are skipped."""
    worst = NEG_INF
    for phi, (x, y) in zip(values, pairs):
        if not np.isfinite(phi):
            continue
        gap = phi - (float(_values(V, _coords(y))) - float(_values(V, _coords(x))))
        worst = max(worst, gap)
    return worst


def max_birkhoff_excess(A: Potential, m: float, L: ShiftOperator, X, n_max: int) -> float:
    """max over rows of X and n <= n_max of S_n(A - m)(x)."""
    X = np.atleast_2d(_coords(X))
    orbit = L.orbit_array(X, n_max)
    S = np.cumsum(A.values(orbit) - m, axis=0)
    return float(np.max(S))
