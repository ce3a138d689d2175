"""Weighted backward shift L(x)_n = alpha_n * x_{n+1} on a truncated sequence space."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .space import SpaceSpec, TruncatedVector, _coords


@dataclass(frozen=True)
class WeightSequence:
    """Weights alpha_1..alpha_N with bounds lower < alpha_n < upper.

    ``kind`` records how the sequence was built; for ``constant`` and
    ``alternating`` sequences the truncated infimum d_n is the exact one.
    """

    weights: np.ndarray
    lower: float
    upper: float
    kind: str = "explicit"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        w = np.array(self.weights, dtype=float, copy=True).reshape(-1)
        if w.size == 0:
            raise ValueError("empty weight sequence")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if not self.lower > 0:
            raise ValueError("lower bound c must be > 0")
        if not (np.all(w > self.lower) and np.all(w < self.upper)):
            raise ValueError(
                f"weights must lie in ({self.lower}, {self.upper})")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def constant(cls, c: float, N: int, lower=None, upper=None):
        c = float(c)
        return cls(np.full(N, c), lower if lower is not None else c / 2,
                   upper if upper is not None else 2 * c, "constant", {"c": c})

    @classmethod
    def alternating(cls, c0: float, c1: float, N: int, lower=None, upper=None):
        """alpha_n = c1 for odd n and c0 for even n (n = 2k + i picks c_i)."""
        n = np.arange(1, N + 1)
        w = np.where(n % 2 == 1, float(c1), float(c0))
        lo, hi = min(c0, c1), max(c0, c1)
        return cls(w, lower if lower is not None else lo / 2,
                   upper if upper is not None else 2 * hi,
                   "alternating", {"c0": float(c0), "c1": float(c1)})

    @classmethod
    def explicit(cls, values, N: int, lower=None, upper=None):
        w = np.asarray(values, dtype=float).reshape(-1)
        if w.size != N:
            raise ValueError(f"need {N} weights, got {w.size}")
        return cls(w, lower if lower is not None else float(w.min()) / 2,
                   upper if upper is not None else 2 * float(w.max()), "explicit", {})

    @classmethod
    def from_config(cls, cfg: dict, N: int):
        kind = cfg.get("kind")
        lo, hi = cfg.get("lower"), cfg.get("upper")
        if kind == "constant":
            return cls.constant(cfg["c"], N, lo, hi)
        if kind == "alternating":
            return cls.alternating(cfg["c0"], cfg["c1"], N, lo, hi)
        if kind == "explicit":
            return cls.explicit(cfg["values"], N, lo, hi)
        raise ValueError(f"unknown weight kind {kind!r}")

    @property
    def exact_inf(self) -> bool:
        return self.kind in ("constant", "alternating")

    def to_dict(self) -> dict:
        d = {"kind": self.kind, **self.params}
        if self.kind == "explicit":
            d["values"] = [float(a) for a in self.weights]
        return d


@dataclass
class ChaosReport:
    exponent: float
    n_max: int
    terms: np.ndarray
    partial_sums: np.ndarray
    ratio: float
    geometric_tail_bound: float
    verdict: str
    root_limit: float
    sup_inverse_beta_sum: float
    dn_exact: bool

    def to_dict(self) -> dict:
        return {
            "exponent": self.exponent,
            "n_max": self.n_max,
            "partial_sums": self.partial_sums.tolist(),
            "ratio": self.ratio,
            "geometric_tail_bound": self.geometric_tail_bound,
            "verdict": self.verdict,
            "root_limit": self.root_limit,
            "root_limit_below_one": bool(self.root_limit < 1),
            "sup_inverse_beta_sum": self.sup_inverse_beta_sum,
            "dn": "exact" if self.dn_exact else "truncated inf",
        }


def geometric_tail(terms: np.ndarray, window: int = 5, rtol: float = 1e-2):
    """Ratio-test summary of a positive series given its first terms.

    Returns ``(ratio, tail_bound, verdict)`` where ``ratio`` is the largest of
    the last ``window`` successive term ratios. The series is declared
    convergent only when that ratio is below one *and* the implied geometric
    tail is at most ``rtol`` times the partial sum.
    """
    terms = np.asarray(terms, dtype=float)
    if terms.size < 2:
        return float("nan"), float("inf"), "inconclusive"
    total = float(np.sum(terms))
    if terms[-1] == 0.0:
        return 0.0, 0.0, "converges"
    ratios = terms[1:] / terms[:-1]
    rho = float(np.max(ratios[-window:]))
    if not rho < 1.0:
        return rho, float("inf"), "inconclusive"
    bound = float(terms[-1] * rho / (1.0 - rho))
    verdict = "converges" if bound <= rtol * total else "inconclusive"
    return rho, bound, verdict


class ShiftOperator:
    """The weighted shift acting on truncated coordinate arrays.

    All array methods act on the last axis, so batches of points can be pushed
    through in one call. The last coordinate of an image is set to zero since
    x_{N+1} is not stored.
    """

    def __init__(self, weights: WeightSequence, space: SpaceSpec):
        if weights.weights.size != space.N:
            raise ValueError(
                f"{weights.weights.size} weights for a space with N={space.N}")
        self.weights = weights
        self.space = space
        self.alpha = weights.weights
        N = space.N
        # products[n-1][k-1] = beta_k^n for k = 1..N-n+1
        products = [self.alpha.copy()]
        for n in range(2, N + 1):
            prev = products[-1]
            products.append(prev[:-1] * self.alpha[n - 1:])
        self._beta = products
        dn = np.array([products[n - 1][: N - n].min() for n in range(1, N)])
        dn.setflags(write=False)
        self.dn_table = dn

    @property
    def N(self) -> int:
        return self.space.N

    @property
    def op_norm(self) -> float:
        return float(self.alpha.max())

    def __repr__(self):
        return f"ShiftOperator({self.weights.kind}, {self.space.label})"

    # -- dynamics ---------------------------------------------------------
    def apply_array(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        Y = np.zeros_like(X)
        Y[..., :-1] = self.alpha[:-1] * X[..., 1:]
        return Y

    def apply(self, x: TruncatedVector) -> TruncatedVector:
        return TruncatedVector(self.apply_array(x.coords), self.space)

    def power_array(self, X, n: int) -> np.ndarray:
        for _ in range(n):
            X = self.apply_array(X)
        return np.asarray(X, dtype=float)

    def orbit_array(self, X, n: int) -> np.ndarray:
        """Stack ``X, LX, ..., L^{n-1}X`` along a new leading axis."""
        X = np.asarray(X, dtype=float)
        out = np.empty((n,) + X.shape)
        out[0] = X
        for j in range(1, n):
            out[j] = self.apply_array(out[j - 1])
        return out

    def preimage_array(self, Y, r) -> np.ndarray:
        """Preimage with kernel coordinate ``r``; broadcasts over ``Y`` and ``r``."""
        Y = np.asarray(Y, dtype=float)
        r = np.asarray(r, dtype=float)
        shape = np.broadcast_shapes(Y.shape[:-1], r.shape) + (self.N,)
        X = np.empty(shape)
        X[..., 0] = r
        X[..., 1:] = Y[..., :-1] / self.alpha[:-1]
        return X

    def preimage(self, y: TruncatedVector, r: float) -> TruncatedVector:
        return TruncatedVector(self.preimage_array(y.coords, r), self.space)

    def preimage_n(self, y: TruncatedVector, rvec) -> TruncatedVector:
        """n-fold preimage; ``rvec[0]`` is the kernel coordinate of the first step."""
        rvec = np.asarray(rvec, dtype=float).reshape(-1)
        n = rvec.size
        if not 1 <= n <= self.N:
            raise ValueError(f"preimage depth {n} outside 1..{self.N}")
        X = y.coords
        for r in rvec:
            X = self.preimage_array(X, r)
        return TruncatedVector(X, self.space)

    def scaled_tail(self, Y, n: int) -> np.ndarray:
        """Coordinates n+1..N shared by every n-step preimage of ``Y``."""
        T = np.asarray(Y, dtype=float)[..., : self.N - n]
        for j in range(n):
            T = T / self.alpha[j: j + self.N - n]
        return T

    def preimage_head_array(self, Y, head) -> np.ndarray:
        """n-step preimage of ``Y`` whose first n coordinates equal ``head``.

        Equivalent to :meth:`preimage_n` under the reparametrization
        ``rvec[n-1-j] = head[j] * beta_1^j``; it is the natural chart for
        searches that must stay close to a given point.
        """
        head = np.asarray(head, dtype=float)
        n = head.shape[-1]
        if not 1 <= n <= self.N:
            raise ValueError(f"preimage depth {n} outside 1..{self.N}")
        tail = self.scaled_tail(Y, n)
        shape = np.broadcast_shapes(head.shape[:-1], tail.shape[:-1]) + (self.N,)
        X = np.empty(shape)
        X[..., :n] = head
        X[..., n:] = tail
        return X

    # -- weight products --------------------------------------------------
    def beta(self, k: int, n: int) -> float:
        """beta_k^n = alpha_k ... alpha_{k+n-1} (1-based)."""
        if k < 1 or n < 1 or k + n - 1 > self.N:
            raise IndexError(f"beta({k}, {n}) needs 1 <= k, 1 <= n, k+n-1 <= {self.N}")
        return float(self._beta[n - 1][k - 1])

    def beta_row(self, n: int) -> np.ndarray:
        """All available beta_k^n, k = 1..N-n+1."""
        return self._beta[n - 1]

    def dn(self, n: int) -> float:
        """d_n = inf_k beta_k^n over k = 1..N-n (equals p(L^n))."""
        if not 1 <= n <= self.N - 1:
            raise IndexError(f"d_n defined for 1 <= n <= {self.N - 1}, got {n}")
        return float(self.dn_table[n - 1])

    def chaos_criterion(self, exponent: float = 1.0, n_max: int | None = None,
                        rtol: float = 1e-2, window: int = 5) -> ChaosReport:
        """Partial sums of sum_n d_n^{-exponent} with a ratio-test tail bound."""
        if not 0 < exponent <= 1:
            raise ValueError("exponent must lie in (0, 1]")
        n_max = self.N - 1 if n_max is None else int(n_max)
        if not 1 <= n_max <= self.N - 1:
            raise ValueError(f"n_max must lie in 1..{self.N - 1}")
        terms = self.dn_table[:n_max] ** (-exponent)
        partial = np.cumsum(terms)
        rho, bound, verdict = geometric_tail(terms, window=window, rtol=rtol)
        root = float(self.dn_table[n_max - 1] ** (-1.0 / n_max))
        sup_inv = 0.0
        for k in range(1, self.N):
            s = sum(1.0 / self._beta[n - 1][k - 1] for n in range(1, self.N - k + 2))
            sup_inv = max(sup_inv, s)
        return ChaosReport(exponent, n_max, terms, partial, rho, bound, verdict,
                           root, sup_inv, self.weights.exact_inf)

    # -- orbits -----------------------------------------------------------
    def birkhoff_sum(self, A, x, n: int) -> float:
        """S_n A(x) = sum_{j<n} A(L^j x)."""
        if n < 1:
            raise ValueError("n must be >= 1")
        orbit = self.orbit_array(_coords(x), n)
        return float(np.sum(A(orbit)))

    def periodic_points_array(self, heads, k: int) -> np.ndarray:
        """Batch version of :meth:`periodic_point` for heads of shape (..., k)."""
        heads = np.asarray(heads, dtype=float)
        if k < 1 or heads.shape[-1] != k:
            raise ValueError("head length must equal the period k >= 1")
        if k > self.N / 2:
            raise ValueError(f"period {k} > N/2 leaves too few coordinates to verify")
        X = np.zeros(heads.shape[:-1] + (self.N,))
        X[..., :k] = heads
        for n in range(1, self.N - k + 1):
            val = X[..., n - 1]
            for j in range(k):
                val = val / self.alpha[n - 1 + j]
            X[..., n - 1 + k] = val
        return X

    def periodic_point(self, head, k: int) -> "PeriodicPoint":
        """The x with L^k x = x whose first k coordinates are ``head``.

        Coordinates are built as x_{n+k} = x_n / beta_n^k in exact rational
        arithmetic (floats convert to fractions without error) and rounded
        once, so each stored coordinate is the correctly rounded true value.
        ``exact_residual`` is the rational sup of (L^k x - x) on the first N-k
        coordinates; ``residual`` is the same quantity for the rounded floats.
        """
        head = np.asarray(head, dtype=float).reshape(-1)
        if k < 1 or head.size != k:
            raise ValueError("head length must equal the period k >= 1")
        if k > self.N / 2:
            raise ValueError(f"period {k} > N/2 leaves too few coordinates to verify")
        alpha = [Fraction(float(a)) for a in self.alpha]
        xs = [Fraction(float(h)) for h in head] + [Fraction(0)] * (self.N - k)
        for n in range(self.N - k):
            prod = Fraction(1)
            for j in range(k):
                prod *= alpha[n + j]
            xs[n + k] = xs[n] / prod
        y = xs
        for _ in range(k):
            y = [alpha[i] * y[i + 1] for i in range(self.N - 1)] + [Fraction(0)]
        exact = max((abs(y[i] - xs[i]) for i in range(self.N - k)), default=Fraction(0))
        X = np.array([float(c) for c in xs])
        return PeriodicPoint(TruncatedVector(X, self.space), k,
                             self.periodic_residual(X, k), float(exact))

    def periodic_residual(self, x, k: int) -> float:
        """sup-norm of (L^k x - x) restricted to the first N-k coordinates."""
        X = _coords(x)
        R = self.power_array(X, k) - X
        return float(np.max(np.abs(R[..., : self.N - k]), initial=0.0))


@dataclass(frozen=True)
class PeriodicPoint:
    point: TruncatedVector
    period: int
    residual: float
    exact_residual: float = 0.0
