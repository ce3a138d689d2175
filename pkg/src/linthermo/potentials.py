"""Potentials A: X -> R and sampled estimates of their regularity.

A :class:`Potential` wraps a vectorized evaluator acting on coordinate arrays
of shape ``(..., K)``. Potentials with an ``effective_depth`` M only ever read
the first M columns, so callers in hot loops may pass arrays with exactly M
columns instead of N.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .shift import geometric_tail
from .space import SpaceSpec, TruncatedVector, _coords

Evaluator = Callable[[np.ndarray], np.ndarray]


def _exp_modulation(s):
    return np.exp(-s)


def _hat_modulation(s):
    return np.clip(1.0 - s, 0.0, None)


# r(s) monotone decreasing, 1-Lipschitz, r(0) = 1, r(s) -> 0. For both choices
# s -> r(s) s is 1-Lipschitz, which is what the Holder constants below use.
MODULATIONS: dict[str, Callable] = {
    "exp": _exp_modulation,
    "hat": _hat_modulation,
}


class Potential:
    """An evaluatable potential with Holder and depth metadata.

    Parameters
    ----------
    func : callable
        Maps an array ``(..., K)`` of coordinates to an array ``(...)``.
    name : str
        Label used in reports.
    holder_alpha : float
        Holder exponent in (0, 1].
    holder_constant : float, optional
        Known Hol^alpha constant (``None`` when not globally finite or unknown).
    effective_depth : int, optional
        Number of leading coordinates the value depends on.
    upper_bound : float, optional
        Known sup of the potential.
    shell_sup : callable, optional
        ``shell_sup(i, j)`` giving sup{A(x) : j <= |x_i| <= j+1} in closed form.
    """

    def __init__(self, func: Evaluator, name: str, holder_alpha: float = 1.0,
                 holder_constant: float | None = None,
                 effective_depth: int | None = None,
                 upper_bound: float | None = None,
                 shell_sup: Callable[[int, int], float] | None = None,
                 params: dict | None = None):
        if not 0 < holder_alpha <= 1:
            raise ValueError("holder_alpha must lie in (0, 1]")
        if effective_depth is not None and effective_depth < 1:
            raise ValueError("effective_depth must be >= 1")
        self.func = func
        self.name = name
        self.holder_alpha = float(holder_alpha)
        self.holder_constant = holder_constant
        self.effective_depth = effective_depth
        self.upper_bound = upper_bound
        self.shell_sup = shell_sup
        self.params = dict(params or {})

    def __repr__(self):
        depth = "" if self.effective_depth is None else f", depth={self.effective_depth}"
        return f"Potential({self.name}{depth})"

    def values(self, X) -> np.ndarray:
        """Vectorized evaluation; always returns an array of shape ``X.shape[:-1]``."""
        X = np.asarray(X, dtype=float)
        return np.asarray(self.func(X), dtype=float)

    def __call__(self, x):
        X = _coords(x)
        out = self.values(X)
        return float(out) if X.ndim == 1 else out

    def scaled(self, t: float) -> "Potential":
        """The potential t*A (inverse temperature t)."""
        t = float(t)
        f = self.func
        hol = None if self.holder_constant is None else abs(t) * self.holder_constant
        ub = None if self.upper_bound is None or t < 0 else t * self.upper_bound
        ss = None
        if self.shell_sup is not None and t >= 0:
            base = self.shell_sup
            ss = lambda i, j: t * base(i, j)  # noqa: E731
        return Potential(lambda X: t * f(X), f"{t:g}*{self.name}", self.holder_alpha,
                         hol, self.effective_depth, ub, ss,
                         {**self.params, "scale": t})

    def shifted(self, kappa: float) -> "Potential":
        """The potential A + kappa."""
        kappa = float(kappa)
        f = self.func
        ub = None if self.upper_bound is None else self.upper_bound + kappa
        ss = None
        if self.shell_sup is not None:
            base = self.shell_sup
            ss = lambda i, j: base(i, j) + kappa  # noqa: E731
        return Potential(lambda X: f(X) + kappa, f"{self.name}{kappa:+g}",
                         self.holder_alpha, self.holder_constant,
                         self.effective_depth, ub, ss,
                         {**self.params, "shift": kappa})


def eval_potential(A: Potential, x) -> float:
    return float(A.values(_coords(x)))


# -- built-in potentials ----------------------------------------------------

def _vector(v, space: SpaceSpec) -> np.ndarray:
    c = _coords(v).reshape(-1)
    if c.size > space.N:
        raise ValueError("vector longer than the truncation dimension")
    out = np.zeros(space.N)
    out[: c.size] = c
    return out


def _shell_gap(vi: float, j: int) -> float:
    """Distance from vi to the shell {t : j <= |t| <= j+1}."""
    a = abs(vi)
    if j <= a <= j + 1:
        return 0.0
    return j - a if a < j else a - (j + 1)


def zero() -> Potential:
    return constant(0.0, name="zero")


def constant(kappa: float, name: str | None = None) -> Potential:
    kappa = float(kappa)
    return Potential(lambda X: np.full(X.shape[:-1], kappa),
                     name or f"constant({kappa:g})", 1.0, 0.0, 1, kappa,
                     lambda i, j: kappa, {"kappa": kappa})


def neg_dist(v, space: SpaceSpec, depth: int | None = None) -> Potential:
    """A(x) = -||x - v||, optionally restricted to the first ``depth`` coordinates."""
    vc = _vector(v, space)
    M = space.N if depth is None else int(depth)
    if not 1 <= M <= space.N:
        raise ValueError(f"depth {M} outside 1..{space.N}")
    vm = vc[:M]

    def func(X):
        return -space.norm(X[..., :M] - vm)

    def shell(i, j):
        if i > M:
            return 0.0
        return -_shell_gap(vm[i - 1], j)

    return Potential(func, "neg_dist", 1.0, 1.0, None if depth is None else M,
                     0.0, shell, {"v": vc.tolist(), "depth": depth})


def modulated_dist(v, space: SpaceSpec, modulation: str = "exp",
                   depth: int | None = None) -> Potential:
    """A(x) = -r(||x - v||) ||x - v||."""
    r = MODULATIONS[modulation]
    vc = _vector(v, space)
    M = space.N if depth is None else int(depth)
    vm = vc[:M]

    def func(X):
        s = space.norm(X[..., :M] - vm)
        return -r(s) * s

    # r(s) s -> 0 along unbounded shells, so every shell sup is 0
    return Potential(func, f"modulated_dist[{modulation}]", 1.0, 1.0,
                     None if depth is None else M, 0.0, lambda i, j: 0.0,
                     {"v": vc.tolist(), "modulation": modulation, "depth": depth})


def two_point(v, w, space: SpaceSpec, modulation: str = "exp") -> Potential:
    """A(x) = -[r(||x-v||)||x-v|| + r(||x-w||)||x-w||]."""
    r = MODULATIONS[modulation]
    vc, wc = _vector(v, space), _vector(w, space)

    def func(X):
        s = space.norm(X - vc)
        u = space.norm(X - wc)
        return -(r(s) * s + r(u) * u)

    return Potential(func, f"two_point[{modulation}]", 1.0, 2.0, None, 0.0,
                     lambda i, j: 0.0,
                     {"v": vc.tolist(), "w": wc.tolist(), "modulation": modulation})


def subspace_dist(space: SpaceSpec, modulation: str = "exp") -> Potential:
    """A(x) = -r(d(x, W)) d(x, W) for W = {x : x_2 = x_4 = ... = 0}.

    W is a coordinate subspace, so d(x, W) is the norm of the even-indexed
    coordinates for both the sup and the l^p norms.
    """
    r = MODULATIONS[modulation]

    def func(X):
        d = space.norm(X[..., 1::2])
        return -r(d) * d

    return Potential(func, f"subspace_dist[{modulation}]", 1.0, 1.0, None, 0.0,
                     lambda i, j: 0.0, {"modulation": modulation})


def quadratic_form(Q) -> Potential:
    """A(x) = -x^T Q x on the first M coordinates, Q symmetric positive semidefinite."""
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    M = Q.shape[0]
    if Q.shape != (M, M) or not np.allclose(Q, Q.T):
        raise ValueError("Q must be a symmetric square matrix")
    if np.linalg.eigvalsh(Q).min() < -1e-12:
        raise ValueError("Q must be positive semidefinite (A bounded above)")

    def func(X):
        Y = X[..., :M]
        return -np.einsum("...i,ij,...j->...", Y, Q, Y)

    shell = None
    if M == 1:
        q = float(Q[0, 0])
        shell = lambda i, j: -q * j * j if i == 1 else 0.0  # noqa: E731
    return Potential(func, "quadratic" if M == 1 else f"quadratic_form[{M}]",
                     1.0, None, M, 0.0, shell, {"Q": Q.tolist()})


def quadratic() -> Potential:
    """A(x) = -x_1^2."""
    return quadratic_form([[1.0]])


def abs_power(exponent: float) -> Potential:
    """A(x) = -|x_1|^a, Holder of exponent a with constant 1 for a in (0, 1]."""
    a = float(exponent)
    if not 0 < a <= 1:
        raise ValueError("exponent must lie in (0, 1]")
    return Potential(lambda X: -np.abs(X[..., 0]) ** a, f"abs_power({a:g})", a, 1.0,
                     1, 0.0, lambda i, j: -float(j) ** a if i == 1 else 0.0,
                     {"exponent": a})


REGISTRY: dict[str, Callable[..., Potential]] = {}


def register_potential(name: str, builder: Callable[..., Potential]):
    """Make ``builder(space=..., **parameters)`` available to configs as ``name``."""
    REGISTRY[name] = builder


register_potential("zero", lambda space: zero())
register_potential("constant", lambda space, kappa: constant(kappa))
register_potential("neg_dist", lambda space, v, depth=None: neg_dist(v, space, depth))
register_potential("modulated_dist", lambda space, v, modulation="exp", depth=None:
                   modulated_dist(v, space, modulation, depth))
register_potential("two_point", lambda space, v, w, modulation="exp":
                   two_point(v, w, space, modulation))
register_potential("subspace_dist", lambda space, modulation="exp":
                   subspace_dist(space, modulation))
register_potential("quadratic", lambda space: quadratic())
register_potential("quadratic_form", lambda space, Q: quadratic_form(Q))
register_potential("abs_power", lambda space, exponent: abs_power(exponent))


def build_potential(kind: str, space: SpaceSpec, parameters: dict | None = None,
                    alpha: float | None = None) -> Potential:
    if kind not in REGISTRY:
        raise KeyError(f"unknown potential kind {kind!r}")
    A = REGISTRY[kind](space=space, **(parameters or {}))
    if alpha is not None and alpha != A.holder_alpha:
        # Lipschitz bounds do not transfer to other exponents globally
        A.holder_alpha = float(alpha)
        A.holder_constant = None
    return A


# -- sampled regularity estimates ------------------------------------------

@dataclass
class RunningMaxEstimate:
    """A sampled lower bound together with its running maximum."""

    value: float
    trace: np.ndarray = field(repr=False)
    kind: str = "sampled lower bound"


def estimate_variation(A: Potential, n: int, box_radius: float, samples: int,
                       rng, space: SpaceSpec) -> RunningMaxEstimate:
    """Sampled lower bound of V_{T,n}(A).

    Draws z in the span of the first n coordinates and x, y in the span of
    the remaining ones, all within the coordinate box of half-width
    ``box_radius``, and records sup |A(z + x) - A(z + y)|. Samples are drawn
    block by block so a larger sample count extends a smaller one.
    """
    if not 0 <= n < space.N:
        raise ValueError(f"n must lie in 0..{space.N - 1}")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    U = rng.uniform(-box_radius, box_radius, size=(samples, 3, space.N))
    P = U[:, 1:, :].copy()
    P[:, :, :n] = U[:, :1, :n]
    diffs = np.abs(A.values(P[:, 0]) - A.values(P[:, 1]))
    trace = np.maximum.accumulate(diffs)
    return RunningMaxEstimate(float(trace[-1]), trace)


def estimate_total_variation(A: Potential, n_max: int, box_radius: float,
                             samples: int, rng, space: SpaceSpec) -> float:
    """Sampled lower bound of V_T(A) = sum_{n>=1} V_{T,n}(A), truncated at n_max."""
    total = 0.0
    for n in range(1, n_max + 1):
        if A.effective_depth is not None and n >= A.effective_depth:
            break
        total += estimate_variation(A, n, box_radius, samples, rng, space).value
    return total


def estimate_holder(A: Potential, alpha: float, samples: int, rng,
                    space: SpaceSpec, box_radius: float = 5.0,
                    center=None) -> RunningMaxEstimate:
    """Sampled lower bound of Hol^alpha_A inside a coordinate box.

    Pairs are a uniform point and a perturbation of it at a log-uniform
    scale, so both local and global ratios are probed. Every other pair
    perturbs a single coordinate. One row of uniforms is drawn per pair, so a
    larger sample count extends a smaller one.
    """
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    N = space.N
    U = rng.random((samples, 2 * N + 2))
    X = box_radius * (2 * U[:, :N] - 1)
    if center is not None:
        X = X + _coords(center)
    lo, hi = -4.0, np.log10(2 * box_radius)
    scale = 10.0 ** (lo + (hi - lo) * U[:, N: N + 1])
    D = (2 * U[:, N + 1: 2 * N + 1] - 1) * scale
    single = np.arange(samples) % 2 == 1
    k = np.minimum((U[:, -1] * N).astype(int), N - 1)
    keep = np.zeros((samples, N), dtype=bool)
    keep[np.arange(samples), k] = True
    D[single] = np.where(keep[single], D[single], 0.0)
    Y = X + D
    dist = space.norm(D)
    ok = dist > 0
    ratio = np.zeros(samples)
    ratio[ok] = np.abs(A.values(X[ok]) - A.values(Y[ok])) / dist[ok] ** alpha
    trace = np.maximum.accumulate(ratio)
    return RunningMaxEstimate(float(trace[-1]), trace)


@dataclass
class SummabilityReport:
    coord_index: int
    sup_values: np.ndarray
    source: str
    partial_sums: np.ndarray
    ratio: float
    verdict: str
    sup_to_minus_inf: bool

    def to_dict(self) -> dict:
        return {"coord_index": self.coord_index, "sup_values": self.sup_values.tolist(),
                "source": self.source, "partial_sums": self.partial_sums.tolist(),
                "ratio": self.ratio, "verdict": self.verdict,
                "sup_to_minus_inf": self.sup_to_minus_inf}


def summability_check(A: Potential, i: int, j_max: int, space: SpaceSpec,
                      rng=None, samples: int = 2000, box_radius: float = 5.0,
                      window: int = 5) -> SummabilityReport:
    """Partial sums of sum_j exp(sup{A(x) : j <= |x_i| <= j+1}).

    Uses the closed form when the potential carries one, otherwise a
    box-constrained sampled sup (others coordinates in the box, x_i on the
    shell). The source is recorded in the report.
    """
    if not 1 <= i <= space.N:
        raise ValueError(f"coordinate index must lie in 1..{space.N}")
    js = np.arange(1, j_max + 1)
    if A.shell_sup is not None:
        sups = np.array([A.shell_sup(i, int(j)) for j in js], dtype=float)
        source = "analytic"
    else:
        if rng is None:
            raise ValueError("sampled shell sups need an rng")
        sups = np.empty(j_max)
        for idx, j in enumerate(js):
            X = rng.uniform(-box_radius, box_radius, size=(samples, space.N))
            X[0] = 0.0
            X[:, i - 1] = rng.choice([-1.0, 1.0], samples) * rng.uniform(j, j + 1, samples)
            sups[idx] = float(np.max(A.values(X)))
        source = "box-constrained sample"
    terms = np.exp(sups)
    partial = np.cumsum(terms)
    rho, _, verdict = geometric_tail(terms, window=window, rtol=0.05)
    if verdict == "converges":
        verdict = "converging"
    elif np.isfinite(rho) and rho >= 1.0 - 1e-12:
        verdict = "diverging"
    tail = sups[-window:]
    to_minus_inf = bool(np.all(np.diff(sups) <= 0) and tail[-1] < sups[0] - 1.0)
    return SummabilityReport(i, sups, source, partial, rho, verdict, to_minus_inf)
