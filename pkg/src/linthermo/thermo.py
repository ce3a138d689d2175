"""Gibbs states by the backward preimage chain, entropy, pressure, sweeps.

The Gibbs state of A is the invariant law of the Markov chain that moves
from x to the preimage (r, x_1/alpha_1, ...) with r drawn from
exp(Abar(preimage)) dnu(r). Kernel coordinates are drawn by inverse CDF on
the quadrature nodes, so the chain is exact for the discretized operator.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .apriori import AprioriMeasure
from .grid import FunctionGrid, GridSpec
from .potentials import Potential, estimate_holder, estimate_total_variation
from .shift import ShiftOperator
from .space import TruncatedVector, _coords
from .transfer import SpectralData, SpectralError, _eval_width, power_iteration

log = logging.getLogger(__name__)

MIN_BATCHES = 20


class ChainError(RuntimeError):
    pass


def _rng(seed_or_rng):
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def _sample_nodes(logk: np.ndarray, rng) -> np.ndarray:
    """Inverse-CDF draw of one node index per row of unnormalized log weights."""
    top = np.max(logk, axis=-1, keepdims=True)
    if not np.all(np.isfinite(top)):
        raise ChainError("all kernel weights underflow along a fiber "
                         "(Abar is numerically -inf there)")
    p = np.exp(logk - top)
    cdf = np.cumsum(p, axis=-1)
    u = rng.random(logk.shape[:-1]) * cdf[..., -1]
    q = np.sum(cdf < u[..., None], axis=-1)
    return np.minimum(q, logk.shape[-1] - 1)


def gibbs_chain_step(Abar: Potential, x, L: ShiftOperator, nu: AprioriMeasure,
                     rng) -> TruncatedVector:
    """One backward step: draw r from exp(Abar(preimage(x, r))) dnu(r)."""
    X = _coords(x)
    pts = L.preimage_array(X[None, :], nu.nodes)
    logk = nu.log_weights + Abar.values(pts)
    q = int(_sample_nodes(logk[None, :], rng)[0])
    return TruncatedVector(pts[q], L.space)


class FiberSampler:
    """Vectorized chain steps for the normalized potential of ``spectral``.

    Along the fiber over x the factor exp(-log psi(x) - log lambda) of
    exp(Abar) is constant, so only w_q exp(A(p_q)) psi(p_q) is needed.
    """

    def __init__(self, spectral: SpectralData):
        self.spectral = spectral
        self.A, self.L, self.nu, self.psi = spectral.A, spectral.L, spectral.nu, spectral.psi
        M = self.psi.depth
        self.width = max(_eval_width(self.A, self.L, M), M)
        self.log_w = self.nu.log_weights
        self.log_psi_flat = np.log(self.psi.flat)

    def log_kernel(self, X: np.ndarray) -> np.ndarray:
        """Unnormalized log kernel, shape (C, Q), for states X of shape (C, N)."""
        L, M = self.L, self.psi.depth
        C = X.shape[0]
        pts = np.empty((C, len(self.nu.nodes), self.width))
        pts[:, :, 0] = self.nu.nodes
        pts[:, :, 1:] = (X[:, : self.width - 1] / L.alpha[: self.width - 1])[:, None, :]
        idx, w, _ = self.psi.stencil(pts[..., :M])
        psi_vals = np.sum(self.psi.flat[idx] * w, axis=-1)
        with np.errstate(divide="ignore"):
            return self.log_w + self.A.values(pts) + np.log(psi_vals)

    def step(self, X: np.ndarray, rng) -> np.ndarray:
        q = _sample_nodes(self.log_kernel(X), rng)
        return self.L.preimage_array(X, self.nu.nodes[q])


@dataclass
class MeasureEstimate:
    """Post burn-in chain states, shape (steps, chains, N)."""

    trajectory: np.ndarray = field(repr=False)
    L: ShiftOperator = field(repr=False)
    seed: int | None = None
    burn_in: int = 0
    steps: int = 0
    integrals: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.trajectory.ndim != 3 or self.trajectory.shape[0] < 1:
            raise ValueError("trajectory must have shape (steps >= 1, chains, N)")
        self.steps = self.trajectory.shape[0]

    @property
    def chains(self) -> int:
        return self.trajectory.shape[1]

    @property
    def samples(self) -> np.ndarray:
        """All states as (steps * chains, N), time-major."""
        return self.trajectory.reshape(-1, self.trajectory.shape[-1])

    @property
    def size(self) -> int:
        return self.trajectory.shape[0] * self.trajectory.shape[1]


def run_gibbs_chain(spectral: SpectralData, steps: int, burn_in: int, rng,
                    chains: int = 1, x0=None, seed: int | None = None) -> MeasureEstimate:
    """Run ``chains`` independent backward chains for ``burn_in + steps`` steps."""
    if steps < 1 or chains < 1 or burn_in < 0:
        raise ValueError("need steps >= 1, chains >= 1, burn_in >= 0")
    rng = _rng(rng)
    sampler = FiberSampler(spectral)
    N = spectral.L.N
    X = np.zeros((chains, N)) if x0 is None else np.tile(_coords(x0), (chains, 1))
    for _ in range(burn_in):
        X = sampler.step(X, rng)
    traj = np.empty((steps, chains, N))
    for s in range(steps):
        X = sampler.step(X, rng)
        traj[s] = X
    return MeasureEstimate(traj, spectral.L, seed, burn_in)


def batch_means(values: np.ndarray, min_batches: int = MIN_BATCHES):
    """Mean and batch-means standard error of a (steps, chains) series."""
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    T, C = values.shape
    per_chain = max(1, math.ceil(min_batches / C))
    if T < per_chain:
        raise ChainError(f"{T} steps are too few for {per_chain} batches per chain")
    size = T // per_chain
    trimmed = values[: size * per_chain]
    bm = trimmed.reshape(per_chain, size, C).mean(axis=1).reshape(-1)
    mean = float(values.mean())
    if bm.size < 2:
        return mean, 0.0
    se = float(np.std(bm, ddof=1) / np.sqrt(bm.size))
    if np.all(values == values.flat[0]):
        se = 0.0
    return mean, se


def estimate_integral(measure: MeasureEstimate, f, label: str | None = None):
    """(mean, stderr) of an observable ``f`` mapping (..., N) arrays to (...)."""
    if label is not None and label in measure.integrals:
        return measure.integrals[label]
    vals = np.asarray(f(measure.trajectory), dtype=float)
    if vals.shape != measure.trajectory.shape[:2]:
        vals = np.broadcast_to(vals, measure.trajectory.shape[:2])
    out = batch_means(vals)
    if label is not None:
        measure.integrals[label] = out
    return out


# -- entropy and pressure ---------------------------------------------------

@dataclass
class EntropyReport:
    h: float
    h_stderr: float
    h_dictionary: float
    h_dictionary_stderr: float
    best_member: str
    members: dict

    def to_dict(self) -> dict:
        return {"h": self.h, "h_stderr": self.h_stderr,
                "h_dictionary": self.h_dictionary,
                "h_dictionary_stderr": self.h_dictionary_stderr,
                "best_member": self.best_member,
                "members": {k: list(v) for k, v in self.members.items()}}


def _thin(measure: MeasureEstimate, max_eval: int) -> np.ndarray:
    T = measure.trajectory.shape[0]
    stride = max(1, math.ceil(measure.size / max_eval))
    return measure.trajectory[::stride] if stride < T else measure.trajectory


def entropy(spectral: SpectralData, measure: MeasureEstimate, rng=None,
            n_random: int = 4, max_eval: int = 100_000) -> EntropyReport:
    """Entropy of the sampled Gibbs state, two ways.

    ``h`` is -int Abar dmu. ``h_dictionary`` is the smallest sample mean of
    log(L_0 u / u) over a finite family of positive test functions u: the
    constant 1, exp(Abar), psi, psi exp(Abar) and a few random positive
    grid functions. Any member gives an upper bound of the true entropy; the
    reported member minimizes mean + 2 stderr.
    """
    Abar = spectral.normalized_potential
    L, nu, psi = spectral.L, spectral.nu, spectral.psi
    rng = _rng(rng if rng is not None else 0)
    h_mean, h_se = estimate_integral(measure, lambda X: -Abar.values(X), "h_vp2")

    traj = _thin(measure, max_eval)
    T, C, N = traj.shape
    X_all = traj.reshape(-1, N)
    noise = [FunctionGrid.like(psi, rng.normal(0.0, 0.5, psi.values.shape))
             for _ in range(n_random)]
    names = ["one", "exp_abar", "psi", "psi_exp_abar"] + [f"random_{k}" for k in range(n_random)]
    integrands = {name: np.empty(X_all.shape[0]) for name in names}
    chunk = max(1, 2_000_000 // (len(nu.nodes) * N))
    for s in range(0, X_all.shape[0], chunk):
        X = X_all[s: s + chunk]
        pre = L.preimage_array(X[:, None, :], nu.nodes[None, :])  # (S, Q, N)
        abar_x, abar_pre = Abar.values(X), Abar.values(pre)
        lpsi_x, lpsi_pre = np.log(psi(X)), np.log(psi(pre))
        logs = {
            "one": (np.zeros_like(abar_x), np.zeros_like(abar_pre)),
            "exp_abar": (abar_x, abar_pre),
            "psi": (lpsi_x, lpsi_pre),
            "psi_exp_abar": (lpsi_x + abar_x, lpsi_pre + abar_pre),
        }
        for k, g in enumerate(noise):
            logs[f"random_{k}"] = (g(X), g(pre))
        for name, (lu_x, lu_pre) in logs.items():
            integrands[name][s: s + chunk] = (
                logsumexp(lu_pre, b=nu.weights, axis=-1) - lu_x)
    members = {name: batch_means(v.reshape(T, C)) for name, v in integrands.items()}
    # every member bounds h from above; pick the tightest confident bound so
    # sampling noise in one member does not pull the estimate below h
    best = min(members, key=lambda k: members[k][0] + 2 * members[k][1])
    return EntropyReport(h_mean, h_se, members[best][0], members[best][1], best, members)


@dataclass
class PressureReport:
    log_lambda: float
    int_A: float
    int_A_stderr: float
    h: float
    h_stderr: float
    h_plus_int: float
    residual: float
    combined_stderr: float

    def within(self, k: float = 3.0, floor: float = 1e-10) -> bool:
        return self.residual <= k * self.combined_stderr + floor

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["within_3_stderr"] = self.within()
        return d


def pressure_check(spectral: SpectralData, measure: MeasureEstimate,
                   entropy_report: EntropyReport | None = None) -> PressureReport:
    """Compare log lambda_A with h + int A dmu_A, h from the dictionary bound."""
    er = entropy_report or entropy(spectral, measure)
    A = spectral.A
    a_mean, a_se = estimate_integral(measure, A.values, "A")
    h, h_se = er.h_dictionary, er.h_dictionary_stderr
    total = h + a_mean
    return PressureReport(spectral.log_lambda, a_mean, a_se, h, h_se, total,
                          abs(spectral.log_lambda - total), math.hypot(a_se, h_se))


# -- stationary law of the discretized chain (oracle for shallow potentials) --

def node_transition_matrix(spectral: SpectralData) -> np.ndarray:
    """Transition matrix on first-coordinate nodes for depth-1 spectral data.

    Valid when Abar depends on at most the first two coordinates, so that the
    next node only depends on the current one.
    """
    Abar = spectral.normalized_potential
    if spectral.psi.depth != 1 or Abar.effective_depth is None or Abar.effective_depth > 2:
        raise ValueError("node chain needs depth-1 data and Abar of depth <= 2")
    L, nu = spectral.L, spectral.nu
    X = np.zeros((len(nu.nodes), 2))
    X[:, 0] = nu.nodes
    pre = np.zeros((len(nu.nodes), len(nu.nodes), 2))
    pre[:, :, 0] = nu.nodes[None, :]
    pre[:, :, 1] = (nu.nodes / L.alpha[0])[:, None]
    K = nu.weights[None, :] * np.exp(Abar.values(pre))
    return K / K.sum(axis=1, keepdims=True)


def stationary_node_law(P: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eig(P.T)
    k = int(np.argmin(np.abs(vals - 1.0)))
    pi = np.abs(np.real(vecs[:, k]))
    return pi / pi.sum()


def node_histogram(measure: MeasureEstimate, nodes: np.ndarray) -> np.ndarray:
    x1 = measure.samples[:, 0]
    idx = np.searchsorted(nodes, x1)
    idx = np.clip(idx, 0, len(nodes) - 1)
    left = np.clip(idx - 1, 0, len(nodes) - 1)
    pick = np.where(np.abs(nodes[left] - x1) < np.abs(nodes[idx] - x1), left, idx)
    return np.bincount(pick, minlength=len(nodes)) / float(x1.size)


def total_variation(p, q) -> float:
    return 0.5 * float(np.sum(np.abs(np.asarray(p) - np.asarray(q))))


# -- Gibbs cylinder inequality ------------------------------------------------

@dataclass
class CylinderReport:
    intervals: list
    x_tilde: list
    mu: float
    mu_stderr: float
    hits: int
    birkhoff: float
    ratio: float
    ratio_stderr: float
    bound_C: float
    kappa_A: float | None
    variation: float
    holder: float
    oscillation: float
    inconclusive: bool
    holds: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def gibbs_cylinder_check(spectral: SpectralData, measure: MeasureEstimate, intervals,
                         x_tilde, holder: float | None = None,
                         variation: float | None = None, rng=None,
                         min_hits: int = 30) -> CylinderReport:
    """Empirical mu(cylinder) / exp(S_k A(x~) - k log lambda) against the bound C.

    C = exp((1 + 3 kappa_A) V_T(A) + Hol diam(B_k) sum_{i<=k} ||L||^{i-1}),
    with kappa_A the empirical osc(log psi)/V_T(A). The product kappa_A V_T
    equals osc(log psi) and is used directly, so V_T = 0 is allowed. ``holder``
    defaults to the known constant of A, else a sampled estimate on the box
    spanned by the intervals; ``variation`` defaults to a sampled lower bound.
    """
    A, L = spectral.A, spectral.L
    iv = np.asarray(intervals, dtype=float).reshape(-1, 2)
    k = iv.shape[0]
    xt = np.asarray(_coords(x_tilde), dtype=float)
    if not np.all((iv[:, 0] <= xt[:k]) & (xt[:k] <= iv[:, 1])):
        raise ValueError("x_tilde must lie in the cylinder")
    rng = _rng(rng if rng is not None else 0)
    inside = np.all((measure.trajectory[..., :k] >= iv[:, 0]) &
                    (measure.trajectory[..., :k] <= iv[:, 1]), axis=-1)
    mu, mu_se = batch_means(inside.astype(float))
    hits = int(inside.sum())
    S = L.birkhoff_sum(A, xt, k)
    denom = math.exp(S - k * spectral.log_lambda)
    ratio, ratio_se = mu / denom, mu_se / denom
    log_psi = np.log(spectral.psi.flat)
    osc = float(log_psi.max() - log_psi.min())
    if variation is None:
        variation = estimate_total_variation(A, min(L.N - 1, 10), spectral.psi.box_radius,
                                             2000, rng, L.space)
    if holder is None:
        holder = A.holder_constant
    if holder is None:
        half = float(np.max(np.abs(iv)))
        holder = estimate_holder(A, A.holder_alpha, 20_000, rng, L.space, half).value
    diam = float(L.space.norm(iv[:, 1] - iv[:, 0]))
    geo = sum(L.op_norm ** (i - 1) for i in range(1, k + 1))
    C = math.exp(variation + 3 * osc + holder * diam ** A.holder_alpha * geo)
    kappa = osc / variation if variation > 0 else None
    inconclusive = hits < min_hits
    holds = ratio <= C * (1 + 1e-12) + 3 * ratio_se
    return CylinderReport(iv.tolist(), xt[:k].tolist(), mu, mu_se, hits, S, ratio, ratio_se,
                          C, kappa, variation, holder, osc, inconclusive, holds)


# -- zero-temperature sweep ----------------------------------------------------

@dataclass
class ChainSpec:
    steps: int = 2000
    burn_in: int = 200
    chains: int = 50

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class SweepResult:
    t: np.ndarray
    log_lambda: np.ndarray
    int_A: np.ndarray
    int_A_stderr: np.ndarray
    entropy: np.ndarray
    entropy_stderr: np.ndarray
    dist_to_candidate: np.ndarray
    dist_stderr: np.ndarray
    failures: dict = field(default_factory=dict)

    @property
    def log_lambda_over_t(self) -> np.ndarray:
        return self.log_lambda / self.t

    def monotone_violations(self, k: float = 2.0) -> list:
        """Indices i where int_A drops from t_i to t_{i+1} by more than k stderr."""
        out = []
        for i in range(len(self.t) - 1):
            tol = k * math.hypot(self.int_A_stderr[i], self.int_A_stderr[i + 1])
            if self.int_A[i + 1] < self.int_A[i] - tol:
                out.append(i)
        return out

    def convexity_defects(self) -> np.ndarray:
        """Increments of the chord slopes of log lambda_t (>= 0 for convexity)."""
        slopes = np.diff(self.log_lambda) / np.diff(self.t)
        return np.diff(slopes)

    def rows(self) -> list:
        out = []
        for i, t in enumerate(self.t):
            out.append({"t": float(t), "log_lambda": float(self.log_lambda[i]),
                        "log_lambda_over_t": float(self.log_lambda_over_t[i]),
                        "int_A": float(self.int_A[i]),
                        "int_A_stderr": float(self.int_A_stderr[i]),
                        "entropy": float(self.entropy[i]),
                        "entropy_stderr": float(self.entropy_stderr[i]),
                        "dist_to_candidate": float(self.dist_to_candidate[i]),
                        "dist_stderr": float(self.dist_stderr[i])})
        return out


def zero_temp_sweep(A: Potential, t_grid, L: ShiftOperator, nu: AprioriMeasure,
                    grid_spec: GridSpec, chain_spec: ChainSpec | None = None,
                    seed: int = 0, candidate=None, tol: float = 1e-10,
                    max_iter: int = 10_000) -> SweepResult:
    """Spectral data and Gibbs samples of tA for each t in ``t_grid``.

    Each t gets its own rng stream spawned from ``seed``. Spectral or chain
    failures at one t are recorded and the sweep moves on.
    """
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size < 1 or np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    chain_spec = chain_spec or ChainSpec()
    streams = np.random.SeedSequence(seed).spawn(t.size)
    n = t.size
    cols = {k: np.full(n, np.nan) for k in
            ("log_lambda", "int_A", "int_A_stderr", "entropy", "entropy_stderr",
             "dist", "dist_se")}
    failures = {}
    cand = None if candidate is None else _coords(candidate)
    for i, ti in enumerate(t):
        rng = np.random.default_rng(streams[i])
        At = A.scaled(ti)
        try:
            sd = power_iteration(At, L, nu, grid_spec, tol=tol, max_iter=max_iter)
            meas = run_gibbs_chain(sd, chain_spec.steps, chain_spec.burn_in, rng,
                                   chain_spec.chains)
        except (SpectralError, ChainError, FloatingPointError, ValueError) as exc:
            failures[float(ti)] = str(exc)
            log.warning("sweep t=%g failed: %s", ti, exc)
            continue
        cols["log_lambda"][i] = sd.log_lambda
        cols["int_A"][i], cols["int_A_stderr"][i] = estimate_integral(meas, A.values)
        Abar = sd.normalized_potential
        cols["entropy"][i], cols["entropy_stderr"][i] = estimate_integral(
            meas, lambda X: -Abar.values(X))
        if cand is not None:
            cols["dist"][i], cols["dist_se"][i] = estimate_integral(
                meas, lambda X: L.space.norm(X - cand))
    return SweepResult(t, cols["log_lambda"], cols["int_A"], cols["int_A_stderr"],
                       cols["entropy"], cols["entropy_stderr"], cols["dist"],
                       cols["dist_se"], failures)
