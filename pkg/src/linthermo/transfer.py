"""Discretized Ruelle operator, its leading eigenpair, and normalization.

On a depth-M grid the operator acts on cylinder functions phi as

    (L_A phi)(x) = sum_q w_q exp(A(p_q)) phi(p_q),
    p_q = (r_q, x_1/alpha_1, ..., x_M/alpha_M, 0, ...),

with (r_q, w_q) the quadrature rule of the a priori measure and phi read off
the grid by clamped multilinear interpolation. The map phi -> L_A phi is a
fixed sparse nonnegative matrix, assembled once per potential.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .apriori import AprioriMeasure
from .grid import FunctionGrid, GridSpec
from .potentials import Potential
from .shift import ShiftOperator
from .space import _coords

log = logging.getLogger(__name__)

DENSE_LIMIT = 2048
_EXP_MAX = np.log(np.finfo(float).max) - 1.0


class SpectralError(RuntimeError):
    """Power iteration failed; ``residual`` carries the last residual."""

    def __init__(self, msg, residual=float("nan")):
        super().__init__(msg)
        self.residual = residual


def default_box_radius(nu: AprioriMeasure, L: ShiftOperator) -> float:
    c = float(L.alpha.min())
    return 4.0 * nu.sigma * max(1.0, 1.0 / c)


def resolve_grid(spec: GridSpec, nu: AprioriMeasure, L: ShiftOperator) -> FunctionGrid:
    if spec.depth > L.N - 1:
        raise ValueError(f"grid depth {spec.depth} exceeds N-1 = {L.N - 1}")
    R = spec.box_radius if spec.box_radius is not None else default_box_radius(nu, L)
    return FunctionGrid(spec.depth, R, spec.resolution)


def _eval_width(A: Potential, L: ShiftOperator, M: int) -> int:
    if A.effective_depth is not None and A.effective_depth <= M + 1:
        return A.effective_depth
    return L.N


def fiber_points(X, L: ShiftOperator, nodes, width: int) -> np.ndarray:
    """Preimages (r_q, X_1/alpha_1, ...) of each row of X, shape (P, Q, width).

    Only the first ``width`` coordinates are formed; coordinates of X beyond
    its own width are taken as zero.
    """
    X = np.asarray(X, dtype=float)
    P, K = X.shape
    out = np.zeros((P, len(nodes), width))
    out[:, :, 0] = nodes
    m = min(K, width - 1)
    if m > 0:
        out[:, :, 1: m + 1] = (X[:, :m] / L.alpha[:m])[:, None, :]
    return out


def exp_potential(A: Potential, pts: np.ndarray, where: np.ndarray | None = None) -> np.ndarray:
    """exp(A) on preimage points, with a clear error if A is too large."""
    vals = A.values(pts)
    bad = ~np.isfinite(vals) | (vals > _EXP_MAX)
    if bad.any():
        loc = np.unravel_index(int(np.argmax(bad)), bad.shape)
        at = where[loc[0]] if where is not None else pts[loc]
        raise FloatingPointError(
            f"exp(A) overflows or A is not finite (A={vals[loc]!r}) near grid point "
            f"{np.asarray(at).tolist()}")
    return np.exp(vals)


class TransferOperator:
    """The assembled matrix of L_A on a function grid."""

    def __init__(self, A: Potential, L: ShiftOperator, nu: AprioriMeasure,
                 grid: FunctionGrid, chunk: int = 200_000):
        self.A, self.L, self.nu, self.grid = A, L, nu, grid
        M, Q = grid.depth, len(nu.nodes)
        X = grid.points()
        width = _eval_width(A, L, M)
        rows_per_chunk = max(1, chunk // Q)
        data, cols, rows = [], [], []
        n_clamped = 0
        for s in range(0, X.shape[0], rows_per_chunk):
            Xb = X[s: s + rows_per_chunk]
            pts = fiber_points(Xb, L, nu.nodes, max(width, M))
            ea = exp_potential(A, pts[..., :width], where=Xb)
            idx, wts, clamped = grid.stencil(pts[..., :M])
            n_clamped += int(clamped.sum())
            vals = (nu.weights[None, :] * ea)[..., None] * wts
            rows.append(np.broadcast_to(np.arange(s, s + Xb.shape[0])[:, None, None],
                                        idx.shape).reshape(-1))
            cols.append(idx.reshape(-1))
            data.append(vals.reshape(-1))
        data, rows, cols = (np.concatenate(a) for a in (data, rows, cols))
        n = grid.size
        mat = sparse.csr_matrix((data, (rows, cols)), shape=(n, n))
        mat.sum_duplicates()
        self.matrix = mat.toarray() if n <= DENSE_LIMIT else mat
        self.clamped_fraction = n_clamped / float(X.shape[0] * Q)

    def apply_values(self, flat: np.ndarray) -> np.ndarray:
        return np.asarray(self.matrix @ flat)

    def apply(self, phi: FunctionGrid) -> FunctionGrid:
        return FunctionGrid.like(self.grid, self.apply_values(phi.flat))


def apply_transfer(A: Potential, phi: FunctionGrid, L: ShiftOperator,
                   nu: AprioriMeasure) -> FunctionGrid:
    """One application of the discretized Ruelle operator to ``phi``."""
    grid = FunctionGrid(phi.depth, phi.box_radius, phi.resolution)
    return TransferOperator(A, L, nu, grid).apply(phi)


@dataclass
class SpectralData:
    lam: float
    psi: FunctionGrid
    residual: float
    iterations: int
    A: Potential
    L: ShiftOperator = field(repr=False)
    nu: AprioriMeasure = field(repr=False)
    operator: TransferOperator = field(repr=False)
    tol: float = 1e-9

    @property
    def log_lambda(self) -> float:
        return float(np.log(self.lam))

    @property
    def normalized_potential(self) -> "NormalizedPotential":
        return normalize(self.A, self)

    def to_dict(self, include_values: bool = False) -> dict:
        return {"lambda": self.lam, "log_lambda": self.log_lambda,
                "residual": self.residual, "iterations": self.iterations,
                "psi_min": float(self.psi.flat.min()),
                "psi_max": float(self.psi.flat.max()),
                "clamped_fraction": self.operator.clamped_fraction,
                "grid": self.psi.to_dict(include_values)}


def power_iteration(A: Potential, L: ShiftOperator, nu: AprioriMeasure,
                    grid_spec: GridSpec | None = None, tol: float = 1e-9,
                    max_iter: int = 10_000) -> SpectralData:
    """Leading eigenpair of the discretized L_A from phi_0 = 1.

    Each step applies the operator and rescales to sup-norm one; the
    rescaling factor converges to lambda_A. Stops when both the eigenvalue
    ratio and the eigenfunction change fall below ``tol``.
    """
    grid = resolve_grid(grid_spec or GridSpec(), nu, L)
    op = TransferOperator(A, L, nu, grid)
    phi = np.ones(grid.size)
    lam_prev = None
    for it in range(1, max_iter + 1):
        nxt = op.apply_values(phi)
        lam = float(np.max(np.abs(nxt)))
        if not (np.isfinite(lam) and lam > 0):
            raise SpectralError("operator image vanished or is not finite")
        nxt = nxt / lam
        dphi = float(np.max(np.abs(nxt - phi)))
        phi = nxt
        if lam_prev is not None and abs(lam - lam_prev) <= tol * lam and dphi <= tol:
            break
        lam_prev = lam
    else:
        res = float(np.max(np.abs(op.apply_values(phi) - lam * phi)))
        raise SpectralError(f"power iteration did not converge in {max_iter} steps "
                            f"(residual {res:.3e})", res)
    if phi.min() <= 0:
        raise SpectralError("eigenfunction is not strictly positive on the grid")
    residual = float(np.max(np.abs(op.apply_values(phi) - lam * phi)))
    log.debug("power iteration: lambda=%.12g after %d steps", lam, it)
    return SpectralData(lam, FunctionGrid.like(grid, phi), residual, it, A, L, nu, op, tol)


class NormalizedPotential(Potential):
    """Abar = A + log psi - log psi o L - log lambda."""

    def __init__(self, spectral: SpectralData):
        self.spectral = spectral
        A, L, psi = spectral.A, spectral.L, spectral.psi
        M = psi.depth
        self.base = A
        self.psi = psi
        self.log_lambda = spectral.log_lambda
        depth = None
        if A.effective_depth is not None:
            depth = max(A.effective_depth, M + 1)
        self.clamped_queries = 0

        # log of the interpolated psi (not an interpolated log psi), so that
        # the fiber sums reproduce the assembled operator exactly on the grid
        def func(X):
            LX = X[..., 1: M + 1] * L.alpha[:M]
            idx, w, clamped = psi.stencil(LX)
            self.clamped_queries += int(np.sum(clamped))
            psi_l = np.sum(psi.flat[idx] * w, axis=-1)
            return A.values(X) + np.log(psi(X)) - np.log(psi_l) - self.log_lambda

        super().__init__(func, f"normalized({A.name})", A.holder_alpha, None, depth,
                         None, None, {"base": A.name})


def normalize(A: Potential, spectral: SpectralData) -> NormalizedPotential:
    if spectral.A is not A:
        raise ValueError("spectral data belongs to a different potential")
    if not spectral.residual <= max(10 * spectral.tol * spectral.lam, 1e-12):
        raise ValueError(f"spectral residual {spectral.residual:.3e} above tolerance")
    return NormalizedPotential(spectral)


def transfer_of_one(Abar: Potential, L: ShiftOperator, nu: AprioriMeasure, X) -> np.ndarray:
    """L_{Abar}(1)(x) for each row of X, by direct quadrature on full preimages."""
    X = np.atleast_2d(_coords(X))
    pts = L.preimage_array(X[:, None, :], nu.nodes[None, :])
    return np.exp(Abar.values(pts)) @ nu.weights


def check_normalized(Abar: Potential, L: ShiftOperator, nu: AprioriMeasure,
                     sample_points) -> float:
    """max |L_{Abar}(1)(x) - 1| over the sample points."""
    return float(np.max(np.abs(transfer_of_one(Abar, L, nu, sample_points) - 1.0)))
