"""Gaussian a priori measure on the kernel of the shift, with quadrature rules."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import hermite_e
from scipy import stats
from scipy.integrate import simpson

from .shift import geometric_tail

QUADRATURES = ("gauss_hermite", "composite")


class AprioriMeasure:
    """Centered Gaussian nu = N(0, sigma^2) on Ker(L) = span{e_1}.

    Parameters
    ----------
    sigma : float
        Standard deviation, > 0.
    quad_order : int
        Number of quadrature nodes. For ``"gauss_hermite"`` the rule is exact
        for polynomials of degree < 2 * quad_order.
    quadrature : {"gauss_hermite", "composite"}
        ``"composite"`` uses equally spaced nodes on [-span*sigma, span*sigma]
        with Simpson weights times the density. It resolves sharply peaked
        integrands (large inverse temperature) that a Gauss rule misses.
    span : float
        Half-width in units of sigma for the composite rule.
    """

    def __init__(self, sigma: float = 1.0, quad_order: int = 64,
                 quadrature: str = "gauss_hermite", span: float = 8.0):
        if not (np.isfinite(sigma) and sigma > 0):
            raise ValueError("sigma must be a finite positive number")
        if quadrature not in QUADRATURES:
            raise ValueError(f"unknown quadrature {quadrature!r}")
        if quad_order < 1:
            raise ValueError("quad_order must be >= 1")
        self.sigma = float(sigma)
        self.quad_order = int(quad_order)
        self.quadrature = quadrature
        self.span = float(span)
        if quadrature == "gauss_hermite":
            x, w = hermite_e.hermegauss(self.quad_order)
        else:
            if self.quad_order < 3 or self.quad_order % 2 == 0:
                raise ValueError("composite rule needs an odd node count >= 3")
            x = np.linspace(-self.span, self.span, self.quad_order)
            x[self.quad_order // 2] = 0.0
            dens = np.exp(-0.5 * x * x)
            unit = np.eye(self.quad_order)
            w = simpson(unit, x=x, axis=1) * dens
        w = w / w.sum()
        # symmetrize against rounding so odd moments vanish to the last bit
        w = 0.5 * (w + w[::-1])
        w = w / w.sum()
        x = 0.5 * (x - x[::-1])
        self.nodes = self.sigma * x
        self.weights = w
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    def __repr__(self):
        return (f"AprioriMeasure(sigma={self.sigma:g}, {self.quadrature}, "
                f"Q={self.quad_order})")

    @property
    def log_weights(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.weights)

    def integrate(self, f) -> float:
        """sum_i w_i f(r_i)."""
        vals = np.asarray(f(self.nodes), dtype=float)
        if vals.shape != self.nodes.shape:
            vals = np.array([float(f(r)) for r in self.nodes])
        bad = ~np.isfinite(vals)
        if bad.any():
            k = int(np.argmax(bad))
            raise FloatingPointError(
                f"integrand is not finite at node r={self.nodes[k]!r} (index {k})")
        return float(np.dot(self.weights, vals))

    def sample(self, rng, size=None):
        return rng.normal(0.0, self.sigma, size=size)

    def to_dict(self) -> dict:
        return {"sigma": self.sigma, "quad_order": self.quad_order,
                "quadrature": self.quadrature, "span": self.span}


@dataclass
class TailsReport:
    epsilon: float
    kappa: np.ndarray
    tail_masses: np.ndarray
    tail_sum: float
    l1_partial_sums: np.ndarray
    l1_sum: float
    l1_tail_bound: float
    verdict: str

    def to_dict(self) -> dict:
        return {"epsilon": self.epsilon, "kappa": self.kappa.tolist(),
                "tail_sum": self.tail_sum, "l1_sum": self.l1_sum,
                "l1_tail_bound": self.l1_tail_bound, "verdict": self.verdict}


def adapted_tails(epsilon: float, dn_table, n_max: int | None = None,
                  sigma: float = 1.0, window: int = 5) -> TailsReport:
    """Build kappa_n with sum_n nu(|r| > d_n kappa_n) < epsilon.

    Level n is given the mass allowance epsilon * 2^-(n+1), and kappa_n is the
    two-sided Gaussian quantile for that mass divided by d_n (zero when the
    allowance is at least one). The verdict is "holds" when the tail sum is
    below epsilon and kappa passes a geometric l^1 tail test.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be > 0")
    dn = np.asarray(dn_table, dtype=float).reshape(-1)
    n_max = dn.size if n_max is None else int(n_max)
    if not 1 <= n_max <= dn.size:
        raise ValueError(f"n_max must lie in 1..{dn.size}")
    dn = dn[:n_max]
    n = np.arange(1, n_max + 1)
    allowance = epsilon * 2.0 ** (-(n + 1))
    q = np.where(allowance < 1.0, sigma * stats.norm.isf(np.minimum(allowance, 1.0) / 2), 0.0)
    kappa = q / dn
    masses = np.where(q > 0, 2.0 * stats.norm.sf(q / sigma), 1.0)
    tail_sum = float(masses.sum())
    partial = np.cumsum(kappa)
    nz = kappa[np.argmax(kappa > 0):] if np.any(kappa > 0) else np.zeros(1)
    if not np.any(kappa > 0):
        rho, bound, l1_verdict = 0.0, 0.0, "converges"
    else:
        rho, bound, l1_verdict = geometric_tail(nz, window=window, rtol=1e-2)
    verdict = "holds" if (tail_sum < epsilon and l1_verdict == "converges") else "inconclusive"
    return TailsReport(float(epsilon), kappa, masses, tail_sum, partial,
                       float(partial[-1]), bound, verdict)
