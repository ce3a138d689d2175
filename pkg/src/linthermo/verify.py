"""Built-in oracle suite from the explicit weighted-shift examples.

Each check returns a :class:`Check` with the measured quantity, the
tolerance it is held to and a pass flag. The suite is what the
``verify-examples`` subcommand runs.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import ergopt, potentials
from .apriori import AprioriMeasure, adapted_tails
from .grid import GridSpec
from .shift import ShiftOperator, WeightSequence
from .space import SpaceSpec, random_vectors
from .thermo import entropy, run_gibbs_chain
from .transfer import power_iteration


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def fixed_point_example(N: int = 50):
    """c = 2 on l^1 with v = (2^{-n+1}) and A = V = -||x - v||."""
    space = SpaceSpec.lp(1, N)
    L = ShiftOperator(WeightSequence.constant(2.0, N), space)
    v = L.periodic_point([1.0], 1).point
    return space, L, v, potentials.neg_dist(v, space)


def period_two_example(N: int = 40, c0: float = 2.0, c1: float = 3.0):
    """Alternating weights with the period-two orbit {v, w}."""
    space = SpaceSpec.sup(N)
    L = ShiftOperator(WeightSequence.alternating(c0, c1, N), space)
    v = L.periodic_point([1.0, 0.0], 2).point
    w = L.apply(v)
    return space, L, v, w


def exact_period_two(N: int, c0: int, c1: int):
    """v and w as exact fractions: v_{2j+1} = (c0 c1)^-j, w_{2j+2} = c0 (c0 c1)^-(j+1)."""
    v = [Fraction(0)] * N
    w = [Fraction(0)] * N
    for j in range((N + 1) // 2):
        v[2 * j] = Fraction(1, (c0 * c1) ** j)
    for j in range(N // 2):
        w[2 * j + 1] = Fraction(c0, (c0 * c1) ** (j + 1))
    return v, w


def check_zero_potential(seed: int = 0) -> list:
    space = SpaceSpec.sup(8)
    L = ShiftOperator(WeightSequence.constant(2.0, 8), space)
    nu = AprioriMeasure(1.0)
    sd = power_iteration(potentials.zero(), L, nu, GridSpec(2, None, 17))
    meas = run_gibbs_chain(sd, 400, 20, np.random.default_rng(seed), chains=25)
    h = entropy(sd, meas, rng=seed)
    return [
        Check("zero potential: lambda = 1", abs(sd.lam - 1) <= 1e-10, abs(sd.lam - 1), 1e-10),
        Check("zero potential: psi = 1", float(np.max(np.abs(sd.psi.flat - 1))) <= 1e-10,
              float(np.max(np.abs(sd.psi.flat - 1))), 1e-10),
        Check("zero potential: entropy = 0", abs(h.h) <= 1e-3, abs(h.h), 1e-3),
    ]


def check_fixed_point_example(seed: int = 0, samples: int = 10_000,
                              calib_points: int = 100) -> list:
    space, L, v, A = fixed_point_example()
    rng = np.random.default_rng(seed)
    Lv = L.apply(v).coords
    fixed_err = float(np.max(np.abs(Lv[:-1] - v.coords[:-1])))
    X = rng.uniform(-10.0, 10.0, size=(samples, space.N))
    defect = float(np.min(ergopt.subaction_defect(A, A, 0.0, X, L)))
    Y = random_vectors(space, calib_points, 3.0, rng, decay=0.5, center=v)
    cal = [ergopt.calibration_residual(A, A, 0.0, y, L) for y in Y]
    res = max(abs(c.residual) for c in cal)
    rdev = max(abs(c.r_star - 1.0) for c in cal)
    rep = ergopt.m_periodic(A, L, 2, ergopt.MultistartSpec(starts=8, seed=seed))
    orbit_dev = float(np.max(np.abs(rep.best_orbit.orbit - v.coords)))
    return [
        Check("fixed point: L(v) = v on first N-1 coordinates", fixed_err == 0.0, fixed_err, 0.0),
        Check("fixed point: sub-action defect >= -1e-12", defect >= -1e-12, defect, -1e-12),
        Check("fixed point: calibration residual < 1e-6", res < 1e-6, res, 1e-6),
        Check("fixed point: calibrating r* within 1e-3 of 1", rdev < 1e-3, rdev, 1e-3),
        Check("fixed point: periodic maximum = 0", abs(rep.m_estimate) <= 1e-8,
              abs(rep.m_estimate), 1e-8),
        Check("fixed point: best orbit at v", orbit_dev <= 1e-6, orbit_dev, 1e-6),
    ]


def check_period_two_example(seed: int = 0) -> list:
    N, c0, c1 = 40, 2, 3
    space, L, v, w = period_two_example(N, c0, c1)
    ev, ew = exact_period_two(N, c0, c1)
    rounded_ok = (np.array_equal(v.coords, [float(f) for f in ev]) and
                  np.array_equal(w.coords[:-1], [float(f) for f in ew[:-1]]))
    alpha = [Fraction(float(a)) for a in L.alpha]

    def exact_apply(x):
        return [alpha[i] * x[i + 1] for i in range(N - 1)] + [Fraction(0)]

    Lv = exact_apply(ev)
    L2v = exact_apply(Lv)
    exact_ok = Lv[: N - 1] == ew[: N - 1] and L2v[: N - 2] == ev[: N - 2]
    pp = L.periodic_point([1.0, 0.0], 2)
    A = potentials.two_point(v, w, space, "hat")
    spec = ergopt.MultistartSpec(starts=8, seeds={2: [[1.0, 0.0]]}, seed=seed)
    rep = ergopt.m_periodic(A, L, 2, spec)
    orbit = rep.best_orbit.orbit
    on_vw = (rep.best_orbit.period == 2 and
             float(np.max(np.abs(orbit[0] - v.coords))) <= 1e-12 and
             float(np.max(np.abs(orbit[1] - w.coords))) <= 1e-12)
    return [
        Check("period two: coordinates are the rounded exact v, w "
              "(w up to the truncated last coordinate)", rounded_ok, 0.0, 0.0),
        Check("period two: L(v) = w and L^2(v) = v in exact arithmetic", exact_ok,
              pp.exact_residual, 0.0),
        Check("period two: periodic maximum = 0", abs(rep.m_estimate) <= 1e-8,
              abs(rep.m_estimate), 1e-8),
        Check("period two: best orbit is {v, w}", on_vw, 0.0, 1e-12),
    ]


def check_chaos_and_tails() -> list:
    N = 60
    L = ShiftOperator(WeightSequence.constant(2.0, N), SpaceSpec.sup(N))
    n = np.arange(1, N)
    dn_ok = np.array_equal(L.dn_table, 2.0 ** n)
    rep = L.chaos_criterion(1.0)
    ps_err = float(np.max(np.abs(rep.partial_sums - (1 - 2.0 ** -n))))
    tails = adapted_tails(0.1, L.dn_table, sigma=1.0)
    return [
        Check("chaos: d_n = 2^n", bool(dn_ok), 0.0, 0.0),
        Check("chaos: partial sums = 1 - 2^-n", ps_err <= 1e-12, ps_err, 1e-12),
        Check("chaos: verdict converges", rep.verdict == "converges", rep.ratio, 1.0),
        Check("adapted tails: tail sum < 0.1", tails.tail_sum < 0.1, tails.tail_sum, 0.1),
        Check("adapted tails: kappa l1-summable", tails.verdict == "holds",
              tails.l1_sum, float("inf")),
    ]


def check_mane_diagonal() -> list:
    space, L, v, A = fixed_point_example(40)
    ev = ergopt.mane_potential(A, 0.0, v, v, L, 10, (1.0, 1e-4, 1e-8))
    return [Check("Mane potential: phi(v, v) = 0", abs(ev.value) <= 1e-10, abs(ev.value), 1e-10)]


def run_examples(seed: int = 0) -> list:
    checks = []
    checks += check_zero_potential(seed)
    checks += check_fixed_point_example(seed)
    checks += check_period_two_example(seed)
    checks += check_chaos_and_tails()
    checks += check_mane_diagonal()
    return checks
