"""End-to-end acceptance criteria, one test per criterion.

Each test prints a single ``CRITERION k: PASS|FAIL`` line with the measured
quantities and its wall time, and asserts the stated tolerance and time limit.
"""

import itertools
import time
from fractions import Fraction

import numpy as np
import pytest

from linthermo import ergopt as E
from linthermo import potentials as P
from linthermo import thermo as T
from linthermo import verify
from linthermo.apriori import AprioriMeasure, adapted_tails
from linthermo.grid import GridSpec
from linthermo.shift import ShiftOperator, WeightSequence
from linthermo.space import SpaceSpec
from linthermo.transfer import power_iteration

pytestmark = pytest.mark.acceptance


@pytest.fixture
def report(capsys):
    def emit(k, passed, elapsed, limit, detail):
        ok = passed and elapsed < limit
        with capsys.disabled():
            print(f"\nCRITERION {k}: {'PASS' if ok else 'FAIL'}  {detail}  "
                  f"[{elapsed:.1f}s < {limit:g}s]")
        return ok
    return emit


# -- 1. zero potential --------------------------------------------------------

def test_criterion_1_zero_potential(report):
    t0 = time.perf_counter()
    N = 8
    L = ShiftOperator(WeightSequence.constant(2.0, N), SpaceSpec.sup(N))
    sd = power_iteration(P.zero(), L, AprioriMeasure(1.0), GridSpec(2, None, 17))
    meas = T.run_gibbs_chain(sd, 1000, 50, np.random.default_rng(0), chains=20)
    h = T.entropy(sd, meas, rng=0)
    dl = abs(sd.lam - 1.0)
    dpsi = float(np.max(np.abs(sd.psi.flat - 1.0)))
    passed = dl <= 1e-10 and dpsi <= 1e-10 and abs(h.h) <= 1e-3 and abs(h.h_dictionary) <= 1e-3
    elapsed = time.perf_counter() - t0
    assert report(1, passed, elapsed, 10,
                  f"|lambda-1|={dl:.1e} max|psi-1|={dpsi:.1e} h={h.h:.1e} "
                  f"h_dict={h.h_dictionary:.1e}")


# -- 2. variational principle (the Gibbs state of A = -x_1^2 is shared with 7) --

N_Q = 8
L_Q = ShiftOperator(WeightSequence.constant(2.0, N_Q), SpaceSpec.sup(N_Q))
NU_Q = AprioriMeasure(1.0, 64)


def quadratic_state(seed, nu=NU_Q):
    sd = power_iteration(P.quadratic(), L_Q, nu, GridSpec(1, None, 33))
    # 50 chains x 2000 steps = 10^5 post burn-in states
    meas = T.run_gibbs_chain(sd, 2000, 200, np.random.default_rng(seed), chains=50)
    return sd, meas


def test_criterion_2_variational_principle(report):
    t0 = time.perf_counter()
    sd, meas = quadratic_state(2024)
    er = T.entropy(sd, meas, rng=1)
    pr = T.pressure_check(sd, meas, er)
    pi = T.stationary_node_law(T.node_transition_matrix(sd))
    tv = T.total_variation(T.node_histogram(meas, NU_Q.nodes), pi)
    passed = pr.residual < 3 * pr.combined_stderr + 1e-12 and tv < 0.05 and meas.size >= 10 ** 5
    elapsed = time.perf_counter() - t0
    assert report(2, passed, elapsed, 120,
                  f"|log lam - (h+intA)|={pr.residual:.2e} 3se={3 * pr.combined_stderr:.2e} "
                  f"h_dict[{er.best_member}]={er.h_dictionary:.4f} TV={tv:.4f}")


# -- 3. fixed-point example ---------------------------------------------------

def test_criterion_3_fixed_point_suite(report):
    t0 = time.perf_counter()
    checks = verify.check_fixed_point_example(seed=3, samples=10_000, calib_points=100)
    elapsed = time.perf_counter() - t0
    detail = "; ".join(f"{c.name.split(': ')[1]}={c.value:.1e}" for c in checks)
    assert report(3, all(c.passed for c in checks), elapsed, 60, detail)


# -- 4. period-two example ----------------------------------------------------

def test_criterion_4_period_two(report):
    t0 = time.perf_counter()
    N, c0, c1 = 40, 2, 3
    space, L, v, w = verify.period_two_example(N, c0, c1)
    ev, ew = verify.exact_period_two(N, c0, c1)
    # exact rational images under the (integer) weights
    alpha = [Fraction(int(a)) for a in L.alpha]

    def apply_exact(x):
        return [alpha[i] * x[i + 1] for i in range(N - 1)] + [Fraction(0)]

    exact = apply_exact(ev)[: N - 1] == ew[: N - 1] and apply_exact(apply_exact(ev))[: N - 2] == ev[: N - 2]
    rounded = v.coords.tolist() == [float(f) for f in ev]
    B = P.two_point(v, w, space, "hat")
    rep = E.m_periodic(B, L, 2, E.MultistartSpec(starts=8, seeds={2: [[1.0, 0.0]]}, seed=4))
    orb = rep.best_orbit
    on_vw = (orb.period == 2 and np.max(np.abs(orb.orbit[0] - v.coords)) <= 1e-12
             and np.max(np.abs(orb.orbit[1] - w.coords)) <= 1e-12)
    passed = exact and rounded and abs(rep.m_estimate) <= 1e-8 and on_vw
    elapsed = time.perf_counter() - t0
    assert report(4, passed, elapsed, 30,
                  f"exact L(v)=w, L^2 v=v: {exact}; m={rep.m_estimate:.1e}; orbit {{v,w}}: {on_vw}")


# -- 5. zero-temperature sweep ------------------------------------------------

def test_criterion_5_zero_temperature(report):
    t0 = time.perf_counter()
    N = 20
    space = SpaceSpec.lp(1, N)
    L = ShiftOperator(WeightSequence.constant(2.0, N), space)
    v = L.periodic_point([1.0], 1).point
    A = P.neg_dist(v, space, depth=2)
    # large t concentrates exp(tA) dnu: a fine composite rule resolves the peak
    nu = AprioriMeasure(1.0, 801, "composite", span=8)
    ts = [1, 2, 4, 8, 16, 32, 50]
    sw = T.zero_temp_sweep(A, ts, L, nu, GridSpec(2, None, 33), T.ChainSpec(2000, 200, 50),
                           seed=1, candidate=v)
    ms = E.m_spectral(sw)
    mp = E.m_periodic(A, L, 2, E.MultistartSpec(starts=8, seed=5)).m_estimate
    viol = sw.monotone_violations(2.0)
    conv = float(np.min(sw.convexity_defects()))
    gap = abs(ms.m_estimate - mp)
    passed = not sw.failures and not viol and gap <= 1e-2 and conv >= -1e-6
    elapsed = time.perf_counter() - t0
    assert report(5, passed, elapsed, 600,
                  f"int A: {np.round(sw.int_A, 4).tolist()} violations={viol}; "
                  f"m_spectral={ms.m_estimate:.4f} m_periodic={mp:.1e} gap={gap:.4f}; "
                  f"min convexity={conv:.2e}")


# -- 6. Mane potential ----------------------------------------------------------

def test_criterion_6_mane(report):
    t0 = time.perf_counter()
    N, n_max = 80, 40
    space, L, V, A = verify.fixed_point_example(N)
    v = V.coords
    eps = np.logspace(0, -8, 9)
    rng = np.random.default_rng(6)
    k = np.arange(N)
    xs = [v] + [v + rng.uniform(-1, 1, N) * 0.5 * 4.0 ** -k for _ in range(9)]
    ys = [v + rng.uniform(-1, 1, N) * 0.5 * 2.0 ** -k for _ in range(5)]
    phi = np.empty((len(xs), len(ys)))
    for i, j in itertools.product(range(len(xs)), range(len(ys))):
        phi[i, j] = E.mane_potential(A, 0.0, xs[i], ys[j], L, n_max, eps, starts=2,
                                     rng=np.random.default_rng(100 * i + j)).value
    diag = E.mane_potential(A, 0.0, v, v, L, n_max, eps).value
    pairs = [(xs[i], ys[j]) for i in range(len(xs)) for j in range(len(ys))]
    upper = float(np.nanmax(np.where(np.isfinite(phi), phi, np.nan)))
    excess = E.mane_vs_subaction_check(A, phi.reshape(-1).tolist(), pairs)
    hol_bound = A.holder_constant * float(np.sum(L.dn_table ** -A.holder_alpha))
    ratios = []
    for i in range(len(xs)):
        for a, b in itertools.combinations(range(len(ys)), 2):
            if np.isfinite(phi[i, a]) and np.isfinite(phi[i, b]):
                d = float(space.norm(ys[a] - ys[b])) ** A.holder_alpha
                ratios.append(abs(phi[i, a] - phi[i, b]) / d)
    hol = max(ratios)
    feasible = int(np.isfinite(phi).sum())
    passed = (upper <= 1e-8 and abs(diag) <= 1e-10 and hol <= hol_bound + 1e-6
              and excess <= 1e-6 and feasible == phi.size)
    elapsed = time.perf_counter() - t0
    assert report(6, passed, elapsed, 300,
                  f"{phi.size} pairs ({feasible} feasible): max phi={upper:.1e}, "
                  f"phi(v,v)={diag:.1e}, Holder ratio {hol:.3f} <= {hol_bound:.3f}, "
                  f"max phi-(V(y)-V(x))={excess:.1e}")


# -- 7. Gibbs cylinder inequality ----------------------------------------------

def test_criterion_7_gibbs_cylinders(report):
    t0 = time.perf_counter()
    # chain states sit on quadrature nodes; a fine composite rule puts many
    # nodes in every cylinder
    sd, meas = quadratic_state(7, AprioriMeasure(1.0, 801, "composite", span=8))
    edges = np.linspace(-1.5, 1.5, 11)
    reps = []
    for a, b in zip(edges[:-1], edges[1:]):
        xt = np.zeros(N_Q)
        xt[0] = 0.5 * (a + b)
        reps.append(T.gibbs_cylinder_check(sd, meas, [[a, b]], xt, rng=0))
    worst = max(r.ratio / r.bound_C for r in reps)
    passed = all(r.holds and not r.inconclusive for r in reps) and len(reps) == 10
    elapsed = time.perf_counter() - t0
    assert report(7, passed, elapsed, 120,
                  f"10 cylinders, max ratio/C={worst:.3f}, "
                  f"min hits={min(r.hits for r in reps)}, osc log psi={reps[0].oscillation:.1e}")


# -- 8. chaos criterion ---------------------------------------------------------

def test_criterion_8_chaos(report):
    t0 = time.perf_counter()
    N = 60
    L = ShiftOperator(WeightSequence.constant(2.0, N), SpaceSpec.sup(N))
    n = np.arange(1, N)
    exact_dn = L.dn_table.tolist() == [2.0 ** j for j in n]
    rep = L.chaos_criterion(1.0)
    err = float(np.max(np.abs(rep.partial_sums - (1 - 2.0 ** -n))))
    passed = exact_dn and err <= 1e-12 and rep.verdict == "converges"
    elapsed = time.perf_counter() - t0
    assert report(8, passed, elapsed, 1,
                  f"d_n = 2^n exactly: {exact_dn}; partial-sum error={err:.1e}; "
                  f"verdict={rep.verdict}")


# -- 9. strong adapted tails ----------------------------------------------------

def test_criterion_9_adapted_tails(report):
    t0 = time.perf_counter()
    rep = adapted_tails(0.1, 2.0 ** np.arange(1, 60), sigma=1.0)
    passed = rep.verdict == "holds" and rep.tail_sum < 0.1 and np.isfinite(rep.l1_sum)
    elapsed = time.perf_counter() - t0
    assert report(9, passed, elapsed, 1,
                  f"tail_sum={rep.tail_sum:.4f} < 0.1; sum kappa={rep.l1_sum:.4f}; "
                  f"verdict={rep.verdict}")
