"""Command line runner: ``linthermo <subcommand> --config <path> [--out DIR] [--seed N]``."""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, ergopt, thermo, verify
from .apriori import adapted_tails
from .config import ConfigError, Experiment, load_config, multistart_from
from .potentials import summability_check
from .report import OutputDir, dumps
from .space import random_vectors
from .transfer import check_normalized, power_iteration

log = logging.getLogger("linthermo")

OUT_ENV = "LINTHERMO_OUT"
SUBCOMMANDS = ("spectrum", "gibbs", "sweep", "mane", "maximize", "chaos", "verify-examples")


def _spectral(exp: Experiment):
    return power_iteration(exp.A, exp.L, exp.nu, exp.grid, exp.tol, exp.max_iter)


def _psi_outputs(out: OutputDir, sd):
    pts = sd.psi.points()
    header = [f"x{k + 1}" for k in range(pts.shape[1])] + ["psi"]
    out.table("psi", header, (list(p) + [v] for p, v in zip(pts, sd.psi.flat)))
    # slice along x1 with the other coordinates at the box center
    mid = sd.psi.resolution // 2
    idx = (slice(None),) + (mid,) * (sd.psi.depth - 1)
    out.plot("psi_slice", sd.psi.axis, {"psi": sd.psi.values[idx]}, "x1", "psi",
             "eigenfunction slice")


def cmd_spectrum(exp: Experiment, out: OutputDir) -> dict:
    sd = _spectral(exp)
    rng = np.random.default_rng(exp.seed)
    grid_pts = np.zeros((sd.psi.size, exp.L.N))
    grid_pts[:, : sd.psi.depth] = sd.psi.points()
    Abar = sd.normalized_potential
    inner = random_vectors(exp.space, 200, sd.psi.box_radius / 2, rng, decay=0.5)
    flat = inner.copy()
    flat[:, sd.psi.depth:] = 0.0
    _psi_outputs(out, sd)
    # off-grid defect is interpolation error; full-vector defect adds the
    # error of projecting A onto the grid depth
    return {"spectral": sd.to_dict(),
            "normalization_defect_grid": check_normalized(Abar, exp.L, exp.nu, grid_pts),
            "normalization_defect_off_grid": check_normalized(Abar, exp.L, exp.nu, flat),
            "normalization_defect_full_vectors": check_normalized(Abar, exp.L, exp.nu, inner)}


def _default_cylinders(exp: Experiment, sd) -> list:
    R = min(sd.psi.box_radius, 3.0 * exp.nu.sigma)
    edges = np.linspace(-R, R, 11)
    return [[[float(a), float(b)]] for a, b in zip(edges[:-1], edges[1:])]


def cmd_gibbs(exp: Experiment, out: OutputDir) -> dict:
    sd = _spectral(exp)
    rng = np.random.default_rng(exp.seed)
    cs = exp.chain
    meas = thermo.run_gibbs_chain(sd, cs.steps, cs.burn_in, rng, cs.chains, seed=exp.seed)
    er = thermo.entropy(sd, meas, rng=rng)
    pr = thermo.pressure_check(sd, meas, er)
    cyls = exp.cylinders.get("intervals") or _default_cylinders(exp, sd)
    reports = []
    for iv in cyls:
        iv = np.asarray(iv, dtype=float).reshape(-1, 2)
        xt = np.zeros(exp.L.N)
        xt[: iv.shape[0]] = iv.mean(axis=1)
        reports.append(thermo.gibbs_cylinder_check(sd, meas, iv, xt, rng=rng))
    out.table("cylinders", ["intervals", "mu", "mu_stderr", "hits", "ratio", "bound_C",
                            "holds", "inconclusive"],
              ([json.dumps(r.intervals), r.mu, r.mu_stderr, r.hits, r.ratio, r.bound_C,
                r.holds, r.inconclusive] for r in reports))
    x1 = meas.samples[:, 0]
    hist, edges = np.histogram(x1, bins=41, range=(-4 * exp.nu.sigma, 4 * exp.nu.sigma),
                               density=True)
    out.plot("x1_histogram", 0.5 * (edges[1:] + edges[:-1]), {"density": hist},
             "x1", "density", "first coordinate under the Gibbs state", kind="bar")
    _psi_outputs(out, sd)
    return {"spectral": sd.to_dict(), "chain": cs.to_dict(), "entropy": er.to_dict(),
            "pressure": pr.to_dict(), "cylinders": [r.to_dict() for r in reports],
            "all_cylinders_hold": all(r.holds for r in reports)}


def cmd_sweep(exp: Experiment, out: OutputDir) -> dict:
    if exp.A.upper_bound is None:
        log.warning("potential has no known upper bound")
    summ = summability_check(exp.A, 1, 20, exp.space, np.random.default_rng(exp.seed))
    if summ.verdict != "converging":
        log.warning("summability check: %s", summ.verdict)
    cand = exp.mane.get("candidate") or exp.raw.get("sweep", {}).get("candidate")
    cand_vec = exp.vector(cand, "sweep.candidate") if cand is not None else None
    sw = thermo.zero_temp_sweep(exp.A, exp.t_grid, exp.L, exp.nu, exp.grid, exp.chain,
                                exp.seed, cand_vec, tol=exp.tol, max_iter=exp.max_iter)
    rows = sw.rows()
    out.table("sweep", list(rows[0]), ([r[k] for k in rows[0]] for r in rows))
    out.plot("log_lambda_over_t", sw.t, {"log_lambda_over_t": sw.log_lambda_over_t},
             "t", "log(lambda_t)/t", logx=True)
    out.plot("int_A", sw.t, {"int_A": sw.int_A}, "t", "int A dmu_t", logx=True)
    summary = {"rows": rows, "failures": sw.failures,
               "monotone_violations": sw.monotone_violations(),
               "convexity_defect_min": float(np.min(sw.convexity_defects()))
               if sw.t.size >= 3 else None,
               "summability": summ.to_dict()}
    if np.isfinite(sw.log_lambda).sum() >= 3:
        summary["m_spectral"] = ergopt.m_spectral(sw).to_dict()
    return summary


def _m_value(exp: Experiment):
    m = exp.mane.get("m", "periodic")
    if isinstance(m, (int, float)):
        return float(m), None
    if m != "periodic":
        raise ConfigError("mane.m", "expected a number or 'periodic'")
    rep = ergopt.m_periodic(exp.A, exp.L, int(exp.maximize["k_max"]),
                            multistart_from(exp.maximize, exp.seed))
    return rep.m_estimate, rep


def cmd_mane(exp: Experiment, out: OutputDir) -> dict:
    m, rep = _m_value(exp)
    mn = exp.mane
    rng = np.random.default_rng(exp.seed)
    x0 = exp.vector(mn.get("x", "fixed_point"), "mane.x")
    center = exp.vector(mn.get("center", "fixed_point"), "mane.center")
    pairs_n = int(mn.get("pairs", 5))
    xs = [x0] + list(random_vectors(exp.space, pairs_n - 1, float(mn.get("x_radius", 1.0)),
                                    rng, decay=0.25, center=center))
    ys = random_vectors(exp.space, pairs_n, float(mn.get("y_radius", 1.0)), rng,
                        decay=0.5, center=center)
    evals, pairs = [], []
    for x, y in zip(xs, ys):
        ev = ergopt.mane_potential(exp.A, m, x, y, exp.L, int(mn["n_max"]), mn["eps"],
                                   int(mn.get("starts", 4)), int(mn.get("max_opt_dim", 3)),
                                   rng)
        evals.append(ev)
        pairs.append((x, y))
    vals = [e.value for e in evals]
    # a known sub-action to compare against; "potential" means V = A
    sub = mn.get("subaction")
    if sub not in (None, "potential"):
        raise ConfigError("mane.subaction", "expected 'potential' or null")
    V = exp.A if sub == "potential" else None
    violation = defect_min = None
    if V is not None:
        violation = ergopt.mane_vs_subaction_check(V, vals, pairs)
        X = random_vectors(exp.space, 1000, 10.0, rng)
        defect_min = float(np.min(ergopt.subaction_defect(V, exp.A, m, X, exp.L)))
    out.table("mane_pairs", ["pair", "phi", "best_n", "V(y)-V(x)", "stabilized"],
              ([i, e.value, e.best_n, float(V(y) - V(x)) if V is not None else "", e.stabilized]
               for i, (e, (x, y)) in enumerate(zip(evals, pairs))))
    first = evals[0]
    out.table("mane_table_pair0", ["n"] + [f"eps={e:g}" for e in first.eps],
              ([int(n)] + list(row) for n, row in zip(first.horizons, first.table)))
    col = first.table[:, -1]
    ok = np.isfinite(col)
    if ok.any():
        out.plot("mane_pair0_by_n", first.horizons[ok], {"S_n": col[ok]}, "n",
                 "best S_n(A - m) at smallest eps")
    return {"m": m, "m_report": rep.to_dict() if rep else None,
            "values": vals, "max_violation_vs_subaction": violation,
            "subaction_defect_min": defect_min,
            "evaluations": [e.to_dict() for e in evals]}


def cmd_maximize(exp: Experiment, out: OutputDir) -> dict:
    rep = ergopt.m_periodic(exp.A, exp.L, int(exp.maximize["k_max"]),
                            multistart_from(exp.maximize, exp.seed))
    out.table("per_period", ["period", "value", "head"],
              ([k, v["value"], json.dumps(v["head"])] for k, v in rep.per_period.items()))
    out.table("best_orbit", [f"x{k + 1}" for k in range(exp.L.N)], rep.best_orbit.orbit)
    ks = sorted(rep.per_period)
    out.plot("periodic_means", ks, {"best mean": [rep.per_period[k]["value"] for k in ks]},
             "period k", "(1/k) S_k A")
    summary = {"m_periodic": rep.to_dict()}
    if exp.maximize.get("spectral"):
        sw = thermo.zero_temp_sweep(exp.A, exp.t_grid, exp.L, exp.nu, exp.grid, exp.chain,
                                    exp.seed, tol=exp.tol, max_iter=exp.max_iter)
        ms = ergopt.m_spectral(sw)
        summary["m_spectral"] = ms.to_dict()
        summary["estimators_gap"] = abs(ms.m_estimate - rep.m_estimate)
    return summary


def cmd_chaos(exp: Experiment, out: OutputDir) -> dict:
    ch = exp.chaos
    rep = exp.L.chaos_criterion(float(ch.get("exponent", 1.0)), ch.get("n_max"))
    tails = adapted_tails(float(ch.get("epsilon", 0.1)), exp.L.dn_table, ch.get("n_max"),
                          exp.nu.sigma)
    n = np.arange(1, rep.n_max + 1)
    out.table("dn", ["n", "d_n", "term", "partial_sum", "kappa"],
              zip(n, exp.L.dn_table[: rep.n_max], rep.terms, rep.partial_sums,
                  tails.kappa[: rep.n_max]))
    out.plot("partial_sums", n, {"partial sum": rep.partial_sums}, "n",
             "sum of d_n^-alpha")
    return {"chaos": rep.to_dict(), "adapted_tails": tails.to_dict()}


def cmd_verify(exp: Experiment | None, out: OutputDir, seed: int) -> dict:
    checks = verify.run_examples(seed)
    out.table("checks", ["name", "passed", "value", "tolerance"],
              ([c.name, c.passed, c.value, c.tolerance] for c in checks))
    return {"checks": [c.to_dict() for c in checks],
            "all_passed": all(c.passed for c in checks)}


HANDLERS = {"spectrum": cmd_spectrum, "gibbs": cmd_gibbs, "sweep": cmd_sweep,
            "mane": cmd_mane, "maximize": cmd_maximize, "chaos": cmd_chaos}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="linthermo", description=__doc__)
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", help="experiment JSON (optional for verify-examples)")
    p.add_argument("--out", help=f"output directory (else ${OUT_ENV}, else config output.dir)")
    p.add_argument("--seed", type=int, help="overrides the config seed")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _fail(payload: dict, code: int = 2) -> int:
    sys.stdout.write(dumps(payload))
    return code


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    started = time.time()
    exp = None
    try:
        if args.config is not None:
            exp = load_config(args.config, args.seed)
        elif args.subcommand != "verify-examples":
            raise ConfigError("--config", "required for this subcommand")
        elif args.seed is None:
            raise ConfigError("seed", "missing (pass --seed or a config)")
    except ConfigError as exc:
        return _fail(exc.to_dict())
    out_dir = args.out or os.environ.get(OUT_ENV) or (exp.output_dir if exp else None) \
        or "linthermo_out"
    out = OutputDir(out_dir)
    seed = exp.seed if exp is not None else int(args.seed)
    try:
        if args.subcommand == "verify-examples":
            summary = cmd_verify(exp, out, seed)
            ok = summary["all_passed"]
        else:
            summary = HANDLERS[args.subcommand](exp, out)
            ok = True
    except ConfigError as exc:
        return _fail(exc.to_dict())
    except Exception as exc:  # reported as machine-readable JSON
        log.debug("failure", exc_info=True)
        return _fail({"error": type(exc).__name__, "message": str(exc),
                      "subcommand": args.subcommand}, 1)
    summary = {"subcommand": args.subcommand, "seed": seed,
               "config": exp.raw if exp else None, "result": summary}
    out.json("summary.json", summary)
    out.json("meta.json", {
        "started": _dt.datetime.fromtimestamp(started, _dt.timezone.utc).isoformat(),
        "elapsed_seconds": time.time() - started,
        "version": __version__, "python": platform.python_version(),
        "numpy": np.__version__, "argv": list(argv) if argv is not None else sys.argv[1:],
        "output_dir": str(Path(out_dir).resolve())})
    return 0 if ok else 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
