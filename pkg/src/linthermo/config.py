"""Experiment configuration: one JSON document per experiment."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .apriori import AprioriMeasure
from .ergopt import DEFAULT_EPS, MultistartSpec
from .grid import GridSpec
from .potentials import REGISTRY, Potential, build_potential
from .shift import ShiftOperator, WeightSequence
from .space import SpaceSpec, TruncatedVector
from .thermo import ChainSpec

DEFAULT_T = (1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 50.0)
NAMED_VECTORS = ("fixed_point", "period2_v", "period2_w", "zero")


class ConfigError(ValueError):
    """Invalid configuration; ``path`` names the offending segment."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message

    def to_dict(self) -> dict:
        return {"error": "config", "path": self.path, "message": self.message}


def _section(cfg: dict, key: str, required: bool = False) -> dict:
    if key not in cfg:
        if required:
            raise ConfigError(key, "missing section")
        return {}
    sec = cfg[key]
    if not isinstance(sec, dict):
        raise ConfigError(key, "must be an object")
    return sec


def _number(sec: dict, key: str, path: str, default=None, cast=float, positive=False):
    if key not in sec:
        if default is None:
            raise ConfigError(f"{path}.{key}", "missing value")
        return default
    try:
        val = cast(sec[key])
    except (TypeError, ValueError):
        raise ConfigError(f"{path}.{key}", f"expected a number, got {sec[key]!r}") from None
    if positive and not val > 0:
        raise ConfigError(f"{path}.{key}", "must be > 0")
    return val


@dataclass
class Experiment:
    """Validated, fully built objects for one run."""

    raw: dict
    seed: int
    space: SpaceSpec
    L: ShiftOperator
    A: Potential
    nu: AprioriMeasure
    grid: GridSpec
    tol: float
    max_iter: int
    chain: ChainSpec
    t_grid: tuple
    maximize: dict
    mane: dict
    chaos: dict
    cylinders: dict
    output_dir: str | None
    vectors: dict = field(default_factory=dict)

    def vector(self, spec, path: str) -> np.ndarray:
        return resolve_vector(spec, self.L, path)


def resolve_vector(spec, L: ShiftOperator, path: str) -> np.ndarray:
    """A list of leading coordinates or one of the named example points."""
    if isinstance(spec, str):
        if spec == "fixed_point":
            return L.periodic_point([1.0], 1).point.coords.copy()
        if spec in ("period2_v", "period2_w"):
            v = L.periodic_point([1.0, 0.0], 2).point
            return (v if spec == "period2_v" else L.apply(v)).coords.copy()
        if spec == "zero":
            return np.zeros(L.N)
        raise ConfigError(path, f"unknown named vector {spec!r} (known: {NAMED_VECTORS})")
    try:
        return TruncatedVector.from_head(spec, L.space).coords.copy()
    except (TypeError, ValueError) as exc:
        raise ConfigError(path, str(exc)) from None


def _resolve_params(params: dict, L: ShiftOperator, path: str) -> dict:
    out = {}
    for k, val in params.items():
        if k in ("v", "w"):
            out[k] = resolve_vector(val, L, f"{path}.{k}")
        else:
            out[k] = val
    return out


def parse_config(cfg: dict, seed_override: int | None = None) -> Experiment:
    if not isinstance(cfg, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    seed = seed_override if seed_override is not None else cfg.get("seed")
    if seed is None:
        raise ConfigError("seed", "missing (reproducibility requires a seed)")
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
        raise ConfigError("seed", f"expected an unsigned 64-bit integer, got {seed!r}")

    sp = _section(cfg, "space", required=True)
    kind = sp.get("norm_kind", "sup")
    N = _number(sp, "truncation_dim", "space", cast=int)
    try:
        space = SpaceSpec(kind, N, float(sp["p"]) if "p" in sp else None)
    except (ValueError, TypeError) as exc:
        raise ConfigError("space", str(exc)) from None

    w = _section(cfg, "weights", required=True)
    try:
        weights = WeightSequence.from_config(w, N)
    except KeyError as exc:
        raise ConfigError(f"weights.{exc.args[0]}", "missing value") from None
    except (ValueError, TypeError) as exc:
        raise ConfigError("weights", str(exc)) from None
    L = ShiftOperator(weights, space)

    pot = _section(cfg, "potential", required=True)
    pkind = pot.get("kind")
    if pkind not in REGISTRY:
        raise ConfigError("potential.kind", f"unknown potential {pkind!r} "
                                            f"(known: {sorted(REGISTRY)})")
    params = pot.get("parameters", {})
    if not isinstance(params, dict):
        raise ConfigError("potential.parameters", "must be an object")
    params = _resolve_params(params, L, "potential.parameters")
    try:
        A = build_potential(pkind, space, params, pot.get("alpha"))
    except TypeError as exc:
        raise ConfigError("potential.parameters", str(exc)) from None
    except (ValueError, KeyError) as exc:
        raise ConfigError("potential", str(exc)) from None

    ap = _section(cfg, "apriori")
    try:
        nu = AprioriMeasure(_number(ap, "sigma", "apriori", 1.0, positive=True),
                            _number(ap, "quad_order", "apriori", 64, int, True),
                            ap.get("quadrature", "gauss_hermite"),
                            _number(ap, "span", "apriori", 8.0, positive=True))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("apriori", str(exc)) from None

    gr = _section(cfg, "grid")
    try:
        grid = GridSpec(_number(gr, "depth", "grid", 1, int),
                        None if gr.get("box_radius") is None
                        else _number(gr, "box_radius", "grid", positive=True),
                        _number(gr, "resolution", "grid", 33, int))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("grid", str(exc)) from None
    if grid.depth > N - 1:
        raise ConfigError("grid.depth", f"must be <= N-1 = {N - 1}")

    pw = _section(cfg, "power")
    tol = _number(pw, "tol", "power", 1e-9, positive=True)
    max_iter = _number(pw, "max_iter", "power", 10_000, int, True)

    ch = _section(cfg, "chain")
    chain = ChainSpec(_number(ch, "steps", "chain", 2000, int, True),
                      _number(ch, "burn_in", "chain", 200, int),
                      _number(ch, "chains", "chain", 50, int, True))

    swp = _section(cfg, "sweep")
    t_grid = tuple(float(t) for t in swp.get("t", DEFAULT_T))
    if len(t_grid) < 1 or any(b <= a for a, b in zip(t_grid, t_grid[1:])):
        raise ConfigError("sweep.t", "must be a strictly increasing list")

    mx = dict(_section(cfg, "maximize"))
    mx.setdefault("k_max", 2)
    if not 1 <= int(mx["k_max"]) <= N / 2:
        raise ConfigError("maximize.k_max", f"must lie in 1..{N // 2}")

    mn = dict(_section(cfg, "mane"))
    mn.setdefault("n_max", min(40, N - 1))
    mn.setdefault("eps", list(DEFAULT_EPS))
    if not 1 <= int(mn["n_max"]) <= N - 1:
        raise ConfigError("mane.n_max", f"must lie in 1..{N - 1}")

    chaos = dict(_section(cfg, "chaos"))
    cyl = dict(_section(cfg, "cylinders"))
    out = _section(cfg, "output").get("dir")
    return Experiment(cfg, int(seed), space, L, A, nu, grid, tol, max_iter, chain,
                      t_grid, mx, mn, chaos, cyl, out)


def multistart_from(mx: dict, seed: int) -> MultistartSpec:
    seeds = {int(k): v for k, v in mx.get("seeds", {}).items()}
    return MultistartSpec(int(mx.get("starts", 16)), float(mx.get("scale", 2.0)),
                          seeds, seed=seed)


def load_config(path, seed_override: int | None = None) -> Experiment:
    p = Path(path)
    try:
        cfg = json.loads(p.read_text())
    except FileNotFoundError:
        raise ConfigError("<file>", f"config file {str(p)!r} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"invalid JSON: {exc}") from None
    return parse_config(cfg, seed_override)
