"""Truncated sequence spaces c0 and l^p.

A point of the space is stored through its first ``N`` Schauder coordinates
(the canonical basis ``e_k``). Everything downstream works on plain numpy
arrays whose last axis holds the coordinates; :class:`TruncatedVector` is the
immutable user-facing wrapper.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class SpaceSpec:
    """Norm and truncation depth of a sequence space.

    Parameters
    ----------
    norm_kind : {"sup", "lp"}
        ``"sup"`` for c0, ``"lp"`` for l^p.
    truncation_dim : int
        Number ``N`` of stored coordinates.
    p : float, optional
        Exponent of the l^p norm; required (and >= 1) when ``norm_kind="lp"``.
    """

    norm_kind: str
    truncation_dim: int
    p: float | None = None

    def __post_init__(self):
        if self.norm_kind not in ("sup", "lp"):
            raise ValueError(f"unknown norm_kind {self.norm_kind!r}")
        if int(self.truncation_dim) != self.truncation_dim or self.truncation_dim < 1:
            raise ValueError("truncation_dim must be an integer >= 1")
        if self.norm_kind == "lp":
            if self.p is None or not np.isfinite(self.p) or self.p < 1:
                raise ValueError("l^p spaces need a finite exponent p >= 1")
        elif self.p is not None:
            raise ValueError("sup norm takes no exponent")

    @classmethod
    def sup(cls, N: int) -> "SpaceSpec":
        return cls("sup", N)

    @classmethod
    def lp(cls, p: float, N: int) -> "SpaceSpec":
        return cls("lp", N, float(p))

    @property
    def N(self) -> int:
        return self.truncation_dim

    @property
    def label(self) -> str:
        if self.norm_kind == "sup":
            return f"c0[N={self.N}]"
        return f"l{self.p:g}[N={self.N}]"

    def norm(self, X) -> np.ndarray | float:
        """Norm along the last axis of an array of coordinates."""
        X = np.asarray(X, dtype=float)
        if X.shape[-1] == 0:
            return np.zeros(X.shape[:-1]) if X.ndim > 1 else 0.0
        if self.norm_kind == "sup":
            return np.max(np.abs(X), axis=-1)
        if self.p == 1:
            return np.sum(np.abs(X), axis=-1)
        if self.p == 2:
            return np.sqrt(np.sum(X * X, axis=-1))
        return np.sum(np.abs(X) ** self.p, axis=-1) ** (1.0 / self.p)

    def combine(self, a, b):
        """Norm of a vector split into two blocks with norms ``a`` and ``b``."""
        if self.norm_kind == "sup":
            return np.maximum(a, b)
        p = self.p
        return (np.asarray(a) ** p + np.asarray(b) ** p) ** (1.0 / p)

    def to_dict(self) -> dict:
        d = {"norm_kind": self.norm_kind, "truncation_dim": self.N}
        if self.p is not None:
            d["p"] = self.p
        return d


@dataclass(frozen=True, eq=False)
class TruncatedVector:
    """A point of X given by its first N coordinates.

    ``coords[k]`` is the (k+1)-th coordinate functional of the point. The array
    is copied and made read-only on construction.
    """

    coords: np.ndarray
    space: SpaceSpec = field(repr=False)

    def __post_init__(self):
        c = np.array(self.coords, dtype=float, copy=True).reshape(-1)
        if c.shape[0] != self.space.N:
            raise ValueError(
                f"expected {self.space.N} coordinates, got {c.shape[0]}")
        if not np.all(np.isfinite(c)):
            raise ValueError("coordinates must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @classmethod
    def from_head(cls, head: Sequence[float], space: SpaceSpec) -> "TruncatedVector":
        """Vector whose first coordinates are ``head`` and the rest zero."""
        head = np.asarray(head, dtype=float).reshape(-1)
        if head.shape[0] > space.N:
            raise ValueError("head longer than the truncation dimension")
        c = np.zeros(space.N)
        c[: head.shape[0]] = head
        return cls(c, space)

    @classmethod
    def zero(cls, space: SpaceSpec) -> "TruncatedVector":
        return cls(np.zeros(space.N), space)

    @classmethod
    def basis(cls, k: int, space: SpaceSpec) -> "TruncatedVector":
        """Canonical basis vector e_k (1-based)."""
        if not 1 <= k <= space.N:
            raise ValueError("basis index out of range")
        c = np.zeros(space.N)
        c[k - 1] = 1.0
        return cls(c, space)

    def __len__(self):
        return self.space.N

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coords, dtype=dtype)

    def _check(self, other: "TruncatedVector"):
        if not isinstance(other, TruncatedVector):
            return NotImplemented
        if other.space != self.space:
            raise ValueError(
                f"space mismatch: {self.space.label} vs {other.space.label}")
        return other

    def __add__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return TruncatedVector(self.coords + other.coords, self.space)

    def __sub__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return TruncatedVector(self.coords - other.coords, self.space)

    def __mul__(self, c):
        return TruncatedVector(float(c) * self.coords, self.space)

    __rmul__ = __mul__

    def __neg__(self):
        return TruncatedVector(-self.coords, self.space)

    def __eq__(self, other):
        if not isinstance(other, TruncatedVector):
            return NotImplemented
        return self.space == other.space and np.array_equal(self.coords, other.coords)

    def __hash__(self):
        return hash((self.space, self.coords.tobytes()))

    def tolist(self) -> list[float]:
        return [float(c) for c in self.coords]

    def to_csv_row(self) -> str:
        return ",".join(repr(float(c)) for c in self.coords)

    @classmethod
    def from_list(cls, values: Iterable[float], space: SpaceSpec) -> "TruncatedVector":
        return cls.from_head(list(values), space)


def _coords(v) -> np.ndarray:
    return v.coords if isinstance(v, TruncatedVector) else np.asarray(v, dtype=float)


def norm(v: TruncatedVector) -> float:
    return float(v.space.norm(v.coords))


def distance(u: TruncatedVector, v: TruncatedVector) -> float:
    if u.space != v.space:
        raise ValueError(f"space mismatch: {u.space.label} vs {v.space.label}")
    return float(u.space.norm(u.coords - v.coords))


def project_depth(v: TruncatedVector, M: int) -> TruncatedVector:
    """Zero every coordinate beyond the first ``M``."""
    if not 1 <= M <= v.space.N:
        raise ValueError(f"depth {M} outside 1..{v.space.N}")
    c = np.array(v.coords)
    c[M:] = 0.0
    return TruncatedVector(c, v.space)


def random_vectors(space: SpaceSpec, count: int, radius: float, rng,
                   decay: float = 1.0, center=None) -> np.ndarray:
    """Random coordinate arrays of shape ``(count, N)``.

    Coordinate ``k`` is uniform on ``[-radius, radius] * decay**(k-1)`` around
    ``center``. ``decay < 1`` gives the geometrically decaying tails for which
    truncation is harmless.
    """
    scale = radius * decay ** np.arange(space.N)
    X = rng.uniform(-1.0, 1.0, size=(count, space.N)) * scale
    if center is not None:
        X = X + _coords(center)
    return X
