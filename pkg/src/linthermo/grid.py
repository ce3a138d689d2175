"""Cylinder functions on a tensor grid with clamped multilinear interpolation."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    """Depth M, box half-width R and G nodes per axis.

    ``box_radius=None`` is resolved by the transfer module from the a priori
    scale and the weights.
    """

    depth: int = 1
    box_radius: float | None = None
    resolution: int = 33

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("grid depth must be >= 1")
        if self.resolution < 2:
            raise ValueError("grid resolution must be >= 2")
        if self.box_radius is not None and not self.box_radius > 0:
            raise ValueError("box_radius must be > 0")

    def to_dict(self) -> dict:
        return {"depth": self.depth, "box_radius": self.box_radius,
                "resolution": self.resolution}


class FunctionGrid:
    """A function of the first M coordinates sampled on [-R, R]^M.

    ``values`` has shape ``(G,) * M`` with axis k holding coordinate k+1.
    Off-grid queries use multilinear interpolation; queries outside the box
    are clamped to its boundary.
    """

    def __init__(self, depth: int, box_radius: float, resolution: int, values=None):
        self.depth = int(depth)
        self.box_radius = float(box_radius)
        self.resolution = int(resolution)
        self.axis = np.linspace(-self.box_radius, self.box_radius, self.resolution)
        self.spacing = 2 * self.box_radius / (self.resolution - 1)
        shape = (self.resolution,) * self.depth
        if values is None:
            values = np.ones(shape)
        values = np.asarray(values, dtype=float).reshape(shape)
        if not np.all(np.isfinite(values)):
            raise ValueError("grid values must be finite")
        self.values = values

    @classmethod
    def like(cls, other: "FunctionGrid", values) -> "FunctionGrid":
        return cls(other.depth, other.box_radius, other.resolution, values)

    @property
    def size(self) -> int:
        return self.resolution ** self.depth

    @property
    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    def points(self) -> np.ndarray:
        """All grid points, shape (G^M, M), in the C order of ``flat``."""
        mesh = np.meshgrid(*([self.axis] * self.depth), indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=-1)

    def stencil(self, Xq):
        """Flat node indices and weights for multilinear interpolation.

        Returns ``(idx, wts, clamped)`` with ``idx``/``wts`` of shape
        ``(..., 2^M)`` and ``clamped`` a boolean array marking queries that
        fell outside the box.
        """
        Xq = np.asarray(Xq, dtype=float)[..., : self.depth]
        R, h, G = self.box_radius, self.spacing, self.resolution
        clamped = np.any(np.abs(Xq) > R, axis=-1)
        u = (np.clip(Xq, -R, R) + R) / h
        i0 = np.clip(np.floor(u).astype(np.int64), 0, G - 2)
        f = u - i0
        lead = Xq.shape[:-1]
        idx = np.zeros(lead + (2 ** self.depth,), dtype=np.int64)
        wts = np.ones(lead + (2 ** self.depth,))
        for c, corner in enumerate(product((0, 1), repeat=self.depth)):
            flat = np.zeros(lead, dtype=np.int64)
            w = np.ones(lead)
            for k, bit in enumerate(corner):
                flat = flat * G + i0[..., k] + bit
                w = w * (f[..., k] if bit else 1.0 - f[..., k])
            idx[..., c] = flat
            wts[..., c] = w
        return idx, wts, clamped

    def __call__(self, Xq) -> np.ndarray:
        idx, wts, _ = self.stencil(Xq)
        return np.sum(self.flat[idx] * wts, axis=-1)

    def to_dict(self, include_values: bool = True) -> dict:
        d = {"depth": self.depth, "box_radius": self.box_radius,
             "resolution": self.resolution}
        if include_values:
            d["values"] = [float(v) for v in self.flat]
        return d
