"""Tensor grids over the reduced variables (r_1, ..., r_m) and quadrature of
full-space integrals of block-radial integrands.

A block-radial integrand satisfies

    int_{R^N} f dx = A_gamma * int_{(0,inf)^m} f(r) prod r_i^{gamma_i - 1} dr,

with A_gamma = prod |S^{gamma_i - 1}|.  Every grid stores, per axis, the
nodal measure ``measure[i][k]`` which already contains the quadrature weight
and the Jacobian factor r^{gamma_i - 1}, so that integration is a plain
weighted sum.

Two spacings are supported:

``log``
    Nodes uniform in s = log r on [r_min, r_max] (both ends included),
    trapezoid rule in s.  The end layers carry the Dirichlet condition.
    This is the working grid for functionals and eigenproblems.
``volume``
    Nodes at the midpoints of a uniform partition of v = r^gamma_i / gamma_i
    over [r_min, r_max] (r_min = 0 allowed).  Every node of an axis has the
    same measure, which makes discrete rearrangement exactly equimeasurable.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .blockgeom import BlockDecomposition, sphere_area
from .errors import DomainError, MemoryGuardError

__all__ = ["ReducedGrid", "build_grid", "integrate", "refine", "MAX_NODES", "MAX_BLOCKS"]

MAX_NODES = 4_000_000
MAX_BLOCKS = 3
MIN_NODES = 8
SPACINGS = ("log", "volume")


@dataclass(frozen=True)
class ReducedGrid:
    decomp: BlockDecomposition
    r_min: float
    r_max: float
    nodes_per_axis: int
    spacing: str = "log"
    axes: tuple = field(init=False, repr=False, compare=False)
    measure: tuple = field(init=False, repr=False, compare=False)
    half_mass: tuple = field(init=False, repr=False, compare=False)
    angular_constant: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n, m = int(self.nodes_per_axis), self.decomp.m
        if self.spacing not in SPACINGS:
            raise DomainError(f"unknown spacing {self.spacing!r}")
        lo_ok = self.r_min >= 0 if self.spacing == "volume" else self.r_min > 0
        if not (lo_ok and self.r_max > self.r_min and math.isfinite(self.r_max)):
            raise DomainError(f"invalid radial range [{self.r_min}, {self.r_max}]")
        if n < MIN_NODES:
            raise DomainError(f"need at least {MIN_NODES} nodes per axis, got {n}")
        if m > MAX_BLOCKS or n**m > MAX_NODES:
            raise MemoryGuardError(
                f"{n}^{m} = {n**m} nodes exceeds the tensor-grid budget "
                f"(m <= {MAX_BLOCKS}, <= {MAX_NODES} nodes)"
            )
        object.__setattr__(self, "nodes_per_axis", n)
        object.__setattr__(self, "r_min", float(self.r_min))
        object.__setattr__(self, "r_max", float(self.r_max))

        axes, measure, half = [], [], []
        for g in self.decomp.gammas:
            if self.spacing == "log":
                s = np.linspace(math.log(self.r_min), math.log(self.r_max), n)
                h = s[1] - s[0]
                r = np.exp(s)
                r[0], r[-1] = self.r_min, self.r_max
                # trapezoid in s: int f r^{g-1} dr = int f r^g ds
                cell = 0.5 * h * r**g
                left, right = cell[:-1], cell[1:]
                mu = np.zeros(n)
                mu[:-1] += left
                mu[1:] += right
            else:
                v0, v1 = self.r_min**g / g, self.r_max**g / g
                hv = (v1 - v0) / n
                v = v0 + hv * (np.arange(n) + 0.5)
                r = (g * v) ** (1.0 / g)
                mu = np.full(n, hv)
                left = np.full(n - 1, 0.5 * hv)
                right = np.full(n - 1, 0.5 * hv)
            for a in (r, mu, left, right):
                a.flags.writeable = False
            axes.append(r)
            measure.append(mu)
            half.append((left, right))
        object.__setattr__(self, "axes", tuple(axes))
        object.__setattr__(self, "measure", tuple(measure))
        object.__setattr__(self, "half_mass", tuple(half))
        object.__setattr__(
            self, "angular_constant", math.prod(sphere_area(g) for g in self.decomp.gammas)
        )

    @property
    def m(self) -> int:
        return self.decomp.m

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.nodes_per_axis,) * self.m

    @property
    def size(self) -> int:
        return self.nodes_per_axis**self.m

    def mesh(self) -> list[np.ndarray]:
        """Broadcastable coordinate arrays, one per axis."""
        out = []
        for i, r in enumerate(self.axes):
            shp = [1] * self.m
            shp[i] = r.size
            out.append(r.reshape(shp))
        return out

    def node_measure(self) -> np.ndarray:
        """Full tensor of nodal measures (without the angular constant)."""
        out = np.ones(self.shape)
        for i, mu in enumerate(self.measure):
            shp = [1] * self.m
            shp[i] = mu.size
            out = out * mu.reshape(shp)
        return out

    def boundary_mask(self) -> np.ndarray:
        """True on nodes lying in an outermost layer of some axis."""
        mask = np.zeros(self.shape, dtype=bool)
        for i in range(self.m):
            idx = [slice(None)] * self.m
            idx[i] = 0
            mask[tuple(idx)] = True
            idx[i] = -1
            mask[tuple(idx)] = True
        return mask

    def spec(self) -> dict:
        return {
            "gammas": list(self.decomp.gammas),
            "r_min": self.r_min,
            "r_max": self.r_max,
            "nodes_per_axis": self.nodes_per_axis,
            "spacing": self.spacing,
        }

    def to_json(self) -> str:
        return json.dumps(self.spec(), sort_keys=True)

    @classmethod
    def from_spec(cls, spec: dict) -> "ReducedGrid":
        try:
            return build_grid(
                BlockDecomposition(tuple(spec["gammas"])),
                float(spec["r_min"]),
                float(spec["r_max"]),
                int(spec["nodes_per_axis"]),
                spec.get("spacing", "log"),
            )
        except (KeyError, TypeError) as exc:
            raise DomainError(f"malformed grid spec {spec!r}") from exc

    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:16]


def build_grid(
    decomp: BlockDecomposition,
    r_min: float,
    r_max: float,
    nodes_per_axis: int,
    spacing: str = "log",
) -> ReducedGrid:
    return ReducedGrid(decomp, r_min, r_max, nodes_per_axis, spacing)


def integrate(grid: ReducedGrid, node_values) -> float:
    """A_gamma * sum(measure * values) over the tensor grid.

    The sum runs over a contiguous flattened array, so numpy's pairwise
    summation is used and the result does not depend on any schedule.
    """
    vals = np.asarray(node_values, dtype=float)
    if vals.shape != grid.shape:
        raise DomainError(f"values have shape {vals.shape}, grid has {grid.shape}")
    if not np.all(np.isfinite(vals)):
        raise DomainError("non-finite node values")
    prod = np.ascontiguousarray(grid.node_measure() * vals).ravel()
    return grid.angular_constant * float(np.sum(prod))


def refine(grid: ReducedGrid) -> ReducedGrid:
    """Halve the spacing on every axis.

    Log grids keep their nodes (n -> 2n - 1); volume grids are cell-centred
    and simply double (n -> 2n).
    """
    n = grid.nodes_per_axis
    n_new = 2 * n - 1 if grid.spacing == "log" else 2 * n
    return build_grid(grid.decomp, grid.r_min, grid.r_max, n_new, grid.spacing)
