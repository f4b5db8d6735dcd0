"""Discrete block-radial functions and the functionals of the Hardy, CKN and
Strauss-type inequalities.

Gradient norms use a cell-corner rule: on each cell of the tensor grid and
at each of its 2^m corners the gradient is formed from the one-sided
differences along the cell edges meeting that corner, and |grad u|^q is
integrated with the corner's share of the cell measure.  For q = 2 this is
exactly the quadratic form assembled in :mod:`cknlab.solve`, so discrete
eigenvalue bounds certify the functionals evaluated here.  The rule has no
checkerboard null space, unlike a collocated central-difference gradient.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .blockgeom import (
    BlockDecomposition,
    as_fraction,
    ckn_weight_exponent,
    weight_rgamma,
)
from .errors import DomainError
from .grid import ReducedGrid, integrate

__all__ = [
    "Field",
    "GradField",
    "gradient",
    "grad_norm",
    "partial_grad_norm",
    "hardy_functional",
    "blockwise_hardy",
    "ckn_functional",
    "strauss_sup",
    "linf_ratio",
    "lemma2_pair",
    "pair_log_weight",
    "corner_energy",
    "corner_energy_gradient",
    "edge_weights",
    "write_field",
    "read_field",
]

FIELD_FORMAT = "cknlab-field/1"


@dataclass(frozen=True, eq=False)
class Field:
    grid: ReducedGrid
    values: np.ndarray
    boundary_flag: bool = False

    def __post_init__(self):
        vals = np.array(self.values, dtype=float, copy=True)
        if vals.shape != self.grid.shape:
            raise DomainError(f"values have shape {vals.shape}, grid has {self.grid.shape}")
        if not np.all(np.isfinite(vals)):
            raise DomainError("field values must be finite")
        if self.boundary_flag and np.any(vals[self.grid.boundary_mask()] != 0.0):
            raise DomainError("boundary flag set but outer layer is not identically zero")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, grid: ReducedGrid, fn, dirichlet: bool = True) -> "Field":
        """Sample ``fn(r_1, ..., r_m)``; optionally zero the outer layers."""
        vals = np.broadcast_to(np.asarray(fn(*grid.mesh()), dtype=float), grid.shape).copy()
        if dirichlet:
            vals[grid.boundary_mask()] = 0.0
        return cls(grid, vals, boundary_flag=dirichlet)

    @property
    def decomp(self) -> BlockDecomposition:
        return self.grid.decomp

    def with_values(self, values, boundary_flag: bool | None = None) -> "Field":
        flag = self.boundary_flag if boundary_flag is None else boundary_flag
        return Field(self.grid, values, flag)

    def __mul__(self, scalar: float) -> "Field":
        return self.with_values(self.values * float(scalar))

    __rmul__ = __mul__

    def __add__(self, other: "Field") -> "Field":
        if other.grid != self.grid:
            raise DomainError("fields live on different grids")
        return Field(self.grid, self.values + other.values, self.boundary_flag and other.boundary_flag)


@dataclass(frozen=True, eq=False)
class GradField:
    grid: ReducedGrid
    components: np.ndarray  # shape (m, *grid.shape)

    def norm(self) -> np.ndarray:
        return np.sqrt(np.sum(self.components**2, axis=0))


def gradient(field: Field) -> GradField:
    """Nodal radial partials: central differences inside, second-order
    one-sided differences on the end layers."""
    comps = [
        np.gradient(field.values, r, axis=i, edge_order=2)
        for i, r in enumerate(field.grid.axes)
    ]
    return GradField(field.grid, np.stack(comps))


# -- cell-corner gradient rule ------------------------------------------------


def _corners(m: int):
    return itertools.product((0, 1), repeat=m)


def _cell_slice(grid: ReducedGrid, c) -> tuple:
    n = grid.nodes_per_axis
    return tuple(slice(cj, cj + n - 1) for cj in c)


def _edge_slice(grid: ReducedGrid, c, i: int) -> tuple:
    n = grid.nodes_per_axis
    return tuple(slice(None) if j == i else slice(cj, cj + n - 1) for j, cj in enumerate(c))


def _corner_mass(grid: ReducedGrid, c) -> np.ndarray:
    m = grid.m
    out = np.ones((grid.nodes_per_axis - 1,) * m)
    for j, cj in enumerate(c):
        shp = [1] * m
        shp[j] = grid.nodes_per_axis - 1
        out = out * grid.half_mass[j][cj].reshape(shp)
    return out


def _spacing(grid: ReducedGrid, i: int) -> np.ndarray:
    shp = [1] * grid.m
    shp[i] = grid.nodes_per_axis - 1
    return np.diff(grid.axes[i]).reshape(shp)


def _check_axes(grid: ReducedGrid, axes) -> tuple[int, ...]:
    if axes is None:
        return tuple(range(grid.m))
    axes = tuple(axes)
    if any(not 0 <= i < grid.m for i in axes):
        raise DomainError(f"axis index out of range for m={grid.m}: {axes}")
    return axes


def corner_energy(
    field: Field, q: float, weight: np.ndarray | None = None, axes=None
) -> float:
    """A_gamma * sum over cells and corners of mass * weight * |grad u|^q.

    ``axes`` restricts the gradient to a subset of blocks (partial
    gradient); ``weight`` is an optional positive nodal weight.
    """
    if q < 1:
        raise DomainError(f"q must be >= 1, got {q}")
    grid = field.grid
    axes = _check_axes(grid, axes)
    diffs = {i: np.diff(field.values, axis=i) / _spacing(grid, i) for i in axes}
    total = 0.0
    for c in _corners(grid.m):
        g2 = 0.0
        for i in axes:
            g2 = g2 + diffs[i][_edge_slice(grid, c, i)] ** 2
        term = _corner_mass(grid, c) * (g2 if q == 2 else g2 ** (q / 2))
        if weight is not None:
            term = term * weight[_cell_slice(grid, c)]
        total += float(np.sum(np.ascontiguousarray(term).ravel()))
    return grid.angular_constant * total


def corner_energy_gradient(field: Field, q: float, weight: np.ndarray | None = None) -> np.ndarray:
    """Derivative of :func:`corner_energy` with respect to the node values
    (a subgradient where the discrete gradient vanishes and q < 2)."""
    grid = field.grid
    m = grid.m
    diffs = [np.diff(field.values, axis=i) / _spacing(grid, i) for i in range(m)]
    acc = [np.zeros_like(d) for d in diffs]
    for c in _corners(m):
        parts = [diffs[i][_edge_slice(grid, c, i)] for i in range(m)]
        g2 = sum(p**2 for p in parts)
        if q == 2:
            scale = 2.0 * _corner_mass(grid, c)
        else:
            with np.errstate(divide="ignore", invalid="ignore"):
                pw = np.where(g2 > 0, g2 ** ((q - 2) / 2), 0.0)
            scale = q * _corner_mass(grid, c) * pw
        if weight is not None:
            scale = scale * weight[_cell_slice(grid, c)]
        for i in range(m):
            acc[i][_edge_slice(grid, c, i)] += scale * parts[i]
    out = np.zeros(grid.shape)
    n = grid.nodes_per_axis
    for i in range(m):
        flux = acc[i] / _spacing(grid, i)
        hi = [slice(None)] * m
        lo = [slice(None)] * m
        hi[i] = slice(1, n)
        lo[i] = slice(0, n - 1)
        out[tuple(hi)] += flux
        out[tuple(lo)] -= flux
    return grid.angular_constant * out


def edge_weights(grid: ReducedGrid, weight: np.ndarray | None = None) -> list[np.ndarray]:
    """Per-axis edge coefficients W_i with corner_energy(u, 2) equal to
    sum_i sum_edges W_i (Delta_i u)^2."""
    out = []
    for i in range(grid.m):
        shp = list(grid.shape)
        shp[i] -= 1
        w_i = np.zeros(shp)
        inv_h2 = 1.0 / _spacing(grid, i) ** 2
        for c in _corners(grid.m):
            term = _corner_mass(grid, c) * inv_h2
            if weight is not None:
                term = term * weight[_cell_slice(grid, c)]
            w_i[_edge_slice(grid, c, i)] += term
        out.append(grid.angular_constant * w_i)
    return out


# -- functionals --------------------------------------------------------------


def _rgamma(grid: ReducedGrid) -> np.ndarray:
    return np.broadcast_to(weight_rgamma(grid.decomp, grid.mesh()), grid.shape)


def _weighted_power(field: Field, power: float, weight_exponent) -> float:
    """integrate |u|^power / r_gamma^weight_exponent."""
    vals = np.abs(field.values) ** power
    if weight_exponent != 0:
        vals = vals * _rgamma(field.grid) ** (-float(weight_exponent))
    return integrate(field.grid, vals)


def grad_norm(field: Field, q: float) -> float:
    """Discrete int |grad u|^q dx."""
    return corner_energy(field, q)


def partial_grad_norm(field: Field, q: float, i: int) -> float:
    """Discrete int |grad_i u|^q dx with only the i-th block's derivative (0-based i)."""
    return corner_energy(field, q, axes=(i,))


def hardy_functional(field: Field, q: float) -> float:
    """int |u|^q / r_gamma^q dx."""
    if q < 1:
        raise DomainError(f"q must be >= 1, got {q}")
    field.decomp.require_multiradial()
    return _weighted_power(field, q, q)


def blockwise_hardy(field: Field, q: float, i: int) -> float:
    """int |u|^q / r_i^q dx (0-based block index)."""
    grid = field.grid
    if not 0 <= i < grid.m:
        raise DomainError(f"block index {i} out of range for m={grid.m}")
    vals = np.abs(field.values) ** q * grid.mesh()[i] ** (-float(q))
    return integrate(grid, vals)


def ckn_functional(field: Field, p, q) -> float:
    """(int (|u| / r_gamma^e)^p dx)^{q/p} with e = |gamma|(1/p - 1/q) + 1."""
    if p == math.inf:
        raise DomainError("p must be finite; use strauss_sup for the endpoint")
    field.decomp.require_multiradial()
    e = ckn_weight_exponent(field.decomp, p, q)
    pf, qf = as_fraction(p), as_fraction(q)
    raw = _weighted_power(field, float(p), e * pf)
    return raw ** float(qf / pf)


def strauss_sup(field: Field, q: float) -> float:
    """max over nodes of r_gamma^{|gamma| - q} |u|^q (a lower bound of the sup)."""
    if q < 1:
        raise DomainError(f"q must be >= 1, got {q}")
    rg = _rgamma(field.grid)
    return float(np.max(rg ** (field.decomp.total - q) * np.abs(field.values) ** q))


def linf_ratio(field: Field) -> float:
    """max |u / r_gamma| / max |grad u|."""
    if not field.boundary_flag:
        raise DomainError("linf_ratio needs a field vanishing on the outer layers")
    gmax = float(np.max(gradient(field).norm()))
    if gmax == 0.0:
        raise DomainError("gradient vanishes identically; ratio undefined")
    return float(np.max(np.abs(field.values) / _rgamma(field.grid))) / gmax


def pair_log_weight(grid: ReducedGrid, power: float) -> np.ndarray:
    """log of (r_1^{gamma_1-1} r_2^{gamma_2-1})^{-power/(|gamma|-2)} at the nodes."""
    d = grid.decomp
    if d.m != 2:
        raise DomainError(f"two-block weight needs m = 2, got m = {d.m}")
    if d.total <= 2:
        raise DomainError("two-block weight needs max(gamma) >= 2")
    r1, r2 = grid.mesh()
    logp = (d.gammas[0] - 1) * np.log(r1) + (d.gammas[1] - 1) * np.log(r2)
    return np.broadcast_to(-power / (d.total - 2) * logp, grid.shape)


def lemma2_pair(field: Field, q: float, beta: float) -> tuple[float, float]:
    """Both sides of the two-block weighted Hardy inequality, without the
    constant: (int |u|^q P^{-(beta+q)/(|gamma|-2)}, int |grad u|^q P^{-beta/(|gamma|-2)})
    with P = r_1^{gamma_1-1} r_2^{gamma_2-1}."""
    grid = field.grid
    lhs_w = np.exp(pair_log_weight(grid, beta + q))
    rhs_w = np.exp(pair_log_weight(grid, beta))
    lhs = integrate(grid, np.abs(field.values) ** q * lhs_w)
    rhs = corner_energy(field, q, weight=rhs_w)
    return lhs, rhs


# -- file format ---------------------------------------------------------------


def write_field(path, field: Field) -> None:
    """One JSON header line, then CSV ``r1,...,rm,value`` in row-major order.

    Floats are written with ``repr`` so a read-back is bit-exact.
    """
    grid = field.grid
    header = {
        "format": FIELD_FORMAT,
        "gammas": list(grid.decomp.gammas),
        "grid": grid.spec(),
        "boundary_flag": bool(field.boundary_flag),
    }
    cols = [f"r{i + 1}" for i in range(grid.m)] + ["value"]
    lines = [json.dumps(header, sort_keys=True), ",".join(cols)]
    for idx in np.ndindex(grid.shape):
        coords = [repr(float(grid.axes[i][k])) for i, k in enumerate(idx)]
        lines.append(",".join(coords + [repr(float(field.values[idx]))]))
    Path(path).write_text("\n".join(lines) + "\n")


def read_field(path) -> Field:
    text = Path(path).read_text()
    lines = text.splitlines()
    try:
        header = json.loads(lines[0])
    except (IndexError, json.JSONDecodeError) as exc:
        raise DomainError(f"{path}: missing or malformed JSON header") from exc
    if not isinstance(header, dict) or header.get("format") != FIELD_FORMAT:
        raise DomainError(f"{path}: not a {FIELD_FORMAT} file")
    grid = ReducedGrid.from_spec(header.get("grid", {}))
    if list(grid.decomp.gammas) != list(header.get("gammas", [])):
        raise DomainError(f"{path}: gammas disagree with grid spec")
    body = lines[2:]
    if len(lines) < 2 or lines[1].split(",")[-1] != "value":
        raise DomainError(f"{path}: missing CSV column header")
    if len(body) != grid.size:
        raise DomainError(f"{path}: expected {grid.size} rows, found {len(body)}")
    vals = np.empty(grid.size)
    for row, (line, idx) in enumerate(zip(body, np.ndindex(grid.shape))):
        parts = line.split(",")
        if len(parts) != grid.m + 1:
            raise DomainError(f"{path}: row {row + 3} has {len(parts)} columns")
        try:
            nums = [float(x) for x in parts]
        except ValueError as exc:
            raise DomainError(f"{path}: row {row + 3} is not numeric") from exc
        for i, k in enumerate(idx):
            ref = grid.axes[i][k]
            if not math.isclose(nums[i], ref, rel_tol=1e-12):
                raise DomainError(f"{path}: row {row + 3} coordinate mismatch")
        vals[row] = nums[-1]
    return Field(grid, vals.reshape(grid.shape), bool(header.get("boundary_flag", False)))
