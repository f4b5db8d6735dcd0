"""Iterated block rearrangement of discrete block-radial fields.

Rearranging a block-radial function in one block R^{gamma_i} (the other radii
fixed) is a decreasing rearrangement of a function of r_i against the
measure r_i^{gamma_i - 1} dr_i.  On a volume-spaced grid every node of an
axis carries the same measure, so the rearrangement is a plain descending
sort: it is exactly equimeasurable, and the Hardy-Littlewood comparison
against a coordinatewise decreasing weight holds exactly.  On grids with
unequal node measures the decreasing rearrangement is formed in mass space
and averaged back onto the nodes, which preserves the weighted sum exactly.

Sorting is the only exactly equimeasurable choice, but the difference
quotients of a sorted sample are not consistent where two monotone branches
of the input interleave, so the gradient norm of the sorted u* does not
converge to that of the continuum rearrangement.  The ``interp`` method
rearranges the piecewise-linear interpolant (in mass coordinates) exactly
and samples it back at the nodes; it is equimeasurable only up to
quadrature error but converges, and is used for the Polya-Szego comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .field import Field, grad_norm, hardy_functional
from .grid import ReducedGrid, refine
from .solve import loglog_slope

__all__ = [
    "MeasureAxis",
    "axis_measure",
    "rearrange_axis",
    "iterated_rearrangement",
    "check_polya_szego",
    "check_hardy_littlewood",
    "ps_slack_study",
    "PSStudy",
]


@dataclass(frozen=True, eq=False)
class MeasureAxis:
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        x = np.asarray(self.nodes, dtype=float)
        if w.ndim != 1 or w.shape != x.shape:
            raise DomainError("nodes and weights must be 1D arrays of equal length")
        if not (np.all(w > 0) and np.all(np.isfinite(w))):
            raise DomainError("measure weights must be positive and finite")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "nodes", x)

    @property
    def equal(self) -> bool:
        return bool(np.all(self.weights == self.weights[0]))


def axis_measure(grid: ReducedGrid, i: int) -> MeasureAxis:
    return MeasureAxis(grid.axes[i], grid.measure[i])


def _nonincreasing(v: np.ndarray) -> bool:
    return bool(np.all(np.diff(v) <= 0))


def _rearrange_interp(v: np.ndarray, w: np.ndarray) -> np.ndarray:
    # node i sits at the centre c_i of its mass slot; the interpolant is
    # linear between centres and constant on the two end half-slots
    edges = np.concatenate(([0.0], np.cumsum(w)))
    c = 0.5 * (edges[:-1] + edges[1:])
    xs = np.concatenate(([edges[0]], c, [edges[-1]]))
    ys = np.concatenate(([v[0]], v, [v[-1]]))
    ya, yb, seg = ys[:-1], ys[1:], np.diff(xs)
    lo, hi = np.minimum(ya, yb), np.maximum(ya, yb)
    levels = np.unique(v)
    # measure of {interpolant > tau} is piecewise linear in tau between levels
    tau = levels[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        frac = np.where(hi > lo, (hi - tau) / (hi - lo), 0.0)
    frac = np.clip(frac, 0.0, 1.0)
    frac = np.where(lo > tau, 1.0, frac)
    dist = (frac * seg).sum(axis=1)  # nonincreasing in tau
    # u*(c_i) = tau with dist(tau) = c_i
    out = np.interp(c, dist[::-1], levels[::-1], left=levels[-1], right=levels[0])
    return np.minimum.accumulate(out)


def rearrange_axis(values, measure: MeasureAxis, method: str = "sort") -> np.ndarray:
    """Decreasing rearrangement of a 1D array against ``measure``.

    ``sort`` (exactly equimeasurable) or ``interp`` (consistent for
    gradient norms); see the module docstring.
    """
    if method not in ("sort", "interp"):
        raise DomainError(f"unknown rearrangement method {method!r}")
    v = np.asarray(values, dtype=float)
    if v.shape != measure.weights.shape:
        raise DomainError(f"values of shape {v.shape} do not match the axis")
    if not np.all(np.isfinite(v)):
        raise DomainError("values must be finite")
    if _nonincreasing(v):
        return v.copy()
    if method == "interp":
        return _rearrange_interp(v, measure.weights)
    order = np.argsort(-v, kind="stable")
    if measure.equal:
        return v[order]
    # decreasing step function in mass space, averaged over each node's slot
    w = measure.weights
    src_edges = np.concatenate(([0.0], np.cumsum(w[order])))
    dst_edges = np.concatenate(([0.0], np.cumsum(w)))
    dst_edges[-1] = src_edges[-1]
    # integral of the step function from 0 to s, piecewise linear in s
    cum = np.concatenate(([0.0], np.cumsum(v[order] * w[order])))
    at = np.interp(dst_edges, src_edges, cum)
    out = np.diff(at) / w
    # the averages are nonincreasing up to rounding; clean that up
    return np.minimum.accumulate(out)


def iterated_rearrangement(field: Field, method: str = "sort") -> Field:
    """Rearrange |u| along axis 1, then axis 2, ..., then axis m."""
    grid = field.grid
    vals = np.abs(field.values)
    for i in range(grid.m):
        meas = axis_measure(grid, i)
        vals = np.apply_along_axis(rearrange_axis, i, vals, meas, method)
    return Field(grid, vals, boundary_flag=False)


def check_polya_szego(field: Field, q: float, method: str = "interp") -> tuple[float, float]:
    """(grad_norm(u, q), grad_norm(u*, q)); u* from the consistent
    interpolating rearrangement unless ``method='sort'``."""
    return grad_norm(field, q), grad_norm(iterated_rearrangement(field, method), q)


def check_hardy_littlewood(field: Field, q: float, method: str = "sort") -> tuple[float, float]:
    """(hardy_functional(u, q), hardy_functional(u*, q)); exact with the
    sorting rearrangement on equal-measure grids."""
    return hardy_functional(field, q), hardy_functional(iterated_rearrangement(field, method), q)


@dataclass
class PSStudy:
    nodes: list
    before: list
    after: list
    ratio: list  # after / before
    slack: list  # |ratio_h - ratio_{h/2}|
    order: float  # fitted convergence order of the slack
    violation: list  # max(0, ratio - 1)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def ps_slack_study(
    fn, grid: ReducedGrid, q: float = 2.0, levels: int = 4, method: str = "interp"
) -> PSStudy:
    """Polya-Szego comparison for ``fn(r_1, ..., r_m)`` on ``levels``
    successively refined grids.

    The discrete ratio grad_norm(u*)/grad_norm(u) approaches its continuum
    value (which is <= 1); ``slack`` holds the successive differences of the
    ratio, i.e. the discretization error that any discrete violation of the
    continuum inequality is bounded by, and ``order`` is its observed order
    in the mesh width.
    """
    if levels < 3:
        raise DomainError("need at least three levels to measure an order")
    g = grid
    nodes, before, after = [], [], []
    for lvl in range(levels):
        if lvl:
            g = refine(g)
        f = Field.from_function(g, fn, dirichlet=False)
        b, a = check_polya_szego(f, q, method)
        nodes.append(g.nodes_per_axis)
        before.append(b)
        after.append(a)
    ratio = [a / b for a, b in zip(after, before)]
    slack = [abs(ratio[k + 1] - ratio[k]) for k in range(levels - 1)]
    order = math.nan
    if all(s > 0 for s in slack):
        order = -loglog_slope(nodes[:-1], slack)
    return PSStudy(nodes, before, after, ratio, slack, order, [max(0.0, r - 1.0) for r in ratio])
