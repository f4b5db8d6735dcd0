"""Best-constant estimation for the Hardy-type quotients.

For q = 2 the discrete quotient is a generalized symmetric eigenproblem
``A u = lam B u`` with A the cell-corner stiffness of :mod:`cknlab.field`
and B the lumped (diagonal) singular-weight mass.  Because both forms are
exactly the discrete functionals, ``1/lam`` is a certificate: every field on
the grid obeys ``hardy <= (1/lam) * grad_norm``.  General q uses a
normalized descent on the same discrete functionals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DomainError, SolverError
from .field import (
    Field,
    corner_energy,
    corner_energy_gradient,
    edge_weights,
    pair_log_weight,
)
from .grid import ReducedGrid, refine

__all__ = [
    "QuadraticForms",
    "ConstantEstimate",
    "assemble_forms",
    "min_eig",
    "min_quotient_descent",
    "lemma2_constant_sweep",
    "LemmaSweep",
    "convergence_study",
    "richardson",
    "loglog_slope",
]

KINDS = ("hardy", "radial", "lemma2")


@dataclass(frozen=True, eq=False)
class QuadraticForms:
    grid: ReducedGrid
    kind: str
    param: float | None
    stiffness: sp.csr_matrix  # on interior (Dirichlet) nodes
    mass: np.ndarray  # diagonal of the lumped mass on interior nodes
    interior: np.ndarray  # flat indices of interior nodes
    stiffness_weight: np.ndarray | None = None  # nodal weight in the gradient form
    mass_weight: np.ndarray | None = None  # nodal weight in the mass form

    def embed(self, x: np.ndarray) -> np.ndarray:
        full = np.zeros(self.grid.size)
        full[self.interior] = x
        return full.reshape(self.grid.shape)


@dataclass
class ConstantEstimate:
    """A numerically estimated constant.

    ``value`` is the constant of the inequality in the stated direction;
    ``quotient`` is the minimized gradient-to-mass quotient it came from.
    """

    value: float
    method: str
    iterations: int | None = None
    residual: float | None = None
    grid: dict | None = None
    level: int | None = None
    quotient: float | None = None
    converged: bool = True
    extrapolated: float | None = None
    trace: list = field(default_factory=list, repr=False)
    vector: Field | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("vector")
        d.pop("trace")
        return d


def _mass_log_weight(grid: ReducedGrid, kind: str, param: float | None, q: float) -> np.ndarray:
    mesh = grid.mesh()
    if kind == "hardy":
        from .blockgeom import weight_rgamma

        return np.broadcast_to(-q * np.log(weight_rgamma(grid.decomp, mesh)), grid.shape)
    if kind == "radial":
        r2 = sum(r**2 for r in mesh)
        return np.broadcast_to(-q / 2 * np.log(r2), grid.shape)
    if kind == "lemma2":
        return pair_log_weight(grid, float(param) + q)
    raise DomainError(f"unknown form kind {kind!r}; expected one of {KINDS}")


def _stiffness_log_weight(grid: ReducedGrid, kind: str, param: float | None) -> np.ndarray | None:
    if kind == "lemma2":
        return pair_log_weight(grid, float(param))
    return None


def _check_kind(grid: ReducedGrid, kind: str, param) -> None:
    if kind not in KINDS:
        raise DomainError(f"unknown form kind {kind!r}; expected one of {KINDS}")
    if grid.spacing != "log":
        raise DomainError("eigenproblems are posed on log grids")
    if kind == "hardy":
        grid.decomp.require_multiradial()
    if kind == "lemma2" and param is None:
        raise DomainError("lemma2 forms need beta")


def _interior(grid: ReducedGrid) -> np.ndarray:
    return np.flatnonzero(~grid.boundary_mask().ravel())


def _diff_operator(n: int, m: int, i: int) -> sp.csr_matrix:
    d1 = sp.diags([-np.ones(n - 1), np.ones(n - 1)], [0, 1], shape=(n - 1, n))
    ops = [sp.identity(n, format="csr")] * m
    ops[i] = d1
    out = ops[0]
    for op in ops[1:]:
        out = sp.kron(out, op, format="csr")
    return out


def assemble_forms(grid: ReducedGrid, kind: str = "hardy", param: float | None = None) -> QuadraticForms:
    """Assemble the q = 2 stiffness and lumped mass.

    kind ``hardy``: mass weight r_gamma^-2 (Theorem-2 quotient at q = 2).
    kind ``radial``: mass weight |x|^-2 (classical radial Hardy).
    kind ``lemma2``: stiffness weight P^{-beta/(|gamma|-2)}, mass weight
    P^{-(beta+2)/(|gamma|-2)}, P = r_1^{gamma_1-1} r_2^{gamma_2-1}; ``param`` is beta.
    """
    _check_kind(grid, kind, param)
    n, m = grid.nodes_per_axis, grid.m
    lsw = _stiffness_log_weight(grid, kind, param)
    sw = None if lsw is None else np.exp(lsw)
    lmw = _mass_log_weight(grid, kind, param, 2.0)
    mw = np.exp(lmw)
    if not (np.all(np.isfinite(mw)) and (sw is None or np.all(np.isfinite(sw)))):
        raise DomainError("weights overflow on this grid; shrink the radial range")
    ws = edge_weights(grid, sw)
    a = None
    for i, w in enumerate(ws):
        d = _diff_operator(n, m, i)
        term = d.T @ sp.diags(w.ravel()) @ d
        a = term if a is None else a + term
    a = sp.csr_matrix(a)
    a = (a + a.T) * 0.5  # exact symmetry; terms are already symmetric
    interior = _interior(grid)
    a_int = a[interior][:, interior].tocsr()
    b = (grid.angular_constant * grid.node_measure() * mw).ravel()[interior]
    if not np.any(b > 0):
        raise DomainError("mass form vanishes identically")
    return QuadraticForms(grid, kind, param, a_int, b, interior, sw, mw)


def min_eig(forms: QuadraticForms, tol: float = 1e-10, max_iter: int | None = None) -> ConstantEstimate:
    """Smallest eigenvalue of A u = lam B u by shift-invert Lanczos (inverse
    iteration accelerated in a Krylov space), deterministic start vector.

    Returns the best constant C = 1/lam of ``mass <= C * stiffness``.
    """
    a, b = forms.stiffness, forms.mass
    s = 1.0 / np.sqrt(b)
    c = sp.diags(s) @ a @ sp.diags(s)
    c = sp.csc_matrix((c + c.T) * 0.5)
    try:
        lu = spla.splu(c)
    except RuntimeError as exc:
        raise SolverError(f"factorization breakdown: {exc}") from exc
    calls = 0

    def solve(x):
        nonlocal calls
        calls += 1
        return lu.solve(np.asarray(x, dtype=float))

    op = spla.LinearOperator(c.shape, matvec=solve, dtype=float)
    v0 = np.ones(c.shape[0])
    try:
        vals, vecs = spla.eigsh(
            c, k=1, sigma=0.0, which="LM", OPinv=op, v0=v0, tol=tol,
            maxiter=max_iter or 20 * c.shape[0],
        )
    except spla.ArpackNoConvergence as exc:
        raise SolverError(f"eigensolver hit its iteration cap: {exc}") from exc
    y = vecs[:, 0]
    x = s * y
    if x.sum() < 0:
        x = -x
    ax = a @ x
    lam = float(x @ ax) / float(x @ (b * x))
    if not lam > 0:
        raise SolverError(f"non-positive eigenvalue {lam}: forms not positive definite")
    res = float(np.linalg.norm(ax - lam * b * x) / np.linalg.norm(b * x))
    vec = Field(forms.grid, forms.embed(x / np.max(np.abs(x))), boundary_flag=True)
    return ConstantEstimate(
        value=1.0 / lam,
        method="eigensolve",
        iterations=calls,
        residual=res,
        grid=forms.grid.spec(),
        level=forms.grid.nodes_per_axis,
        quotient=lam,
        converged=True,
        vector=vec,
    )


def _initial_field(grid: ReducedGrid) -> np.ndarray:
    """Deterministic positive bump vanishing on the outer layers."""
    vals = np.ones(grid.shape)
    n = grid.nodes_per_axis
    t = np.linspace(0.0, 1.0, n)
    prof = np.sin(np.pi * t) * (1.0 + 0.25 * t)
    for i in range(grid.m):
        shp = [1] * grid.m
        shp[i] = n
        vals = vals * prof.reshape(shp)
    vals[grid.boundary_mask()] = 0.0
    return vals


def min_quotient_descent(
    grid: ReducedGrid,
    q: float,
    kind: str = "hardy",
    param: float | None = None,
    tol: float = 1e-7,
    max_iter: int = 2000,
) -> ConstantEstimate:
    """Minimize grad_norm(u, q) / mass(u, q) by normalized descent.

    Directions are preconditioned with the q = 2 stiffness of the same kind
    (a Sobolev gradient); steps use Armijo backtracking, so the objective
    trace never increases.  Returns C = 1/min quotient.
    """
    if q < 1:
        raise DomainError(f"q must be >= 1, got {q}")
    forms = assemble_forms(grid, kind, param)
    interior = forms.interior
    lmw = _mass_log_weight(grid, kind, param, q)
    b = (grid.angular_constant * grid.node_measure() * np.exp(lmw)).ravel()[interior]
    sw = forms.stiffness_weight
    try:
        lu = spla.splu(sp.csc_matrix(forms.stiffness))
    except RuntimeError as exc:
        raise SolverError(f"preconditioner breakdown: {exc}") from exc

    def parts(x):
        fld = Field(grid, forms.embed(x), boundary_flag=True)
        e = corner_energy(fld, q, weight=sw)
        h = float(np.sum(b * np.abs(x) ** q))
        return fld, e, h

    def normalize(x):
        h = float(np.sum(b * np.abs(x) ** q))
        return x / h ** (1.0 / q)

    x = normalize(_initial_field(grid).ravel()[interior])
    fld, e, h = parts(x)
    obj = e / h
    trace = [obj]
    step = 1.0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        ge = corner_energy_gradient(fld, q, weight=sw).ravel()[interior]
        gh = q * b * np.abs(x) ** (q - 1) * np.sign(x)
        g = (ge - obj * gh) / h
        d = -lu.solve(g)
        slope = float(g @ d)
        if slope >= 0:
            converged = True
            break
        accepted = False
        # preconditioned direction first, plain steepest descent as fallback
        for d, t in ((d, min(64.0, 2.0 * step)), (-g / np.linalg.norm(g), 1.0)):
            slope = float(g @ d)
            while t > 1e-12:
                xn = normalize(x + t * d)
                fn, en, hn = parts(xn)
                on = en / hn
                if on <= obj + 1e-4 * t * slope:
                    accepted = True
                    break
                t *= 0.5
            if accepted:
                break
        if not accepted:
            # stagnation: keep the best iterate, flagged unconverged
            break
        step = t
        rel = (obj - on) / obj
        x, fld, e, h, obj = xn, fn, en, hn, on
        trace.append(obj)
        if rel < tol:
            converged = True
            break
    vec = Field(grid, forms.embed(x / np.max(np.abs(x))), boundary_flag=True)
    return ConstantEstimate(
        value=1.0 / obj,
        method="descent",
        iterations=it,
        residual=abs(trace[-2] - trace[-1]) / trace[-1] if len(trace) > 1 else None,
        grid=grid.spec(),
        level=grid.nodes_per_axis,
        quotient=obj,
        converged=converged,
        trace=trace,
        vector=vec,
    )


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of log y against log x."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    return float(np.polyfit(lx, ly, 1)[0])


@dataclass
class LemmaSweep:
    betas: list
    estimates: list
    slope: float
    q: float

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "betas": list(self.betas),
            "estimates": [e.to_dict() for e in self.estimates],
            "slope_vs_beta_plus_q": self.slope,
        }


def lemma2_constant_sweep(
    grid: ReducedGrid, q: float, betas: Sequence[float], tol: float = 1e-10
) -> LemmaSweep:
    """C_2(beta) = 1/(q^q * min quotient) for each beta, and the fitted
    slope of log C_2 against log(beta + q)."""
    if grid.m != 2:
        raise DomainError("the two-block sweep needs m = 2")
    if q < 2:
        raise DomainError(f"the two-block inequality needs q >= 2, got {q}")
    out = []
    for beta in betas:
        if q == 2:
            est = min_eig(assemble_forms(grid, "lemma2", beta), tol=tol)
        else:
            est = min_quotient_descent(grid, q, "lemma2", beta)
        est.value = 1.0 / (q**q * est.quotient)
        out.append(est)
    xs = [b + q for b in betas]
    slope = loglog_slope(xs, [e.value for e in out]) if len(out) > 1 else math.nan
    return LemmaSweep(list(betas), out, slope, q)


def richardson(values: Sequence[float]) -> tuple[float | None, float | None]:
    """Extrapolate three values on grids with halving spacing.

    Returns (limit, observed order) or (None, None) when the differences are
    not monotone.
    """
    if len(values) < 3:
        return None, None
    v0, v1, v2 = values[-3:]
    d1, d2 = v1 - v0, v2 - v1
    if d1 == 0 or d2 == 0 or d1 * d2 < 0 or abs(d2) >= abs(d1):
        return None, None
    order = math.log2(abs(d1) / abs(d2))
    return v2 + d2 / (2.0**order - 1.0), order


def convergence_study(
    estimator: Callable[[ReducedGrid], ConstantEstimate], grid: ReducedGrid, levels: int = 3
) -> list[ConstantEstimate]:
    """Run ``estimator`` on ``levels`` successively refined grids and attach
    the Richardson-extrapolated value to the finest estimate."""
    out = []
    g = grid
    for lvl in range(levels):
        if lvl:
            g = refine(g)
        out.append(estimator(g))
    extra, _ = richardson([e.value for e in out])
    out[-1].extrapolated = extra
    return out
