"""One-dimensional angular reduction for the two-block weighted Hardy problem.

Write r_1 = r cos(theta), r_2 = r sin(theta) and

    psi(theta) = cos(theta)^{gamma_1 - 1} sin(theta)^{gamma_2 - 1}.

The angular quotient is

    int |u'|^2 psi^{1-a} dtheta / int u^2 psi^{1-a-b} dtheta,
    a = alpha/(|gamma|-2),  b = 2/(|gamma|-2),

and the substitution t'(theta) = sign(nu+1) psi^{a-1} turns its numerator
into int |w'|^2 dt and its denominator into int w^2 V(t) dt with
V = t'^{-2} psi^{-b}.  Near theta = 0 one has psi ~ theta^g (g = gamma_2-1),
t' ~ theta^nu with nu = (a-1) g, hence

    V(t) ~ (|nu+1| t)^{-(2 nu + g b)/(nu+1)}     (nu != -1)
    V(t) ~ exp(-(2 - g b) t)                      (nu == -1).

All weights are handled through logarithms: for large alpha the powers of
psi overflow doubles long before the quotient itself becomes large.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import DomainError, SolverError
from .solve import ConstantEstimate, richardson

__all__ = [
    "AngularProblem",
    "psi",
    "log_psi",
    "theta_nodes",
    "substitution_t",
    "Substitution",
    "potential_V",
    "Potential",
    "angular_best_constant",
    "transformed_quotients",
]

MIN_ANGULAR_NODES = 64
ONE_SIDED_THETA_MIN = 1e-10
ONE_SIDED_SPLIT = 0.1


@dataclass(frozen=True)
class AngularProblem:
    gamma1: int
    gamma2: int
    alpha: float
    swapped: bool = field(default=False, init=False)

    def __post_init__(self):
        g1, g2 = int(self.gamma1), int(self.gamma2)
        if min(g1, g2) < 1 or max(g1, g2) < 2:
            raise DomainError(f"need gamma_i >= 1 and max(gamma) >= 2, got ({g1}, {g2})")
        if not math.isfinite(self.alpha):
            raise DomainError(f"alpha must be finite, got {self.alpha}")
        if g1 > g2:
            # the variables r_1, r_2 play symmetric roles; theta -> pi/2 - theta
            g1, g2 = g2, g1
            object.__setattr__(self, "swapped", True)
        object.__setattr__(self, "gamma1", g1)
        object.__setattr__(self, "gamma2", g2)
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def total(self) -> int:
        return self.gamma1 + self.gamma2

    @property
    def a(self) -> float:
        return self.alpha / (self.total - 2)

    @property
    def b(self) -> float:
        return 2.0 / (self.total - 2)

    @property
    def nu(self) -> float:
        return (self.a - 1.0) * (self.gamma2 - 1)

    @property
    def theta_gamma(self) -> float:
        if self.gamma1 == 1:
            return math.pi / 2
        return math.atan(math.sqrt((self.gamma2 - 1) / (self.gamma1 - 1)))

    @property
    def one_sided(self) -> bool:
        return self.gamma1 == 1

    def tail_exponent(self) -> float:
        """Derived exponent of V in t near theta = 0: power for nu != -1,
        exponential rate (negative) for nu == -1."""
        g, b, nu = self.gamma2 - 1, self.b, self.nu
        if math.isclose(nu, -1.0, abs_tol=1e-12):
            return -(2.0 - g * b)
        return -(2 * nu + g * b) / (nu + 1)


def _check_theta(theta) -> np.ndarray:
    th = np.asarray(theta, dtype=float)
    if np.any(~np.isfinite(th)) or np.any(th <= 0) or np.any(th >= math.pi / 2):
        raise DomainError("theta must lie in the open interval (0, pi/2)")
    return th


def log_psi(problem: AngularProblem, theta) -> np.ndarray:
    th = _check_theta(theta)
    out = (problem.gamma2 - 1) * np.log(np.sin(th))
    if problem.gamma1 > 1:
        out = out + (problem.gamma1 - 1) * np.log(np.cos(th))
    return out


def psi(problem: AngularProblem, theta):
    out = np.exp(log_psi(problem, theta))
    return float(out) if np.ndim(out) == 0 else out


def theta_nodes(problem: AngularProblem, n: int) -> np.ndarray:
    """n + 1 increasing nodes; the first and last carry the boundary
    conditions.

    Two-sided problems use [0, pi/2], uniform in a cosine-stretched variable
    that clusters nodes at both degenerate ends.  When gamma_1 = 1 the weights
    at theta -> 0 are scale invariant (the mass weight is the stiffness weight
    times theta^-2), and on any grid that is not locally geometric a spike on
    the first free node has an O(1) quotient that survives refinement.  There
    the nodes are geometric from ONE_SIDED_THETA_MIN up to ONE_SIDED_SPLIT,
    then uniform up to pi/2, with the Dirichlet condition at the first node.
    """
    if not problem.one_sided:
        xi = np.linspace(0.0, 1.0, n + 1)
        th = (math.pi / 4) * (1.0 - np.cos(math.pi * xi))
        th[0], th[-1] = 0.0, math.pi / 2
        return th
    n_geo = (n + 1) // 2
    geo = np.geomspace(ONE_SIDED_THETA_MIN, ONE_SIDED_SPLIT, n_geo + 1)
    lin = np.linspace(ONE_SIDED_SPLIT, math.pi / 2, n + 1 - n_geo)
    th = np.concatenate((geo[:-1], lin))
    th[-1] = math.pi / 2
    return th


# substitution t(theta)


@dataclass
class Substitution:
    theta: np.ndarray
    t: np.ndarray
    t_prime: np.ndarray  # signed t'(theta)
    t_gamma: float  # t at theta_gamma
    increasing: bool


def _power_segments(x: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Integral of a positive f over each [x_j, x_{j+1}], taking f to be a
    power law through both endpoint values.  Exact for f = c x^p."""
    x0, x1, f0, f1 = x[:-1], x[1:], f[:-1], f[1:]
    lx = np.log(x1 / x0)
    p = np.log(f1 / f0) / lx
    with np.errstate(divide="ignore", invalid="ignore"):
        seg = (x1 * f1 - x0 * f0) / (p + 1.0)
    near = np.abs(p + 1.0) < 1e-8
    seg[near] = (x0 * f0 * lx)[near]
    return seg


def substitution_t(problem: AngularProblem, theta) -> Substitution:
    """t(theta) for nodes in (0, theta_gamma).

    For nu > -1, t(0) = 0 and t increases; for nu <= -1, t decreases from
    +inf with the normalization t(theta_gamma) = 0.  The cumulative integral
    is built with power-law segments, plus the head term
    theta_0 |t'(theta_0)| / (nu + 1) for the piece (0, theta_0) when nu > -1.
    """
    th = _check_theta(theta)
    if th.ndim != 1 or np.any(np.diff(th) <= 0):
        raise DomainError("theta nodes must be a strictly increasing 1D array")
    tg = problem.theta_gamma
    if th[-1] >= tg:
        raise DomainError(f"nodes must lie below theta_gamma = {tg}")
    nu = problem.nu
    ext = np.append(th, tg)
    if problem.one_sided:
        ext[-1] = np.nextafter(math.pi / 2, 0.0)  # psi is regular at pi/2 here
    mag = np.exp((problem.a - 1.0) * log_psi(problem, ext))
    seg = _power_segments(ext, mag)
    if nu > -1:
        head = ext[0] * mag[0] / (nu + 1.0)
        cum = head + np.concatenate(([0.0], np.cumsum(seg)))
        t, t_gamma, sign = cum[:-1], float(cum[-1]), 1.0
    else:
        rev = np.concatenate(([0.0], np.cumsum(seg[::-1])))[::-1]
        t, t_gamma, sign = rev[:-1], 0.0, -1.0
    return Substitution(th, t, sign * mag[:-1], t_gamma, nu > -1)


@dataclass
class Potential:
    t: np.ndarray
    V: np.ndarray
    tail_sup: float  # sup of t^2 V over the tail
    fitted_exponent: float
    derived_exponent: float
    exponential: bool  # nu == -1: exponents are rates in exp(rate * t)


def potential_V(problem: AngularProblem, theta, tail_fraction: float = 0.25) -> Potential:
    """V(t) = t'(theta)^{-2} psi(theta)^{-b} sampled at the nodes.

    V is taken positive: the sign(nu+1) factor only records the orientation
    of t and drops out of the transformed quotient.  The tail is the set of
    nodes with theta below ``tail_fraction * theta_gamma``; the fitted
    exponent comes from the innermost decade of that tail.
    """
    sub = substitution_t(problem, theta)
    lp = log_psi(problem, sub.theta)
    V = np.exp(-2.0 * (problem.a - 1.0) * lp - problem.b * lp)
    tail = sub.theta < tail_fraction * problem.theta_gamma
    if tail.sum() < 3:
        raise DomainError("too few nodes in the singular tail")
    t_tail, v_tail = sub.t[tail], V[tail]
    sup = float(np.max(t_tail**2 * v_tail))
    exponential = math.isclose(problem.nu, -1.0, abs_tol=1e-12)
    inner = sub.theta < sub.theta[tail][0] * 10.0
    inner &= tail
    if inner.sum() < 3:
        inner = tail
    if exponential:
        fit = np.polyfit(sub.t[inner], np.log(V[inner]), 1)[0]
    else:
        fit = np.polyfit(np.log(sub.t[inner]), np.log(V[inner]), 1)[0]
    return Potential(sub.t, V, sup, float(fit), problem.tail_exponent(), exponential)


# angular eigenproblem


def _log_segment_integrals(problem: AngularProblem, x0, x1, c: float) -> np.ndarray:
    """log of int_{x0}^{x1} psi^c dtheta for each segment, psi^c taken as a
    power law in the distance to the nearer degenerate end.

    Segments may touch 0 or pi/2; there the exact local power of psi is
    used, and a divergent integral gives +inf.
    """
    x0, x1 = np.asarray(x0, float), np.asarray(x1, float)
    right = (0.5 * (x0 + x1) > math.pi / 4) & (not problem.one_sided)
    d0 = np.where(right, math.pi / 2 - x1, x0)
    d1 = np.where(right, math.pi / 2 - x0, x1)
    p_end = np.where(right, c * (problem.gamma1 - 1), c * (problem.gamma2 - 1))
    out = np.empty(x0.shape)
    inner = d0 > 0
    with np.errstate(divide="ignore"):
        ld0 = np.log(np.where(inner, d0, 1.0))
    ld1 = np.log(d1)
    tl = np.where(right, math.pi / 2 - d1, d1)
    lf1 = c * log_psi(problem, np.clip(tl, 1e-300, np.nextafter(math.pi / 2, 0.0)))
    # segments touching an end
    e = ~inner
    pe = p_end[e] + 1.0
    with np.errstate(divide="ignore"):
        out[e] = np.where(pe > 0, ld1[e] + lf1[e] - np.log(np.where(pe > 0, pe, 1.0)), np.inf)
    # interior segments
    i = inner
    t0 = np.where(right, math.pi / 2 - d0, d0)[i]
    lf0 = c * log_psi(problem, t0)
    A, B = ld1[i] + lf1[i], ld0[i] + lf0
    lx = ld1[i] - ld0[i]
    pp1 = (lf1[i] - lf0) / lx + 1.0
    big = np.maximum(A, B)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = big + np.log(-np.expm1(-np.abs(A - B))) - np.log(np.abs(pp1))
    flat = np.abs(pp1) < 1e-8
    val[flat] = (B + np.log(lx))[flat]
    out[i] = val
    return out


def _angular_lambda(problem: AngularProblem, n: int) -> float:
    """Each edge carries the conductance 1/int psi^{a-1} (power-law exact,
    so steep weights near the ends stay resolved), each node the lumped mass
    psi^{1-a-b}(theta_i) times its dual cell length.  Entries of the
    symmetrically scaled matrix are formed in log space."""
    th = theta_nodes(problem, n)
    a, b = problem.a, problem.b
    lk = -_log_segment_integrals(problem, th[:-1], th[1:], a - 1.0)
    free = th[1:] if problem.one_sided else th[1:-1]
    k = free.size
    hk = np.diff(th)
    cell = 0.5 * (hk[:-1] + hk[1:])
    if problem.one_sided:
        cell = np.append(cell, 0.5 * hk[-1])
        free = np.minimum(free, np.nextafter(math.pi / 2, 0.0))
    lm = (1.0 - a - b) * log_psi(problem, free) + np.log(cell)
    left = np.exp(lk[:k] - lm)
    if problem.one_sided:
        right = np.append(np.exp(lk[1:k] - lm[:-1]), 0.0)  # Neumann at pi/2
    else:
        right = np.exp(lk[1 : k + 1] - lm)
    diag = left + right
    off = -np.exp(lk[1:k] - 0.5 * (lm[:-1] + lm[1:]))
    if not (np.all(np.isfinite(diag)) and np.all(np.isfinite(off))):
        raise SolverError("angular matrix overflowed; alpha too large for this grid")
    try:
        vals = eigh_tridiagonal(diag, off, eigvals_only=True, select="i", select_range=(0, 0))
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"tridiagonal eigensolver failed: {exc}") from exc
    lam = float(vals[0])
    if not (lam > 0 and math.isfinite(lam)):
        raise SolverError(f"non-positive angular eigenvalue {lam}")
    return lam


def angular_best_constant(
    problem: AngularProblem,
    nodes: int = 256,
    rtol: float = 0.01,
    max_levels: int = 8,
) -> ConstantEstimate:
    """Smallest eigenvalue lambda of the angular quotient.

    The node count doubles until two successive values differ by less than
    ``rtol``; the last three levels are Richardson-extrapolated.  ``value``
    and ``quotient`` both hold lambda.
    """
    if nodes < MIN_ANGULAR_NODES:
        raise DomainError(f"need at least {MIN_ANGULAR_NODES} angular nodes, got {nodes}")
    vals, n = [], int(nodes)
    converged = False
    for _ in range(max_levels):
        vals.append(_angular_lambda(problem, n))
        if len(vals) >= 2 and abs(vals[-1] - vals[-2]) < rtol * abs(vals[-1]):
            converged = True
            break
        n *= 2
    if not converged:
        raise SolverError(f"angular constant not settled after {max_levels} refinements: {vals}")
    extra, _ = richardson(vals)
    return ConstantEstimate(
        value=vals[-1],
        method="eigensolve",
        iterations=len(vals),
        residual=abs(vals[-1] - vals[-2]) / abs(vals[-1]),
        grid={"gammas": [problem.gamma1, problem.gamma2], "alpha": problem.alpha, "theta_nodes": n},
        level=n,
        quotient=vals[-1],
        converged=True,
        extrapolated=extra,
        trace=vals,
    )


def transformed_quotients(problem: AngularProblem, u, du, theta) -> tuple[float, float]:
    """Evaluate the angular quotient of a test function two ways.

    Returns (theta-form, t-form): the first integrates in theta, the second
    integrates int w'^2 dt / int w^2 V dt over the t-samples, with
    w(t(theta)) = u(theta).  ``u`` and ``du`` are callables in theta.
    """
    sub = substitution_t(problem, theta)
    th = sub.theta
    lp = log_psi(problem, th)
    a, b = problem.a, problem.b
    uv, dv = np.asarray(u(th), float), np.asarray(du(th), float)
    num_th = np.trapezoid(dv**2 * np.exp((1 - a) * lp), th)
    den_th = np.trapezoid(uv**2 * np.exp((1 - a - b) * lp), th)
    V = np.exp(-2.0 * (a - 1.0) * lp - b * lp)
    wprime = dv / sub.t_prime
    order = np.argsort(sub.t)
    t = sub.t[order]
    num_t = np.trapezoid((wprime**2)[order], t)
    den_t = np.trapezoid((uv**2 * V)[order], t)
    return float(num_th / den_th), float(num_t / den_t)
