"""Explicit constructions on R^4 = R^2 x R^2 in polar coordinates of the
(r_1, r_2) quadrant, r_1 = r cos(theta), r_2 = r sin(theta):

* the concentrating sequence u_k = phi_k(theta) psi_k(r) with
  phi_k = a(k theta) theta^{-1/6} and psi_k = b(k^2 (r - r_o)), used against
  the Strauss-type bound at q = 3;
* the supersolution of the two-block weighted Hardy equation and a
  finite-difference certificate of its constant.

The volume element is dx = 2 pi^2 r^3 sin(2 theta) dr dtheta and
r_gamma = (r_1 r_2)^{1/2} = r (sin(2 theta)/2)^{1/2}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .solve import loglog_slope

__all__ = [
    "alpha_bump",
    "alpha_bump_prime",
    "psi_bump",
    "psi_bump_prime",
    "BumpPair",
    "PolarField",
    "counterexample_field",
    "counterexample_report",
    "CounterexampleReport",
    "strauss_equivalence_bounds",
    "supersolution_value",
    "supersolution_ratio_exact",
    "supersolution_certificate",
]

POLAR_MEASURE = 2.0 * math.pi**2  # |S^1|^2 / 2
MIN_SUPPORT_NODES = 8


# bumps


def alpha_bump(t):
    """exp(1 - 1/(4 t (1 - t))) on (0, 1), zero elsewhere; equals 1 at t = 1/2."""
    t = np.asarray(t, dtype=float)
    inside = (t > 0) & (t < 1)
    ts = np.where(inside, t, 0.5)
    out = np.where(inside, np.exp(1.0 - 1.0 / (4.0 * ts * (1.0 - ts))), 0.0)
    return float(out) if out.ndim == 0 else out


def alpha_bump_prime(t):
    t = np.asarray(t, dtype=float)
    inside = (t > 0) & (t < 1)
    ts = np.where(inside, t, 0.5)
    d = (1.0 - 2.0 * ts) / (4.0 * ts**2 * (1.0 - ts) ** 2)
    out = np.where(inside, alpha_bump(ts) * d, 0.0)
    return float(out) if out.ndim == 0 else out


def psi_bump(t):
    """exp(-t^2/(1 - t^2)) on (-1, 1), zero elsewhere; equals 1 at t = 0."""
    t = np.asarray(t, dtype=float)
    inside = np.abs(t) < 1
    ts = np.where(inside, t, 0.0)
    out = np.where(inside, np.exp(-(ts**2) / (1.0 - ts**2)), 0.0)
    return float(out) if out.ndim == 0 else out


def psi_bump_prime(t):
    t = np.asarray(t, dtype=float)
    inside = np.abs(t) < 1
    ts = np.where(inside, t, 0.0)
    out = np.where(inside, psi_bump(ts) * (-2.0 * ts / (1.0 - ts**2) ** 2), 0.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class BumpPair:
    """The two mollifier profiles with their first derivatives."""

    alpha = staticmethod(alpha_bump)
    alpha_prime = staticmethod(alpha_bump_prime)
    psi = staticmethod(psi_bump)
    psi_prime = staticmethod(psi_bump_prime)


# counterexample sequence


@dataclass(frozen=True, eq=False)
class PolarField:
    """Product field phi(theta) psi(r) on a tensor (r, theta) grid, with its
    exact partial derivatives."""

    r: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray
    rad: np.ndarray
    drad: np.ndarray

    @property
    def values(self) -> np.ndarray:
        return self.rad[:, None] * self.phi[None, :]

    def grad_norm(self, q: float) -> float:
        """int |grad u|^q dx over R^4 (trapezoid on the tensor grid)."""
        r, th = self.r[:, None], self.theta[None, :]
        g2 = (self.drad[:, None] * self.phi[None, :]) ** 2 + (
            self.rad[:, None] * self.dphi[None, :] / r
        ) ** 2
        integrand = g2 ** (q / 2) * r**3 * np.sin(2 * th)
        return POLAR_MEASURE * float(np.trapezoid(np.trapezoid(integrand, self.theta, axis=1), self.r))

    def strauss_sup(self, q: float) -> float:
        """sup r_gamma^{4-q} |u|^q over the grid."""
        r, th = self.r[:, None], self.theta[None, :]
        rg = r * np.sqrt(np.sin(2 * th) / 2.0)
        return float(np.max(rg ** (4.0 - q) * np.abs(self.values) ** q))


def counterexample_field(k: int, r_o: float = 2.0, n_theta: int = 257, n_r: int = 257) -> PolarField:
    """u_k(r, theta) = a(k theta) theta^{-1/6} b(k^2 (r - r_o)), sampled
    uniformly over its support (0, 1/k] x [r_o - 1/k^2, r_o + 1/k^2]."""
    if int(k) != k or k < 2:
        raise DomainError(f"k must be an integer >= 2, got {k}")
    if not r_o > 1:
        raise DomainError(f"r_o must exceed 1, got {r_o}")
    if min(n_theta, n_r) < MIN_SUPPORT_NODES:
        raise DomainError(
            f"under-resolved: need >= {MIN_SUPPORT_NODES} nodes across each support, "
            f"got n_theta={n_theta}, n_r={n_r}"
        )
    k = int(k)
    theta = np.linspace(0.0, 1.0 / k, n_theta)
    r = np.linspace(r_o - k**-2, r_o + k**-2, n_r)
    th = theta[1:]  # theta^{-1/6} is singular at 0 where the bump vanishes
    a, da = alpha_bump(k * th), alpha_bump_prime(k * th)
    phi = np.concatenate(([0.0], a * th ** (-1 / 6)))
    dphi = np.concatenate(([0.0], k * da * th ** (-1 / 6) - a * th ** (-7 / 6) / 6.0))
    s = k**2 * (r - r_o)
    rad, drad = psi_bump(s), k**2 * psi_bump_prime(s)
    return PolarField(r, theta, phi, dphi, rad, drad)


def strauss_equivalence_bounds(k: int) -> tuple[float, float]:
    """Two-sided bounds for (sin 2 theta)^{1/2} theta^{-1/2} on (0, 1/k]:
    it lies in [sqrt(sin(2/k) k), sqrt(2)] because sin(x)/x decreases."""
    if k < 1:
        raise DomainError("k must be >= 1")
    return math.sqrt(k * math.sin(2.0 / k)), math.sqrt(2.0)


@dataclass
class CounterexampleReport:
    r_o: float
    rows: list  # dicts with k, S, R1, R2, grad_norm
    slope_R1: float
    slope_R2: float
    slope_grad_norm: float
    S_spread: float  # (max - min)/mean over the sweep

    def columns(self) -> list[str]:
        return ["k", "S", "R1", "R2", "grad_norm"]

    def to_dict(self) -> dict:
        return {
            "r_o": self.r_o,
            "slope_R1": self.slope_R1,
            "slope_R2": self.slope_R2,
            "slope_grad_norm": self.slope_grad_norm,
            "S_spread": self.S_spread,
        }


def counterexample_report(
    k_list=(8, 16, 32, 64), r_o: float = 2.0, n_theta: int = 513, n_r: int = 513
) -> CounterexampleReport:
    """Per k: S = sup r_gamma |u_k|^3, the separated integrals

        R1 = int |psi_k'|^3 r^3 dr * int phi_k^3 sin(2 theta) dtheta,
        R2 = int psi_k^3 dr * int |phi_k'|^3 sin(2 theta) dtheta,

    and the full gradient norm int |grad u_k|^3 dx, with log-log slopes
    against k and the relative spread of S."""
    ks = [int(k) for k in k_list]
    if len(ks) < 4:
        raise DomainError("need at least four values of k")
    rows = []
    for k in ks:
        f = counterexample_field(k, r_o, n_theta, n_r)
        s2t = np.sin(2 * f.theta)
        r1 = np.trapezoid(np.abs(f.drad) ** 3 * f.r**3, f.r) * np.trapezoid(f.phi**3 * s2t, f.theta)
        r2 = np.trapezoid(f.rad**3, f.r) * np.trapezoid(np.abs(f.dphi) ** 3 * s2t, f.theta)
        rows.append(
            {"k": k, "S": f.strauss_sup(3.0), "R1": float(r1), "R2": float(r2), "grad_norm": f.grad_norm(3.0)}
        )
    S = np.array([row["S"] for row in rows])
    return CounterexampleReport(
        r_o=r_o,
        rows=rows,
        slope_R1=loglog_slope(ks, [row["R1"] for row in rows]),
        slope_R2=loglog_slope(ks, [row["R2"] for row in rows]),
        slope_grad_norm=loglog_slope(ks, [row["grad_norm"] for row in rows]),
        S_spread=float((S.max() - S.min()) / S.mean()),
    )


# supersolution


def supersolution_value(alpha: float, r, theta):
    """r^{-1} sqrt(log(1/sin 2 theta)) for alpha = 1, otherwise
    r^{alpha-2} (sin 2 theta)^{(alpha-1)/2}."""
    r = np.asarray(r, dtype=float)
    th = np.asarray(theta, dtype=float)
    if np.any(r <= 0):
        raise DomainError("r must be positive")
    if np.any((th <= 0) | (th >= math.pi / 2)):
        raise DomainError("theta must lie in (0, pi/2)")
    s = np.sin(2 * th)
    if alpha == 1:
        out = np.sqrt(np.maximum(-np.log(s), 0.0)) / r
    else:
        out = r ** (alpha - 2) * s ** ((alpha - 1) / 2)
    return float(out) if out.ndim == 0 else out


def supersolution_ratio_exact(alpha: float, theta):
    """L[u] / (r^{-2} (sin 2 theta)^{-1} u) for the power branch, in closed
    form: (alpha-1)^2 / sin(2 theta) + sin(2 theta)."""
    if alpha == 1:
        raise DomainError("closed form covers alpha != 1 only")
    s = np.sin(2 * np.asarray(theta, dtype=float))
    return (alpha - 1) ** 2 / s + s


def _operator_fd(alpha: float, r: np.ndarray, th: np.ndarray, u) -> np.ndarray:
    """Conservative (staggered) differences for
    -r^{2a-5} d_r(r^{5-2a} d_r u) - r^{-2} s^{a-2} d_th(s^{2-a} d_th u),
    s = sin(2 theta), at the interior nodes of the tensor grid."""
    hr, ht = r[1] - r[0], th[1] - th[0]
    R, T = r[:, None], th[None, :]
    U = u(R, T)
    rp, rm = R[1:-1] + hr / 2, R[1:-1] - hr / 2
    radial = -(R[1:-1] ** (2 * alpha - 5)) * (
        rp ** (5 - 2 * alpha) * (U[2:, 1:-1] - U[1:-1, 1:-1])
        - rm ** (5 - 2 * alpha) * (U[1:-1, 1:-1] - U[:-2, 1:-1])
    ) / hr**2
    sp_, sm = np.sin(2 * (T[:, 1:-1] + ht / 2)), np.sin(2 * (T[:, 1:-1] - ht / 2))
    s0 = np.sin(2 * T[:, 1:-1])
    angular = -(R[1:-1] ** -2) * s0 ** (alpha - 2) * (
        sp_ ** (2 - alpha) * (U[1:-1, 2:] - U[1:-1, 1:-1])
        - sm ** (2 - alpha) * (U[1:-1, 1:-1] - U[1:-1, :-2])
    ) / ht**2
    return radial + angular


def supersolution_certificate(
    alpha: float,
    r_window=(1.0, 2.0),
    n_r: int = 401,
    n_theta: int = 801,
    theta_margin: float = 0.05,
    log_gap: float = 0.05,
) -> float:
    """C* = min over an interior grid of L[u] / (r^{-2} (sin 2 theta)^{-1} u).

    The grid covers ``r_window`` and theta in [margin, pi/2 - margin]; for
    alpha = 1 the band |theta - pi/4| < log_gap, where u vanishes, is
    excluded from the minimum.
    """
    r0, r1 = map(float, r_window)
    if not (0 < r0 < r1):
        raise DomainError(f"invalid r window {r_window}")
    if not (0 < theta_margin < math.pi / 4):
        raise DomainError("theta margin must lie in (0, pi/4)")
    if min(n_r, n_theta) < 5:
        raise DomainError("need at least 5 nodes per direction")
    r = np.linspace(r0, r1, n_r)
    th = np.linspace(theta_margin, math.pi / 2 - theta_margin, n_theta)
    Lu = _operator_fd(alpha, r, th, lambda R, T: supersolution_value(alpha, R, T))
    R, T = r[1:-1, None], th[None, 1:-1]
    u = supersolution_value(alpha, R, T)
    ref = R**-2 / np.sin(2 * T) * u
    keep = np.broadcast_to(np.ones_like(T, dtype=bool), ref.shape)
    if alpha == 1:
        keep = np.broadcast_to(np.abs(T - math.pi / 4) >= log_gap, ref.shape)
    return float(np.min(Lu[keep] / ref[keep]))
