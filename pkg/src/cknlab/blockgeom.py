"""Block decompositions of R^N and the closed-form exponent arithmetic
attached to them.

Exponents are kept as :class:`fractions.Fraction` so that identities such as
``sum(sigma_exponents(d)) == 1`` hold exactly; they are converted to floats
only when a weight is evaluated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import DomainError, PairwisePathRequired

__all__ = [
    "BlockDecomposition",
    "ExponentSet",
    "as_fraction",
    "weight_rgamma",
    "sigma_exponents",
    "holder_exponents",
    "hardy_constant_1block",
    "easy_constant_bound",
    "ckn_weight_exponent",
    "sphere_area",
]


def as_fraction(x) -> Fraction:
    """Exact rational for ints/Fractions; floats are snapped to the nearest
    rational with denominator <= 1e12 so that e.g. ``float(8/3)`` round-trips."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    xf = float(x)
    if not math.isfinite(xf):
        raise DomainError(f"expected a finite exponent, got {x!r}")
    return Fraction(xf).limit_denominator(10**12)


@dataclass(frozen=True)
class BlockDecomposition:
    """R^N = R^{gamma_1} x ... x R^{gamma_m}."""

    gammas: tuple[int, ...]

    def __post_init__(self):
        g = tuple(int(x) for x in self.gammas)
        if len(g) < 1:
            raise DomainError("a decomposition needs at least one block")
        if any(x < 1 for x in g):
            raise DomainError(f"block dimensions must be >= 1, got {g}")
        if any(int(x) != x for x in self.gammas):
            raise DomainError(f"block dimensions must be integers, got {self.gammas}")
        object.__setattr__(self, "gammas", g)

    @classmethod
    def parse(cls, text: str) -> "BlockDecomposition":
        """Parse ``"2,2"`` or ``"3, 2, 1"``."""
        try:
            parts = [int(p) for p in text.replace(" ", "").split(",") if p]
        except ValueError as exc:
            raise DomainError(f"malformed gammas {text!r}") from exc
        return cls(tuple(parts))

    @property
    def m(self) -> int:
        return len(self.gammas)

    @property
    def total(self) -> int:
        return sum(self.gammas)

    @property
    def deficiency(self) -> int:
        return self.total - self.m

    def require_multiradial(self) -> None:
        """Check 1 < m < |gamma|, needed by every weight involving r_gamma."""
        if not (1 < self.m < self.total):
            raise DomainError(
                f"need 1 < m < |gamma| for the block-radial weight, got gammas={self.gammas}"
            )


@dataclass(frozen=True)
class ExponentSet:
    """Lebesgue exponents q <= p and the derived critical exponents."""

    decomp: BlockDecomposition
    q: Fraction
    p: Fraction | None = None  # None encodes p = +inf
    q_star: Fraction | None = field(init=False)
    qm_star: Fraction | None = field(init=False)

    def __post_init__(self):
        q = as_fraction(self.q)
        if q < 1:
            raise DomainError(f"q must be >= 1, got {q}")
        p = None if self.p is None or self.p == math.inf else as_fraction(self.p)
        if p is not None and p < q:
            raise DomainError(f"need p >= q, got p={p}, q={q}")
        n, m = self.decomp.total, self.decomp.m
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q_star", q * n / (n - q) if q < n else None)
        object.__setattr__(self, "qm_star", q * m / (m - q) if q < m else None)

    @property
    def ckn_exponent(self) -> Fraction:
        return ckn_weight_exponent(self.decomp, self.p if self.p is not None else math.inf, self.q)


def sigma_exponents(decomp: BlockDecomposition) -> list[Fraction]:
    """sigma_i = (gamma_i - 1)/(|gamma| - m); they sum to one."""
    decomp.require_multiradial()
    d = decomp.deficiency
    return [Fraction(g - 1, d) for g in decomp.gammas]


def weight_rgamma(decomp: BlockDecomposition, radii: Sequence) -> np.ndarray | float:
    """Evaluate r_gamma = prod r_i^{sigma_i}.

    ``radii`` holds one entry per block; entries may be scalars or
    broadcast-compatible arrays.
    """
    decomp.require_multiradial()
    if len(radii) != decomp.m:
        raise DomainError(f"expected {decomp.m} radii, got {len(radii)}")
    out = 1.0
    for r, s in zip(radii, sigma_exponents(decomp)):
        r = np.asarray(r, dtype=float)
        if np.any(r < 0):
            raise DomainError("radii must be nonnegative")
        if s != 0:
            out = out * r ** float(s)
    if np.ndim(out) == 0:
        return float(out)
    return out


def holder_exponents(decomp: BlockDecomposition) -> tuple[list[Fraction], tuple[int, ...]]:
    """Cyclic Hoelder exponents p_k = 2(|gamma|-m)/(gamma_{k-1}+gamma_k-2).

    Blocks are sorted by descending dimension and only the j blocks with
    gamma_i >= 2 take part, with gamma_0 := gamma_j.  Returns the exponents
    and the permutation (original block indices) they refer to.
    """
    decomp.require_multiradial()
    order = tuple(sorted(range(decomp.m), key=lambda i: -decomp.gammas[i]))
    active = [decomp.gammas[i] for i in order if decomp.gammas[i] >= 2]
    j = len(active)
    if j < 3:
        raise PairwisePathRequired(
            f"only {j} block(s) with gamma_i >= 2 in {decomp.gammas}; use the two-block inequality"
        )
    d = decomp.deficiency
    ps = []
    for k in range(j):
        prev = active[k - 1]  # k=0 wraps to gamma_j
        ps.append(Fraction(2 * d, prev + active[k] - 2))
    return ps, order[:j]


def hardy_constant_1block(q: float, n: int) -> float:
    """Classical Hardy constant (q/|n-q|)^q."""
    if q < 1 or n < 1:
        raise DomainError(f"need q >= 1 and n >= 1, got q={q}, n={n}")
    if q == n:
        raise DomainError("q = n is the critical case without a Hardy inequality")
    return (q / abs(n - q)) ** q


def easy_constant_bound(decomp: BlockDecomposition, q: float) -> float | None:
    """Hoelder-product bound on the Hardy constant, or None when q >= 2.

    For q >= 2 only existence of a constant is known, so no value is
    returned; use :mod:`cknlab.solve` for a numerical estimate.
    """
    decomp.require_multiradial()
    if q < 1:
        raise DomainError(f"q must be >= 1, got {q}")
    if q >= 2:
        return None
    denom = 1.0
    for g, s in zip(decomp.gammas, sigma_exponents(decomp)):
        if g == 1:
            continue
        if q == g:
            raise DomainError(f"q = gamma_i = {g}: the bound is infinite")
        denom *= abs(q - g) ** (q * float(s))
    return q**q / denom


def ckn_weight_exponent(decomp: BlockDecomposition, p, q) -> Fraction | float:
    """|gamma|(1/p - 1/q) + 1; exact when p and q are rational."""
    if p == math.inf:
        qf = as_fraction(q)
        return 1 - Fraction(decomp.total) / qf
    pf, qf = as_fraction(p), as_fraction(q)
    if qf < 1 or pf < qf:
        raise DomainError(f"need p >= q >= 1, got p={p}, q={q}")
    return decomp.total * (1 / pf - 1 / qf) + 1


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere S^{n-1} in R^n."""
    if n <= 0:
        raise DomainError(f"dimension must be positive, got {n}")
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)
