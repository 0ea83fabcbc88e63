"""Newton hierarchies: power sums, elementary symmetric functions, families.

Every routine here is ring-generic. Terms may be Python/numpy complex
scalars or :class:`~chainbound.series.TruncatedSeries`; the only operations
used are ``+``, ``-``, ``*`` and division by a nonzero integer.

The universal polynomials that express ``c_k`` (``k > level``) through
``c_1 .. c_level`` are never expanded into monomials. They are evaluated
through the three-term-per-level recursion

    c_k = S_1 c_{k-1} - S_2 c_{k-2} + ... - (-1)^level S_level c_{k-level},

with ``S_j`` the elementary symmetric functions recovered from the power
sums by Newton's identities.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from math import factorial, prod
from typing import Any, Mapping, Sequence

import numpy as np

from .series import TruncatedSeries, magnitude

Ring = Any  # complex scalar or TruncatedSeries

DEFAULT_FAMILY_SEED = 20240607
DEFAULT_RANDOM_SLICES = 16


def _zero_like(x: Ring) -> Ring:
    return x * 0


def elementary_from_power_sums(power_sums: Sequence[Ring]) -> list[Ring]:
    """Elementary symmetric functions ``S_1..S_k`` from power sums ``c_1..c_k``.

    Solves ``c_j - S_1 c_{j-1} + ... + (-1)^{j-1} S_{j-1} c_1 + (-1)^j j S_j = 0``
    for ``j = 1..k``.
    """
    c = list(power_sums)
    if not c:
        raise ValueError("need at least one power sum")
    s: list[Ring] = []
    for j in range(1, len(c) + 1):
        # (-1)^{j+1} j S_j = c_j - S_1 c_{j-1} + ... + (-1)^{j-1} S_{j-1} c_1
        acc = c[j - 1]
        for i in range(1, j):
            term = s[i - 1] * c[j - 1 - i]
            acc = acc - term if i % 2 else acc + term
        s_j = acc / j
        s.append(s_j if j % 2 else -s_j)
    return s


@dataclass(frozen=True)
class Hierarchy:
    """Truncated Newton hierarchy ``c_0..c_K`` claimed to have ``level`` sheets."""

    level: int
    terms: tuple

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if self.level < 0:
            raise ValueError("level must be nonnegative")
        if not self.terms:
            raise ValueError("a hierarchy needs at least c_0")

    @property
    def order(self) -> int:
        return len(self.terms) - 1

    def __getitem__(self, k: int) -> Ring:
        return self.terms[k]

    def __len__(self) -> int:
        return len(self.terms)


@dataclass(frozen=True)
class HierarchyReport:
    passed: bool
    max_residual: float
    residuals: tuple[float, ...]  # residual magnitude for k = level+1 .. K
    c0_error: float
    scale: float = 1.0

    @property
    def worst_k(self) -> int | None:
        if not self.residuals:
            return None
        return int(np.argmax(self.residuals))


def _recurrence(s: Sequence[Ring], terms: Sequence[Ring], k: int) -> Ring:
    """S_1 c_{k-1} - S_2 c_{k-2} + ... - (-1)^l S_l c_{k-l}."""
    acc = s[0] * terms[k - 1]
    for j in range(2, len(s) + 1):
        term = s[j - 1] * terms[k - j]
        acc = acc + term if j % 2 else acc - term
    return acc


def extend_hierarchy(power_sums: Sequence[Ring], order: int, zero: Ring = 0j) -> Hierarchy:
    """Unique level-``len(power_sums)`` hierarchy with the given ``c_1..c_l``.

    ``zero`` supplies the ring's zero when ``power_sums`` is empty (level 0),
    e.g. ``TruncatedSeries.constant(0, K)`` for series coefficients.
    """
    c = list(power_sums)
    level = len(c)
    if order < level:
        raise ValueError(f"order {order} is below level {level}")
    if level == 0:
        return Hierarchy(0, [zero] * (order + 1))
    terms = [_zero_like(c[0]) + level] + c
    s = elementary_from_power_sums(c)
    for k in range(level + 1, order + 1):
        terms.append(_recurrence(s, terms, k))
    return Hierarchy(level, terms)


def hierarchy_residuals(h: Hierarchy) -> list[Ring]:
    """Left-hand side of the level-``h.level`` recursion for ``level < k <= K``."""
    level, terms = h.level, h.terms
    if level == 0:
        return [terms[k] for k in range(1, len(terms))]
    s = elementary_from_power_sums(terms[1:level + 1])
    return [terms[k] - _recurrence(s, terms, k) for k in range(level + 1, len(terms))]


def verify_hierarchy(h: Hierarchy, tol: float = 1e-8, relative: bool = False) -> HierarchyReport:
    """Check the recursion and ``c_0 == level`` on a truncated hierarchy.

    With ``relative=True`` the tolerance is scaled by ``1 + max |input coefficient|``.
    """
    scale = 1.0
    if relative:
        scale = 1.0 + max(magnitude(t) for t in h.terms)
    c0_err = magnitude(h.terms[0] - h.level)
    res = tuple(magnitude(r) for r in hierarchy_residuals(h)) if h.order > h.level else ()
    worst = max(res, default=0.0)
    passed = worst <= tol * scale and c0_err <= tol * scale
    return HierarchyReport(passed, worst, res, c0_err, scale)


def scale_hierarchy(h: Hierarchy, t: complex) -> Hierarchy:
    return Hierarchy(h.level, [c * (t ** d) for d, c in enumerate(h.terms)])


def add_hierarchies(h: Hierarchy, other: Hierarchy) -> Hierarchy:
    if h.order != other.order:
        raise ValueError("hierarchies must share the truncation order")
    return Hierarchy(h.level + other.level, [a + b for a, b in zip(h.terms, other.terms)])


def weierstrass_coeffs(power_sums: Sequence[Ring]) -> list[Ring]:
    """Monic polynomial ``t^l - s_1 t^{l-1} + ... + (-1)^l s_l``, highest degree first."""
    if len(power_sums) == 0:
        raise ValueError("level must be at least 1")
    s = elementary_from_power_sums(power_sums)
    out: list[Ring] = [_zero_like(s[0]) + 1]
    for k, s_k in enumerate(s, start=1):
        out.append(-s_k if k % 2 else s_k)
    return out


# ---------------------------------------------------------------------------
# multi-indexed families


def multi_indices(q: int, degree: int) -> list[tuple[int, ...]]:
    """All ``alpha`` in N^q with ``|alpha| == degree``, lexicographically descending."""
    if q < 1:
        raise ValueError("q must be positive")
    out = []
    for combo in combinations_with_replacement(range(q), degree):
        alpha = [0] * q
        for j in combo:
            alpha[j] += 1
        out.append(tuple(alpha))
    return out


def multinomial(alpha: Sequence[int]) -> int:
    return factorial(sum(alpha)) // prod(factorial(a) for a in alpha)


def lambda_power(lam: Sequence[complex], alpha: Sequence[int]) -> complex:
    return prod((complex(l) ** a for l, a in zip(lam, alpha)), start=1 + 0j)


@dataclass(frozen=True)
class MomentFamily:
    """Moments ``C_alpha`` for every ``|alpha| <= max_degree`` in ``q`` fiber directions."""

    q: int
    entries: Mapping[tuple[int, ...], Ring]
    max_degree: int

    def __post_init__(self):
        entries = {tuple(int(a) for a in k): v for k, v in self.entries.items()}
        for d in range(self.max_degree + 1):
            for alpha in multi_indices(self.q, d):
                if alpha not in entries:
                    raise ValueError(f"family is missing C_{alpha}")
        object.__setattr__(self, "entries", entries)

    def __getitem__(self, alpha) -> Ring:
        return self.entries[tuple(alpha)]


def family_slice(family: MomentFamily, lam: Sequence[complex]) -> list[Ring]:
    """``C_d(lambda) = sum_{|alpha|=d} binom(d, alpha) lambda^alpha C_alpha`` for d = 0..D."""
    lam = [complex(x) for x in lam]
    if len(lam) != family.q:
        raise ValueError("lambda must have q components")
    if not all(np.isfinite(x) for x in lam):
        raise ValueError("lambda components must be finite")
    out = []
    for d in range(family.max_degree + 1):
        acc = None
        for alpha in multi_indices(family.q, d):
            term = family[alpha] * (multinomial(alpha) * lambda_power(lam, alpha))
            acc = term if acc is None else acc + term
        out.append(acc)
    return out


def default_lambda_samples(q: int, seed: int = DEFAULT_FAMILY_SEED,
                           n_random: int = DEFAULT_RANDOM_SLICES) -> list[np.ndarray]:
    """Coordinate directions plus seeded random points of the unit polydisc."""
    rng = np.random.default_rng(seed)
    samples = [np.eye(q, dtype=complex)[j] for j in range(q)]
    for _ in range(n_random):
        r = np.sqrt(rng.uniform(0.0, 1.0, q))
        phase = rng.uniform(0.0, 2 * np.pi, q)
        samples.append(r * np.exp(1j * phase))
    return samples


@dataclass(frozen=True)
class FamilyReport:
    passed: bool
    worst_residual: float
    worst_lambda: np.ndarray | None
    reports: tuple[HierarchyReport, ...] = field(repr=False, default=())


def verify_family(family: MomentFamily, level: int, lambda_samples=None,
                  tol: float = 1e-8, relative: bool = False,
                  seed: int = DEFAULT_FAMILY_SEED) -> FamilyReport:
    """Every lambda-slice of ``family`` must be a level-``level`` hierarchy."""
    if lambda_samples is None:
        lambda_samples = default_lambda_samples(family.q, seed)
    lambda_samples = list(lambda_samples)
    if not lambda_samples:
        raise ValueError("need at least one lambda sample")
    worst, worst_lam, reports = -1.0, None, []
    passed = True
    for lam in lambda_samples:
        rep = verify_hierarchy(Hierarchy(level, family_slice(family, lam)), tol, relative)
        reports.append(rep)
        passed &= rep.passed
        r = max(rep.max_residual, rep.c0_error) / rep.scale
        if r > worst:
            worst, worst_lam = r, np.asarray(lam)
    return FamilyReport(passed, worst, worst_lam, tuple(reports))


def family_coefficients(slice_fn, q: int, degree: int) -> dict[tuple[int, ...], Ring]:
    """Recover ``C_alpha`` (``|alpha| = degree``) from a degree-homogeneous slice map.

    ``slice_fn(lam)`` must return ``sum_{|alpha|=degree} binom(degree, alpha)
    lambda^alpha C_alpha``. Coefficients are read off exactly by a discrete
    Fourier transform over ``lambda = (1, t, t^(d+1), t^((d+1)^2), ...)`` with
    ``t`` running through roots of unity; no monomial expansion is formed.
    """
    base = degree + 1
    n = base ** (q - 1)
    t = np.exp(2j * np.pi * np.arange(n) / n)
    values = []
    for ti in t:
        lam = [1.0 + 0j] + [ti ** (base ** (j - 1)) for j in range(1, q)]
        values.append(slice_fn(lam))
    out = {}
    for alpha in multi_indices(q, degree):
        e = sum(a * base ** (j - 1) for j, a in enumerate(alpha) if j >= 1)
        weights = np.exp(-2j * np.pi * e * np.arange(n) / n) / n
        acc = None
        for wgt, v in zip(weights, values):
            acc = v * complex(wgt) if acc is None else acc + v * complex(wgt)
        out[alpha] = acc / multinomial(alpha)
    return out
