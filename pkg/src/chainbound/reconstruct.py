"""Sheets of a bounding chain near the base point.

Given a bounds verdict at level ``l >= 1``, the power sums of the sheets at a
point ``z`` are ``C_d(z) = canonical_transform(d, z) + p_d(z)`` for
``d = 1..l``: the canonical transform carries the measured tail and ``p_d``
is the solved head. Newton's identities turn them into the monic
Weierstrass polynomial in the fiber variable, whose roots are the sheets.

For ``q > 1`` each fiber coordinate ``w_j`` is handled on its own slice
``lambda = e_j`` (multi-index ``d * e_j``), so the result lists one multiset
per coordinate with no pairing across coordinates.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .curve import CurveSpec
from .errors import InputError
from .membership import Tolerances, Verdict
from .moments import Quadrature, canonical_transform
from .newton import weierstrass_coeffs

EXHAUSTIVE_MAX = 6


@dataclass(frozen=True)
class SheetSample:
    """Fiber values of the reconstructed chain over one point.

    ``values`` has shape ``(q, l)``: row ``j`` is the multiset of ``w_j``
    values, sorted by argument. ``residual`` is the largest
    ``|P(z, f_i)| / (1 + max_k |s_k|)`` over roots and coordinates;
    ``power_sum_error`` compares ``sum_i f_i^d`` against the transforms.
    """

    z: complex
    values: np.ndarray
    residual: float
    power_sum_error: float
    flagged: bool = False

    @property
    def level(self) -> int:
        return self.values.shape[-1]

    def to_json(self) -> dict:
        def pair(v):
            return [float(v.real), float(v.imag)]
        vals = [[pair(v) for v in row] for row in self.values]
        return {"z": pair(self.z), "values": vals[0] if len(vals) == 1 else vals,
                "residual": float(self.residual), "power_sum_error": float(self.power_sum_error),
                "flagged": bool(self.flagged)}


def _head_poly(verdict: Verdict, alpha: tuple[int, ...], z: np.ndarray) -> np.ndarray:
    head = verdict.free.head(alpha)
    return np.polyval(head[::-1], z)


def _polish(coeffs: np.ndarray, roots: np.ndarray, steps: int = 2) -> np.ndarray:
    deriv = np.polyder(coeffs)
    for _ in range(steps):
        dp = np.polyval(deriv, roots)
        safe = np.abs(dp) > 0
        roots = np.where(safe, roots - np.polyval(coeffs, roots) / np.where(safe, dp, 1), roots)
    return roots


def _sheets_at(sums: np.ndarray) -> tuple[np.ndarray, float, float]:
    """Roots of the Weierstrass polynomial with power sums ``sums[0..l-1]``."""
    coeffs = np.array(weierstrass_coeffs(list(sums)), dtype=complex)
    roots = np.linalg.eigvals(np.atleast_2d(_companion(coeffs))) if len(coeffs) > 2 \
        else np.array([-coeffs[1]])
    roots = _polish(coeffs, roots)
    order = np.lexsort((np.abs(roots), np.angle(roots)))
    roots = roots[order]
    residual = float(np.max(np.abs(np.polyval(coeffs, roots))) / (1 + np.max(np.abs(coeffs[1:]))))
    d = np.arange(1, len(sums) + 1)
    recomputed = np.sum(roots[None, :] ** d[:, None], axis=1)
    ps_err = float(np.max(np.abs(recomputed - sums)) / (1 + np.max(np.abs(sums))))
    return roots, residual, ps_err


def _companion(coeffs: np.ndarray) -> np.ndarray:
    n = len(coeffs) - 1
    mat = np.zeros((n, n), dtype=complex)
    mat[0, :] = -coeffs[1:]
    mat[1:, :-1] = np.eye(n - 1)
    return mat


def reconstruct_sheets(spec: CurveSpec, verdict: Verdict, points: Sequence[complex],
                       quad: Quadrature = Quadrature(),
                       tol: Tolerances | None = None) -> list[SheetSample]:
    """Sheet values at each point; points must keep ``delta_min`` from the projected curve."""
    if not verdict.bounds:
        raise InputError(f"verdict status is {verdict.status!r}, reconstruction needs 'bounds'")
    level = verdict.level
    if level < 1:
        raise InputError("a level-0 chain has no sheets over the base point")
    if verdict.free is None or verdict.free.q != spec.q:
        raise InputError("verdict carries no free coefficients for this curve")
    tol = tol or verdict.tolerances
    pts = np.asarray(points, dtype=complex).reshape(-1)
    q = spec.q
    # sums[j, d-1, i] = C_{d e_j}(z_i)
    sums = np.empty((q, level, pts.size), dtype=complex)
    for j in range(q):
        for d in range(1, level + 1):
            alpha = tuple(d if i == j else 0 for i in range(q))
            sums[j, d - 1] = canonical_transform(spec, alpha, pts, quad) + _head_poly(verdict, alpha, pts)
    out = []
    for i, z in enumerate(pts):
        rows, res, err = [], 0.0, 0.0
        for j in range(q):
            roots, r, e = _sheets_at(sums[j, :, i])
            rows.append(roots)
            res, err = max(res, r), max(err, e)
        flagged = res > 10 * tol.accept or err > 10 * tol.accept
        out.append(SheetSample(complex(z), np.array(rows), res, err, flagged))
    return out


def _bottleneck(a: np.ndarray, b: np.ndarray) -> float:
    if a.size == 0:
        return 0.0
    if a.size <= EXHAUSTIVE_MAX:
        return min(float(np.max(np.abs(a - b[list(p)]))) for p in itertools.permutations(range(b.size)))
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(np.max(cost[rows, cols]))


def compare_to_truth(samples: Sequence[SheetSample], truth: Sequence) -> float:
    """Largest optimally matched distance between reconstructed and true multisets.

    ``truth[i]`` is the multiset for ``samples[i]``: a length-``l`` array, or
    ``(q, l)`` for several fiber coordinates. Matching minimizes the largest
    pairwise distance (exhaustively for ``l <= 6``, else by minimum-cost
    assignment).
    """
    if len(samples) != len(truth):
        raise InputError(f"{len(samples)} samples but {len(truth)} truth entries")
    worst = 0.0
    for s, t in zip(samples, truth):
        t = np.asarray(t, dtype=complex).reshape(s.values.shape[0], -1) \
            if np.size(t) == s.values.size else None
        if t is None:
            raise InputError(f"cardinality mismatch at z={s.z}: expected {s.values.size} values")
        for row, trow in zip(s.values, t):
            worst = max(worst, _bottleneck(row, trow))
    return worst


def sheets_to_json(samples: Sequence[SheetSample]) -> list:
    return [s.to_json() for s in samples]
