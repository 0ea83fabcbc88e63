"""Level-l boundary membership from a moment table.

A curve bounds a chain that is positive with ``l`` sheets over the base point
iff the heads (Taylor coefficients of degree ``<= |alpha|``) of the moments
``C_alpha``, ``1 <= |alpha| <= l``, can be chosen so that the completed
series form a Newton family of level ``l``: the recursion then predicts
the tails of every ``C_alpha`` with ``|alpha| > l`` and those predictions
must match the measured tails.

The unknown heads are fitted by Levenberg-Marquardt with multi-start; the
congruences are evaluated through :func:`chainbound.newton.extend_hierarchy`
over truncated series (one lambda-slice per row when ``q > 1``).

Moments enter in units of the curve's distance to the base point (``A_k``
times ``radius^k``) and each congruence row is divided by ``1 +`` its
magnitude (the larger of its biggest entry and its quadrature mass, see
:meth:`MomentTable.magnitudes`), so the reported ``residual_rel`` is unchanged by
rotating or rescaling the chart.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InputError
from .lm import levenberg_marquardt
from .moments import MomentTable
from .newton import (Hierarchy, MomentFamily, default_lambda_samples, extend_hierarchy,
                     family_coefficients, lambda_power, multi_indices, multinomial)
from .series import TruncatedSeries

BOUNDS = "bounds"
REJECTS = "rejects"
INCONCLUSIVE = "inconclusive"

DET_FLOOR = 1e-8


@dataclass(frozen=True)
class Tolerances:
    accept: float = 1e-6
    reject: float = 1e-4

    def __post_init__(self):
        if not 0 < self.accept < self.reject:
            raise InputError("need 0 < tol_accept < tol_reject")

    def classify(self, residual: float) -> str:
        if residual <= self.accept:
            return BOUNDS
        if residual >= self.reject:
            return REJECTS
        return INCONCLUSIVE


@dataclass(frozen=True)
class FitSettings:
    d_fit: int | None = None  # default level + 2
    k_fit: int | None = None  # default 2 * level + 6
    starts: int = 8  # seeded Gaussian starts after the zero start
    seed: int = 0
    max_iter: int = 200
    fd_step: float = 1e-7
    lambda_samples: tuple | None = None  # q > 1 only; default from newton


@dataclass(frozen=True)
class FreeCoefficients:
    """Heads ``p_alpha(z) = sum_{k<=|alpha|} p[alpha, k] z^k`` in the affine chart."""

    level: int
    q: int
    values: dict = field(default_factory=dict)  # (alpha, k) -> complex

    def __post_init__(self):
        for d in range(1, self.level + 1):
            for alpha in multi_indices(self.q, d):
                for k in range(d + 1):
                    if (alpha, k) not in self.values:
                        raise ValueError(f"missing free coefficient {(alpha, k)}")

    def head(self, alpha) -> np.ndarray:
        if isinstance(alpha, (int, np.integer)):
            alpha = (int(alpha),)
        alpha = tuple(alpha)
        return np.array([self.values[(alpha, k)] for k in range(sum(alpha) + 1)])

    def __len__(self) -> int:
        return len(self.values)

    def to_json(self) -> list:
        return [{"alpha": list(a), "k": k, "value": [v.real, v.imag]}
                for (a, k), v in sorted(self.values.items(), key=lambda e: (sum(e[0][0]), e[0]))]

    @classmethod
    def from_json(cls, items, level: int, q: int) -> "FreeCoefficients":
        return cls(level, q, {(tuple(e["alpha"]), int(e["k"])): complex(*e["value"]) for e in items})


@dataclass(frozen=True)
class Verdict:
    level: int
    status: str
    residual_rel: float
    free: FreeCoefficients | None = None
    conditions: dict = field(default_factory=dict)
    solver: dict = field(default_factory=dict)
    levels_tried: tuple = ()
    tolerances: Tolerances = Tolerances()

    def __post_init__(self):
        if self.status not in (BOUNDS, REJECTS, INCONCLUSIVE):
            raise ValueError(f"unknown status {self.status!r}")
        tol = self.tolerances
        if self.status == BOUNDS and not self.residual_rel <= tol.accept:
            raise ValueError("bounds verdict with residual above tol_accept")
        if self.status == REJECTS and not self.residual_rel >= tol.reject:
            raise ValueError("rejects verdict with residual below tol_reject")

    @property
    def bounds(self) -> bool:
        return self.status == BOUNDS

    def to_json(self) -> dict:
        return {
            "level": self.level,
            "status": self.status,
            "free": self.free.to_json() if self.free is not None else None,
            "residual_rel": float(self.residual_rel),
            "conditions": self.conditions,
            "levels_tried": [dict(t) for t in self.levels_tried],
            "solver": self.solver,
            "tolerances": {"accept": self.tolerances.accept, "reject": self.tolerances.reject},
            "q": self.free.q if self.free is not None else self.conditions.get("q"),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Verdict":
        try:
            level = int(doc["level"])
            q = int(doc.get("q") or doc.get("conditions", {}).get("q") or 1)
            free = None
            if doc.get("free") is not None:
                free = FreeCoefficients.from_json(doc["free"], level, q)
            tol = doc.get("tolerances", {})
            return cls(level, doc["status"], float(doc["residual_rel"]), free,
                       dict(doc.get("conditions", {})), dict(doc.get("solver", {})),
                       tuple(doc.get("levels_tried", ())),
                       Tolerances(tol.get("accept", 1e-6), tol.get("reject", 1e-4)))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed verdict: {exc}") from exc


# ---------------------------------------------------------------------------


class CongruenceSystem:
    """Residuals of the level-``level`` congruences on a normalized moment table.

    Unknowns are offsets of the heads from the measured heads, so ``x = 0``
    is the Cauchy transform's own head.
    """

    def __init__(self, table: MomentTable, level: int, dmax: int, kmax: int,
                 lambdas: Sequence | None = None):
        if dmax > table.dmax or kmax > table.kmax:
            raise InputError("congruence system exceeds the moment table")
        if dmax <= level:
            raise InputError(f"need moments of degree > level {level} (table dmax={table.dmax})")
        if kmax <= dmax:
            raise InputError("need kmax > dmax")
        self.table, self.level, self.dmax, self.kmax = table, level, dmax, kmax
        q = table.q
        self.q = q
        if lambdas is None:
            lambdas = [np.ones(1, dtype=complex)] if q == 1 else default_lambda_samples(q)
        self.lambdas = [np.asarray(l, dtype=complex) for l in lambdas]
        norm = table.normalized()
        self.normalized = norm
        index = {a: i for i, a in enumerate(table.alphas)}
        self.index = index
        # weights[d]: (S, n_alpha_d) = binom(d, alpha) lambda^alpha
        self.weights = {}
        for d in range(dmax + 1):
            alphas = multi_indices(q, d)
            self.weights[d] = np.array(
                [[multinomial(a) * lambda_power(l, a) for a in alphas] for l in self.lambdas])
        # measured slices over the full table row, used for row scales
        self.slice_rows = {}
        self.row_scale = {}
        mags = table.magnitudes()
        for d in range(dmax + 1):
            sel = [index[a] for a in multi_indices(q, d)]
            sl = self.weights[d] @ norm[sel]  # (S, table.kmax + 1)
            self.slice_rows[d] = sl
            bound = np.abs(self.weights[d]) @ mags[sel]
            self.row_scale[d] = 1.0 + np.maximum(np.max(np.abs(sl), axis=1), bound)
        # unknown layout
        self.unknowns = [(a, k) for d in range(1, level + 1)
                         for a in multi_indices(q, d) for k in range(d + 1)]
        self.head0 = np.array([norm[index[a], k] for a, k in self.unknowns], dtype=complex)
        self.count = sum((kmax - d) * len(self.lambdas) for d in range(level + 1, dmax + 1))

    @property
    def size(self) -> int:
        return len(self.unknowns)

    def series_of(self, x: np.ndarray) -> dict:
        """Per-alpha completed series (batched over rows of ``x``) for |alpha| <= level."""
        x = np.atleast_2d(x)
        heads = self.head0[None, :] + x
        out = {}
        pos = 0
        for d in range(1, self.level + 1):
            for a in multi_indices(self.q, d):
                coeffs = np.zeros((x.shape[0], self.kmax + 1), dtype=complex)
                coeffs[:, : d + 1] = heads[:, pos: pos + d + 1]
                coeffs[:, d + 1:] = self.normalized[self.index[a], d + 1: self.kmax + 1]
                out[a] = coeffs
                pos += d + 1
        return out

    def sliced(self, x: np.ndarray) -> list[TruncatedSeries]:
        """``C_d(lambda)`` for d = 1..level as batched series of shape (B, S, K+1)."""
        per_alpha = self.series_of(x)
        out = []
        for d in range(1, self.level + 1):
            stack = np.stack([per_alpha[a] for a in multi_indices(self.q, d)], axis=1)
            out.append(TruncatedSeries(np.einsum("sa,bak->bsk", self.weights[d], stack)))
        return out

    def predicted(self, x: np.ndarray) -> Hierarchy:
        x = np.atleast_2d(x)
        zero = TruncatedSeries(np.zeros((x.shape[0], len(self.lambdas), self.kmax + 1)))
        return extend_hierarchy(self.sliced(x), self.dmax, zero=zero)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        h = self.predicted(x)
        parts = []
        for d in range(self.level + 1, self.dmax + 1):
            pred = h[d].coeffs[..., d + 1: self.kmax + 1]
            meas = self.slice_rows[d][:, d + 1: self.kmax + 1]
            parts.append(((pred - meas[None]) / self.row_scale[d][None, :, None])
                         .reshape(pred.shape[0], -1))
        return np.concatenate(parts, axis=1)

    def residual_rel(self, x) -> float:
        r = self(np.atleast_2d(x))[0]
        return float(np.max(np.abs(r), initial=0.0))

    def free_coefficients(self, x) -> FreeCoefficients:
        heads = self.head0 + np.asarray(x).reshape(-1)
        rho = self.table.radius
        vals = {(a, k): complex(v / rho ** k) for (a, k), v in zip(self.unknowns, heads)}
        return FreeCoefficients(self.level, self.q, vals)

    def offsets_for(self, free: FreeCoefficients) -> np.ndarray:
        rho = self.table.radius
        heads = np.array([free.values[(a, k)] * rho ** k for a, k in self.unknowns], dtype=complex)
        return heads - self.head0

    def start_scales(self) -> np.ndarray:
        return np.array([self.row_scale[sum(a)][0] if self.q == 1 else
                         1.0 + np.max(np.abs(self.normalized[self.index[a]]))
                         for a, _ in self.unknowns])


def _fit_bounds(table: MomentTable, level: int, fit: FitSettings) -> tuple[int, int]:
    d_fit = fit.d_fit if fit.d_fit is not None else level + 2
    k_fit = fit.k_fit if fit.k_fit is not None else 2 * level + 6
    return min(d_fit, table.dmax), min(k_fit, table.kmax)


def _check_table(table: MomentTable, level: int) -> None:
    if level < 0:
        raise InputError("level must be nonnegative")
    if table.dmax < level + 1:
        raise InputError(f"level {level} needs moments up to degree {level + 1}, table has {table.dmax}")
    if table.kmax < table.dmax + 1:
        raise InputError("table needs kmax > dmax")


def _conditions(system: CongruenceSystem, fit_system: CongruenceSystem | None) -> dict:
    out = {"q": system.q, "D_used": system.dmax, "K_used": system.kmax,
           "count": system.count, "slices": len(system.lambdas)}
    if fit_system is not None:
        out.update({"D_fit": fit_system.dmax, "K_fit": fit_system.kmax})
    return out


def _held_out(table: MomentTable, level: int, lambdas) -> CongruenceSystem:
    return CongruenceSystem(table, level, table.dmax, table.kmax, lambdas)


def test_level0(table: MomentTable, tol: Tolerances = Tolerances()) -> Verdict:
    """Linear moment condition: every tail ``A_k(alpha)``, ``k > |alpha| >= 1``, vanishes."""
    _check_table(table, 0)
    norm = table.normalized()
    mags = table.magnitudes()
    worst = 0.0
    for i, alpha in enumerate(table.alphas):
        d = sum(alpha)
        if d == 0:
            continue
        scale = 1.0 + mags[i]
        worst = max(worst, float(np.max(np.abs(norm[i, d + 1:]), initial=0.0) / scale))
    cond = {"q": table.q, "D_used": table.dmax, "K_used": table.kmax,
            "count": sum(table.kmax - sum(a) for a in table.alphas if sum(a) > 0)}
    return Verdict(0, tol.classify(worst), worst, None, cond,
                   {"method": "linear"}, tolerances=tol)


test_level0.__test__ = False  # not a pytest test


def solve_level(table: MomentTable, level: int, fit: FitSettings = FitSettings(),
                tol: Tolerances = Tolerances()) -> Verdict:
    """Fit the free heads at ``level`` and classify by the held-out residual."""
    _check_table(table, level)
    lambdas = fit.lambda_samples
    d_fit, k_fit = _fit_bounds(table, level, fit)
    if d_fit <= level:
        d_fit = level + 1
    fit_system = CongruenceSystem(table, level, d_fit, max(k_fit, d_fit + 1), lambdas)
    full = _held_out(table, level, fit_system.lambdas)
    rng = np.random.default_rng(fit.seed)
    n = fit_system.size
    scales = fit_system.start_scales() if n else np.zeros(0)
    starts = [np.zeros(n, dtype=complex)]
    for _ in range(fit.starts):
        g = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)
        starts.append(0.5 * scales * g)
    runs = []
    best = None
    for i, x0 in enumerate(starts):
        res = levenberg_marquardt(fit_system, x0, max_iter=fit.max_iter, fd_step=fit.fd_step,
                                  target=0.01 * tol.accept)
        r = float(np.max(np.abs(res.residual), initial=0.0))
        runs.append({"start": i, "iterations": res.iterations, "fit_residual": r,
                     "reason": res.reason})
        if best is None or r < best[0]:
            best = (r, i, res.x)
        if r <= 0.01 * tol.accept:
            break
    fit_res, best_start, x = best
    resid = full.residual_rel(x)
    solver = {"method": "levenberg-marquardt", "seed": fit.seed, "starts_run": len(runs),
              "best_start": best_start, "fit_residual": fit_res, "runs": runs}
    return Verdict(level, tol.classify(resid), resid,
                   fit_system.free_coefficients(x) if level > 0 else None,
                   _conditions(full, fit_system), solver, tolerances=tol)


def solve_level1(table: MomentTable, fit: FitSettings = FitSettings(),
                 tol: Tolerances = Tolerances()) -> Verdict:
    """Closed-form level-1 test for ``q = 1`` from the first two congruences of ``C_2``.

    ``A_3(2) = 2 A_3(1) c_0 + 2 A_2(1) c_1`` and
    ``A_4(2) = 2 A_4(1) c_0 + 2 A_3(1) c_1 + A_2(1)^2``; falls back to
    :func:`solve_level` when ``A_3(1)^2 - A_2(1) A_4(1)`` is below the floor.
    """
    if table.q != 1:
        raise InputError("solve_level1 requires q = 1")
    _check_table(table, 1)
    if table.dmax < 2 or table.kmax < 4:
        raise InputError("closed form needs dmax >= 2 and kmax >= 4")
    a = table.normalized()
    a1, a2 = a[1], a[2]
    det = a1[3] ** 2 - a1[2] * a1[4]
    floor = DET_FLOOR * (1.0 + table.magnitudes()[table.alphas.index((1,))]) ** 2
    if abs(det) <= floor:
        v = solve_level(table, 1, fit, tol)
        solver = dict(v.solver, fallback=True, determinant=[det.real, det.imag])
        return Verdict(v.level, v.status, v.residual_rel, v.free, v.conditions, solver,
                       tolerances=tol)
    mat = np.array([[2 * a1[3], 2 * a1[2]], [2 * a1[4], 2 * a1[3]]])
    rhs = np.array([a2[3], a2[4] - a1[2] ** 2])
    c0, c1 = np.linalg.solve(mat, rhs)
    d_fit, k_fit = _fit_bounds(table, 1, fit)
    full = _held_out(table, 1, None)
    x = np.array([c0, c1]) - full.head0
    resid = full.residual_rel(x)
    solver = {"method": "closed-form", "fallback": False, "determinant": [det.real, det.imag]}
    cond = _conditions(full, None)
    cond.update({"D_fit": 2, "K_fit": 4})
    return Verdict(1, tol.classify(resid), resid, full.free_coefficients(x), cond, solver,
                   tolerances=tol)


def minimal_level_search(table: MomentTable, lmax: int, fit: FitSettings = FitSettings(),
                         tol: Tolerances = Tolerances()) -> Verdict:
    """Smallest level in ``0..lmax`` with a bounds verdict, else the best failure."""
    if lmax < 0:
        raise InputError("lmax must be nonnegative")
    tried = []
    best = None
    for level in range(lmax + 1):
        if level == 0:
            v = test_level0(table, tol)
        elif level == 1 and table.q == 1:
            v = solve_level1(table, fit, tol)
        else:
            v = solve_level(table, level, fit, tol)
        tried.append({"level": level, "status": v.status, "residual_rel": v.residual_rel})
        if v.bounds:
            return _annotate(v, tried)
        if best is None or v.residual_rel < best.residual_rel:
            best = v
    return _annotate(best, tried)


def _annotate(v: Verdict, tried: list) -> Verdict:
    return Verdict(v.level, v.status, v.residual_rel, v.free, v.conditions, v.solver,
                   tuple(tried), v.tolerances)


# ---------------------------------------------------------------------------
# completed series for cross-checks


def fitted_hierarchy(table: MomentTable, verdict: Verdict) -> Hierarchy:
    """``(l, C_1, ..., C_D)`` as normalized series: solved heads, generated heads, measured tails.

    For ``q = 1`` only. Terms above the level take their head from the
    recursion and their tail from the table, so the result verifies exactly
    when (and only when) the congruences hold.
    """
    if table.q != 1:
        raise InputError("use fitted_family for q > 1")
    system = _held_out(table, verdict.level, None)
    return _completed(system, verdict)[0]


def _completed(system: CongruenceSystem, verdict: Verdict):
    level = verdict.level
    x = system.offsets_for(verdict.free) if level > 0 else np.zeros(0)
    pred = system.predicted(x[None, :])
    terms = []
    for d in range(system.dmax + 1):
        c = np.array(pred[d].coeffs[0, 0], dtype=complex)
        if d > level:
            c[d + 1:] = system.slice_rows[d][0, d + 1: system.kmax + 1]
        terms.append(TruncatedSeries(c))
    return Hierarchy(level, terms), pred


def fitted_family(table: MomentTable, verdict: Verdict) -> MomentFamily:
    """Completed multi-indexed family (normalized), heads of ``|alpha| > l`` by lambda-slicing."""
    level = verdict.level
    system = _held_out(table, level, [np.eye(table.q)[0]])
    x = system.offsets_for(verdict.free) if level > 0 else np.zeros(0)
    per_alpha = system.series_of(x[None, :]) if level > 0 else {}
    entries = {}
    zero = np.zeros(system.kmax + 1, dtype=complex)
    entries[(0,) * table.q] = TruncatedSeries(np.concatenate([[level], zero[1:]]))
    for a, c in per_alpha.items():
        entries[a] = TruncatedSeries(c[0])
    for d in range(level + 1, system.dmax + 1):
        def slice_fn(lam, d=d):
            sub = CongruenceSystem(table, level, system.dmax, system.kmax, [np.asarray(lam)])
            return TruncatedSeries(sub.predicted(x[None, :])[d].coeffs[0, 0])
        heads = family_coefficients(slice_fn, table.q, d)
        for a, s in heads.items():
            c = np.array(s.coeffs)
            c[d + 1:] = system.normalized[system.index[a], d + 1: system.kmax + 1]
            entries[a] = TruncatedSeries(c)
    return MomentFamily(table.q, entries, system.dmax)
