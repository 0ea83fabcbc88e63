"""Synthetic boundary curves with known answers.

Every generator returns ``(CurveSpec, GroundTruth)``. ``expected_level`` is
the minimal sheet count over the base point of a positive chain bounded by
the curve (``None`` when no such chain exists through any level);
``sheets`` is the sheet count of the chain the generator actually built
over the disk, and ``evaluate(z)`` returns that chain's fiber values.

The two differ when the projective closure of the chain avoids the
projection centre ``[0:0:1]``: then the whole closure is a boundary-free
algebraic curve, subtracting it leaves a chain with no sheets over the base
point, and the minimal level drops to 0.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .curve import CurveSpec, Loop, TrigSeries, reverse, union, with_multiplicity
from .errors import InputError, NumericalError

N_SAMPLES = 4096
POLE_MARGIN = 1e-6
BRANCH_TOL = 1e-6
CLOSE_TOL = 1e-8


@dataclass(frozen=True)
class GroundTruth:
    kind: str
    expected_level: int | None
    sheets: int | None = None
    params: dict = field(default_factory=dict)
    oracle_only: bool = False
    evaluator: Callable[[complex], np.ndarray] | None = field(default=None, repr=False,
                                                              compare=False)

    def __post_init__(self):
        if self.evaluator is not None and self.sheets is not None:
            probe = self.params.get("probe")
            if probe is not None and len(self.evaluator(complex(*probe))) != self.sheets:
                raise ValueError("evaluator cardinality differs from the sheet count")

    def evaluate(self, z: complex) -> np.ndarray:
        if self.evaluator is None:
            raise InputError(f"no sheet evaluator for a {self.kind} curve")
        return np.asarray(self.evaluator(complex(z)), dtype=complex)

    def to_json(self) -> dict:
        return {"kind": self.kind, "expected_level": self.expected_level,
                "sheets": self.sheets, "oracle_only": self.oracle_only,
                "params": self.params}

    @classmethod
    def from_json(cls, doc: dict) -> "GroundTruth":
        """Rebuild a truth record, including its evaluator, from the sidecar JSON."""
        try:
            kind, params = doc["kind"], dict(doc.get("params", {}))
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed truth document: {exc}") from exc
        evaluator = _evaluator_from_params(kind, params)
        return cls(kind, doc.get("expected_level"), doc.get("sheets"), params,
                   bool(doc.get("oracle_only", False)), evaluator)


def _cjson(values) -> list:
    return [[float(complex(v).real), float(complex(v).imag)] for v in np.atleast_1d(values)]


def _cparse(items) -> np.ndarray:
    return np.array([complex(a, b) for a, b in items], dtype=complex)


def _circle(center: complex, radius: float) -> TrigSeries:
    return TrigSeries.from_fourier({0: complex(center), 1: complex(radius)})


def _check_circle(center: complex, radius: float) -> None:
    if radius <= 0:
        raise InputError("radius must be positive")
    if abs(abs(center) - radius) < 1e-3:
        raise InputError("circle passes through the base point z=0")


# ---------------------------------------------------------------------------
# graphs


def _rational(num: np.ndarray, den: np.ndarray):
    """f = num/den with ascending coefficient arrays."""
    def f(z):
        return np.polyval(num[::-1], z) / np.polyval(den[::-1], z)
    return f


def _trim(c: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=complex)
    nz = np.nonzero(c)[0]
    return c[: nz[-1] + 1] if nz.size else c[:1]


def _graph_level(num, den, zero_inside: bool, signed_mult: int):
    """Minimal level for the graph of num/den over a disk on which it is pole-free."""
    deg_num, deg_den = len(num) - 1, len(den) - 1
    # closure meets [0:0:1] iff f has a finite pole or grows faster than z
    hits_centre = deg_den > 0 or deg_num >= deg_den + 2
    if not zero_inside or signed_mult == 0:
        return 0
    if signed_mult > 0:
        return signed_mult if hits_centre else 0
    return None if hits_centre else 0


def graph_boundary(num: Sequence[complex], den: Sequence[complex] = (1,), center: complex = 0,
                   radius: float = 1.0, orientation: int = 1,
                   multiplicity: int = 1) -> tuple[CurveSpec, GroundTruth]:
    """Boundary of the graph ``w = num(z)/den(z)`` over the disk ``|z - center| <= radius``.

    Coefficient arrays are in ascending powers of ``z``. Polynomial graphs
    are emitted exactly as Fourier data; rational ones as samples.
    """
    _check_circle(center, radius)
    if orientation not in (1, -1):
        raise InputError("orientation must be +1 or -1")
    num = _trim(num)
    den = _trim(den)
    if not np.any(den):
        raise InputError("denominator is identically zero")
    poles = np.roots(den[::-1]) if len(den) > 1 else np.zeros(0)
    dist = np.abs(np.abs(poles - center) - radius)
    if poles.size and dist.min() < max(POLE_MARGIN, 1e-3 * radius):
        raise InputError("f has a pole on or near the circle")
    if poles.size and np.any(np.abs(poles - center) < radius):
        raise InputError("f has a pole inside the disk; no graph chain exists over it")
    z_series = _circle(center, radius)
    if len(den) == 1:
        # w(theta) = sum_j a_j (center + radius e^{i theta})^j, expanded exactly
        poly = np.polynomial.Polynomial(num / den[0])
        shifted = poly(np.polynomial.Polynomial([center, radius]))
        w = TrigSeries.from_fourier({m: c for m, c in enumerate(shifted.coef)})
    else:
        theta = 2 * np.pi * np.arange(N_SAMPLES) / N_SAMPLES
        w = TrigSeries.from_samples(_rational(num, den)(center + radius * np.exp(1j * theta)))
    spec = CurveSpec((Loop(z_series, (w,), multiplicity),), 1)
    if orientation < 0:
        spec = reverse(spec)
    spec.check_base_point()
    zero_inside = abs(center) < radius
    signed = orientation * multiplicity
    params = {"generator": "graph", "num": _cjson(num), "den": _cjson(den),
              "center": _cjson(center)[0], "radius": float(radius),
              "orientation": orientation, "multiplicity": multiplicity}
    sheets = signed if zero_inside else 0
    evaluator = None
    if zero_inside and signed > 0:
        evaluator = _evaluator_from_params("graph", params)
        params["probe"] = _cjson(center)[0]
    level = _graph_level(num, den, zero_inside, signed)
    return spec, GroundTruth("graph" if orientation > 0 else "reversed", level, sheets,
                             params, False, evaluator)


def random_graph(rng: np.random.Generator, degree: int = 3, rational: bool = False,
                 center: complex = 0, radius: float = 1.0):
    """Graph of a random polynomial (optionally divided by a pole-free linear factor)."""
    num = (rng.standard_normal(degree + 1) + 1j * rng.standard_normal(degree + 1)) / 2
    num[-1] = num[-1] / abs(num[-1])  # unit leading coefficient keeps the degree exact
    den = np.array([1.0 + 0j])
    if rational:
        while True:
            pole = center + radius * (1.5 + 2 * rng.uniform()) * np.exp(2j * np.pi * rng.uniform())
            if abs(pole) > 1e-3:
                break
        den = np.array([-pole, 1.0])
    return graph_boundary(num, den, center, radius)


# ---------------------------------------------------------------------------
# algebraic multi-sections


def _qpoly(coeffs: np.ndarray, z: complex) -> np.ndarray:
    """Coefficients (ascending in w) of Q(z, .) for Q[i, j] = coeff of z^i w^j."""
    zp = z ** np.arange(coeffs.shape[0])
    return zp @ coeffs


def _roots_ascending(c: np.ndarray) -> np.ndarray:
    return np.roots(c[::-1])


def _fiber_roots(coeffs: np.ndarray, zs: np.ndarray) -> np.ndarray:
    """Roots of ``Q(z, .)`` for every ``z`` in ``zs`` via batched companion matrices."""
    c = (zs[:, None] ** np.arange(coeffs.shape[0])[None, :]) @ coeffs  # ascending in w
    m = c.shape[1] - 1
    comp = np.zeros((zs.size, m, m), dtype=complex)
    comp[:, 0, :] = -c[:, -2::-1] / c[:, -1:]
    comp[:, np.arange(1, m), np.arange(m - 1)] = 1
    return np.linalg.eigvals(comp)


def _newton_roots(c: np.ndarray, roots: np.ndarray, steps: int = 1) -> np.ndarray:
    dc = c[1:] * np.arange(1, len(c))
    for _ in range(steps):
        roots = roots - np.polyval(c[::-1], roots) / np.polyval(dc[::-1], roots)
    return roots


def _track(coeffs: np.ndarray, center: complex, radius: float, steps: int) -> np.ndarray:
    """Roots of Q(z(theta), .) on ``steps`` uniform theta nodes plus the closing node."""
    theta = 2 * np.pi * np.arange(steps + 1) / steps
    out = np.empty((steps + 1, coeffs.shape[1] - 1), dtype=complex)
    out[0] = _roots_ascending(_qpoly(coeffs, center + radius))
    prev_step = np.zeros_like(out[0])

    def advance(r0, prev_motion, t0, t1, depth=0):
        c = _qpoly(coeffs, center + radius * np.exp(1j * t1))
        pred = r0 + prev_motion * (t1 - t0)
        r1 = _newton_roots(c, pred, steps=1)
        motion = np.abs(r1 - r0)
        sep = np.abs(r1[:, None] - r1[None, :]) + np.diag(np.full(len(r1), np.inf))
        if len(r1) > 1 and sep.min() < 10 * motion.max() or not np.all(np.isfinite(r1)):
            if depth > 12:
                raise NumericalError("root tracking step collapsed (branch point near the circle?)")
            tm = 0.5 * (t0 + t1)
            rm, vm = advance(r0, prev_motion, t0, tm, depth + 1)
            return advance(rm, vm, tm, t1, depth + 1)
        r1 = _newton_roots(c, r1, steps=2)
        return r1, (r1 - r0) / (t1 - t0)

    for j in range(steps):
        out[j + 1], prev_step = advance(out[j], prev_step, theta[j], theta[j + 1])
    return out


def _algebraic_level(coeffs: np.ndarray, m: int, zero_inside: bool, signed: int):
    i, j = np.nonzero(np.abs(coeffs) > 0)
    total = int(np.max(i + j))
    # the closure avoids [0:0:1] iff Q carries a pure w^(total degree) term
    hits_centre = not (total == m and abs(coeffs[0, m]) > 0)
    if not zero_inside or signed == 0:
        return 0
    if signed > 0:
        return signed * m if hits_centre else 0
    return None if hits_centre else 0


def algebraic_boundary(coeffs, center: complex = 0, radius: float = 1.0, multiplicity: int = 1,
                       steps: int = N_SAMPLES) -> tuple[CurveSpec, GroundTruth]:
    """Boundary over a circle of the multi-section ``Q(z, w) = 0``.

    ``coeffs[i][j]`` is the coefficient of ``z^i w^j``. The roots of
    ``Q(z(theta), .)`` are tracked around the circle and grouped into closed
    loops by their monodromy orbits. Truth declarations assume ``Q`` is
    irreducible.
    """
    _check_circle(center, radius)
    coeffs = np.atleast_2d(np.asarray(coeffs, dtype=complex))
    m = coeffs.shape[1] - 1
    while m > 0 and not np.any(coeffs[:, m]):
        m -= 1
    coeffs = coeffs[:, : m + 1]
    if m < 1:
        raise InputError("Q must have positive degree in w")
    lead = coeffs[:, m]
    theta = 2 * np.pi * np.arange(steps) / steps
    zc = center + radius * np.exp(1j * theta)
    if np.min(np.abs(np.polyval(lead[::-1], zc))) < BRANCH_TOL:
        raise InputError("leading coefficient in w vanishes on the circle (sheet escapes to infinity)")
    if m > 1:
        fibers = _fiber_roots(coeffs, zc)
        sep = np.abs(fibers[:, :, None] - fibers[:, None, :]) + np.diag(np.full(m, np.inf))
        j = int(np.argmin(sep.min(axis=(1, 2))))
        if sep[j].min() < BRANCH_TOL * (1 + np.abs(fibers[j]).max()):
            raise InputError(f"branch point on the circle near z={complex(zc[j]):.6g}")
    base = _qpoly(coeffs, 0j)
    zero_inside = abs(center) < radius
    if zero_inside:
        if abs(base[m]) < BRANCH_TOL:
            raise InputError("fiber over the base point is not finite")
        r0 = _roots_ascending(base)
        if m > 1:
            sep = np.abs(r0[:, None] - r0[None, :]) + np.diag(np.full(m, np.inf))
            if sep.min() < BRANCH_TOL:
                raise InputError("discriminant vanishes at the base point; fiber over 0 is degenerate")
    track = _track(coeffs, center, radius, steps)
    # monodromy: match end roots to start roots
    end, start = track[-1], track[0]
    perm = np.argmin(np.abs(end[:, None] - start[None, :]), axis=1)
    if sorted(perm.tolist()) != list(range(m)):
        raise NumericalError("monodromy matching is not a permutation")
    if np.max(np.abs(end - start[perm])) > CLOSE_TOL * (1 + np.max(np.abs(start))):
        raise NumericalError("tracked branches do not close up")
    loops, seen = [], set()
    for i0 in range(m):
        if i0 in seen:
            continue
        orbit, i = [], i0
        while i not in seen:
            seen.add(i)
            orbit.append(i)
            i = int(perm[i])
        w = np.concatenate([track[:-1, i] for i in orbit])
        turns = len(orbit)
        th = 2 * np.pi * np.arange(steps * turns) / steps
        z = center + radius * np.exp(1j * th)
        loops.append(Loop(TrigSeries.from_samples(z), (TrigSeries.from_samples(w),), multiplicity))
    spec = CurveSpec(tuple(loops), 1)
    spec.check_base_point()
    disk = center + radius * np.sqrt(np.linspace(0, 1, 24))[:, None] * np.exp(
        2j * np.pi * np.arange(64) / 64)[None, :]
    lead_in_disk = np.min(np.abs(np.polyval(lead[::-1], disk.ravel())))
    lead_roots = np.roots(lead[::-1]) if np.count_nonzero(lead) > 1 else np.zeros(0)
    poles_inside = bool(lead_roots.size and np.any(np.abs(lead_roots - center) < radius))
    params = {"generator": "algebraic", "coeffs": [_cjson(row) for row in coeffs],
              "center": _cjson(center)[0], "radius": float(radius),
              "multiplicity": multiplicity, "loops": len(loops)}
    if poles_inside or lead_in_disk < BRANCH_TOL:
        return spec, GroundTruth("algebraic", None, None, params, oracle_only=True)
    sheets = m * multiplicity if zero_inside else 0
    evaluator = None
    if zero_inside and multiplicity == 1:
        evaluator = _evaluator_from_params("algebraic", params)
        params["probe"] = _cjson(center)[0]
    level = _algebraic_level(coeffs, m, zero_inside, multiplicity)
    return spec, GroundTruth("algebraic", level, sheets, params, False, evaluator)


# ---------------------------------------------------------------------------
# transcendental (non-bounding) loops

TRANSCENDENTAL_KINDS = ("exp_cos", "exp_z_plus_inv")


def transcendental_boundary(kind: str = "exp_cos", center: complex = 0, radius: float = 1.0,
                            scale: float = 1.0) -> tuple[CurveSpec, GroundTruth]:
    """Loops whose fiber is a non-algebraic function of the circle parameter.

    ``exp_cos``: ``w = scale * exp(cos theta)``; ``exp_z_plus_inv``:
    ``w = scale * exp(e^{i theta} + e^{-i theta})`` (the restriction of
    ``exp(z + 1/z)`` to the unit circle).
    """
    _check_circle(center, radius)
    theta = 2 * np.pi * np.arange(N_SAMPLES) / N_SAMPLES
    if kind == "exp_cos":
        w = np.exp(np.cos(theta))
    elif kind == "exp_z_plus_inv":
        w = np.exp(2 * np.cos(theta))
    else:
        raise InputError(f"unknown transcendental kind {kind!r}; choose from {TRANSCENDENTAL_KINDS}")
    loop = Loop(_circle(center, radius), (TrigSeries.from_samples(scale * w.astype(complex)),), 1)
    spec = CurveSpec((loop,), 1)
    spec.check_base_point()
    params = {"generator": "transcendental", "kind": kind, "center": _cjson(center)[0],
              "radius": float(radius), "scale": float(scale)}
    return spec, GroundTruth("transcendental", None, None, params)


# ---------------------------------------------------------------------------
# q > 1: graphs in higher-dimensional projective space


def graph_boundary_multi(polys: Sequence[Sequence[complex]], center: complex = 0,
                         radius: float = 1.0) -> tuple[CurveSpec, GroundTruth]:
    """Boundary of the graph ``z -> (f_1(z), ..., f_q(z))`` of polynomials over a disk."""
    _check_circle(center, radius)
    ws = []
    for c in polys:
        shifted = np.polynomial.Polynomial(_trim(c))(np.polynomial.Polynomial([center, radius]))
        ws.append(TrigSeries.from_fourier({m: v for m, v in enumerate(shifted.coef)}))
    spec = CurveSpec((Loop(_circle(center, radius), tuple(ws), 1),), len(ws))
    spec.check_base_point()
    zero_inside = abs(center) < radius
    params = {"generator": "graph_multi", "polys": [_cjson(_trim(c)) for c in polys],
              "center": _cjson(center)[0], "radius": float(radius)}
    hits = any(len(_trim(c)) > 2 for c in polys)
    level = (1 if hits else 0) if zero_inside else 0
    evaluator = _evaluator_from_params("graph_multi", params) if zero_inside else None
    return spec, GroundTruth("graph", level, 1 if zero_inside else 0, params, False, evaluator)


# ---------------------------------------------------------------------------
# sums


def sum_boundaries(a: CurveSpec, b: CurveSpec, truth_a: GroundTruth | None = None,
                   truth_b: GroundTruth | None = None):
    """Union of loops; with truths given, returns ``(spec, GroundTruth)``."""
    spec = union(a, b)
    if truth_a is None and truth_b is None:
        return spec
    if truth_b is None:  # b is the empty curve
        return spec, truth_a
    if truth_a is None:
        return spec, truth_b
    la, lb = truth_a.expected_level, truth_b.expected_level
    level = la + lb if la is not None and lb is not None else None
    sa, sb = truth_a.sheets, truth_b.sheets
    sheets = sa + sb if sa is not None and sb is not None else None
    params = {"generator": "sum", "parts": [truth_a.to_json(), truth_b.to_json()]}
    evaluator = None
    if truth_a.evaluator is not None or truth_b.evaluator is not None:
        evaluator = _evaluator_from_params("sum", params)
    oracle = truth_a.oracle_only or truth_b.oracle_only
    return spec, GroundTruth("sum", level, sheets, params, oracle, evaluator)


def _evaluator_from_params(kind: str, params: dict):
    gen = params.get("generator")
    if gen == "graph":
        num, den = _cparse(params["num"]), _cparse(params["den"])
        if params.get("orientation", 1) * params.get("multiplicity", 1) <= 0:
            return None
        mult = params.get("orientation", 1) * params.get("multiplicity", 1)
        f = _rational(num, den)
        return lambda z: np.full(mult, f(z), dtype=complex)
    if gen == "algebraic":
        coeffs = np.array([_cparse(row) for row in params["coeffs"]])
        if params.get("multiplicity", 1) != 1:
            return None
        return lambda z: _roots_ascending(_qpoly(coeffs, z))
    if gen == "graph_multi":
        polys = [_cparse(c) for c in params["polys"]]
        return lambda z: np.array([[np.polyval(c[::-1], z)] for c in polys])
    if gen == "sum":
        parts = [_evaluator_from_params(p["kind"], p["params"]) for p in params["parts"]]
        if any(p is None for p in parts):
            live = [p for p in parts if p is not None]
            if not live:
                return None
            parts = live
        return lambda z: np.concatenate([np.atleast_1d(p(z)) for p in parts])
    return None
