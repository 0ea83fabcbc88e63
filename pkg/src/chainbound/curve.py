"""Boundary curves in a normalized affine chart.

A curve is a list of closed loops ``theta -> (z(theta), w_1(theta), ...,
w_q(theta))`` with integer multiplicities. ``z`` is the base coordinate with
the base point at ``z = 0``; the ``w_j`` are the fiber coordinates. Every
coordinate is a 2*pi-periodic function stored as a trigonometric polynomial,
either given directly by its Fourier coefficients or recovered from uniform
samples by trigonometric interpolation.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, Sequence

import jsonschema
import numpy as np

from .errors import InputError

DELTA_MIN = 1e-3
MIN_SAMPLES = 16

_ENCODING = {
    "oneOf": [
        {
            "type": "object",
            "properties": {
                "fourier": {
                    "type": "object",
                    "patternProperties": {
                        r"^[+-]?\d+$": {"$ref": "#/definitions/complex"},
                    },
                    "additionalProperties": False,
                    "minProperties": 1,
                },
            },
            "required": ["fourier"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "samples": {"type": "array", "items": {"$ref": "#/definitions/complex"}},
            },
            "required": ["samples"],
            "additionalProperties": False,
        },
    ]
}

CURVE_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "definitions": {
        "complex": {
            "type": "array",
            "items": {"type": "number"},
            "minItems": 2,
            "maxItems": 2,
        },
        "encoding": _ENCODING,
    },
    "type": "object",
    "properties": {
        "q": {"type": "integer", "minimum": 1},
        "chart": {"type": "object"},
        "loops": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "properties": {
                    "multiplicity": {"type": "integer"},
                    "z": {"$ref": "#/definitions/encoding"},
                    "w": {"type": "array", "items": {"$ref": "#/definitions/encoding"}},
                },
                "required": ["multiplicity", "z", "w"],
            },
        },
    },
    "required": ["q", "loops"],
}


class TrigSeries:
    """A 2*pi-periodic trigonometric polynomial ``sum_m c_m e^{i m theta}``."""

    __slots__ = ("freqs", "coeffs", "samples")

    def __init__(self, freqs, coeffs, samples: np.ndarray | None = None):
        freqs = np.asarray(freqs, dtype=int)
        coeffs = np.asarray(coeffs, dtype=complex)
        if freqs.shape != coeffs.shape or freqs.ndim != 1:
            raise InputError("frequency and coefficient arrays must match")
        if not np.all(np.isfinite(coeffs)):
            raise InputError("non-finite coefficient")
        self.freqs = freqs
        self.coeffs = coeffs
        # original samples, kept for lossless re-serialization
        self.samples = samples

    @classmethod
    def from_fourier(cls, mapping: Mapping[int, complex]) -> "TrigSeries":
        items = sorted((int(k), complex(v)) for k, v in mapping.items())
        return cls([k for k, _ in items], [v for _, v in items])

    @classmethod
    def from_samples(cls, values) -> "TrigSeries":
        x = np.asarray(values, dtype=complex)
        n = x.size
        if x.ndim != 1 or n < MIN_SAMPLES or n % 2:
            raise InputError(f"sample count must be even and >= {MIN_SAMPLES}, got {n}")
        if not np.all(np.isfinite(x)):
            raise InputError("non-finite sample")
        c = np.fft.fft(x) / n
        half = n // 2
        freqs = np.concatenate([np.arange(0, half), [half, -half], np.arange(-half + 1, 0)])
        coeffs = np.concatenate([c[:half], [c[half] / 2, c[half] / 2], c[half + 1:]])
        x = x.copy()
        x.setflags(write=False)
        return cls(freqs, coeffs, samples=x)

    @classmethod
    def constant(cls, value: complex) -> "TrigSeries":
        return cls([0], [value])

    @property
    def is_sampled(self) -> bool:
        return self.samples is not None

    @property
    def max_freq(self) -> int:
        return int(np.max(np.abs(self.freqs))) if self.freqs.size else 0

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        phase = np.exp(1j * np.multiply.outer(theta, self.freqs))
        return phase @ self.coeffs

    def derivative(self) -> "TrigSeries":
        return TrigSeries(self.freqs, 1j * self.freqs * self.coeffs)

    def on_grid(self, n: int) -> np.ndarray:
        """Values at ``theta_j = 2 pi j / n`` (exact, aliasing folded in)."""
        folded = np.zeros(n, dtype=complex)
        np.add.at(folded, np.mod(self.freqs, n), self.coeffs)
        return np.fft.ifft(folded) * n

    def scaled(self, factor: complex) -> "TrigSeries":
        samples = None if self.samples is None else self.samples * factor
        return TrigSeries(self.freqs, self.coeffs * factor, samples)

    def reversed(self) -> "TrigSeries":
        samples = None
        if self.samples is not None:
            samples = np.roll(self.samples[::-1], 1)
        return TrigSeries(-self.freqs, self.coeffs, samples)

    def to_json(self) -> dict:
        if self.samples is not None:
            return {"samples": [[float(v.real), float(v.imag)] for v in self.samples]}
        return {"fourier": {str(int(k)): [float(v.real), float(v.imag)]
                            for k, v in zip(self.freqs, self.coeffs)}}


@dataclass(frozen=True)
class Loop:
    z: TrigSeries
    w: tuple[TrigSeries, ...]
    multiplicity: int = 1

    def __post_init__(self):
        object.__setattr__(self, "w", tuple(self.w))

    @property
    def q(self) -> int:
        return len(self.w)

    @property
    def max_freq(self) -> int:
        return max([self.z.max_freq] + [w.max_freq for w in self.w])

    def grid(self, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(z, z', w)`` on ``n`` uniform nodes; ``w`` has shape ``(q, n)``."""
        z = self.z.on_grid(n)
        dz = self.z.derivative().on_grid(n)
        w = np.array([wj.on_grid(n) for wj in self.w]).reshape(self.q, n)
        return z, dz, w

    def reversed(self) -> "Loop":
        return Loop(self.z.reversed(), tuple(w.reversed() for w in self.w), self.multiplicity)


@dataclass(frozen=True)
class CurveSpec:
    loops: tuple[Loop, ...]
    q: int
    chart: dict = field(default_factory=dict)
    delta_min: float = DELTA_MIN

    def __post_init__(self):
        object.__setattr__(self, "loops", tuple(self.loops))
        for i, loop in enumerate(self.loops):
            if loop.q != self.q:
                raise InputError(f"loop {i} has {loop.q} fiber coordinates, expected {self.q}")

    @classmethod
    def empty(cls, q: int) -> "CurveSpec":
        """Loop-free curve; only meaningful as the identity for :func:`union`."""
        return cls((), q)

    def check_base_point(self) -> None:
        """Raise if some loop passes within ``delta_min`` of ``z = 0``."""
        for i, loop in enumerate(self.loops):
            n = max(1024, 8 * loop.z.max_freq)
            theta = 2 * np.pi * np.arange(n) / n
            mod = np.abs(loop.z.on_grid(n))
            j = int(np.argmin(mod))
            if mod[j] < self.delta_min:
                raise InputError(
                    f"loop {i} comes within {mod[j]:.3g} of the base point "
                    f"(delta_min={self.delta_min:g}) at theta={theta[j]:.6f}")

    def distance_to(self, point: complex, n: int | None = None) -> float:
        """Minimum distance from ``point`` to the projected curve (grid estimate)."""
        best = np.inf
        for loop in self.loops:
            m = n or max(2048, 16 * loop.z.max_freq)
            best = min(best, float(np.min(np.abs(loop.z.on_grid(m) - point))))
        return best


def evaluate(loop: Loop, theta) -> tuple[Any, Any, np.ndarray]:
    """``(z, z', (w_1..w_q))`` at ``theta``; exact trigonometric evaluation."""
    z = loop.z(theta)
    dz = loop.z.derivative()(theta)
    w = np.array([wj(theta) for wj in loop.w])
    return z, dz, w


def rotate_chart(spec: CurveSpec, phi: float) -> CurveSpec:
    """Replace ``z`` by ``e^{i phi} z`` on every loop; fibers are untouched."""
    rot = np.exp(1j * phi)
    loops = tuple(replace(loop, z=loop.z.scaled(rot)) for loop in spec.loops)
    return replace(spec, loops=loops)


def scale_chart(spec: CurveSpec, t: complex) -> CurveSpec:
    """Replace ``z`` by ``t z``; the base point stays at 0."""
    loops = tuple(replace(loop, z=loop.z.scaled(t)) for loop in spec.loops)
    return replace(spec, loops=loops)


def reverse(spec: CurveSpec) -> CurveSpec:
    return replace(spec, loops=tuple(loop.reversed() for loop in spec.loops))


def with_multiplicity(spec: CurveSpec, factor: int) -> CurveSpec:
    loops = tuple(replace(loop, multiplicity=loop.multiplicity * factor) for loop in spec.loops)
    return replace(spec, loops=loops)


def union(a: CurveSpec, b: CurveSpec) -> CurveSpec:
    if a.q != b.q:
        raise InputError(f"cannot join curves with q={a.q} and q={b.q}")
    return CurveSpec(a.loops + b.loops, a.q, dict(a.chart), min(a.delta_min, b.delta_min))


def _decode(enc: Mapping) -> TrigSeries:
    if "fourier" in enc:
        return TrigSeries.from_fourier(
            {int(k): complex(v[0], v[1]) for k, v in enc["fourier"].items()})
    return TrigSeries.from_samples([complex(v[0], v[1]) for v in enc["samples"]])


def load_curve(document, delta_min: float = DELTA_MIN) -> CurveSpec:
    """Validate a curve document (dict, JSON string or path) into a :class:`CurveSpec`."""
    if isinstance(document, Path) or (isinstance(document, str) and not document.lstrip().startswith("{")):
        try:
            document = json.loads(Path(document).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read curve document: {exc}") from exc
    elif isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise InputError(f"malformed curve JSON: {exc}") from exc
    try:
        jsonschema.validate(document, CURVE_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise InputError(f"curve document violates schema: {exc.message}") from exc
    q = document["q"]
    loops = []
    for i, entry in enumerate(document["loops"]):
        if len(entry["w"]) != q:
            raise InputError(f"loop {i} lists {len(entry['w'])} fiber coordinates, expected {q}")
        try:
            z = _decode(entry["z"])
            w = tuple(_decode(e) for e in entry["w"])
        except InputError as exc:
            raise InputError(f"loop {i}: {exc}") from exc
        loops.append(Loop(z, w, entry["multiplicity"]))
    spec = CurveSpec(tuple(loops), q, dict(document.get("chart", {})), delta_min)
    spec.check_base_point()
    return spec


def dump_curve(spec: CurveSpec) -> dict:
    doc: dict[str, Any] = {"q": spec.q}
    if spec.chart:
        doc["chart"] = spec.chart
    doc["loops"] = [
        {"multiplicity": int(loop.multiplicity),
         "z": loop.z.to_json(),
         "w": [w.to_json() for w in loop.w]}
        for loop in spec.loops
    ]
    return doc


def make_loop(z, w: Sequence, multiplicity: int = 1) -> Loop:
    """Build a loop from Fourier dicts, sample arrays or callables of theta."""
    def conv(x):
        if isinstance(x, TrigSeries):
            return x
        if isinstance(x, Mapping):
            return TrigSeries.from_fourier(x)
        return TrigSeries.from_samples(x)
    return Loop(conv(z), tuple(conv(x) for x in w), multiplicity)
