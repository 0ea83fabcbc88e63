"""Truncated power series in one variable.

A :class:`TruncatedSeries` holds the coefficients ``c_0 .. c_K`` of a power
series; products discard every term of degree above ``K``. The coefficient
array may carry leading batch axes (shape ``(..., K + 1)``), which lets the
membership solver push a whole finite-difference stencil through the Newton
recursion in one pass.
"""
from __future__ import annotations

from functools import lru_cache
from numbers import Number

import numpy as np


@lru_cache(maxsize=64)
def _toeplitz_index(n: int) -> tuple[np.ndarray, np.ndarray]:
    k = np.arange(n)
    diff = k[:, None] - k[None, :]
    mask = diff >= 0
    return np.where(mask, diff, 0), mask


class TruncatedSeries:
    """Power series truncated at degree ``order`` (immutable)."""

    __slots__ = ("_c",)
    __array_ufunc__ = None

    def __init__(self, coeffs, order: int | None = None):
        c = np.array(coeffs, dtype=complex)
        if c.ndim == 0:
            c = c[None]
        if order is not None:
            if order < 0:
                raise ValueError("order must be nonnegative")
            n = order + 1
            if c.shape[-1] < n:
                pad = [(0, 0)] * (c.ndim - 1) + [(0, n - c.shape[-1])]
                c = np.pad(c, pad)
            else:
                c = c[..., :n]
        if not np.all(np.isfinite(c)):
            raise ValueError("series coefficients must be finite")
        c.setflags(write=False)
        self._c = c

    @classmethod
    def constant(cls, value, order: int) -> "TruncatedSeries":
        return cls([value], order)

    @classmethod
    def _wrap(cls, c: np.ndarray) -> "TruncatedSeries":
        obj = cls.__new__(cls)
        c.setflags(write=False)
        obj._c = c
        return obj

    @property
    def coeffs(self) -> np.ndarray:
        return self._c

    @property
    def order(self) -> int:
        return self._c.shape[-1] - 1

    def __len__(self) -> int:
        return self._c.shape[-1]

    def __getitem__(self, k):
        return self._c[..., k]

    def __repr__(self) -> str:
        return f"TruncatedSeries({self._c.tolist()!r})"

    def _coerce(self, other) -> np.ndarray | None:
        if isinstance(other, TruncatedSeries):
            if other.order != self.order:
                raise ValueError(
                    f"truncation mismatch: {self.order} vs {other.order}")
            return other._c
        if isinstance(other, (Number, np.number)):
            out = np.zeros(self._c.shape[-1], dtype=complex)
            out[0] = other
            return out
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return TruncatedSeries._wrap(self._c + o)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return TruncatedSeries._wrap(self._c - o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return TruncatedSeries._wrap(o - self._c)

    def __neg__(self):
        return TruncatedSeries._wrap(-self._c)

    def __mul__(self, other):
        if isinstance(other, (Number, np.number)):
            return TruncatedSeries._wrap(self._c * other)
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        if other.order != self.order:
            raise ValueError(f"truncation mismatch: {self.order} vs {other.order}")
        idx, mask = _toeplitz_index(self._c.shape[-1])
        # lower-triangular Toeplitz matrix of self, then a batched mat-vec
        toeplitz = self._c[..., idx] * mask
        return TruncatedSeries._wrap(
            np.einsum("...ki,...i->...k", toeplitz, other._c))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (Number, np.number)):
            return TruncatedSeries._wrap(self._c / other)
        return NotImplemented

    def __pow__(self, n: int):
        if not isinstance(n, (int, np.integer)) or n < 0:
            return NotImplemented
        result = TruncatedSeries._wrap(np.zeros_like(self._c))
        result = result + 1
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def __eq__(self, other):
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return self._c.shape == other._c.shape and bool(np.all(self._c == other._c))

    __hash__ = None

    def __call__(self, z):
        """Evaluate the truncated polynomial at ``z`` (Horner)."""
        z = np.asarray(z, dtype=complex)
        out = np.zeros(np.broadcast_shapes(self._c.shape[:-1], z.shape), dtype=complex)
        for k in range(self.order, -1, -1):
            out = out * z + self._c[..., k]
        return out

    def max_abs(self) -> float:
        return float(np.max(np.abs(self._c))) if self._c.size else 0.0


def magnitude(x) -> float:
    """Max-magnitude of a ring element: |x| for scalars, max |coeff| for series."""
    if isinstance(x, TruncatedSeries):
        return x.max_abs()
    return float(np.max(np.abs(x)))
