"""Damped Gauss-Newton (Levenberg-Marquardt) for holomorphic complex residuals.

The residual map must be holomorphic in the unknowns, so a one-sided
complex finite difference gives the complex Jacobian and the normal
equations take the Hermitian form ``(J^H J + mu D) dx = -J^H r``.
The residual callable is batched: it takes an ``(B, n)`` array of points and
returns ``(B, m)`` residuals, so one call yields the whole FD stencil.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

Residual = Callable[[np.ndarray], np.ndarray]


@dataclass
class LMResult:
    x: np.ndarray
    residual: np.ndarray
    cost: float
    iterations: int
    converged: bool
    reason: str


def _cost(r: np.ndarray) -> float:
    return float(np.vdot(r, r).real)


def fd_jacobian(fun: Residual, x: np.ndarray, r: np.ndarray, step: float) -> np.ndarray:
    h = step * (1.0 + np.abs(x))
    stencil = x[None, :] + np.diag(h)
    rows = fun(stencil)
    return ((rows - r[None, :]) / h[:, None]).T


def levenberg_marquardt(fun: Residual, x0, *, max_iter: int = 200, fd_step: float = 1e-7,
                        target: float = 0.0, mu0: float = 1e-3) -> LMResult:
    """Minimize ``||fun(x)||^2`` from ``x0``.

    Stops when ``max |r| <= target``, when the cost stagnates, or after
    ``max_iter`` Jacobian evaluations.
    """
    x = np.array(x0, dtype=complex)
    r = fun(x[None, :])[0]
    cost = _cost(r)
    if x.size == 0:
        return LMResult(x, r, cost, 0, True, "no unknowns")
    mu = mu0
    stalls = 0
    for it in range(1, max_iter + 1):
        if np.max(np.abs(r), initial=0.0) <= target:
            return LMResult(x, r, cost, it - 1, True, "target reached")
        jac = fd_jacobian(fun, x, r, fd_step)
        diag = np.sqrt(np.sum(np.abs(jac) ** 2, axis=0)) + 1e-12
        accepted = False
        while mu < 1e12:
            # min ||J dx + r||^2 + mu ||diag * dx||^2 as one stacked least-squares
            lhs = np.vstack([jac, np.sqrt(mu) * np.diag(diag)])
            rhs = np.concatenate([-r, np.zeros(x.size)])
            dx = np.linalg.lstsq(lhs, rhs, rcond=None)[0]
            x_new = x + dx
            r_new = fun(x_new[None, :])[0]
            cost_new = _cost(r_new)
            if np.isfinite(cost_new) and cost_new < cost:
                accepted = True
                break
            mu *= 4.0
        if not accepted:
            return LMResult(x, r, cost, it, False, "damping exhausted")
        improvement = (cost - cost_new) / max(cost, 1e-300)
        x, r, cost = x_new, r_new, cost_new
        mu = max(mu / 3.0, 1e-12)
        stalls = stalls + 1 if improvement < 1e-10 else 0
        if stalls >= 5:
            return LMResult(x, r, cost, it, False, "stagnated")
    converged = np.max(np.abs(r), initial=0.0) <= target
    return LMResult(x, r, cost, max_iter, bool(converged), "max_iter")
