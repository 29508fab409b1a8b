"""Mild solutions by Picard iteration of the exponential (Duhamel) operator.

A mild solution on ``[1, T] x [0, T]`` is a fixed point of

    Gamma[g](t, x) = g_ini(x) exp(-k0 int_1^t g(s, s-x)/N(s) ds)     x < 1
                   = B[g](x) exp(-k0 int_x^t g(s, s-x)/N(s) ds)      1 <= x <= t
                   = 0                                               x > t

with ``B[g](t) = k0/(2 N(t)) int_0^t g(t, y) g(t, t-y) dy``.

Time and size share one spacing ``h = 1/n`` and ``T = 1 + K h``, so both
discontinuity lines ``x = 1`` and ``x = t`` are grid lines and every
characteristic ``s -> (s, s - x)`` through a grid node stays on grid nodes.
Values on the line ``x = 1`` (for ``t > 1``) are the limits from the right;
the limits from the left are kept separately in ``left_at_one``. Values on
the diagonal are limits from inside (``x < t``). All quadratures are
trapezoidal on the pieces between discontinuities.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .core import DiscreteDensity, discrete_mass
from .errors import DegenerateState, InvalidArgument, NonConvergence

logger = logging.getLogger(__name__)


@dataclass
class MildGrid:
    """``values[a, b] = g(1 + a h, b h)`` on the aligned grid."""

    n: int
    K: int
    values: np.ndarray = field(repr=False)
    left_at_one: np.ndarray = field(repr=False)

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def T(self) -> float:
        return 1.0 + self.K / self.n

    @property
    def n_t(self) -> int:
        return self.K + 1

    @property
    def n_x(self) -> int:
        return self.n + self.K + 1

    @property
    def t(self) -> np.ndarray:
        return 1.0 + self.h * np.arange(self.K + 1)

    @property
    def x(self) -> np.ndarray:
        return self.h * np.arange(self.n_x)

    def copy(self) -> "MildGrid":
        return MildGrid(self.n, self.K, self.values.copy(), self.left_at_one.copy())

    def limits(self, a: int) -> tuple[np.ndarray, np.ndarray]:
        """Right and left limits along row ``a`` on nodes ``0..n+a``."""
        L = self.n + a
        right = self.values[a, : L + 1]
        left = right.copy()
        left[self.n] = self.left_at_one[a]
        return right, left

    def number(self, a: int) -> float:
        right, left = self.limits(a)
        return 0.5 * self.h * float(np.sum(right[:-1] + left[1:]))

    def mass(self, a: int) -> float:
        right, left = self.limits(a)
        x = self.h * np.arange(right.size)
        return 0.5 * self.h * float(np.sum(x[:-1] * right[:-1] + x[1:] * left[1:]))

    def slice_at(self, a: int, x) -> np.ndarray:
        """``g(t_a, x)`` by linear interpolation within each continuity piece."""
        right, left = self.limits(a)
        xs = self.h * np.arange(right.size)
        x = np.asarray(x, dtype=float)
        n = self.n
        out = np.zeros_like(x)
        below = x < 1.0
        inside = (x >= 1.0) & (x <= xs[-1])
        lo_vals = np.concatenate([right[:n], [left[n]]])
        out[below] = np.interp(x[below], xs[: n + 1], lo_vals)
        out[inside] = np.interp(x[inside], xs[n:], right[n:])
        return out


@dataclass
class PicardReport:
    iterates_used: int
    residual_history: list[float]
    converged: bool
    trace_error: float = float("nan")
    mass_min: float = float("nan")
    mass_max: float = float("nan")

    @property
    def invariants_ok(self) -> bool:
        return 0.5 <= self.mass_min and self.mass_max <= 1.5


def _number_profile(g: MildGrid) -> np.ndarray:
    N = np.array([g.number(a) for a in range(g.K + 1)])
    if np.any(~(N > 0)):
        a = int(np.flatnonzero(~(N > 0))[0])
        raise DegenerateState(f"N(t)={N[a]} at t={g.t[a]:.6g}")
    return N


def B_operator(g_slice, t: float, k0: float, left_at_one: float | None = None) -> float:
    """Boundary value ``k0/(2N) int_0^t g(y) g(t-y) dy`` for a slice on an even grid.

    ``g_slice`` holds ``g(t, .)`` at ``m+1`` equispaced nodes on ``[0, t]``.
    If the slice jumps at an interior node ``y = 1``, pass the limit from the
    left as ``left_at_one`` (the slice value there is the limit from the
    right).
    """
    right = np.asarray(g_slice, dtype=float)
    L = right.size - 1
    h = t / L
    left = right.copy()
    if left_at_one is not None:
        k = int(round(1.0 / h))
        if abs(k * h - 1.0) > 1e-9 or not 0 < k < L:
            raise InvalidArgument("y = 1 must be an interior grid node")
        left[k] = left_at_one
    N = 0.5 * h * float(np.sum(right[:-1] + left[1:]))
    if not N > 0:
        raise DegenerateState(f"N={N} at t={t}")
    # trapezoid on every piece; both half-sums coincide after reversal
    integral = h * float(np.sum(right[:-1] * left[::-1][:-1]))
    return k0 / (2.0 * N) * integral


def _birth_values(g: MildGrid, N: np.ndarray, k0: float) -> np.ndarray:
    B = np.empty(g.K + 1)
    for a in range(g.K + 1):
        right, left = g.limits(a)
        B[a] = k0 / (2.0 * N[a]) * g.h * float(np.sum(right[:-1] * left[::-1][:-1]))
    return B


def _characteristic_integrals(g: MildGrid, N: np.ndarray) -> np.ndarray:
    """``I[a, b] = int_{max(1, x_b)}^{t_a} g(s, s - x_b)/N(s) ds`` (trapezoid)."""
    n, K = g.n, g.K
    c = np.arange(K + 1)[:, None]
    b = np.arange(g.n_x)[None, :]
    q = n + c - b
    valid = q >= 0
    qc = np.where(valid, q, 0)
    vals = np.take_along_axis(g.values, qc, axis=1)
    start = np.where(valid, vals, 0.0) / N[:, None]
    end = np.where(q == n, g.left_at_one[:, None], vals)
    end = np.where(valid, end, 0.0) / N[:, None]
    pieces = 0.5 * g.h * (start[:-1] + end[1:])
    pieces = np.where(valid[:-1], pieces, 0.0)
    I = np.zeros((K + 1, g.n_x))
    np.cumsum(pieces, axis=0, out=I[1:])
    return I


def gamma_apply(g: MildGrid, g_ini: np.ndarray, k0: float) -> MildGrid:
    """One application of the mild-solution operator.

    ``g_ini`` holds the initial data at the nodes ``0..n`` of ``[0, 1]``.
    """
    n, K = g.n, g.K
    N = _number_profile(g)
    B = _birth_values(g, N, k0)
    I = _characteristic_integrals(g, N)
    damp = np.exp(-k0 * I)

    out = np.zeros_like(g.values)
    out[:, :n] = g_ini[None, :n] * damp[:, :n]
    a = np.arange(K + 1)[:, None]
    b = np.arange(n, g.n_x)[None, :]
    born = b - n <= a
    out[:, n:] = np.where(born, B[np.minimum(b - n, K)] * damp[:, n:], 0.0)
    out[0, : n + 1] = g_ini
    left = g_ini[n] * damp[:, n]
    return MildGrid(n, K, out, left)


def seed_grid(g_ini: np.ndarray, n: int, K: int) -> MildGrid:
    values = np.zeros((K + 1, n + K + 1))
    values[:, : n + 1] = g_ini[None, :]
    return MildGrid(n, K, values, np.full(K + 1, g_ini[n]))


def initial_nodes(d: DiscreteDensity, n: int) -> np.ndarray:
    """Initial data at the nodes of ``[0, 1]`` with unit trapezoidal mass."""
    x = np.linspace(0.0, 1.0, n + 1)
    v = d(x)
    m = 0.5 / n * float(np.sum(x[:-1] * v[:-1] + x[1:] * v[1:]))
    return v / m


def picard_solve(
    g_ini: DiscreteDensity,
    T: float,
    k0: float,
    tol: float = 1e-10,
    max_iter: int = 200,
    n: int = 400,
    window: float = 0.25,
) -> tuple[MildGrid, PicardReport]:
    """Fixed point of the mild-solution operator on ``[1, T]``.

    Iterates ``g <- Gamma[g]`` from ``g_ini(x) 1{x <= 1}`` until the sup-norm
    change drops below ``tol``. Longer horizons are split into time windows
    of length ``window``; rows of earlier windows are final because
    ``Gamma[g]`` at time ``t`` only depends on ``g`` at times up to ``t``.
    ``max_iter`` applies per window.
    """
    if not T >= 1:
        raise InvalidArgument("T must be at least 1")
    if not k0 > 0:
        raise InvalidArgument("k0 must be positive")
    K = int(round((T - 1.0) * n))
    if abs(K - (T - 1.0) * n) > 1e-8:
        raise InvalidArgument(f"T - 1 must be a multiple of 1/n = {1.0 / n}")
    if abs(discrete_mass(g_ini) - 1.0) > 1e-2:
        raise InvalidArgument("initial data must have unit mass")
    init = initial_nodes(g_ini, n)
    g = seed_grid(init, n, K)
    history: list[float] = []
    converged = True
    if K > 0:
        per_window = max(1, int(round(window * n)))
        a_done = 0
        while a_done < K:
            a_end = min(K, a_done + per_window)
            rows = slice(a_done + 1, a_end + 1)
            for it in range(max_iter):
                new = gamma_apply(g, init, k0)
                res = max(
                    float(np.max(np.abs(new.values[rows] - g.values[rows]))),
                    float(np.max(np.abs(new.left_at_one[rows] - g.left_at_one[rows]))),
                )
                g.values[rows] = new.values[rows]
                g.left_at_one[rows] = new.left_at_one[rows]
                history.append(res)
                if res < tol:
                    break
            else:
                raise NonConvergence(
                    f"Picard iteration did not reach tol={tol} on t in "
                    f"[{g.t[a_done]:.4g}, {g.t[a_end]:.4g}] within {max_iter} iterations",
                    history,
                )
            a_done = a_end
            # later rows start from the last converged slice, shifted along x
            if a_done < K:
                g.values[a_done + 1 :] = g.values[a_done]
                g.left_at_one[a_done + 1 :] = g.left_at_one[a_done]

    N = _number_profile(g)
    B = _birth_values(g, N, k0)
    diag = g.values[np.arange(K + 1), n + np.arange(K + 1)]
    trace_error = float(np.max(np.abs(diag[1:] - B[1:]))) if K > 0 else 0.0
    masses = np.array([g.mass(a) for a in range(K + 1)])
    report = PicardReport(
        iterates_used=len(history), residual_history=history, converged=converged,
        trace_error=trace_error, mass_min=float(masses.min()), mass_max=float(masses.max()),
    )
    if not report.invariants_ok:
        logger.warning("mass left [1/2, 3/2]: min %.4g max %.4g", report.mass_min, report.mass_max)
    return g, report
