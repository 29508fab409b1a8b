"""Long-time diagnostics for box-model runs."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .boxmodel import BoxState, RunReport, rescaled_profile
from .errors import InvalidArgument
from .mildsolver import MildGrid

N_COMMON = 512
PROP_K0_LIMIT = 1.0 / 3.0


@dataclass(frozen=True)
class ConvergenceSeries:
    times: np.ndarray
    N_vals: np.ndarray
    mass_vals: np.ndarray
    l1_to_target: dict[int, float] | None = None
    stationarity: float | None = None

    def __post_init__(self):
        for name in ("times", "N_vals", "mass_vals"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if not np.all(np.isfinite(arr)):
                raise InvalidArgument(f"{name} contains nonfinite entries")
            object.__setattr__(self, name, arr)
        if self.times.size == 0:
            raise InvalidArgument("empty series")
        if np.any(np.diff(self.times) <= 0):
            raise InvalidArgument("times must be strictly increasing")
        if n_violations(self.N_vals):
            raise InvalidArgument(f"N increases at {n_violations(self.N_vals)} steps")

    @classmethod
    def from_report(cls, report: RunReport, reference=None) -> "ConvergenceSeries":
        l1 = None
        if reference is not None:
            l1 = {j: l1_distance(rescaled_profile(s), reference) for j, s in sorted(report.snapshots.items())}
        return cls(report.t, report.N, report.mass, l1)


@dataclass(frozen=True)
class NBoundReport:
    ratio: float
    applies: bool
    passed: bool | None


def n_violations(N_vals) -> int:
    """Number of steps with ``N(j+1) > N(j)``."""
    return int(np.count_nonzero(np.diff(np.asarray(N_vals)) > 0))


def _arrays(p):
    return np.asarray(p.ys, dtype=float), np.asarray(p.values, dtype=float)


def l1_distance(a, b, n: int = N_COMMON) -> float:
    """``int_0^1 |a - b|`` after resampling both on ``n`` uniform points.

    ``a`` and ``b`` are sampled profiles (anything with ``ys`` and ``values``).
    Values outside a profile's sample range are held constant.
    """
    ya, va = _arrays(a)
    yb, vb = _arrays(b)
    if ya[-1] < yb[0] or yb[-1] < ya[0]:
        raise InvalidArgument("profiles have disjoint supports")
    y = np.linspace(0.0, 1.0, n)
    return float(np.trapezoid(np.abs(np.interp(y, ya, va) - np.interp(y, yb, vb)), y))


def n_bound_check(series: ConvergenceSeries, k0: float) -> NBoundReport:
    """``min N / N(1)``; asserted to exceed 1/2 only where it is known to (k0 < 1/3)."""
    N = series.N_vals
    ratio = float(N.min() / N[0])
    applies = k0 < PROP_K0_LIMIT
    return NBoundReport(ratio, applies, (ratio > 0.5) if applies else None)


def stationarity_measure(snapshots: list[BoxState], window: int | None = None) -> float:
    """Largest change of any common cell between the first and last snapshot of the window.

    The window is the trailing ``window`` snapshots (all of them by default),
    ordered by step index; values are in the original (unscaled) variables.
    """
    snaps = sorted(snapshots, key=lambda s: s.j)
    if window is not None:
        snaps = snaps[-window:]
    if len(snaps) < 2:
        raise InvalidArgument("need at least two snapshots")
    first, last = snaps[0], snaps[-1]
    n = min(first.G.size, last.G.size)
    return float(np.max(np.abs(last.G[:n] - first.G[:n])))


def rescaled_stationarity(snapshots: list[BoxState], window: int | None = None) -> float:
    """Sup-norm change of the rescaled profiles between the window ends."""
    snaps = sorted(snapshots, key=lambda s: s.j)
    if window is not None:
        snaps = snaps[-window:]
    if len(snaps) < 2:
        raise InvalidArgument("need at least two snapshots")
    a, b = rescaled_profile(snaps[0]), rescaled_profile(snaps[-1])
    return float(np.max(np.abs(a.values - b.values)))


def regime_stationarity(snapshots: list[BoxState], k0: float, window: int | None = None, regime: str = "auto") -> dict[str, float]:
    """Stationarity in the variables matching the regime of ``k0``.

    Below 2 the unscaled density settles, above 2 the rescaled one does; at
    ``k0 == 2`` (or with ``regime="both"``) both numbers are reported.
    """
    if regime == "auto":
        regime = "unscaled" if k0 < 2 else "rescaled" if k0 > 2 else "both"
    out = {}
    if regime in ("unscaled", "both"):
        out["unscaled"] = stationarity_measure(snapshots, window)
    if regime in ("rescaled", "both"):
        out["rescaled"] = rescaled_stationarity(snapshots, window)
    return out


def mass_drift(report: RunReport) -> float:
    return float(np.max(np.abs(report.mass - report.mass[0])))


def l1_box_vs_mild(grid: MildGrid, state: BoxState) -> float:
    """``eps * sum_i |G_i - g(t, x_i)|`` with the mild solution at its final time."""
    if abs(grid.T - state.t) > 1e-12:
        raise InvalidArgument(f"time mismatch: mild T={grid.T}, box t={state.t}")
    g = grid.slice_at(grid.K, state.x)
    return float(state.eps * np.sum(np.abs(g - state.G)))
