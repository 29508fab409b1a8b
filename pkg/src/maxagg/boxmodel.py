"""Discrete box model: explicit time stepping over size cells of width ``eps``.

At step ``j`` (time ``t = 1 + eps*j``) the state holds ``M_b + j`` cells. One
step removes ``eps * k0/N * G(i) G(M_b+j+1-i)`` from every cell and appends
the birth cell ``M_b+j+1`` with value
``eps/2 * sum_i k0/N * G(i) G(M_b+j+1-i)``.

The birth cell is created when advancing ``j -> j+1`` so that a state is
always a plain array of length ``M_b + j``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .core import DiscreteDensity, Params, SampledProfile, compensated_sum
from .errors import DegenerateState, InvalidArgument

logger = logging.getLogger(__name__)

BIRTH_RULES = ("verbatim", "exact")


@dataclass(frozen=True)
class BoxState:
    """Cell values ``G(j, 1..M_b+j)`` together with the grid metadata.

    ``k0`` may be zero here (a diagnostic setting in which nothing
    coagulates); everywhere else it must be positive.
    """

    k0: float
    M_b: int
    j: int
    G: np.ndarray = field(repr=False)

    def __post_init__(self):
        G = np.array(self.G, dtype=float)
        if G.shape != (self.M_b + self.j,):
            raise InvalidArgument(f"state at step {self.j} needs {self.M_b + self.j} cells")
        if self.k0 < 0:
            raise InvalidArgument("k0 must be nonnegative")
        if np.any(G < 0):
            raise InvalidArgument("cell values must be nonnegative")
        G.setflags(write=False)
        object.__setattr__(self, "G", G)

    @property
    def eps(self) -> float:
        return 1.0 / self.M_b

    @property
    def t(self) -> float:
        return 1.0 + self.eps * self.j

    @property
    def x(self) -> np.ndarray:
        return self.eps * (np.arange(1, self.G.size + 1) - 0.5)

    @property
    def N(self) -> float:
        return self.eps * compensated_sum(self.G, self.G.size)

    @property
    def mass(self) -> float:
        return self.eps * compensated_sum(self.x * self.G, self.G.size)

    @classmethod
    def from_density(cls, d: DiscreteDensity, k0: float) -> "BoxState":
        M_b = d.grid.n_cells
        if not np.isclose(d.grid.cell_width * M_b, 1.0):
            raise InvalidArgument("initial density must cover exactly [0, 1]")
        return cls(k0, M_b, 0, d.values)


@dataclass
class RunReport:
    snapshots: dict[int, BoxState]
    step: np.ndarray
    t: np.ndarray
    N: np.ndarray
    mass: np.ndarray
    birth: np.ndarray
    termination: int
    clamp_count: int = 0
    birth_rule: str = "verbatim"
    error: str | None = None

    @property
    def final(self) -> BoxState:
        return self.snapshots[max(self.snapshots)]


@njit(cache=True)
def _advance(buf, L, eps, k0, N, exact_mass, target_mass):
    """Advance ``buf[:L]`` in place and write the birth cell ``buf[L]``.

    Returns ``(birth, clamps, N_new, mass_new)``.
    """
    c = eps * k0 / N
    psum = 0.0
    clamps = 0
    for i in range((L + 1) // 2):
        m = L - 1 - i
        p = buf[i] * buf[m]
        if i == m:
            psum += p
            v = buf[i] - c * p
            if v < 0.0:
                v = 0.0
                clamps += 1
            buf[i] = v
        else:
            psum += 2.0 * p
            v = buf[i] - c * p
            w = buf[m] - c * p
            if v < 0.0:
                v = 0.0
                clamps += 1
            if w < 0.0:
                w = 0.0
                clamps += 1
            buf[i] = v
            buf[m] = w
    x_new = eps * (L + 0.5)
    if exact_mass:
        s = 0.0
        comp = 0.0
        for i in range(L):
            v = eps * (i + 0.5) * buf[i]
            tt = s + v
            if abs(s) >= abs(v):
                comp += (s - tt) + v
            else:
                comp += (v - tt) + s
            s = tt
        birth = (target_mass - eps * (s + comp)) / (eps * x_new)
        if birth < 0.0:
            birth = 0.0
            clamps += 1
    else:
        birth = 0.5 * c * psum
    buf[L] = birth

    n_s = 0.0
    n_c = 0.0
    m_s = 0.0
    m_c = 0.0
    for i in range(L + 1):
        v = buf[i]
        tt = n_s + v
        if abs(n_s) >= abs(v):
            n_c += (n_s - tt) + v
        else:
            n_c += (v - tt) + n_s
        n_s = tt
        v = eps * (i + 0.5) * buf[i]
        tt = m_s + v
        if abs(m_s) >= abs(v):
            m_c += (m_s - tt) + v
        else:
            m_c += (v - tt) + m_s
        m_s = tt
    return birth, clamps, eps * (n_s + n_c), eps * (m_s + m_c)


def birth_value(s: BoxState) -> float:
    """Value of the new largest cell created by stepping ``s``."""
    N = s.N
    if not N > 0:
        raise DegenerateState(f"N={N} at step {s.j}")
    return float(0.5 * s.eps * s.k0 / N * np.sum(s.G * s.G[::-1]))


def step(s: BoxState, birth_rule: str = "verbatim", target_mass: float = 1.0) -> BoxState:
    if birth_rule not in BIRTH_RULES:
        raise InvalidArgument(f"birth_rule must be one of {BIRTH_RULES}")
    N = s.N
    if not N > 0:
        raise DegenerateState(f"N={N} at step {s.j}")
    buf = np.empty(s.G.size + 1)
    buf[:-1] = s.G
    _, clamps, _, _ = _advance(buf, s.G.size, s.eps, float(s.k0), N, birth_rule == "exact", target_mass)
    if clamps:
        logger.warning("step %d: %d cells clamped at zero", s.j, clamps)
    return BoxState(s.k0, s.M_b, s.j + 1, buf)


def run(
    initial: DiscreteDensity | BoxState,
    params: Params,
    steps: int,
    snapshot_schedule=(),
    birth_rule: str = "verbatim",
) -> RunReport:
    """Iterate :func:`step` ``steps`` times, recording series and snapshots.

    The series (``t``, ``N``, mass, birth value) is recorded at every step;
    ``birth[j]`` is the value of the cell created on reaching step ``j``
    (zero at step 0). Full state copies are kept at the step indices in
    ``snapshot_schedule`` and always for the initial and final state. A
    degenerate state stops the run and the partial report carries the message
    in ``error``.
    """
    if steps < 0:
        raise InvalidArgument("steps must be nonnegative")
    if birth_rule not in BIRTH_RULES:
        raise InvalidArgument(f"birth_rule must be one of {BIRTH_RULES}")
    schedule = sorted(set(int(k) for k in snapshot_schedule))
    if schedule and (schedule[0] < 0 or schedule[-1] > steps):
        raise InvalidArgument("snapshot schedule must lie within [0, steps]")
    s0 = initial if isinstance(initial, BoxState) else BoxState.from_density(initial, params.k0)
    if s0.j != 0:
        raise InvalidArgument("runs start from step 0")
    M_b, eps, k0 = s0.M_b, s0.eps, float(params.k0)

    buf = np.zeros(M_b + steps + 1)
    buf[:M_b] = s0.G
    L = M_b
    step_idx = np.arange(steps + 1)
    t = 1.0 + eps * step_idx
    N = np.full(steps + 1, np.nan)
    mass = np.full(steps + 1, np.nan)
    birth = np.zeros(steps + 1)
    N[0], mass[0] = s0.N, s0.mass
    target = mass[0]
    wanted = set(schedule) | {0, steps}
    snapshots = {0: s0}
    clamps_total = 0
    error = None
    done = 0
    for j in range(steps):
        if not N[j] > 0:
            error = f"degenerate state: N={N[j]} at step {j}"
            break
        b, clamps, N[j + 1], mass[j + 1] = _advance(buf, L, eps, k0, N[j], birth_rule == "exact", target)
        birth[j + 1] = b
        clamps_total += clamps
        L += 1
        done = j + 1
        if done in wanted:
            snapshots[done] = BoxState(k0, M_b, done, buf[:L].copy())
    if done not in snapshots:
        snapshots[done] = BoxState(k0, M_b, done, buf[:L].copy())
    if clamps_total:
        logger.warning("%d negative values clamped at zero during the run", clamps_total)
    n = done + 1
    return RunReport(
        snapshots=snapshots, step=step_idx[:n], t=t[:n], N=N[:n], mass=mass[:n],
        birth=birth[:n], termination=done, clamp_count=clamps_total,
        birth_rule=birth_rule, error=error,
    )


def rescaled_profile(s: BoxState, n_samples: int = 512) -> SampledProfile:
    """``t^2 G(y t)`` at ``y_k = (k + 1/2)/n_samples`` (self-similar variables)."""
    ys = (np.arange(n_samples) + 0.5) / n_samples
    t = s.t
    return SampledProfile(ys, t * t * np.interp(ys * t, s.x, s.G))
