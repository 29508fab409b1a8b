"""Self-similar profiles by shooting from the midpoint ``y = 1/2``.

Profiles solve ``2 G(y) + y G'(y) = D G(y) G(1-y)`` on ``(0, 1)``. Any such
solution maps to a mass-normalised self-similar profile of the kinetic
equation with ``k0 = D * int_0^1 G``.

With ``F(y) = y^2 G(y)`` the equation is ``F'(y) = D F(y) F(1-y) / (y (1-y)^2)``.
Splitting ``F`` into parts even and odd about ``1/2`` gives a system that can
be integrated as an initial value problem from ``y = 1/2`` (see
:func:`rhs_even_odd`). Near the endpoints that split suffers from
cancellation (``F(y) -> 0`` while ``F_e`` and ``F_o`` stay order one), so the
default solver integrates the equivalent reflected pair
``a = log F(y)``, ``b = log F(1-y)`` for ``y`` in ``(0, 1/2]`` in the
variable ``s = log y``::

    da/ds =  D G(1-y)
    db/ds = -D y G(y) / (1-y)

whose right-hand side stays bounded as ``y -> 0``. The integrals ``int G`` and
``int y G`` are carried along as extra components.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import (
    BracketFailure,
    ConvergenceFailure,
    InsufficientData,
    InvalidArgument,
    MaxAggError,
    NoBranchError,
    SingularPointError,
)

TRIVIAL_G = 2.0


@dataclass(frozen=True)
class ShootConfig:
    """Shooting datum and numerical controls.

    ``method`` selects the integrated variables: ``"log"`` (default, reflected
    log pair) or ``"even_odd"`` (the even/odd split of ``F`` integrated
    literally, usable only for moderate ``delta``).
    """

    D: float = 1.0
    G_half: float = 2.0
    delta: float = 1e-6
    rk_tol: float = 1e-10
    n_output: int = 2001
    method: str = "log"

    def __post_init__(self):
        if not self.D > 0:
            raise InvalidArgument("D must be positive")
        if not self.G_half > 0:
            raise InvalidArgument("G_half must be positive")
        if not 0 < self.delta < 0.5:
            raise InvalidArgument("delta must lie in (0, 1/2)")
        if not self.rk_tol > 0:
            raise InvalidArgument("rk_tol must be positive")
        if self.n_output < 16:
            raise InvalidArgument("n_output must be at least 16")
        if self.method not in ("log", "even_odd"):
            raise InvalidArgument(f"unknown method {self.method!r}")


@dataclass(frozen=True)
class Profile:
    """A solution ``G`` of the profile equation sampled on ``[delta, 1-delta]``.

    The sample points are symmetric about ``1/2`` (``ys[::-1] == 1 - ys``),
    which makes the reflected quantities ``F(1-y)`` available by reversal.
    """

    ys: np.ndarray = field(repr=False)
    G_vals: np.ndarray = field(repr=False)
    D: float
    G1: float
    tail_exp: float
    N: float
    m: float
    G_half: float
    delta: float

    @property
    def values(self) -> np.ndarray:
        return self.G_vals

    @property
    def k0(self) -> float:
        return self.D * self.N

    @property
    def F(self) -> np.ndarray:
        return self.G_vals * self.ys**2

    @property
    def F_e(self) -> np.ndarray:
        F = self.F
        return 0.5 * (F + F[::-1])

    @property
    def F_o(self) -> np.ndarray:
        F = self.F
        return 0.5 * (F - F[::-1])

    def __call__(self, y):
        return np.interp(y, self.ys, self.G_vals)

    def scaled(self, lam: float) -> "Profile":
        """The image under ``G -> lam G``, ``D -> D / lam`` (again a solution)."""
        return replace(
            self,
            G_vals=lam * self.G_vals,
            D=self.D / lam,
            G1=lam * self.G1,
            N=lam * self.N,
            m=lam * self.m,
            G_half=lam * self.G_half,
        )


class Shape(str, enum.Enum):
    TRIVIAL = "Trivial"
    SUBCRITICAL = "Subcritical"
    SUPERCRITICAL = "Supercritical"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class BranchPair:
    subcritical: Profile
    supercritical: Profile
    k0: float
    G_half_sub: float
    G_half_super: float
    sub_shape: Shape
    super_shape: Shape


@dataclass(frozen=True)
class MomentRow:
    G_half: float
    N: float
    error: str | None = None


def constant_profile(value: float = TRIVIAL_G, D: float = 1.0, n: int = 2001, delta: float = 1e-6) -> Profile:
    """Exact constant solution ``G == 2/D`` (``value`` must equal ``2/D``)."""
    if not math.isclose(value * D, 2.0, rel_tol=1e-14):
        raise InvalidArgument("constant solutions require G * D == 2")
    ys = _sample_points(delta, n)
    return Profile(ys, np.full(ys.size, float(value)), D, value, 0.0, value, value / 2, value, delta)


def rhs_even_odd(y: float, F_e: float, F_o: float, D: float) -> tuple[float, float]:
    """Right-hand side of the even/odd system for ``F = F_e + F_o``."""
    if not 0 < y < 1:
        raise SingularPointError(f"the even/odd system is singular at y={y}")
    w = D * (F_e * F_e - F_o * F_o) / (y * y * (1.0 - y) ** 2)
    return w * (y - 0.5), 0.5 * w


def _sample_points(delta: float, n_output: int) -> np.ndarray:
    n_left = max((n_output + 1) // 2, 8)
    left = np.geomspace(delta, 0.5, n_left)
    # exact points for the Richardson extrapolation of G(1)
    left = np.unique(np.concatenate([left, [2 * delta, 4 * delta]]))
    left[0], left[-1] = delta, 0.5
    return np.concatenate([left, 1.0 - left[-2::-1]])


def _log_rhs(c):
    # state is log(F / F(1/2)) and quadratures in units of F(1/2); only
    # c = D F(1/2) enters, so the scaling G -> lam G, D -> D/lam is exact
    def rhs(s, u):
        y = math.exp(s)
        z = 1.0 - y
        Gy = math.exp(u[0]) / (y * y)
        Gz = math.exp(u[1]) / (z * z)
        return [c * Gz, -c * Gy * y / z, -Gy * y, -Gz * y, -Gy * y * y, -Gz * z * y]

    return rhs


def _even_odd_rhs(D):
    def rhs(y, u):
        dFe, dFo = rhs_even_odd(y, u[0], u[1], D)
        z = 1.0 - y
        Gy = (u[0] + u[1]) / (y * y)
        Gz = (u[0] - u[1]) / (z * z)
        return [dFe, dFo, -Gy, -Gz, -y * Gy, -z * Gz]

    return rhs


def even_odd_trajectory(D: float, G_half: float, y_end: float, rk_tol: float = 1e-10):
    """Dense solution ``y -> (F_e, F_o)`` of the even/odd system from 1/2 to ``y_end``."""
    F0 = G_half / 4.0

    def rhs(y, u):
        return rhs_even_odd(y, u[0], u[1], D)

    sol = solve_ivp(
        rhs, (0.5, y_end), [F0, 0.0], method="DOP853",
        rtol=rk_tol, atol=rk_tol * 1e-3, dense_output=True,
    )
    if sol.status != 0:
        raise ConvergenceFailure(sol.message, (min(sol.t[-1], 0.5), max(sol.t[-1], 0.5)))
    return sol.sol


def shoot(cfg: ShootConfig) -> Profile:
    """Integrate the profile equation outward from ``G(1/2) = cfg.G_half``.

    The integrals ``N = int_0^1 G`` and ``m = int_0^1 y G`` are integrated
    with the solution on ``[delta, 1-delta]`` and completed on ``[0, delta]``
    by the power law ``G ~ C y^p`` and on ``[1-delta, 1]`` by the trapezoid
    rule against the extrapolated ``G(1)``.
    """
    D, delta = cfg.D, cfg.delta
    F0 = cfg.G_half / 4.0
    ys = _sample_points(delta, cfg.n_output)
    left = ys[ys <= 0.5]

    if cfg.method == "log":
        sol = solve_ivp(
            _log_rhs(D * F0), (math.log(0.5), math.log(delta)),
            [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            method="DOP853", rtol=cfg.rk_tol, atol=cfg.rk_tol * 1e-3, dense_output=True,
        )
        if sol.status != 0:
            y_reached = math.exp(sol.t[-1])
            raise ConvergenceFailure(sol.message, (y_reached, 1.0 - y_reached))

        def G_both(y):
            u = sol.sol(np.log(y))
            return F0 * np.exp(u[0]) / y**2, F0 * np.exp(u[1]) / (1.0 - y) ** 2

        quad_scale = F0

    else:
        sol = solve_ivp(
            _even_odd_rhs(D), (0.5, delta), [F0, 0.0, 0.0, 0.0, 0.0, 0.0],
            method="DOP853", rtol=cfg.rk_tol, atol=cfg.rk_tol * 1e-3, dense_output=True,
        )
        if sol.status != 0:
            raise ConvergenceFailure(sol.message, (sol.t[-1], 1.0 - sol.t[-1]))

        def G_both(y):
            u = sol.sol(y)
            return (u[0] + u[1]) / y**2, (u[0] - u[1]) / (1.0 - y) ** 2

        quad_scale = 1.0

    G_left, G_right = G_both(left)
    G_vals = np.concatenate([G_left, G_right[-2::-1]])
    if np.any(G_vals <= 0) or not np.all(np.isfinite(G_vals)):
        raise MaxAggError("shooting produced a nonpositive or nonfinite profile")

    # Richardson extrapolation of G(1) from z = delta, 2 delta, 4 delta
    _, (g1, g2, g4) = G_both(np.array([delta, 2 * delta, 4 * delta]))
    r1, r2 = 2 * g1 - g2, 2 * g2 - g4
    G1 = (4 * r1 - r2) / 3

    window = np.geomspace(delta, 10 * delta, 16)
    tail_exp = float(np.polyfit(np.log(window), np.log(G_both(window)[0]), 1)[0])

    p = tail_exp
    if p <= -1:
        raise MaxAggError(f"profile is not integrable at 0 (exponent {p:.4g})")
    u_end = quad_scale * sol.y[:, -1]
    G_delta = G_left[0]
    G_1md = G_right[0]
    N = u_end[2] + u_end[3] + G_delta * delta / (p + 1) + 0.5 * delta * (G_1md + G1)
    m = (
        u_end[4] + u_end[5]
        + G_delta * delta**2 / (p + 2)
        + 0.5 * delta * ((1 - delta) * G_1md + G1)
    )
    return Profile(
        ys=ys, G_vals=G_vals, D=D, G1=float(G1), tail_exp=tail_exp,
        N=float(N), m=float(m), G_half=cfg.G_half, delta=delta,
    )


def to_normalized(p: Profile) -> tuple[float, Profile]:
    """Return ``(k0, G / m)``; the normalised profile has unit first moment."""
    if not p.m > 0:
        raise InvalidArgument("profile must have positive first moment")
    k0 = p.D * p.N
    q = p.scaled(1.0 / p.m)
    return k0, replace(q, m=1.0)


def scan_moment_curve(G_half_values: Sequence[float], D: float = 1.0, **cfg) -> list[MomentRow]:
    """``N = int G`` as a function of the shooting datum ``G(1/2)``.

    A failed shot is recorded in its row's ``error`` field and the scan
    carries on.
    """
    rows = []
    for g in G_half_values:
        if not g > 0:
            raise InvalidArgument("all G_half values must be positive")
        try:
            rows.append(MomentRow(float(g), shoot(ShootConfig(D=D, G_half=float(g), **cfg)).N))
        except MaxAggError as exc:
            rows.append(MomentRow(float(g), float("nan"), str(exc)))
    return rows


def find_branches(
    k0_target: float,
    tol: float = 1e-8,
    lower_floor: float = 1e-4,
    upper_start: float = 4.0,
    upper_cap: float = 1e3,
    **cfg,
) -> BranchPair:
    """Locate the subcritical and supercritical profiles with ``k0 = k0_target``.

    Roots of ``G_half -> D N(G_half) - k0_target`` (with ``D = 1``) are
    bracketed on ``(0, 2)`` by halving downward from 1 and on ``(2, inf)`` by
    doubling upward from ``upper_start``, then refined with a bracketing
    solver.
    """
    if abs(k0_target - 2.0) <= tol:
        triv = constant_profile()
        _, triv = to_normalized(triv)
        return BranchPair(triv, triv, 2.0, 2.0, 2.0, Shape.TRIVIAL, Shape.TRIVIAL)
    if k0_target < 2.0:
        raise NoBranchError(
            f"no self-similar profile for k0={k0_target} < 2 "
            "(moment curve N(G(1/2)) has its minimum 2 at the trivial solution)"
        )

    def excess(g):
        return shoot(ShootConfig(D=1.0, G_half=g, **cfg)).N - k0_target

    lo = 1.0
    while excess(lo) <= 0:
        lo /= 2
        if lo < lower_floor:
            raise BracketFailure("subcritical branch not bracketed", (lower_floor, 2.0))
    hi = upper_start
    while excess(hi) <= 0:
        hi *= 2
        if hi > upper_cap:
            raise BracketFailure("supercritical branch not bracketed", (2.0, upper_cap))

    xtol = 1e-14
    g_sub = brentq(excess, lo, 2.0, xtol=xtol, rtol=1e-15)
    g_sup = brentq(excess, 2.0 if hi == upper_start else hi / 2, hi, xtol=xtol, rtol=1e-15)
    profiles = []
    for g in (g_sub, g_sup):
        prof = shoot(ShootConfig(D=1.0, G_half=g, **cfg))
        if abs(prof.k0 - k0_target) > tol:
            raise BracketFailure(f"root refinement missed k0 by {prof.k0 - k0_target:.3g}", (g, g))
        profiles.append(to_normalized(prof)[1])
    sub, sup = profiles
    return BranchPair(sub, sup, float(k0_target), g_sub, g_sup, shape_classify(sub), shape_classify(sup))


def _extrema(ys: np.ndarray, G: np.ndarray, noise: float):
    """Interior turning points, ignoring reversals smaller than ``noise``."""
    maxima, minima = [], []
    direction = 0
    hi = lo = G[0]
    hi_i = lo_i = 0
    ext, ext_i = G[0], 0
    for k in range(1, G.size):
        v = G[k]
        if direction == 0:
            if v > hi:
                hi, hi_i = v, k
            if v < lo:
                lo, lo_i = v, k
            if hi - lo > noise:
                direction = 1 if hi_i > lo_i else -1
                ext, ext_i = (hi, hi_i) if direction > 0 else (lo, lo_i)
        elif direction > 0:
            if v > ext:
                ext, ext_i = v, k
            elif ext - v > noise:
                maxima.append(float(ys[ext_i]))
                direction, ext, ext_i = -1, v, k
        else:
            if v < ext:
                ext, ext_i = v, k
            elif v - ext > noise:
                minima.append(float(ys[ext_i]))
                direction, ext, ext_i = 1, v, k
    return maxima, minima


def shape_classify(p, shape_tol: float = 1e-6, rel_noise: float = 1e-9) -> Shape:
    """Classify a profile by its interior extrema.

    Supercritical profiles have exactly one local maximum in ``(1/2, 1)`` and
    no local minimum; subcritical ones have a local minimum in ``(1/2, 1)``
    with G rising from it toward both endpoints. Any sampled profile (``ys`` and
    ``values``) is accepted; for rescaled box-model states pass a
    ``rel_noise`` of about 1e-2 so that cell-scale wiggles are not counted
    as extrema.
    """
    G, ys = np.asarray(p.values), np.asarray(p.ys)
    delta = getattr(p, "delta", 1.0 - ys[-1])
    if ys.size < 16:
        raise InvalidArgument("shape classification needs at least 16 samples")
    mean = float(np.mean(G))
    if np.max(np.abs(G - mean)) < shape_tol * abs(mean):
        return Shape.TRIVIAL
    maxima, minima = _extrema(ys, G, rel_noise * float(np.max(np.abs(G))))
    right = lambda y: 0.5 < y < 1.0 - delta  # noqa: E731
    right_max = [y for y in maxima if right(y)]
    right_min = [y for y in minima if right(y)]
    if len(right_max) == 1 and not minima:
        return Shape.SUPERCRITICAL
    # A recorded minimum has rises on both sides. The maximum toward y = 1
    # sits where G(z) = 2/D near z = 0, which for G(1/2) close to 2 lies far
    # inside the cutoff, so the endpoint sample stands in for it.
    if right_min:
        return Shape.SUBCRITICAL
    return Shape.UNKNOWN


def tail_exponent_check(p: Profile) -> tuple[float, float]:
    """Fitted log-slope of ``G`` on ``[delta, 10 delta]`` and the predicted ``D G(1) - 2``."""
    y0 = p.ys[0]
    if y0 > 1e-3:
        raise InsufficientData(f"profile starts at y={y0:.3g}; need y <= 1e-3")
    sel = (p.ys >= y0) & (p.ys <= 10 * y0 * (1 + 1e-12))
    if np.count_nonzero(sel) < 3:
        raise InsufficientData("fewer than three samples in the tail window")
    measured = float(np.polyfit(np.log(p.ys[sel]), np.log(p.G_vals[sel]), 1)[0])
    return measured, p.D * p.G1 - 2.0
