"""Recompute the frozen reference values in tests/frozen.py from the oracles.

Usage: python3 scripts/freeze_oracles.py > tests/frozen.py
"""
import math
import sys
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))
import oracles  # noqa: E402


def main():
    lines = ['"""Reference values produced by scripts/freeze_oracles.py (independent oracles)."""', ""]

    moments = {g: oracles.profile_moments(g) for g in (1.0, 2.4, 4.0)}
    lines.append("# (N, m) of the profile through G(1/2) = key, D = 1")
    lines.append("PROFILE_MOMENTS = {")
    for g, (N, m) in moments.items():
        lines.append(f"    {g!r}: ({N!r}, {m!r}),")
    lines.append("}")

    def excess(g):
        return oracles.profile_moments(g)[0] - 3.0

    sub = brentq(excess, 0.05, 1.0, xtol=1e-12)
    sup = brentq(excess, 2.1, 8.0, xtol=1e-12)
    lines.append("# G(1/2) of the two k0 = 3 branches before normalization")
    lines.append(f"K0_3_G_HALF = ({sub!r}, {sup!r})")

    lines.append("# continuum int phi / int x phi on [0, 1] for Gaussian(0.25, 0.2)")
    lines.append(f"GAUSS_RATIO_025_02 = {float(oracles.gaussian_number_over_mass(0.25, 0.2))!r}")

    # Gamma of the frozen-in-time field for a hat-shaped g_ini with unit mass
    def hat(x):
        return max(0.0, 1.0 - abs(x - 0.5) / 0.5) * 4.0 if 0.0 <= x <= 1.0 else 0.0
    points = [(1.1, 0.2), (1.1, 0.6), (1.25, 0.05), (1.25, 0.9)]
    lines.append("# (t, x, Gamma) for g(s, z) = hat(z) 1{z <= 1}, k0 = 3")
    lines.append("FROZEN_FIELD_GAMMA = [")
    for t, x in points:
        lines.append(f"    ({t!r}, {x!r}, {oracles.frozen_field_gamma(hat, x, t, 3.0)!r}),")
    lines.append("]")
    print("\n".join(lines))


if __name__ == "__main__":
    main()
