#!/usr/bin/env python3
"""Generate the synthetic N2-like molecular data files shipped with ccdepo.

The line list is not real spectroscopy.  Level energies follow textbook
Dunham-style constants for the ground state and rough term values for six
excited singlet manifolds; dipoles are of order 1 D.  On top of that the
X(v=0) <-> X(v=1) band carries adjustable dipoles which are solved for so
that, at the reference field wavelengths:

* every X(v=0, J, M) state (and X(v=1, J<=6, M=0)) has the same
  polarisability ``alpha0`` at lambda2, close to a tune-out point, and
* every (J, M)/(J+2, M) pair has the same interference sum ``s0``.

That makes the interference potential competitive with the non-interference
one at E2/E1 = 1e4 and keeps the potential shape identical for every pair in
a thermal mixture.

Usage::

    python tools/make_dataset.py            # writes src/ccdepo/data/*.mol
    python tools/make_dataset.py --check    # regenerate and diff
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from scipy import constants as const

HBAR = const.hbar
CM = 2 * math.pi * const.c * 100.0  # rad/s per cm-1
DEBYE = 1e-21 / const.c

LAMBDA1 = 0.628e-6
LAMBDA2 = 0.736e-6
W1 = 2 * math.pi * const.c / LAMBDA1
W2 = 2 * math.pi * const.c / LAMBDA2

# calibration targets (SI): polarisability at lambda2 and pair interference sum
ALPHA0 = 1.5e-44
S0 = 7.8e-40

J_GROUND = 23   # X v=0 ladder
J_MAX = 24      # intermediates
NU1_TUNED = 6   # X v=1, M=0 states with J <= this are usable superposition partners

# X state constants, cm-1
WE, WEXE, BE, AE = 2358.57, 14.32, 1.99824, 0.017318

# label, T0, vibrational spacing, B', dipole scale (D), Franck-Condon-ish factors
EXCITED = [
    ("b1Pu", 101455.0, 650.0, 1.42, 1.30),
    ("bp1Su", 103680.0, 750.0, 1.15, 1.20),
    ("c1Pu", 104140.0, 2180.0, 1.93, 1.10),
    ("cp1Su", 104325.0, 2200.0, 1.94, 1.40),
    ("o1Pu", 105680.0, 1700.0, 1.65, 0.90),
    ("ep1Su", 115870.0, 2150.0, 1.95, 0.80),
]
FC = {0: (0.80, 0.60), 1: (0.50, 0.55)}  # ground v -> (v'=0, v'=1)
BLUE_SCALE = 1.8


def x_energy(v: int, J: int) -> float:
    g = lambda n: WE * (n + 0.5) - WEXE * (n + 0.5) ** 2
    bv = BE - AE * (v + 0.5)
    return round(g(v) - g(0) + bv * J * (J + 1), 6)


def excited_energy(T0, wv, B, v, J) -> float:
    return round(T0 + wv * v + B * J * (J + 1), 6)


def sid(label, v, J, M):
    return f"{label}.{v}.{J}.{M}"


def blue_dipole(scale, v_ground, v_exc, J, Jp, M) -> float:
    """Mild, smooth J/M dependence; debye."""
    branch = 1.0 if Jp > J else 0.95
    return round(BLUE_SCALE * scale * FC[v_ground][v_exc] * branch * (1 + 0.004 * J)
                 * (1 - 0.05 * (M / (J + 1)) ** 2), 9)


def g_pol(om, w):
    return (1.0 / (om + w) + 1.0 / (om - w)) / HBAR


def k_pair(om1, om2):
    """Bracket of Re(coh_w1 + coh_w2) per unit real coherence."""
    return (1.0 / (om1 + W2) + 1.0 / (om2 - W2) + 1.0 / (om2 + W1) + 1.0 / (om1 - W1)) / HBAR


class Builder:
    def __init__(self):
        self.energy = {}    # id -> cm-1
        self.order = []
        self.dip = {}       # (a, b) -> debye, in insertion order
        self.adj = {}

    def state(self, label, v, J, M, e):
        i = sid(label, v, J, M)
        self.energy[i] = e
        self.order.append((i, label, v, J, M))
        return i

    def add(self, a, b, mu):
        if mu == 0.0:
            return
        assert (a, b) not in self.dip and (b, a) not in self.dip
        self.dip[(a, b)] = mu
        self.adj.setdefault(a, {})[b] = mu
        self.adj.setdefault(b, {})[a] = mu

    def om(self, a, b):
        """(E_b - E_a)/hbar in rad/s."""
        return (self.energy[b] - self.energy[a]) * CM

    def neighbours(self, a):
        return self.adj.get(a, {}).items()

    def alpha(self, a, w=W2):
        return sum((mu * DEBYE) ** 2 * g_pol(self.om(a, j), w) for j, mu in self.neighbours(a))

    def pair_sum(self, a, b):
        na = dict(self.neighbours(a))
        nb = dict(self.neighbours(b))
        return sum(na[j] * nb[j] * DEBYE ** 2 * k_pair(self.om(a, j), self.om(b, j))
                   for j in na.keys() & nb.keys())


def build_n2(alpha0=ALPHA0, s0=S0):
    bld = Builder()
    for J in range(J_GROUND + 1):
        for M in range(-J, J + 1):
            bld.state("X", 0, J, M, x_energy(0, J))
    for J in range(J_MAX + 1):
        for M in range(-J, J + 1):
            bld.state("X", 1, J, M, x_energy(1, J))
    for J in range(NU1_TUNED + 2):
        bld.state("X", 2, J, 0, x_energy(2, J))
    for label, T0, wv, B, _ in EXCITED:
        for v in (0, 1):
            for J in range(J_MAX + 1):
                for M in range(-J, J + 1):
                    bld.state(label, v, J, M, excited_energy(T0, wv, B, v, J))

    # fixed blue couplings
    def blue(v_ground, J, M):
        a = sid("X", v_ground, J, M)
        for label, _, _, _, scale in EXCITED:
            for v in (0, 1):
                for Jp in (J - 1, J + 1):
                    if 0 <= Jp <= J_MAX and abs(M) <= Jp:
                        bld.add(a, sid(label, v, Jp, M), blue_dipole(scale, v_ground, v, J, Jp, M))

    for J in range(J_GROUND + 1):
        for M in range(-J, J + 1):
            blue(0, J, M)
    for J in range(NU1_TUNED + 1):
        blue(1, J, 0)

    worst = math.inf
    # X v=0 <-> v=1 chains, one per (M, J parity)
    for M in range(-J_GROUND, J_GROUND + 1):
        for J0 in (abs(M), abs(M) + 1):
            down = 0.0  # r- of the current state, debye
            J = J0
            while J <= J_GROUND:
                a = sid("X", 0, J, M)
                if down:
                    bld.add(a, sid("X", 1, J - 1, M), down)
                # polarisability without the up-coupling
                rest = bld.alpha(a)
                up_target = sid("X", 1, J + 1, M)
                r2 = (alpha0 - rest) / (g_pol(bld.om(a, up_target), W2) * DEBYE ** 2)
                worst = min(worst, r2)
                if r2 <= 0:
                    raise SystemExit(f"no real solution for r+ at J={J} M={M} (r^2={r2:.3e} D^2)")
                up = round(math.sqrt(r2), 10)
                bld.add(a, up_target, up)
                if J + 2 > J_GROUND:
                    break
                b = sid("X", 0, J + 2, M)
                # interference sum from blue states alone (b has only blue entries so far)
                s_blue = bld.pair_sum(a, b)
                kr = k_pair(bld.om(a, up_target), bld.om(b, up_target)) * DEBYE ** 2
                down = round((s0 - s_blue) / (up * kr), 10)
                J += 2

    # X v=1, M=0 superposition partners: cancel via X v=2
    for J in range(NU1_TUNED + 1):
        a = sid("X", 1, J, 0)
        rest = bld.alpha(a)
        targets = [sid("X", 2, Jp, 0) for Jp in (J - 1, J + 1) if Jp >= 0]
        gsum = sum(g_pol(bld.om(a, t), W2) for t in targets) * DEBYE ** 2
        q2 = (alpha0 - rest) / gsum
        if q2 <= 0:
            raise SystemExit(f"no real solution for X v=1 J={J}")
        q = round(math.sqrt(q2), 10)
        for t in targets:
            bld.add(a, t, q)
    return bld, worst


HEADER_N2 = """\
# Synthetic N2-like model for ccdepo.  Generated by tools/make_dataset.py;
# do not edit by hand.  Not real spectroscopic data: see the docstring of
# the generator for how the X(v=0)-X(v=1) dipoles were calibrated.
[meta]
name = N2-synthetic
mass = 28.0134 u
rotational_constant = 1.9896 cm-1
ground = X
parity.* = (-1)^J
"""


def render(bld: Builder, header: str) -> str:
    out = [header, "[states]", "fields = id label nu J M energy", "units = energy:cm-1"]
    for i, label, v, J, M in bld.order:
        out.append(f"{i} {label} {v} {J} {M} {bld.energy[i]:.6f}")
    out += ["", "[dipoles]", "fields = a b mu", "units = mu:debye"]
    for (a, b), mu in bld.dip.items():
        out.append(f"{a} {b} {mu:.10g}")
    return "\n".join(out) + "\n"


THREE_LEVEL = """\
# Three-level test model: one ground level, two excited levels.
[meta]
name = three-level
mass = 28.0134 u
rotational_constant = 1.9896 cm-1
ground = X
parity.* = (-1)^J

[states]
fields = id label nu J M energy
units = energy:cm-1
g X 0 0 0 0.0
e1 A 0 1 0 52000.0
e2 B 0 1 0 78000.0

[dipoles]
fields = a b mu
units = mu:debye
g e1 1.2
g e2 0.7
"""

LAMBDA_MODEL = """\
# Lambda-type test model: two ground levels (J=0 and J=2) sharing
# excited J=1 intermediates, plus one level coupled to a single ground state.
[meta]
name = lambda-test
mass = 28.0134 u
rotational_constant = 1.9896 cm-1
ground = X
parity.* = (-1)^J

[states]
fields = id label nu J M energy
units = energy:cm-1
g0 X 0 0 0 0.0
g2 X 0 2 0 2400.0
f1 X 0 3 0 2600.0
a1 A 0 1 0 41000.0
b1 B 0 1 0 63000.0
c3 C 0 3 0 70000.0

[dipoles]
fields = a b mu
units = mu:debye
g0 a1 1.1
g2 a1 -0.8
g0 b1 0.6
g2 b1 1.3
g2 c3 0.9
"""


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parents[1] / "src/ccdepo/data")
    ap.add_argument("--alpha0", type=float, default=ALPHA0)
    ap.add_argument("--s0", type=float, default=S0)
    ap.add_argument("--check", action="store_true", help="fail if the files on disk differ")
    args = ap.parse_args(argv)

    bld, worst = build_n2(args.alpha0, args.s0)
    files = {
        "n2_synthetic.mol": render(bld, HEADER_N2),
        "three_level.mol": THREE_LEVEL,
        "lambda_test.mol": LAMBDA_MODEL,
    }
    print(f"states={len(bld.energy)} dipoles={len(bld.dip)} min r+^2={worst:.4f} D^2", file=sys.stderr)
    stale = []
    for name, text in files.items():
        path = args.out / name
        if args.check:
            if not path.exists() or path.read_text() != text:
                stale.append(name)
        else:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text)
    if stale:
        print("out of date: " + ", ".join(stale), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
