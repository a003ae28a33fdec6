"""Uniform positivity of the Lyapunov exponent for the large-coupling cos potential.

For lam large every energy in the spectrum interval should carry an exponent
close to log lam.  This walks the interval, prints L_refined / log lam, and
then shows the two refinement scales agreeing.

    python demos/positivity_scan.py            # lam = 1e3, coarse grid (~1 min)
    python demos/positivity_scan.py 100 40     # lam, number of energies
"""
import math
import sys

import numpy as np

from cocycle_lab.arithmetic import parse_alpha
from cocycle_lab.cocycle import QpCocycle, cos_potential
from cocycle_lab.spectral import le_refined, positivity_scan, spectrum_interval

lam = float(sys.argv[1]) if len(sys.argv) > 1 else 1e3
count = int(sys.argv[2]) if len(sys.argv) > 2 else 25
alpha = float(parse_alpha("golden"))
v = cos_potential()

lo, hi = spectrum_interval(v, lam)
print(f"lam = {lam:g}, golden alpha, energies in [{lo:g}, {hi:g}]")
print(f"Herman's bound gives L >= log(lam/2), i.e. ratio >= {math.log(lam / 2) / math.log(lam):.4f}\n")

res = positivity_scan(v, lam, alpha, np.linspace(lo, hi, count), 2000, 1024)
print(f"{'E':>10}  {'L_n':>9}  {'L_refined':>9}  ratio")
for s in res["table"]:
    print(f"{s.E:10.2f}  {s.L_n:9.5f}  {s.L_refined:9.5f}  {s.L_refined / math.log(lam):.4f}")
print(f"\nmin ratio over the grid: {res['min_ratio']:.4f}")

# the refined estimate 2 L_2l - L_l barely moves once l passes a few dozen
E = 0.5 * (lo + hi)
c = QpCocycle.schrodinger(alpha, E, lam)
print(f"\nrefinement at E = {E:g}:")
for l in (32, 64, 128):
    print(f"  l = {l:4d}: L_refined = {le_refined(c, l, 1024):.8f}")
