"""Following the multiscale induction through a resonance.

At level 1 the two critical intervals can see each other along the orbit.
When they do, the gap between stable and unstable directions stops being a
simple type I or type II curve and picks up a sharp arctan rise: type III.
This script finds such a t, runs the induction there and at a generic t,
and prints the classification at each level.

    python demos/resonance_induction.py
"""
from cocycle_lab.arithmetic import parse_alpha
from cocycle_lab.cocycle import QpCocycle
from cocycle_lab.induction import run_induction, scan_resonant_t

lam = 1e3
alpha = float(parse_alpha("golden"))


def show(t):
    c = QpCocycle.reduced(alpha, t, lam)
    states, stop = run_induction(c, 2)
    print(f"\nt = {t:+.4f}")
    for s in states:
        tags = ", ".join(cl.tag for cl in s.classes)
        extra = f", resonance k = {s.resonance_k}" if s.resonance_k is not None else ""
        print(f"  level {s.level}: returns ({s.r_plus}, {s.r_minus}), {s.klass} [{tags}]{extra}"
              f"{', uniformly hyperbolic' if s.uh_stop else ''}")
    if stop is not None:
        print(f"  stopped: {stop}")


found = scan_resonant_t(alpha, lam)
print(f"{len(found)} resonant t found by the level-1 scan; first few:",
      ", ".join(f"{t:+.3f} (k={k})" for t, k in found[:5]))

show(0.2)                                   # generic
t_res = [t for t, k in found if k == 2]
show(t_res[len(t_res) // 2])                # middle of the k = 2 cluster: type III
show(1 + 1.5 / lam)                         # above the spectrum: hyperbolic at once
