"""Type I/II/III gap functions and the finite-depth multiscale induction.

The induction runs on the reduced cocycle Lambda(x) R_phi(x, t) with
g_1 = arctan(t - v).  Level i carries intervals I_i of radius
2^-i q_{N+i-1}^{-2 tau} around the critical set C_i, the return times
r_i^+-, the next gap curve g_{i+1} = s_{r+} - u_{r-} on I_i, its minimizers
C_{i+1} and its class.

Gap functions take values in RP^1 = R / pi Z.  Curves are stored as
continuous lifts; a "zero" is a crossing of any multiple of pi and |g|
means the distance to the nearest multiple of pi.
"""
import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from . import arithmetic as ar
from .cocycle import QpCocycle, find_extrema, transfer, transfer_batch
from .directions import GapCurve, gap_curve, refine_field, sample_directions
from .errors import (CapExceeded, ClassificationLost, FloorViolated, LambdaTooSmall,
                     OutsideParameterRange, PrecisionExhausted, RegimeViolation)
from .sl2core import PI, polar_arrays, wrap_signed

TAGS = ("TypeIPlus", "TypeIMinus", "TypeII", "TypeIII", "Unclassified")


@dataclass(frozen=True)
class Margins:
    c_margin: float = 0.05       # the c of |f| > c r^3
    curv_margin: float = 0.05    # the c of |f''| > c
    jump_window: float = 0.02    # type III: a rise of > pi/2 within this fraction of I
    slope_noise: float = 1e-9    # derivative values below this are treated as 0


@dataclass(frozen=True)
class FunctionClass:
    tag: str
    witness: dict = field(default_factory=dict)

    @property
    def is_type1(self):
        return self.tag in ("TypeIPlus", "TypeIMinus")


# ------------------------------------------------------------ curve helpers

def residual(g):
    """Signed distance of a lifted value to the nearest multiple of pi."""
    return np.asarray(g) - PI * np.round(np.asarray(g) / PI)


def lattice_zeros(xs, g):
    """x locations where the lifted curve meets some k pi.

    Samples lying exactly on the lattice count once; otherwise each bracket
    contributes the multiples of pi strictly between its end values, placed
    by linear interpolation.
    """
    xs = np.asarray(xs, dtype=float)
    g = np.asarray(g, dtype=float)
    out = [float(x) for x in xs[residual(g) == 0]]
    lo = np.minimum(g[:-1], g[1:])
    hi = np.maximum(g[:-1], g[1:])
    n = np.ceil(hi / PI) - np.floor(lo / PI) - 1
    for i in np.flatnonzero(n > 0):
        for k in range(int(np.floor(lo[i] / PI)) + 1, int(np.ceil(hi[i] / PI))):
            w = (k * PI - g[i]) / (g[i + 1] - g[i])
            out.append(float(xs[i] + w * (xs[i + 1] - xs[i])))
    return sorted(out)


def _zero_brackets(xs, g):
    """Indices i such that [xs[i], xs[i+1]] holds a zero."""
    z = lattice_zeros(xs, g)
    return sorted(set(int(min(max(np.searchsorted(xs, x, side="right") - 1, 0), len(xs) - 2)) for x in z))


def _slopes(xs, g):
    xm = 0.5 * (xs[1:] + xs[:-1])
    return xm, np.diff(g) / np.diff(xs)


def _sign_changes(v, noise):
    s = np.sign(np.where(np.abs(v) < noise, 0.0, v))
    nz = np.flatnonzero(s != 0)
    if nz.size < 2:
        return []
    ss = s[nz]
    return [int(nz[i]) for i in np.flatnonzero(ss[1:] != ss[:-1])]


def find_jump(xs, g, radius, window_frac):
    """Location and size of the steepest rise of more than pi/2 inside a short window."""
    w = window_frac * radius
    j = np.searchsorted(xs, xs + w, side="right") - 1
    rise = g[j] - g[np.arange(len(xs))]
    i = int(np.argmax(np.abs(rise)))
    if abs(rise[i]) <= 0.5 * PI:
        return None
    xm, sl = _slopes(xs, g)
    seg = slice(i, max(j[i], i + 1))
    k = i + int(np.argmax(np.abs(sl[seg])))
    return {"x": float(xm[k]), "height": float(rise[i]), "lo": float(xs[i]), "hi": float(xs[j[i]])}


# ----------------------------------------------------------- classification

def classify(f, r, l=None, margins=Margins(), center=None):
    """Type of a gap curve on I = B(center, r) following the type I/II/III clauses.

    The witness "margin" is measured in the scale-weighted C^2 norm
    max(|h|, r |h'|, r^2 |h''|): perturbations smaller than it keep the tag.
    A sup-norm margin alone cannot do that, since a small fast wiggle adds
    critical points to any curve.
    """
    xs = np.asarray(f.xs, dtype=float)
    g = np.asarray(f.g_vals, dtype=float)
    if center is None:
        center = 0.5 * (xs[0] + xs[-1])
    wit = {"r": r, "center": float(center)}
    jump = find_jump(xs, g, r, margins.jump_window)
    if jump is not None:
        return _classify_type3(xs, g, r, l, jump, wit, margins)
    zeros = lattice_zeros(xs, g)
    xm, sl = _slopes(xs, g)
    crit_idx = _sign_changes(sl, margins.slope_noise)
    crits = [float(xm[i]) for i in crit_idx]
    wit.update(zeros=zeros, criticals=crits, sup_abs=float(np.abs(g).max()))
    if len(zeros) == 1 and len(crits) <= 1:
        x0 = zeros[0]
        wit["x0"] = x0
        if abs(x0 - center) > r / 3:
            return FunctionClass("Unclassified", {**wit, "failed": "type I zero outside I/3"})
        near = np.abs(xm - x0) <= r / 2
        smin = float(np.abs(sl[near]).min()) if near.any() else float(np.abs(sl).min())
        wit["min_slope_near_zero"] = smin
        if smin <= r * r:
            return FunctionClass("Unclassified", {**wit, "failed": "type I |f'| <= r^2 near zero"})
        i0 = int(np.argmin(np.abs(xm - x0)))
        sgn = np.sign(sl[i0])
        J = np.sign(sl) * sgn <= 0
        floor = margins.c_margin * r ** 3
        jmin = float(np.abs(residual(0.5 * (g[1:] + g[:-1])))[J].min()) if J.any() else math.inf
        wit["J_min"] = jmin
        if jmin <= floor:
            return FunctionClass("Unclassified", {**wit, "failed": "type I |f| <= c r^3 on J"})
        others = np.abs(residual(g))[np.abs(xs - x0) > r / 2]
        # no robustness is certified once a critical point is present
        no_crit = r * float(np.abs(sl).min()) if not crits else 0.0
        wit["margin"] = float(min(smin * (r / 3 - abs(x0 - center)), r * (smin - r * r),
                                  jmin - floor, no_crit,
                                  others.min() if others.size else math.inf))
        return FunctionClass("TypeIPlus" if sgn > 0 else "TypeIMinus", wit)
    if len(zeros) <= 2 and len(crits) == 1:
        xc = crits[0]
        pts = zeros + [xc]
        if any(abs(p - center) > r / 2 for p in pts):
            return FunctionClass("Unclassified", {**wit, "failed": "type II points outside I/2"})
        if len(zeros) == 1 and abs(zeros[0] - xc) > 4 * np.max(np.diff(xs)):
            return FunctionClass("Unclassified", {**wit, "failed": "type II single zero is not the critical point"})
        x2, curv = _slopes(xm, sl)
        flat = np.abs(0.5 * (sl[1:] + sl[:-1])) < r * r
        cmin = float(np.abs(curv[flat]).min()) if flat.any() else math.inf
        wit["min_curvature_where_flat"] = cmin
        if cmin <= margins.curv_margin:
            return FunctionClass("Unclassified", {**wit, "failed": "type II |f''| <= c where |f'| < r^2"})
        ci = int(np.argmin(np.abs(xs - xc)))
        # a perturbation below r^3 keeps new critical points inside |f'| < 2 r^2,
        # where the curvature must still clear the margin
        flat2 = np.abs(0.5 * (sl[1:] + sl[:-1])) < 2 * r * r
        c2 = float(np.abs(curv[flat2]).min()) if flat2.any() else math.inf
        wit["margin"] = float(min(abs(residual(g[ci])) if not zeros else math.inf,
                                  cmin * (r / 2 - max(abs(p - center) for p in pts)) ** 2,
                                  r ** 3, r * r * (c2 - margins.curv_margin)))
        return FunctionClass("TypeII", wit)
    if not zeros:
        return FunctionClass("Unclassified", {**wit, "failed": "no zero and no single critical point"})
    return FunctionClass("Unclassified", {**wit, "failed": f"{len(zeros)} zeros, {len(crits)} critical points"})


def _classify_type3(xs, g, r, l, jump, wit, margins):
    wit.update(jump=jump, l=l)
    if not 0.5 * PI < abs(jump["height"]) < 1.5 * PI:
        return FunctionClass("Unclassified", {**wit, "failed": "type III jump height not ~ pi"})
    xm, sl = _slopes(xs, g)
    pad = 2 * (jump["hi"] - jump["lo"]) + 1e-300
    away = (xm < jump["lo"] - pad) | (xm > jump["hi"] + pad)
    if away.sum() < 4:
        return FunctionClass("Unclassified", {**wit, "failed": "type III background not sampled"})
    bg = float(np.median(sl[away]))
    wit["background_slope"] = bg
    if np.sign(bg) == np.sign(jump["height"]) or bg == 0.0:
        return FunctionClass("Unclassified", {**wit, "failed": "type III background slope not opposite to the jump"})
    wit["zeros"] = lattice_zeros(xs, g)
    h = abs(jump["height"])
    wit["margin"] = float(0.5 * min(h - PI / 2, 1.5 * PI - h, r * abs(bg)))
    return FunctionClass("TypeIII", wit)


# ------------------------------------------------------- type III bifurcation

def _as_callable(f):
    if callable(f):
        return f
    xs, g = np.asarray(f.xs), np.asarray(f.g_vals)
    return lambda x: np.interp(x, xs, g)


def composed_type3(f1, f2, l):
    """tan^-1(l^2 tan f1) - pi/2 + f2 as a callable."""
    F1, F2 = _as_callable(f1), _as_callable(f2)
    return lambda x: np.arctan(l * l * np.tan(F1(x))) - 0.5 * PI + F2(x)


def _zero_count(G, xs, tol):
    """Zeros of a smooth G sampled on the sorted xs; a tangential zero counts once."""
    lo, hi = xs[0], xs[-1]
    v = G(xs)
    d = np.diff(v)
    ext = [i for i in range(1, len(d)) if np.sign(d[i]) != np.sign(d[i - 1]) and d[i] != 0]
    # refine interior extrema so that narrow humps are not missed
    nodes = [(lo, v[0])]
    for i in ext:
        a, b = xs[i - 1], xs[i + 1]
        for _ in range(60):
            m1, m2 = a + (b - a) / 3, b - (b - a) / 3
            g1, g2 = G(np.array([m1, m2]))
            if (g1 < g2) == (d[i - 1] < 0):
                b = m2
            else:
                a = m1
        xm = 0.5 * (a + b)
        nodes.append((xm, float(G(np.array([xm]))[0])))
    nodes.append((hi, v[-1]))
    count = 0
    skip_next = False
    for j in range(1, len(nodes)):
        y0, y1 = nodes[j - 1][1], nodes[j][1]
        if abs(y1) <= tol and 0 < j < len(nodes) - 1:
            count += 1          # tangential touch at an extremum
            skip_next = True
            continue
        if skip_next:
            skip_next = False
            continue
        if y0 * y1 < 0:
            count += 1
    return count


def type3_bifurcation(f1, f2, l, d_values, interval=None, tol=1e-10):
    """Zero counts of tan^-1(l^2 tan f1) - pi/2 + f2(. - d) and the critical d0.

    f1, f2 are callables (or GapCurves, interpolated) with f1(0) = 0 and
    f2(0) = 0; f2 is translated so that its zero sits at d.  Zeros are those
    of the smooth equivalent l^2 sin f1 sin f2 - cos f1 cos f2, which
    vanishes exactly where the composed function is 0 mod pi.
    """
    F1, F2 = _as_callable(f1), _as_callable(f2)
    lo, hi = interval if interval is not None else (-0.25, 0.25)
    # the composed zeros sit within ~d of the zero of f1, on scales down to
    # l^-2; a uniform grid plus geometric clusters at that zero resolves them
    xs = np.linspace(lo, hi, 4097)
    v1 = F1(xs)
    anchors = [brentq(F1, xs[i], xs[i + 1]) for i in np.flatnonzero(np.sign(v1[:-1]) * np.sign(v1[1:]) < 0)]
    anchors += [float(x) for x in xs[v1 == 0]]
    offs = np.logspace(math.log10(1e-3 / (l * l)), math.log10(hi - lo), 1500)
    for a in anchors:
        xs = np.concatenate([xs, a - offs, a + offs, [a]])
    xs = np.unique(xs[(xs >= lo) & (xs <= hi)])

    def G_of(d):
        def G(x):
            a, b = F1(x), F2(x - d)
            return (l * l * np.sin(a) * np.sin(b) - np.cos(a) * np.cos(b)) / (1.0 + l * l * np.abs(np.sin(a)))
        return G

    counts = np.array([_zero_count(G_of(d), xs, tol) for d in d_values])

    def has_zero(d):
        return _zero_count(G_of(d), xs, tol) >= 1

    # bracket the transition from "no zero" to "zeros"
    ds = np.sort(np.asarray(d_values, dtype=float))
    flags = [has_zero(d) for d in ds]
    d0 = None
    for a, b, fa, fb in zip(ds[:-1], ds[1:], flags[:-1], flags[1:]):
        if fa != fb:
            for _ in range(60):
                m = 0.5 * (a + b)
                if has_zero(m) == fb:
                    b = m
                else:
                    a = m
            d0 = 0.5 * (a + b)
            break
    at_d0 = _zero_count(G_of(d0), xs, 1e-6) if d0 is not None else None
    return {"zero_counts": counts, "d0_hat": d0, "count_at_d0": at_d0}


def min_gap_floor(f, X, r_prime, c_margin=0.05):
    """|f| > c r'^3 outside B(X, r')?"""
    xs = np.asarray(f.xs, dtype=float)
    out = np.ones(xs.size, dtype=bool)
    for x in np.atleast_1d(X):
        out &= np.abs(xs - x) >= r_prime
    if not out.any():
        return {"floor_ok": True, "measured_min": math.inf, "floor": c_margin * r_prime ** 3}
    m = float(np.abs(residual(f.g_vals))[out].min())
    floor = c_margin * r_prime ** 3
    return {"floor_ok": bool(m > floor), "measured_min": m, "floor": floor}


# ---------------------------------------------------------------- schedule

@dataclass(frozen=True)
class LambdaSchedule:
    logs: np.ndarray
    q_seq: tuple
    floor: float          # (1 - eps) log lam
    lambda_inf_log: float
    clears: bool


def lambda_schedule(log_lambda, q_seq, C, depth, eps=0.1, enforce=True):
    """log lam_n = log lam_{n-1} (1 - C log q_n / q_{n-1}), n = 1..depth."""
    q = [int(v) for v in q_seq]
    if C < 0:
        raise ValueError("C must be >= 0")
    if any(b <= a for a, b in zip(q[:-1], q[1:])):
        raise ValueError("q_seq must be increasing")
    if depth > len(q) - 1:
        raise ValueError("q_seq too short for the requested depth")
    logs = [float(log_lambda)]
    for n in range(1, depth + 1):
        logs.append(logs[-1] * (1.0 - C * math.log(q[n]) / q[n - 1]))
    logs = np.array(logs)
    floor = (1.0 - eps) * log_lambda
    clears = bool(logs[-1] > floor)
    if enforce and not clears:
        raise FloorViolated(f"schedule reaches {logs[-1]:.6g} < (1 - {eps}) log lam = {floor:.6g}")
    return LambdaSchedule(logs, tuple(q[: depth + 1]), floor, float(logs[-1]), clears)


# ----------------------------------------------------------------- the state

@dataclass(frozen=True)
class InductionConfig:
    tau: float = 2.5
    eps: float = 0.1
    C_schedule: float = 1.0
    margins: Margins = Margins()
    grid: int = 129
    drift_const: float = 10.0
    drift_floor: float = 1e-8          # resolution of located minimizers
    return_cap: int = 10 ** 8
    max_refine_points: int = 8000
    bend_tol: float = 1e-3
    N: Optional[int] = None


@dataclass(frozen=True)
class InductionState:
    level: int
    intervals: tuple                 # (I_{i,1}, I_{i,2}) as CircleIntervals
    centers: tuple                   # C_i (the interval centers)
    criticals: tuple                 # C_{i+1}: minimizers of g_{i+1} on I_i
    extras: tuple                    # c'_{i+1,1}, c'_{i+1,2} (type III), or ()
    r_plus: int
    r_minus: int
    resonance_k: Optional[int]
    classes: tuple                   # FunctionClass of g_{i+1} per interval
    lambda_floor: float              # log lam_{N+i}
    gap_min: float
    uh_stop: bool
    N: int
    q: int                           # q_{N+i-1}
    norm_floor_ok: bool
    norm_rates: tuple                # min (1/r) log|A_{+-r}| on I_i
    drift: tuple
    drift_bound: float
    drift_ok: bool
    orbit_relation: Optional[dict]
    curves: tuple = field(default=(), repr=False, compare=False)

    @property
    def klass(self):
        tags = [c.tag for c in self.classes]
        if "Unclassified" in tags:
            return "Unclassified"
        if "TypeIII" in tags:
            return "TypeIII"
        if "TypeII" in tags:
            return "TypeII"
        return "TypeI"

    def record(self):
        return {
            "level": self.level,
            "intervals": [[I.center, I.radius] for I in self.intervals],
            "criticals": list(self.criticals),
            "extras": list(self.extras),
            "returns": [self.r_plus, self.r_minus],
            "k": self.resonance_k,
            "class": [c.tag for c in self.classes],
            "lambda_floor_log": self.lambda_floor,
            "gap_min": self.gap_min,
            "uh_stop": self.uh_stop,
            "norm_floor_ok": self.norm_floor_ok,
            "norm_rates": list(self.norm_rates),
            "drift": list(self.drift),
            "drift_bound": self.drift_bound,
            "drift_ok": self.drift_ok,
            "orbit_relation": self.orbit_relation,
        }

    def to_json(self):
        return json.dumps(self.record(), sort_keys=True, default=_json_default)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


# ------------------------------------------------------------------ helpers

def _cf_for(alpha):
    return ar.cf_expand(float(alpha))


def default_N(cf, r, tau):
    """Smallest index with q_N^{-2 tau} < r / 10."""
    for idx, q in enumerate(cf.q):
        if q > 1 and q ** (-2.0 * tau) < r / 10:
            return idx
    raise PrecisionExhausted("no convergent small enough for the starting radius")


def starting_radius(v):
    ex = v.extrema if v.extrema is not None else find_extrema(v)
    ex = sorted(float(e) % 1.0 for e in ex)
    if len(ex) < 2:
        raise RegimeViolation("the potential needs at least two extrema")
    gaps = [ar.circle_dist(a, b) for a in ex for b in ex if a != b]
    return 0.1 * min(gaps)


def first_criticals(v, t, grid=4096):
    """C_1: minimizers of |arctan(t - v)|, i.e. the solutions of v = t (or the nearest extremum)."""
    xs = np.arange(grid + 1) / grid
    h = t - v(xs)
    roots = []
    for i in np.flatnonzero(np.sign(h[:-1]) * np.sign(h[1:]) <= 0):
        if h[i] == 0:
            roots.append(float(xs[i]))
        elif h[i + 1] != 0:
            roots.append(brentq(lambda x: t - float(v(x)), xs[i], xs[i + 1], xtol=1e-15))
    roots = sorted(set(round(x % 1.0, 15) for x in roots))
    if len(roots) > 2:
        raise RegimeViolation(f"v = t has {len(roots)} solutions; the induction assumes two extrema")
    if len(roots) == 2:
        return tuple(roots)
    ex = v.extrema if v.extrema is not None else find_extrema(v)
    best = min(ex, key=lambda e: abs(t - float(v(e))))
    if len(roots) == 1:
        return (roots[0], roots[0])
    return (float(best) % 1.0, float(best) % 1.0)


def _pieces(centers, radius):
    """Connected components of B(c1, radius) U B(c2, radius)."""
    c1, c2 = centers
    d = ar.circle_dist(c1, c2)
    if d >= 2 * radius:
        return [ar.CircleInterval(c1, radius), ar.CircleInterval(c2, radius)], [0, 1]
    # lift c2 next to c1 and take the hull
    c2l = c1 + wrap_unit(c2 - c1)
    mid = 0.5 * (c1 + c2l)
    return [ar.CircleInterval(mid, 0.5 * d + radius)], [0, 0]


def wrap_unit(x):
    return (x + 0.5) % 1.0 - 0.5


def _lift_near(x, ref):
    return ref + wrap_unit(x - ref)


def _hint_points(piece, hints, levels=12):
    """Geometric clusters around expected jump locations inside the piece."""
    out = []
    for h in hints:
        x = _lift_near(h, piece.center)
        if abs(x - piece.center) >= piece.radius:
            continue
        offs = piece.radius * np.logspace(-1, -levels, 4 * levels)
        pts = np.concatenate([[x], x - offs, x + offs])
        out.append(pts[np.abs(pts - piece.center) < piece.radius])
    return np.concatenate(out) if out else np.empty(0)


def _curve_on(c, piece, r_plus, r_minus, cfg, hints=()):
    xs = np.unique(np.concatenate([piece.grid(cfg.grid), _hint_points(piece, hints)]))
    f = sample_directions(c, piece, r_plus, r_minus, xs=xs)
    f = refine_field(c, f, max_points=cfg.max_refine_points, bend_tol=cfg.bend_tol)
    return f, gap_curve(f)


def _eval_lift(c, piece, r_plus, r_minus, xs, curve):
    """Lifted g at new points, branch matched to the sampled curve."""
    f = sample_directions(c, piece, r_plus, r_minus, xs=np.unique(xs))
    raw = f.s_vals - f.u_vals
    ref = np.interp(f.xs, curve.xs, curve.g_vals)
    return f.xs, raw + PI * np.round((ref - raw) / PI)


def _refine_min(c, piece, rp, rm, curve, i, zoom=8, pts=17):
    """Locate a zero (bracket i, i+1) or a local minimum of |g| near sample i."""
    xs, g = curve.xs, curve.g_vals
    if i in _zero_brackets(xs, g) and i + 1 < len(xs):
        a, b = xs[i], xs[i + 1]
        level = PI * round(0.5 * (g[i] + g[i + 1]) / PI)
        best_x, best_v = (a, abs(g[i] - level)) if abs(g[i] - level) <= abs(g[i + 1] - level) \
            else (b, abs(g[i + 1] - level))
        for _ in range(zoom):
            if b - a <= 4 * np.spacing(abs(a) + 1.0):
                break
            t, gv = _eval_lift(c, piece, rp, rm, np.linspace(a, b, pts), curve)
            h = gv - level
            j = int(np.argmin(np.abs(h)))
            if abs(h[j]) < best_v:
                best_x, best_v = float(t[j]), float(abs(h[j]))
            k = np.flatnonzero(np.sign(h[:-1]) * np.sign(h[1:]) < 0)
            if k.size == 0:
                break
            a, b = t[k[0]], t[k[0] + 1]
            ha, hb = h[k[0]], h[k[0] + 1]
            x_lin = float(a - ha * (b - a) / (hb - ha))
            if best_v > 0:
                best_x = x_lin if abs(x_lin - best_x) <= (b - a) else best_x
        return float(best_x), 0.0
    lo = xs[max(i - 1, 0)]
    hi = xs[min(i + 1, len(xs) - 1)]
    best_x, best_v = xs[i], abs(residual(g[i]))
    for _ in range(zoom):
        if hi - lo <= 4 * np.spacing(abs(lo) + 1.0):
            break
        t, gv = _eval_lift(c, piece, rp, rm, np.linspace(lo, hi, pts), curve)
        a = np.abs(residual(gv))
        j = int(np.argmin(a))
        if a[j] < best_v:
            best_x, best_v = t[j], float(a[j])
        lo = t[max(j - 1, 0)]
        hi = t[min(j + 1, t.size - 1)]
    return float(best_x), float(best_v)


def _local_minima(curve):
    """Candidate indices: brackets of zero crossings and local minima of |g|."""
    a = np.abs(residual(curve.g_vals))
    cand = set(_zero_brackets(curve.xs, curve.g_vals))
    for i in range(1, len(a) - 1):
        if a[i] <= a[i - 1] and a[i] <= a[i + 1]:
            cand.add(i)
    return sorted(cand)


def _hinge_gap(c, xs, sigma, m, depth):
    """tail - hinge for the split A_{sigma depth}(x) = tail(x + sigma m alpha) A_{sigma m}(x).

    The most contracted direction of the full product makes a half turn
    exactly where the tail's s crosses u of the head, so zeros of this
    smooth function locate the steep part of the gap curve.
    """
    shift = float(ar.orbit_offsets(c.alpha, m, 1)[0]) * sigma
    _, T = transfer_batch(c, np.mod(xs + shift, 1.0), sigma * (depth - m))
    _, H = transfer_batch(c, xs, sigma * m)
    tail = polar_arrays(T[:, 0, 0], T[:, 0, 1], T[:, 1, 0], T[:, 1, 1])[3]
    hinge = polar_arrays(H[:, 0, 0], H[:, 0, 1], H[:, 1, 0], H[:, 1, 1])[2]
    return wrap_signed(tail - hinge)


def _turn_points(c, piece, others, k, rp, rm, grid=65, zoom=10):
    """Locations in the piece where s_{r+} or u_{r-} turns by pi (resonance k)."""
    if k is None:
        return []
    m = abs(k)
    out = []
    for sigma, depth in ((1, rp), (-1, rm)):
        if depth <= m:
            continue
        shift = float(ar.orbit_offsets(c.alpha, m, 1)[0]) * sigma
        if not any(circle_dist_hits(piece, O, shift) for O in others):
            continue
        xs = piece.grid(grid)
        h = _hinge_gap(c, xs, sigma, m, depth)
        for i in np.flatnonzero((np.sign(h[:-1]) != np.sign(h[1:])) & (np.abs(h[:-1] - h[1:]) < 0.5 * PI)):
            a, b = xs[i], xs[i + 1]
            for _ in range(zoom):
                t = np.linspace(a, b, 17)
                ht = _hinge_gap(c, t, sigma, m, depth)
                j = np.flatnonzero(np.sign(ht[:-1]) != np.sign(ht[1:]))
                if j.size == 0:
                    break
                a, b = t[j[0]], t[j[0] + 1]
            out.append(0.5 * (a + b))
    return out


def circle_dist_hits(P, O, shift):
    return ar.circle_dist(P.center + shift, O.center) <= P.radius + O.radius


def _analyse(c, pieces, owner, prev_centers, rp, rm, cfg, l_res, k=None):
    """Gap curves, criticals, extras, classes and gap_min on the pieces."""
    curves, classes, fields = [], [], []
    for P in pieces:
        hints = _turn_points(c, P, [O for O in pieces if O is not P], k, rp, rm)
        f, g = _curve_on(c, P, rp, rm, cfg, hints)
        fields.append(f)
        curves.append(g)
        classes.append(classify(g, P.radius, l_res, cfg.margins, center=P.center))
    crit, extra = [], []
    gap_min = math.inf
    for j in (0, 1):
        pi_ = owner[j]
        P, g = pieces[pi_], curves[pi_]
        ref = _lift_near(prev_centers[j], P.center)
        cands = _local_minima(g)
        located = [_refine_min(c, P, rp, rm, g, i) for i in cands]
        if not located:
            i = int(np.argmin(np.abs(residual(g.g_vals))))
            located = [(float(g.xs[i]), float(abs(residual(g.g_vals[i]))))]
        vmin = min(v for _, v in located)
        gap_min = min(gap_min, vmin)
        # minimizers whose value is within a hair of the minimum
        tol = max(1e-12, 1e-6 * vmin)
        mins = sorted((x for x, v in located if v <= vmin + tol), key=lambda x: abs(x - ref))
        distinct = [mins[0]]
        for x in mins[1:]:
            if all(abs(x - y) > cfg.drift_floor for y in distinct):
                distinct.append(x)
        crit.append(distinct[0] % 1.0)
        extra.append(distinct[1] % 1.0 if len(distinct) > 1 else None)
    if len(pieces) == 1 and len(set(np.round(crit, 14))) == 1 and classes[0].tag == "TypeII":
        zs = classes[0].witness.get("zeros", [])
        if len(zs) == 2:
            # two zeros on one connected piece: each critical keeps the nearer one
            zs = sorted(zs)
            order = sorted((0, 1), key=lambda j: _lift_near(prev_centers[j], pieces[0].center))
            crit[order[0]], crit[order[1]] = zs[0] % 1.0, zs[1] % 1.0
    for g in curves:
        if lattice_zeros(g.xs, g.g_vals):
            gap_min = 0.0
    extra = tuple(extra) if any(e is not None for e in extra) else ()
    return fields, curves, classes, tuple(crit), extra, gap_min


def _returns(pieces, alpha, min_time, cap):
    plus = ar.min_return_time(pieces, alpha, min_time, cap, direction=1)
    minus = ar.min_return_time(pieces, alpha, min_time, cap, direction=-1)
    return plus, minus


def _norm_rates(fields, rp, rm):
    lp = min(float(f.log_norms_plus.min()) for f in fields) / rp
    lm = min(float(f.log_norms_minus.min()) for f in fields) / rm
    return lp, lm


def _resonance(pieces, alpha, q):
    if len(pieces) < 2:
        return None
    res = ar.resonance_scan(pieces[0], pieces[1], alpha, q)
    return None if res is None else res.k


def _uh(gap_min, r, log_floor):
    # min |g| > lam_floor^{-r/10}, compared in log form
    if gap_min <= 0:
        return False
    return math.log(gap_min) > -(r / 10.0) * log_floor


def _orbit_relation(state_crit, extras, k, alpha, log_floor, r, gap_min):
    if k is None or len(extras) < 2 or None in extras:
        return None
    if gap_min > 0 and math.log(gap_min) >= -(r / 10.0) * log_floor:
        return None
    # c'_{.,1} sits in the second interval near c_{.,1} + k alpha and vice versa
    ka = float(ar.orbit_offsets(alpha, abs(k), 1)[0]) * (1 if k > 0 else -1)
    d1 = ar.circle_dist(state_crit[0] + ka, extras[1])
    d2 = ar.circle_dist(state_crit[1] - ka, extras[0])
    return {"d1": d1, "d2": d2, "log_bound": -(r / 30.0) * log_floor}


def _check_params(c):
    if c.family != "reduced":
        raise ValueError("the induction runs on the reduced family")
    if c.lam < 10:
        raise LambdaTooSmall("the induction needs lam >= 10")
    lo, hi = c.potential.bounds()
    if not lo - 2.0 / c.lam <= c.t <= hi + 2.0 / c.lam:
        raise OutsideParameterRange(f"t = {c.t} outside [inf v - 2/lam, sup v + 2/lam]")


def starting_step(c, N=None, tau=None, cfg=InductionConfig()):
    """Level 1 -> 2: C_1, I_1, r_1^+-, resonance, g_2 on I_1, C_2 and checks."""
    _check_params(c)
    tau = cfg.tau if tau is None else tau
    cfg = replace(cfg, tau=tau)
    cf = _cf_for(c.alpha)
    rstart = starting_radius(c.potential)
    N = N if N is not None else (cfg.N if cfg.N is not None else default_N(cf, rstart, tau))
    if N + 4 >= len(cf.q):
        raise PrecisionExhausted("not enough convergents for the requested N")
    qN = cf.q[N]
    rad = 0.5 * qN ** (-2.0 * tau)
    if rad >= rstart / 10:
        raise LambdaTooSmall(f"q_N^(-2 tau) / 2 = {rad:.3g} is not below r/10 = {rstart / 10:.3g}")
    sched = lambda_schedule(math.log(c.lam), cf.q[N:], cfg.C_schedule, 1, cfg.eps, enforce=False)
    C1 = first_criticals(c.potential, c.t)
    pieces, owner = _pieces(C1, rad)
    intervals = (ar.CircleInterval(C1[0], rad), ar.CircleInterval(C1[1], rad))
    dioph = ar.diophantine_report(cf, tau)
    cap = min(cfg.return_cap, ar.default_return_cap(2 * rad, dioph.gamma_hat, tau, qN - 1))
    rp, rm = _returns(pieces, c.alpha, qN - 1, cap)
    k = _resonance(pieces, c.alpha, qN)
    l_res = math.exp(transfer(c, C1[0], abs(k)).log_norm) if k else None
    fields, curves, classes, crit, extra, gap_min = _analyse(c, pieces, owner, C1, rp, rm, cfg, l_res, k)
    log_floor = float(sched.logs[1])
    rates = _norm_rates(fields, rp, rm)
    drift = tuple(ar.circle_dist(a, b) for a, b in zip(C1, crit))
    bound = cfg.drift_const * c.lam ** -0.75 + cfg.drift_floor
    uh = _uh(gap_min, min(rp, rm), log_floor)
    return InductionState(
        level=1, intervals=intervals, centers=tuple(C1), criticals=crit, extras=extra,
        r_plus=rp, r_minus=rm, resonance_k=k, classes=tuple(classes), lambda_floor=log_floor,
        gap_min=gap_min, uh_stop=uh, N=N, q=qN,
        norm_floor_ok=bool(min(rates) > log_floor), norm_rates=rates,
        drift=drift, drift_bound=bound, drift_ok=bool(max(drift) <= bound),
        orbit_relation=_orbit_relation(crit, extra, k, c.alpha, log_floor, min(rp, rm), gap_min),
        curves=tuple(curves))


def iterate_step(state, c, cfg=InductionConfig()):
    """Level i -> i+1 of the iteration."""
    if state.uh_stop:
        return state
    if state.klass == "Unclassified":
        raise ClassificationLost(
            f"level {state.level} is unclassified: {[c_.witness.get('failed') for c_ in state.classes]}")
    _check_params(c)
    cf = _cf_for(c.alpha)
    i = state.level
    N = state.N
    q_next = cf.q[N + i]
    rad = 2.0 ** -(i + 1) * q_next ** (-2.0 * cfg.tau)
    if rad < 1e3 * np.finfo(float).eps:
        raise PrecisionExhausted(f"interval radius {rad:.3g} below 1e3 machine epsilon")
    sched = lambda_schedule(math.log(c.lam), cf.q[N:], cfg.C_schedule, i + 1, cfg.eps, enforce=False)
    Cn = state.criticals
    pieces, owner = _pieces(Cn, rad)
    intervals = (ar.CircleInterval(Cn[0], rad), ar.CircleInterval(Cn[1], rad))
    dioph = ar.diophantine_report(cf, cfg.tau)
    cap = min(cfg.return_cap, ar.default_return_cap(2 * rad, dioph.gamma_hat, cfg.tau, q_next))
    rp, rm = _returns(pieces, c.alpha, q_next, cap)
    k = _resonance(pieces, c.alpha, q_next)
    l_res = math.exp(transfer(c, Cn[0], abs(k)).log_norm) if k else None
    fields, curves, classes, crit, extra, gap_min = _analyse(c, pieces, owner, Cn, rp, rm, cfg, l_res, k)
    log_floor = float(sched.logs[i + 1])
    rates = _norm_rates(fields, rp, rm)
    drift = tuple(ar.circle_dist(a, b) for a, b in zip(Cn, crit))
    r_prev = min(state.r_plus, state.r_minus)
    # lam_{N+i}^{-(3/4) r_i}; underflows to 0 quickly, so the resolution floor decides
    bound = cfg.drift_const * math.exp(-0.75 * r_prev * state.lambda_floor) + cfg.drift_floor
    uh = _uh(gap_min, min(rp, rm), log_floor)
    if uh:
        classes = tuple(state.classes) if all(cl.tag == "Unclassified" for cl in classes) else tuple(classes)
    elif any(cl.tag == "Unclassified" for cl in classes):
        bad = [cl.witness for cl in classes if cl.tag == "Unclassified"]
        raise ClassificationLost(f"level {i + 1}: {bad[0].get('failed')}")
    return InductionState(
        level=i + 1, intervals=intervals, centers=tuple(Cn), criticals=crit, extras=extra,
        r_plus=rp, r_minus=rm, resonance_k=k,
        classes=tuple(classes), lambda_floor=log_floor, gap_min=gap_min, uh_stop=uh, N=N, q=q_next,
        norm_floor_ok=bool(min(rates) > log_floor), norm_rates=rates,
        drift=drift, drift_bound=bound, drift_ok=bool(max(drift) <= bound),
        orbit_relation=_orbit_relation(crit, extra, k, c.alpha, log_floor, min(rp, rm), gap_min),
        curves=tuple(curves))


def run_induction(c, depth, cfg=InductionConfig()):
    """starting_step followed by up to `depth` iterate_steps.

    Stops early on uh_stop, on the precision or return-time limits and on
    ClassificationLost; returns (states, stop) where stop is the exception
    that ended the run, or None.
    """
    states = [starting_step(c, cfg=cfg)]
    stop = None
    for _ in range(depth):
        if states[-1].uh_stop:
            break
        try:
            states.append(iterate_step(states[-1], c, cfg))
        except (PrecisionExhausted, CapExceeded, ClassificationLost) as exc:
            stop = exc
            break
    return states, stop


def level1_resonance(alpha, t, lam, v=None, cfg=InductionConfig()):
    """Resonance k of the first-level intervals at parameter t (cheap, no products)."""
    c = QpCocycle.reduced(alpha, t, lam, v)
    _check_params(c)
    cf = _cf_for(alpha)
    rstart = starting_radius(c.potential)
    N = cfg.N if cfg.N is not None else default_N(cf, rstart, cfg.tau)
    pieces, _ = _pieces(first_criticals(c.potential, t), 0.5 * cf.q[N] ** (-2.0 * cfg.tau))
    return _resonance(pieces, alpha, cf.q[N])


def scan_resonant_t(alpha, lam, v=None, ts=None, cfg=InductionConfig()):
    """[(t, k)] for the t in ts whose first-level intervals resonate."""
    c = QpCocycle.reduced(alpha, 0.0, lam, v)
    lo, hi = c.potential.bounds()
    if ts is None:
        ts = np.linspace(lo, hi, 2001)[1:-1]
    out = []
    for t in ts:
        k = level1_resonance(alpha, float(t), lam, v, cfg)
        if k is not None:
            out.append((float(t), k))
    return out
