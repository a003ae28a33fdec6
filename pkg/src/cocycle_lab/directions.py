"""n-step stable and unstable directions, gap curves and the direction lemmas.

s_n(x) = s[A_n(x)] and u_n(x) = s[A_{-n}(x)].  Everything here works with
explicit depths; choosing the depths (return times) is the job of the
induction module.
"""
import csv
import math
from dataclasses import dataclass

import numpy as np

from . import sl2core
from .arithmetic import CircleInterval
from .cocycle import transfer_batch
from .errors import AngleCollision, DegenerateNorm, RegimeViolation, UnwrapFailure
from .sl2core import PI, PolarForm, proj_dist, wrap, wrap_signed

# largest step allowed between neighbouring samples of a lifted gap curve
MAX_JUMP = PI / 4


@dataclass(frozen=True)
class DirectionField:
    interval: CircleInterval
    xs: np.ndarray
    s_vals: np.ndarray
    u_vals: np.ndarray
    n_plus: int
    n_minus: int
    log_norms_plus: np.ndarray
    log_norms_minus: np.ndarray

    def __len__(self):
        return self.xs.size


@dataclass(frozen=True)
class GapCurve:
    xs: np.ndarray
    g_vals: np.ndarray
    base_branch: int   # multiple of pi added to the raw s - u at the left end

    def min_abs(self):
        i = int(np.argmin(np.abs(self.g_vals)))
        return float(self.xs[i]), float(abs(self.g_vals[i]))


def _directions(c, xs, n, tol_degenerate=1e-8):
    """(angles, log norms) of s[A_n(x)] for n > 0 or s[A_{-|n|}(x)] for n < 0."""
    logn, N = transfer_batch(c, xs, n)
    bad = np.flatnonzero(logn < math.log1p(tol_degenerate))
    if bad.size:
        raise DegenerateNorm(f"|A_{n}(x)| ~ 1 at x = {xs[bad[0]]!r}; direction undefined")
    _, _, _, s = sl2core.polar_arrays(N[:, 0, 0], N[:, 0, 1], N[:, 1, 0], N[:, 1, 1])
    return np.asarray(s, dtype=float), logn


def sample_directions(c, I, n_plus, n_minus, grid=None, xs=None):
    """s_{n_plus} and u_{n_minus} on a uniform grid over I (or on given xs).

    xs, when given, must be strictly increasing and inside I (lifted
    coordinates, i.e. near I.center rather than reduced mod 1).
    """
    if n_plus < 1 or n_minus < 1:
        raise ValueError("depths must be >= 1")
    if xs is None:
        if grid is None or grid < 16:
            raise ValueError("grid must be >= 16")
        xs = I.grid(grid)
    else:
        xs = np.asarray(xs, dtype=float)
        if xs.size < 1 or np.any(np.diff(xs) <= 0):
            raise ValueError("xs must be strictly increasing")
        if np.any(np.abs(xs - I.center) > I.radius * (1 + 1e-12) + 4 * np.spacing(1.0)):
            raise ValueError("xs must lie inside the interval")
    s, lp = _directions(c, xs, int(n_plus))
    u, lm = _directions(c, xs, -int(n_minus))
    return DirectionField(I, xs, s, u, int(n_plus), int(n_minus), lp, lm)


def merge_fields(a, b):
    """Union of two samplings of the same field, sorted by x, duplicates dropped."""
    if (a.n_plus, a.n_minus) != (b.n_plus, b.n_minus):
        raise ValueError("depths differ")
    xs = np.concatenate([a.xs, b.xs])
    xs, idx = np.unique(xs, return_index=True)

    def cat(name):
        return np.concatenate([getattr(a, name), getattr(b, name)])[idx]

    return DirectionField(a.interval, xs, cat("s_vals"), cat("u_vals"), a.n_plus, a.n_minus,
                          cat("log_norms_plus"), cat("log_norms_minus"))


def _bent(d, dx, tol):
    # steps that disagree with the slope of both neighbours by more than tol
    sl = d / dx
    out = np.zeros(d.size, dtype=bool)
    if d.size < 3:
        return out
    left = np.abs(d[1:-1] - sl[:-2] * dx[1:-1])
    right = np.abs(d[1:-1] - sl[2:] * dx[1:-1])
    out[1:-1] = np.minimum(left, right) > tol
    return out


def refine_field(c, f, max_jump=PI / 8, max_points=20000, min_dx=1e-15, bend_tol=None):
    """Bisect every sample gap where s - u moves by more than max_jump in RP^1.

    Steep type III transitions have width ~ |A_k|^-2 and are invisible on a
    uniform grid; this inserts points until each step of the lifted curve is
    small.  A full turn between two samples leaves no trace in the step
    itself, only in the 1/x tails on either side, so with bend_tol set a gap
    is also bisected when its step departs from the neighbouring slopes by
    more than bend_tol.  Gaps narrower than min_dx are left alone (the curve
    is then reported with UnwrapFailure by gap_curve if it is still too steep).
    """
    while len(f) < max_points:
        d = wrap_signed(np.diff(f.s_vals - f.u_vals))
        dx = np.diff(f.xs)
        bad = np.abs(d) > max_jump
        if bend_tol is not None:
            bad |= _bent(d, dx, bend_tol)
        pick = np.flatnonzero(bad & (dx > min_dx))
        if pick.size == 0:
            break
        pick = pick[: max_points - len(f)]
        mids = 0.5 * (f.xs[pick] + f.xs[pick + 1])
        f = merge_fields(f, sample_directions(c, f.interval, f.n_plus, f.n_minus, xs=mids))
    return f


def gap_curve(f, max_jump=MAX_JUMP):
    """Continuous lift of s - u; the left end value is the representative in (-pi/2, pi/2]."""
    raw = np.asarray(f.s_vals - f.u_vals, dtype=float)
    steps = wrap_signed(np.diff(raw))
    big = np.flatnonzero(np.abs(steps) > max_jump)
    if big.size:
        i = int(big[0])
        raise UnwrapFailure(f"gap jumps by {steps[i]:.3g} between x = {f.xs[i]!r} and "
                            f"{f.xs[i + 1]!r}; sample more finely")
    g0 = wrap_signed(raw[0])
    g = g0 + np.concatenate([[0.0], np.cumsum(steps)])
    branch = int(round((g0 - raw[0]) / PI))
    return GapCurve(np.asarray(f.xs, dtype=float).copy(), g, branch)


def to_csv(f, path, curve=None, header=()):
    """Write x, s, u, g, log_norm_plus, log_norm_minus (17 significant digits)."""
    if curve is None:
        curve = gap_curve(f)
    with open(path, "w", newline="") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "s", "u", "g", "log_norm_plus", "log_norm_minus"])
        for row in zip(f.xs, f.s_vals, f.u_vals, curve.g_vals, f.log_norms_plus, f.log_norms_minus):
            w.writerow([f"{v:.17g}" for v in row])


# ------------------------------------------------------ concatenation lemmas

def _acot(y):
    return 0.5 * PI - np.arctan(y)


def _root(f):
    # the larger-magnitude root of T^2 - 2 f T - 1; this keeps the correct
    # branch when f < 0 (for f > 0 it is the familiar sqrt(f^2+1) + f)
    return f + np.copysign(np.sqrt(f * f + 1.0), f)


def ess_change_predict(e1, e2, theta):
    """Predicted (s, u) of diag(e2, 1/e2) R_theta diag(e1, 1/e1) from the branch formulas."""
    if min(e1, e2) < 10:
        raise RegimeViolation("branch formulas need min(e1, e2) >= 10")
    ct = 1.0 / math.tan(theta) if math.tan(theta) != 0 else math.inf
    tt = math.tan(theta)
    if e2 > e1:
        f2 = 0.5 * (e2 ** 2 * ct + e2 ** 2 * e1 ** -4 * tt)
        s = math.atan(e1 ** 2 * ct)
        u = _acot(_root(f2))
    elif e1 > e2:
        f1 = 0.5 * (e1 ** 2 * ct + e1 ** 2 * e2 ** -4 * tt)
        s = math.atan(_root(f1))
        u = _acot(e2 ** 2 * ct)
    else:
        g = ct * math.sqrt(e1 ** 4 + tt * tt)
        s = math.atan(g)
        u = _acot(g)
    return {"s_pred": wrap(s), "u_pred": wrap(u)}


def _act(A, theta):
    # identity acts exactly (mobius_action would round through cos/sin)
    if np.array_equal(A, np.eye(2)):
        return float(theta)
    return sl2core.mobius_action(A, theta)


def almost_invariance_residuals(E1, E2):
    """Residuals of the almost invariance of s and u under a short prefactor.

    With E = E2 E1 and E' = E1 E2:
      r1 = |E1^-1 . s(E2) - s(E)|    vs |E|^-2
      r2 = |s(E2) - E1 . s(E)|       vs |E2|^-2
      r3 = |E1 . u(E2) - u(E')|      vs |E'|^-2
      r4 = |u(E2) - E1^-1 . u(E')|   vs |E2|^-2
    """
    E1 = np.asarray(E1, dtype=float)
    E2 = np.asarray(E2, dtype=float)
    n1 = np.linalg.norm(E1, 2)
    n2 = np.linalg.norm(E2, 2)
    trivial = np.array_equal(E1, np.eye(2))   # E = E2, admitted outside the regime
    if not trivial and not (n2 >= n1 * n1 * (1 - 1e-12) and n1 * n1 >= 100 * (1 - 1e-12)):
        raise RegimeViolation(f"need |E2| >= |E1|^2 >= 100, got |E1| = {n1:.4g}, |E2| = {n2:.4g}")
    E1i = sl2core.inv(E1)
    E = E2 @ E1
    Ep = E1 @ E2
    pE2 = sl2core.polar_decompose(E2)
    pE = sl2core.polar_decompose(E)
    pEp = sl2core.polar_decompose(Ep)
    out = {
        "r1": proj_dist(_act(E1i, pE2.s), pE.s),
        "r2": proj_dist(pE2.s, _act(E1, pE.s)),
        "r3": proj_dist(_act(E1, pE2.u), pEp.u),
        "r4": proj_dist(pE2.u, _act(E1i, pEp.u)),
        "b1": pE.norm ** -2.0,
        "b2": n2 ** -2.0,
        "b3": pEp.norm ** -2.0,
        "b4": n2 ** -2.0,
    }
    return out


@dataclass(frozen=True)
class ConcatReport:
    holds: bool
    l_n: float          # log of the product norm
    floor: float        # (1 - eta) * sum of log norms
    s_drift: float
    u_drift: float
    s_bound: float
    u_bound: float
    eta_needed: float   # smallest eta for which this floor would hold


def concat_floor_check(seq, eta=0.05, gap_const=0.1):
    """Norm floor and C^0 direction drift for a concatenation given in polar data.

    seq[l] is the polar form of E^(l); the product is E^(n-1) ... E^(0).
    The gap precondition is |s^(l) - u^(l-1)| > gap_const * (min norm)^-eta.
    """
    seq = list(seq)
    if not seq:
        raise ValueError("empty sequence")
    logs = np.array([p.log_norm for p in seq])
    if np.any(logs < math.log(10) * (1 - 1e-12)):
        raise RegimeViolation("every norm must be >= 10")
    need = gap_const * math.exp(-eta * logs.min())
    for l in range(1, len(seq)):
        gap = proj_dist(seq[l].s, seq[l - 1].u)
        if gap <= need:
            raise AngleCollision(f"gap {gap:.3g} at step {l} below {need:.3g}")
    M = np.eye(2)
    acc = 0.0
    for p in seq:
        F = p.sign * (sl2core.rot(p.u) @ np.diag([1.0, math.exp(-2 * p.log_norm)])
                      @ sl2core.rot(0.5 * PI - p.s))
        M = F @ M          # this factor carries exp(log_norm) outside
        acc += p.log_norm
        sc = np.abs(M).max()
        M /= sc
        acc += math.log(sc)
    sig, _, u_n, s_n = sl2core.polar_arrays(M[0, 0], M[0, 1], M[1, 0], M[1, 1])
    l_n = acc + math.log(sig)
    floor = (1.0 - eta) * logs.sum()
    return ConcatReport(bool(l_n >= floor), float(l_n), float(floor),
                        proj_dist(seq[0].s, s_n), proj_dist(seq[-1].u, u_n),
                        math.exp(-1.5 * logs[0]), math.exp(-1.5 * logs[-1]),
                        float(max(0.0, 1.0 - l_n / logs.sum())))

