"""Continued fractions, Diophantine diagnostics, circle orbits and returns."""
import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np

from .errors import CapExceeded, ConfigError, PrecisionExhausted

MAX_DEPTH = 64
_MP_DPS = 80


def parse_alpha(spec):
    """Frequency from config: 'golden', 'silver', 'p/q', a decimal string or a number.

    Returns an exact representative: Fraction for rationals and decimals,
    an mpmath number for the named irrationals, and floats pass through.
    """
    if isinstance(spec, (Fraction, float, mpmath.mpf)):
        return spec
    if isinstance(spec, int):
        return Fraction(spec)
    text = str(spec).strip().lower()
    with mpmath.workdps(_MP_DPS):
        if text in ("golden", "golden-mean", "golden_mean"):
            return (mpmath.sqrt(5) - 1) / 2
        if text == "silver":
            return mpmath.sqrt(2) - 1
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"cannot read alpha from {spec!r}") from exc


@dataclass(frozen=True)
class ContinuedFraction:
    a: tuple          # partial quotients a_1, a_2, ...  (a_0 = 0 for alpha in (0,1))
    p: tuple          # p_0, p_1, ...
    q: tuple          # q_0 = 1, q_1 = a_1, ...
    exact: object     # Fraction or mpmath value used for distances
    terminated: bool

    @property
    def alpha(self):
        return float(self.exact)

    def norm_q_alpha(self, s):
        """Distance from q_s alpha to the nearest integer."""
        q = self.q[s]
        if isinstance(self.exact, Fraction):
            y = q * self.exact
            return float(abs(y - round(y)))
        with mpmath.workdps(_MP_DPS):
            y = q * self.exact
            return float(abs(y - mpmath.nint(y)))


def cf_expand(alpha, depth=None):
    """Euclid / Gauss map expansion of alpha in (0, 1).

    Floats are expanded exactly (as binary rationals) but only until a
    convergent matches the float to one ulp; asking for more raises
    PrecisionExhausted.  Fractions expand exactly, and the named
    constants from ``parse_alpha`` carry 80 digits.
    """
    x = alpha
    from_float = isinstance(x, float)
    if from_float:
        x = Fraction(x)
    if not 0 < x < 1:
        raise ValueError("alpha must lie in (0, 1)")
    want = MAX_DEPTH if depth is None else int(depth)
    if want > MAX_DEPTH:
        raise ValueError(f"depth must not exceed {MAX_DEPTH}")
    a, ps, qs = [], [0], [1]
    p_prev, q_prev = 1, 0
    frac = x
    # a float only pins alpha down to its own spacing; once a convergent is
    # that close, later quotients describe rounding, not alpha
    ulp = Fraction(math.ulp(float(x))) if from_float else None
    with mpmath.workdps(_MP_DPS):
        while len(a) < want and frac != 0:
            y = 1 / frac
            ai = int(mpmath.floor(y)) if isinstance(y, mpmath.mpf) else math.floor(y)
            qn = ai * qs[-1] + q_prev
            if from_float and a and abs(x - Fraction(ps[-1], qs[-1])) <= ulp:
                if depth is None:
                    break
                raise PrecisionExhausted(
                    f"float alpha determines only {len(a)} partial quotients; pass a Fraction "
                    "or a named constant for more")
            if isinstance(x, mpmath.mpf) and qn > 10 ** (_MP_DPS // 3):
                raise PrecisionExhausted("Gauss map residual below working precision")
            frac = y - ai
            a.append(ai)
            pn = ai * ps[-1] + p_prev
            p_prev, q_prev = ps[-1], qs[-1]
            ps.append(pn)
            qs.append(qn)
    return ContinuedFraction(tuple(a), tuple(ps), tuple(qs), x, frac == 0)


@dataclass(frozen=True)
class DiophantineReport:
    gamma_hat: float   # lower-bound estimate over the computed convergents only
    ok: bool
    tau: float
    s_min: int


def diophantine_report(cf, tau):
    if len(cf.q) < 3:
        raise ValueError("need at least three convergents")
    vals = [cf.q[s] ** (tau - 1) * cf.norm_q_alpha(s) for s in range(len(cf.q))]
    s_min = int(np.argmin(vals))
    g = float(vals[s_min])
    return DiophantineReport(g, g > 0.0, tau, s_min)


def fold(a):
    """Value of [0; a_1, a_2, ...] as a Fraction."""
    x = Fraction(0)
    for ai in reversed(a):
        x = 1 / (ai + x)
    return x


# ------------------------------------------------------------------- circle

@dataclass(frozen=True)
class CircleInterval:
    center: float
    radius: float

    def __post_init__(self):
        if not 0 < self.radius < 0.25:
            raise ValueError("radius must lie in (0, 1/4)")
        object.__setattr__(self, "center", float(self.center) % 1.0)

    def contains(self, x):
        return circle_dist(x, self.center) <= self.radius

    def grid(self, n):
        """n uniform points from the left to the right end (lifted, not reduced)."""
        return self.center + np.linspace(-self.radius, self.radius, n)


def circle_dist(x, y):
    d = np.mod(np.asarray(x, dtype=float) - y, 1.0)
    out = np.minimum(d, 1.0 - d)
    return float(out) if np.ndim(out) == 0 else out


def orbit_offsets(alpha, j0, count, step=1):
    """frac(j alpha) for j = j0, j0+step, ...

    alpha is split into a 24-bit head and a tail so that j * head is exact
    for |j| < 2^27; the result is accurate to a few ulps for |j| up to 1e8.
    """
    alpha = float(alpha)
    hi = float(np.float32(alpha))
    lo = alpha - hi
    jf = (j0 + step * np.arange(count, dtype=np.int64)).astype(float)
    return np.mod(np.mod(jf * hi, 1.0) + jf * lo, 1.0)


def default_return_cap(length, gamma_hat, tau, min_time=0):
    """Equidistribution bound on return times into an interval of given length.

    An orbit segment of q_{s+1} consecutive points leaves no gap wider than
    2 ||q_s alpha|| < 2/q_{s+1}; taking q_s <= 2/length and the Diophantine
    bound q_{s+1} < q_s^{tau-1}/gamma gives the cap below.
    """
    if gamma_hat <= 0:
        raise ValueError("cap needs gamma_hat > 0")
    return int(min_time + math.ceil((2.0 / length) ** (tau - 1.0) / gamma_hat)) + 1


def first_return(x, targets, alpha, min_time, cap, direction=1, chunk=1 << 16):
    """Least j in (min_time, cap] with x + direction j alpha in the union of targets."""
    if isinstance(targets, CircleInterval):
        targets = (targets,)
    if cap < min_time:
        raise ValueError("cap must be >= min_time")
    if direction not in (1, -1):
        raise ValueError("direction must be +1 or -1")
    j = min_time + 1
    while j <= cap:
        cnt = min(chunk, cap - j + 1)
        pos = np.mod(x + direction * orbit_offsets(alpha, j, cnt), 1.0)
        hit = np.zeros(cnt, dtype=bool)
        for I in targets:
            hit |= circle_dist(pos, I.center) <= I.radius
        idx = np.flatnonzero(hit)
        if idx.size:
            return int(j + idx[0])
        j += cnt
    raise CapExceeded(f"no return in ({min_time}, {cap}]")


def min_return_time(intervals, alpha, min_time, cap, direction=1):
    """min over x in the union of intervals of first_return(x, intervals, ...).

    A point of I_a reaches I_b at time j exactly when c_a + j alpha lies in
    B(c_b, r_a + r_b), so this is a first_return of the centers.
    """
    best = None
    for A in intervals:
        grown = [CircleInterval(B.center, min(A.radius + B.radius, 0.2499999)) for B in intervals]
        try:
            j = first_return(A.center, grown, alpha, min_time, cap if best is None else best,
                             direction)
        except CapExceeded:
            continue
        best = j if best is None else min(best, j)
    if best is None:
        raise CapExceeded(f"no return in ({min_time}, {cap}]")
    return best


@dataclass(frozen=True)
class Resonance:
    k: int           # signed: +k for (I1 + k alpha), -k for (I1 - k alpha)
    overlap: float


def resonance_scan(I1, I2, alpha, qbound):
    """Least 1 <= k < qbound with (I1 +- k alpha) meeting I2, or None."""
    if qbound < 1:
        raise ValueError("qbound must be >= 1")
    reach = I1.radius + I2.radius
    width = 2 * min(I1.radius, I2.radius)
    for k in range(1, qbound):
        off = orbit_offsets(alpha, k, 1)[0]
        for sgn in (1, -1):
            d = circle_dist(I1.center + sgn * off, I2.center)
            if d <= reach:
                return Resonance(sgn * k, min(reach - d, width))
    return None
