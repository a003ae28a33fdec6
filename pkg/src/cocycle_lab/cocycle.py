"""Cocycle families over the circle rotation x -> x + alpha and their products.

Families
--------
schrodinger  ((E - lam v(x), -1), (1, 0))
reduced      Lambda(x) R_phi(x,t) with |.| = lam sqrt(a/2), cot phi = t - v(x);
             ``exact=True`` uses the conjugated cocycle built from the polar
             decomposition of T A T^{-1}, T = diag(lam^-1/2, lam^1/2)
szego        diag(e, 1/e) R_psi, e = sqrt((1+lam)/(1-lam)),
             psi = pi [theta(x) - theta(x - alpha) + k alpha + t]
constant     a fixed matrix (test fixture)

Products are computed lane-by-lane (one lane per starting point) by small
numba kernels.  Whenever the running matrix grows past 2^64 it is rescaled
by an exact power of two and the exponent is accumulated as an integer, so
the log-norm bookkeeping carries no rounding error at all.
"""
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numba
import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from . import sl2core
from .arithmetic import orbit_offsets
from .errors import ConfigError, LambdaTooSmall

TWO_PI = 2.0 * np.pi
LN2 = math.log(2.0)


# ---------------------------------------------------------------- potentials

@dataclass(frozen=True)
class Potential:
    """A 1-periodic potential with analytic first and second derivatives.

    ``func(x)`` returns (v, v', v'') for array x.  ``extrema`` are the
    declared nondegenerate critical points, when known.
    """
    name: str
    func: Callable
    extrema: Optional[tuple] = None
    params: dict = field(default_factory=dict)
    value: Optional[Callable] = None  # v alone, when cheaper than func
    fourier: Optional[tuple] = None  # (const, ((m, a_m, b_m), ...)) for trig polynomials

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.value is not None:
            return self.value(x)
        return self.func(x)[0]

    def derivs(self, x):
        return self.func(np.asarray(x, dtype=float))

    def orbit_values(self, xs, offsets):
        """v(xs[:, None] + offsets[None, :]).

        Trig polynomials go through the angle addition formula so only
        len(xs) + len(offsets) trig calls are made.
        """
        if self.fourier is None:
            return self(xs[:, None] + offsets[None, :])
        const, terms = self.fourier
        out = np.full((xs.size, offsets.size), float(const))
        for m, a, b in terms:
            cx, sx = np.cos(TWO_PI * m * xs)[:, None], np.sin(TWO_PI * m * xs)[:, None]
            co, so = np.cos(TWO_PI * m * offsets)[None, :], np.sin(TWO_PI * m * offsets)[None, :]
            if a:
                out += a * (cx * co - sx * so)
            if b:
                out += b * (sx * co + cx * so)
        return out

    def bounds(self, grid=4096):
        """(inf v, sup v), refined at the extrema when they are declared."""
        xs = np.arange(grid) / grid
        vals = self(xs)
        lo, hi = float(vals.min()), float(vals.max())
        if self.extrema:
            ve = self(np.array(self.extrema))
            lo, hi = min(lo, float(ve.min())), max(hi, float(ve.max()))
        return lo, hi


def cos_potential():
    def f(x):
        w = TWO_PI * x
        return np.cos(w), -TWO_PI * np.sin(w), -TWO_PI ** 2 * np.cos(w)
    return Potential("cos", f, (0.0, 0.5), value=lambda x: np.cos(TWO_PI * x),
                     fourier=(0.0, ((1, 1.0, 0.0),)))


def shifted_cos(shift=0.0, offset=0.0):
    def f(x):
        w = TWO_PI * (x - shift)
        return np.cos(w) + offset, -TWO_PI * np.sin(w), -TWO_PI ** 2 * np.cos(w)
    z = (shift % 1.0, (shift + 0.5) % 1.0)
    cs, ss = math.cos(TWO_PI * shift), math.sin(TWO_PI * shift)
    return Potential("shifted-cos", f, z, {"shift": shift, "offset": offset},
                     value=lambda x: np.cos(TWO_PI * (x - shift)) + offset,
                     fourier=(offset, ((1, cs, ss),)))


def trig2(a=0.1, b=0.0):
    """cos(2 pi x) + a cos(4 pi x + b); two nondegenerate extrema for small a."""
    def f(x):
        w = TWO_PI * x
        v = np.cos(w) + a * np.cos(2 * w + b)
        dv = -TWO_PI * (np.sin(w) + 2 * a * np.sin(2 * w + b))
        d2v = -TWO_PI ** 2 * (np.cos(w) + 4 * a * np.cos(2 * w + b))
        return v, dv, d2v
    pot = Potential("trig2", f, None, {"a": a, "b": b},
                    value=lambda x: np.cos(TWO_PI * x) + a * np.cos(2 * TWO_PI * x + b),
                    fourier=(0.0, ((1, 1.0, 0.0), (2, a * math.cos(b), -a * math.sin(b)))))
    return replace(pot, extrema=find_extrema(pot))


def zero_potential():
    def f(x):
        z = np.zeros_like(x)
        return z, z, z
    return Potential("zero", f, None, fourier=(0.0, ()))


def tabulated(xs, vs=None):
    """Periodic cubic spline through (x, v(x)) samples, or from a two-column file."""
    if vs is None:
        data = np.loadtxt(xs, comments="#", delimiter=None, ndmin=2)
        xs, vs = data[:, 0], data[:, 1]
    xs = np.asarray(xs, dtype=float) % 1.0
    order = np.argsort(xs)
    xs, vs = xs[order], np.asarray(vs, dtype=float)[order]
    if xs[0] > 0.0 or abs(xs[-1] - 1.0) > 1e-12:
        xs = np.append(xs, xs[0] + 1.0)
        vs = np.append(vs, vs[0])
    spl = CubicSpline(xs, vs, bc_type="periodic")
    d1, d2 = spl.derivative(1), spl.derivative(2)
    x0 = xs[0]

    def f(x):
        y = (x - x0) % 1.0 + x0
        return spl(y), d1(y), d2(y)
    pot = Potential("tabulated", f, None)
    return replace(pot, extrema=find_extrema(pot))


def find_extrema(pot, grid=4096):
    """Critical points of v located by sign changes of v' and Brent refinement."""
    xs = np.arange(grid + 1) / grid
    dv = pot.derivs(xs)[1]
    out = []
    for i in range(grid):
        if dv[i] == 0.0:
            out.append(xs[i])
        elif dv[i] * dv[i + 1] < 0:
            out.append(brentq(lambda y: float(pot.derivs(np.array([y]))[1][0]), xs[i], xs[i + 1],
                              xtol=1e-15))
    return tuple(sorted(set(round(z % 1.0, 15) for z in out)))


def potential_from_name(name, **params):
    if name == "cos":
        return cos_potential()
    if name in ("shifted-cos", "shifted_cos"):
        return shifted_cos(float(params.get("shift", 0.0)), float(params.get("offset", 0.0)))
    if name == "trig2":
        return trig2(float(params.get("a", 0.1)), float(params.get("b", 0.0)))
    if name == "zero":
        return zero_potential()
    if name in ("tabulated", "spline"):
        if "file" not in params:
            raise ConfigError("tabulated potential needs key 'potential_file'")
        return tabulated(params["file"])
    raise ConfigError(f"unknown potential {name!r}")


# ----------------------------------------------------------- single matrices

def schrodinger_map(E, lam, v, x):
    return np.array([[E - lam * float(v(x)), -1.0], [1.0, 0.0]])


def reduced_norm(r, lam):
    """lam sqrt(a/2) with a = r^2 + 1 + lam^-4 + sqrt((r^2+1+lam^-4)^2 - 4 lam^-4)."""
    l4 = lam ** -4.0
    p = r * r + 1.0 + l4
    # p^2 - 4 l4 = (p - 2 lam^-2)(p + 2 lam^-2), no cancellation
    a = p + np.sqrt((p - 2 * lam ** -2.0) * (p + 2 * lam ** -2.0))
    return lam * np.sqrt(0.5 * a)


def reduced_map(t, lam, v, x):
    """Idealized reduced step Lambda(x) R_phi and its polar form.

    The polar form is exact: |.| = lam(x), u = 0, s = arctan(t - v(x)).
    """
    if lam < 10:
        raise LambdaTooSmall("the reduced form needs lam >= 10")
    r = t - float(v(x))
    n = float(reduced_norm(r, lam))
    h = math.hypot(r, 1.0)
    cph, sph = r / h, 1.0 / h
    M = np.array([[n * cph, -n * sph], [sph / n, cph / n]])
    return M, sl2core.PolarForm(math.log(n), 0.0, float(sl2core.wrap(math.atan(r))))


def conjugated_step(E, lam, v, x):
    """T A T^{-1} = ((lam r, -1/lam), (lam, 0)), r = E/lam - v(x)."""
    r = E / lam - float(v(x))
    return np.array([[lam * r, -1.0 / lam], [lam, 0.0]])


def reduced_exact_map(t, lam, v, x, alpha):
    """Exact reduced step Lambda(x) R_{pi/2 - s(B(x)) + u(B(x - alpha))}, B = T A T^{-1}.

    Conjugate (by the rotations of the polar decompositions) to the
    Schrodinger cocycle at E = t lam.  Its rotation angle tends to
    phi(x - alpha, t) as lam grows.
    """
    B0 = conjugated_step(t * lam, lam, v, x)
    B1 = conjugated_step(t * lam, lam, v, x - alpha)
    p0 = sl2core.polar_decompose(B0)
    p1 = sl2core.polar_decompose(B1)
    # sign bookkeeping: B = sign R_u L R_{pi/2-s}
    ang = 0.5 * np.pi - p0.s + p1.u
    return p0.sign * sl2core.hyp(p0.norm) @ sl2core.rot(ang)


def szego_map(lam, theta, k, t, x, alpha):
    if not 0.0 <= lam < 1.0:
        raise ValueError("szego family needs 0 <= lam < 1")
    e = math.sqrt((1 + lam) / (1 - lam))
    psi = np.pi * (float(theta(x)) - float(theta(x - alpha)) + k * alpha + t)
    return sl2core.hyp(e) @ sl2core.rot(psi)


SZEGO_Q = -1.0 / (1.0 + 1.0j) * np.array([[1.0, -1.0j], [1.0, 1.0j]])


def szego_su11(lam, theta, k, t, x):
    """SU(1,1) Szego matrix with Verblunsky coefficient f = lam e^{2 pi i (theta + k x)}.

    The lower-left entry carries -f sqrt(E); with +f the determinant would be
    (1+lam^2)/(1-lam^2) rather than 1.
    """
    f = lam * np.exp(2j * np.pi * (float(theta(x)) + k * x))
    sE = np.exp(1j * np.pi * t)
    M = np.array([[sE, -np.conj(f) / sE], [-f * sE, 1.0 / sE]])
    return M / math.sqrt(1.0 - lam * lam)


# --------------------------------------------------------------- the cocycle

@dataclass(frozen=True)
class QpCocycle:
    alpha: float
    family: str
    potential: Potential = None
    E: float = 0.0
    lam: float = 0.0
    t: float = 0.0
    k: int = 0
    exact: bool = False
    matrix: tuple = None

    @classmethod
    def schrodinger(cls, alpha, E, lam, v=None):
        return cls(alpha, "schrodinger", v or cos_potential(), E=E, lam=lam)

    @classmethod
    def reduced(cls, alpha, t, lam, v=None, exact=False):
        if lam < 10:
            raise LambdaTooSmall("the reduced form needs lam >= 10")
        return cls(alpha, "reduced", v or cos_potential(), t=t, lam=lam, exact=exact)

    @classmethod
    def szego(cls, alpha, lam, theta=None, k=0, t=0.0):
        if theta is None:
            theta = half_cos_phase()
        if not 0.0 <= lam < 1.0:
            raise ValueError("szego family needs 0 <= lam < 1")
        return cls(alpha, "szego", theta, lam=lam, k=k, t=t)

    @classmethod
    def constant(cls, alpha, M):
        M = np.asarray(M, dtype=float)
        return cls(alpha, "constant", None, matrix=tuple(M.ravel()))

    @property
    def rational(self):
        return float(self.alpha).as_integer_ratio()[1] < 2 ** 20

    def entries(self, x):
        """Map entries (a, b, c, d) at the points x (any array shape)."""
        x = np.asarray(x, dtype=float)
        fam = self.family
        if fam == "schrodinger":
            a = self.E - self.lam * self.potential(x)
            return a, np.full_like(a, -1.0), np.ones_like(a), np.zeros_like(a)
        if fam == "reduced" and not self.exact:
            r = self.t - self.potential(x)
            n = reduced_norm(r, self.lam)
            h = np.hypot(r, 1.0)
            cph, sph = r / h, 1.0 / h
            return n * cph, -n * sph, sph / n, cph / n
        if fam == "reduced":
            lam = self.lam
            r0 = self.t - self.potential(x)
            r1 = self.t - self.potential(x - self.alpha)
            z = np.zeros_like(r0)
            s0, _, _, s_0 = sl2core.polar_arrays(lam * r0, z - 1.0 / lam, z + lam, z)
            _, _, u1, _ = sl2core.polar_arrays(lam * r1, z - 1.0 / lam, z + lam, z)
            sg0 = _sign_arrays(lam * r0, z - 1.0 / lam, z + lam, z)
            ang = 0.5 * np.pi - s_0 + u1
            c, s = np.cos(ang), np.sin(ang)
            sg = sg0
            return sg * s0 * c, -sg * s0 * s, sg * s / s0, sg * c / s0
        if fam == "szego":
            e = math.sqrt((1 + self.lam) / (1 - self.lam))
            th = self.potential
            psi = np.pi * (th(x) - th(x - self.alpha) + self.k * self.alpha + self.t)
            c, s = np.cos(psi), np.sin(psi)
            return e * c, -e * s, s / e, c / e
        if fam == "constant":
            a, b, c, d = self.matrix
            one = np.ones_like(x)
            return a * one, b * one, c * one, d * one
        raise ValueError(f"unknown family {fam!r}")

    def map(self, x):
        a, b, c, d = self.entries(np.array([float(x)]))
        return np.array([[a[0], b[0]], [c[0], d[0]]])


def _sign_arrays(a, b, c, d):
    E, F = 0.5 * (a + d), 0.5 * (a - d)
    G, H = 0.5 * (c + b), 0.5 * (c - b)
    a1, a2 = np.arctan2(G, F), np.arctan2(H, E)
    phi, ang = 0.5 * (a2 + a1), 0.5 * np.pi - 0.5 * (a2 - a1)
    ku = np.round((phi - sl2core.wrap(phi)) / np.pi)
    ks = np.round((ang - sl2core.wrap(ang)) / np.pi)
    return np.where((ku + ks) % 2 == 0, 1.0, -1.0)


def half_cos_phase():
    """theta(x) = cos(2 pi x)/2, the default Szego phase."""
    def f(x):
        w = TWO_PI * x
        return 0.5 * np.cos(w), -np.pi * np.sin(w), -TWO_PI * np.pi * np.cos(w)
    return Potential("half-cos", f, (0.0, 0.5), value=lambda x: 0.5 * np.cos(TWO_PI * x),
                     fourier=(0.0, ((1, 0.5, 0.0),)))


# ------------------------------------------------------------------- orbits

def circle_add(x, y):
    return np.mod(np.asarray(x, dtype=float) + y, 1.0)


# ------------------------------------------------------------------ products

BIG = 2.0 ** 64


@numba.njit(cache=True, inline="always")
def _factor(code, p0, p1, l2, l4, v):
    """Entries of one factor for the value-driven families.

    code 0: ((p0 - p1 v, -1), (1, 0))                       Schrodinger
    code 1: Lambda R_phi with r = p0 - v, lam = p1           reduced (ideal)
    code 2: diag(p0, 1/p0) R_v                               Szego, v = psi
    """
    if code == 0:
        return p0 - p1 * v, -1.0, 1.0, 0.0
    if code == 1:
        r = p0 - v
        p = r * r + 1.0 + l4
        nn = p1 * math.sqrt(0.5 * (p + math.sqrt((p - 2 * l2) * (p + 2 * l2))))
        h = math.sqrt(r * r + 1.0)
        return nn * r / h, -nn / h, 1.0 / (h * nn), r / (h * nn)
    cp = math.cos(v)
    sp = math.sin(v)
    return p0 * cp, -p0 * sp, sp / p0, cp / p0


@numba.njit(cache=True, inline="always")
def _apply(a, b, c, d, m0, m1, m2, m3, e):
    n0 = a * m0 + b * m2
    n1 = a * m1 + b * m3
    n2 = c * m0 + d * m2
    n3 = c * m1 + d * m3
    mx = max(max(abs(n0), abs(n1)), max(abs(n2), abs(n3)))
    if mx > BIG:
        # exact power-of-two rescale: no rounding enters the log-norm
        k = math.frexp(mx)[1]
        sc = math.ldexp(1.0, -k)
        n0 *= sc
        n1 *= sc
        n2 *= sc
        n3 *= sc
        e += k
    return n0, n1, n2, n3, e


@numba.njit(cache=True, nogil=True)
def _chain_fourier(cx, sx, co, so, amp, bmp, const, code, p0, p1, M, ex):
    """v(x + o_j) = const + sum_h amp_h cos(2 pi h (x + o_j)) + bmp_h sin(...),
    expanded by angle addition from per-lane (cx, sx) and per-step (co, so)."""
    lanes = cx.shape[0]
    steps = co.shape[0]
    H = cx.shape[1]
    l2 = p1 ** -2.0 if code == 1 else 0.0
    l4 = l2 * l2
    for l in range(lanes):
        m0, m1, m2, m3, e = M[l, 0], M[l, 1], M[l, 2], M[l, 3], ex[l]
        for j in range(steps):
            v = const
            for h in range(H):
                v += (amp[h] * (cx[l, h] * co[j, h] - sx[l, h] * so[j, h])
                      + bmp[h] * (sx[l, h] * co[j, h] + cx[l, h] * so[j, h]))
            a, b, c, d = _factor(code, p0, p1, l2, l4, v)
            m0, m1, m2, m3, e = _apply(a, b, c, d, m0, m1, m2, m3, e)
        M[l, 0], M[l, 1], M[l, 2], M[l, 3], ex[l] = m0, m1, m2, m3, e


@numba.njit(cache=True, nogil=True)
def _chain_vals(vals, code, p0, p1, M, ex):
    lanes, steps = vals.shape
    l2 = p1 ** -2.0 if code == 1 else 0.0
    l4 = l2 * l2
    for l in range(lanes):
        m0, m1, m2, m3, e = M[l, 0], M[l, 1], M[l, 2], M[l, 3], ex[l]
        for j in range(steps):
            a, b, c, d = _factor(code, p0, p1, l2, l4, vals[l, j])
            m0, m1, m2, m3, e = _apply(a, b, c, d, m0, m1, m2, m3, e)
        M[l, 0], M[l, 1], M[l, 2], M[l, 3], ex[l] = m0, m1, m2, m3, e


@numba.njit(cache=True, nogil=True)
def _chain(ea, eb, ec, ed, M, ex):
    lanes, steps = ea.shape
    for l in range(lanes):
        m0, m1, m2, m3, e = M[l, 0], M[l, 1], M[l, 2], M[l, 3], ex[l]
        for j in range(steps):
            m0, m1, m2, m3, e = _apply(ea[l, j], eb[l, j], ec[l, j], ed[l, j], m0, m1, m2, m3, e)
        M[l, 0], M[l, 1], M[l, 2], M[l, 3], ex[l] = m0, m1, m2, m3, e


def _fourier_args(pot, xs, off, shift=None):
    const, terms = pot.fourier
    hs = np.array([m for m, _, _ in terms] or [0], dtype=float)
    amp = np.array([a for _, a, _ in terms] or [0.0])
    bmp = np.array([b for _, _, b in terms] or [0.0])
    cx = np.cos(TWO_PI * np.outer(xs, hs))
    sx = np.sin(TWO_PI * np.outer(xs, hs))
    co = np.cos(TWO_PI * np.outer(off, hs))
    so = np.sin(TWO_PI * np.outer(off, hs))
    if shift is not None:
        # difference v(x + o) - v(x + o - shift): the constant drops out
        co = co - np.cos(TWO_PI * np.outer(off - shift, hs))
        so = so - np.sin(TWO_PI * np.outer(off - shift, hs))
        const = 0.0
    return cx, sx, co, so, amp, bmp, float(const)


def _advance(c, xs, j0, cnt, M, ex):
    off = orbit_offsets(c.alpha, j0, cnt)
    fam = c.family
    pot = c.potential
    if fam == "schrodinger" or (fam == "reduced" and not c.exact):
        code, p0 = (0, c.E) if fam == "schrodinger" else (1, c.t)
        if pot.fourier is not None:
            _chain_fourier(*_fourier_args(pot, xs, off), code, p0, c.lam, M, ex)
        else:
            _chain_vals(pot(xs[:, None] + off[None, :]), code, p0, c.lam, M, ex)
    elif fam == "szego":
        e = math.sqrt((1 + c.lam) / (1 - c.lam))
        if pot.fourier is not None:
            cx, sx, co, so, amp, bmp, _ = _fourier_args(pot, xs, off, shift=c.alpha)
            # psi = pi (theta(x) - theta(x - alpha) + k alpha + t)
            base = c.k * c.alpha + c.t
            _chain_fourier(cx, sx, co, so, np.pi * amp, np.pi * bmp, np.pi * base, 2, e, 0.0,
                           M, ex)
        else:
            ph = xs[:, None] + off[None, :]
            psi = np.pi * (pot(ph) - pot(ph - c.alpha) + c.k * c.alpha + c.t)
            _chain_vals(psi, 2, e, 0.0, M, ex)
    else:
        # phases in [0, 2); potentials are 1-periodic so no reduction needed
        ph = xs[:, None] + off[None, :]
        ea, eb, ec, ed = (np.ascontiguousarray(z) for z in c.entries(ph))
        _chain(ea, eb, ec, ed, M, ex)


def _finish(M, ex):
    """Turn (power-of-two scaled matrix, exponent) into (log norm, unit-norm matrix)."""
    sig = sl2core.polar_arrays(M[:, 0], M[:, 1], M[:, 2], M[:, 3])[0]
    logn = ex * LN2 + np.log(sig)
    N = (M / sig[:, None]).reshape(-1, 2, 2)
    return logn, N


def product_batch(c, xs, n, checkpoints=(), chunk_elems=1 << 21):
    """Forward products A_n(x) = A(x+(n-1)alpha) ... A(x) for every x in xs.

    Returns (log_norms, normalized) at step n and, for every m in
    ``checkpoints`` (0 < m <= n), the log norms at step m in a dict.
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    xs = np.mod(xs, 1.0)
    lanes = xs.size
    M = np.zeros((lanes, 4))
    M[:, 0] = M[:, 3] = 1.0
    ex = np.zeros(lanes, dtype=np.int64)
    marks = sorted(set(int(m) for m in checkpoints if 0 < m <= n))
    saved = {}
    done = 0
    chunk = max(64, chunk_elems // max(lanes, 1))
    stops = marks + [n]
    for stop in stops:
        while done < stop:
            cnt = min(chunk, stop - done)
            _advance(c, xs, done, cnt, M, ex)
            done += cnt
        if stop in marks:
            saved[stop] = _finish(M.copy(), ex.copy())[0]
    if n == 0:
        return np.zeros(lanes), np.tile(np.eye(2), (lanes, 1, 1)), saved
    logn, N = _finish(M, ex)
    return logn, N, saved


@dataclass(frozen=True)
class TransferResult:
    log_norm: float
    normalized: np.ndarray

    def polar(self, tol_degenerate=1e-8):
        return sl2core.polar_scaled(self.normalized, self.log_norm, tol_degenerate)


def transfer(c, x, n):
    """A_n(x) in renormalized form; negative n follows A_{-n}(x) = A_n(x - n alpha)^{-1}."""
    n = int(n)
    if abs(n) > 10 ** 8:
        raise ValueError("|n| must not exceed 1e8")
    if n == 0:
        return TransferResult(0.0, np.eye(2))
    if n > 0:
        logn, N, _ = product_batch(c, [x], n)
        return TransferResult(float(logn[0]), N[0])
    m = -n
    start = circle_add(x, -orbit_offsets(c.alpha, m, 1)[0])
    logn, N, _ = product_batch(c, [start], m)
    return TransferResult(float(logn[0]), sl2core.inv(N[0]))


def transfer_batch(c, xs, n):
    """Vectorized transfer; returns (log_norms, normalized stack)."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    if n >= 0:
        logn, N, _ = product_batch(c, xs, n)
        return logn, N
    m = -n
    start = circle_add(xs, -orbit_offsets(c.alpha, m, 1)[0])
    logn, N, _ = product_batch(c, start, m)
    return logn, sl2core.inv(N)
