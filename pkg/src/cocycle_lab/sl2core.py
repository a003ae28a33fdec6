"""2x2 unimodular algebra, angles on the projective line and polar form.

Matrices are plain numpy arrays of shape (2, 2) (or (..., 2, 2) for the
batched helpers).  Angles are directions in RP^1 and are always returned
in [0, pi).

Polar form convention:  A = R_u . diag(|A|, 1/|A|) . R_{pi/2 - s}
so that s is the most contracted input direction (|A s_hat| = 1/|A|)
and u = s(A^{-1}) is the most expanded output direction.
"""
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateNorm, ProductOverflow

PI = np.pi


def rot(phi):
    c, s = np.cos(phi), np.sin(phi)
    return np.array([[c, -s], [s, c]])


def hyp(l):
    """diag(l, 1/l)"""
    return np.array([[l, 0.0], [0.0, 1.0 / l]])


def det(A):
    return A[..., 0, 0] * A[..., 1, 1] - A[..., 0, 1] * A[..., 1, 0]


def inv(A):
    """Adjugate; equals the inverse when det A = 1."""
    A = np.asarray(A, dtype=float)
    out = np.empty_like(A)
    out[..., 0, 0] = A[..., 1, 1]
    out[..., 1, 1] = A[..., 0, 0]
    out[..., 0, 1] = -A[..., 0, 1]
    out[..., 1, 0] = -A[..., 1, 0]
    return out


def is_unimodular(A, tol=1e-9):
    A = np.asarray(A, dtype=float)
    nrm = np.linalg.norm(A, 2)
    return bool(np.all(np.isfinite(A)) and abs(det(A) - 1.0) <= tol * (1.0 + nrm * nrm))


def mul(A, B):
    """Exact 2x2 product.  Raises ProductOverflow when an entry stops being finite."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B))):
        raise ProductOverflow("non-finite input entries")
    with np.errstate(over="ignore", invalid="ignore"):
        C = A @ B
    if not np.all(np.isfinite(C)):
        raise ProductOverflow("product overflowed; renormalize before multiplying")
    return C


def wrap(theta):
    """Reduce angles to [0, pi)."""
    t = np.mod(theta, PI)
    # np.mod can return exactly pi for tiny negative inputs
    return np.where(t >= PI, 0.0, t) if np.ndim(t) else (0.0 if t >= PI else float(t))


def wrap_signed(theta):
    """Representative of an RP^1 difference in (-pi/2, pi/2]."""
    t = np.mod(theta + PI / 2, PI) - PI / 2
    if np.ndim(t):
        return np.where(t <= -PI / 2, t + PI, t)
    return float(t + PI) if t <= -PI / 2 else float(t)


def proj_dist(a, b):
    """Distance on RP^1 = R/(pi Z), values in [0, pi/2]."""
    d = np.mod(np.asarray(a, dtype=float) - b, PI)
    out = np.minimum(d, PI - d)
    return float(out) if np.ndim(out) == 0 else out


def unit(theta):
    """(cos theta, sin theta), exact on the axes theta = 0 and theta = pi/2."""
    c, s = np.cos(theta), np.sin(theta)
    axis = np.asarray(theta) == 0.5 * PI
    if np.ndim(axis):
        return np.where(axis, 0.0, c), np.where(axis, 1.0, s)
    return (0.0, 1.0) if axis else (c, s)


def mobius_action(A, theta):
    """Direction of A (cos theta, sin theta)."""
    c, s = unit(theta)
    x = A[0, 0] * c + A[0, 1] * s
    y = A[1, 0] * c + A[1, 1] * s
    return wrap(np.arctan2(y, x))


def polar_arrays(a, b, c, d):
    """Largest singular value and (u, s) angles of [[a, b], [c, d]].

    Works for any real matrix with det > 0 (it does not need det = 1, so it
    can be fed renormalized products).  Closed form, no iteration:
    with E=(a+d)/2, F=(a-d)/2, G=(c+b)/2, H=(c-b)/2 the matrix equals
    R_phi diag(hypot(E,H)+hypot(F,G), hypot(E,H)-hypot(F,G)) R_psi.
    """
    E = 0.5 * (a + d)
    F = 0.5 * (a - d)
    G = 0.5 * (c + b)
    H = 0.5 * (c - b)
    Q = np.hypot(E, H)
    R = np.hypot(F, G)
    a1 = np.arctan2(G, F)
    a2 = np.arctan2(H, E)
    psi = 0.5 * (a2 - a1)
    phi = 0.5 * (a2 + a1)
    return Q + R, Q - R, wrap(phi), wrap(0.5 * PI - psi)


def _polar_sign(a, b, c, d):
    # wrapping u and s separately may flip the overall sign of R_u L R_{pi/2-s}
    E, F = 0.5 * (a + d), 0.5 * (a - d)
    G, H = 0.5 * (c + b), 0.5 * (c - b)
    a1, a2 = np.arctan2(G, F), np.arctan2(H, E)
    phi, ang = 0.5 * (a2 + a1), 0.5 * PI - 0.5 * (a2 - a1)
    # count half turns against the wrapped values: wrap may snap -0 to 0
    ku = np.round((phi - wrap(phi)) / PI)
    ks = np.round((ang - wrap(ang)) / PI)
    return 1 if (ku + ks) % 2 == 0 else -1


@dataclass(frozen=True)
class PolarForm:
    log_norm: float
    u: float
    s: float
    sign: int = 1  # angles live in RP^1 and cannot carry the sign of A

    @property
    def norm(self):
        return float(np.exp(self.log_norm))

    def matrix(self):
        """R_u diag(|A|, 1/|A|) R_{pi/2-s}; only sensible while |A| is representable."""
        return self.sign * (rot(self.u) @ hyp(self.norm) @ rot(0.5 * PI - self.s))


def polar_decompose(A, tol_degenerate=1e-8, check_det=True):
    A = np.asarray(A, dtype=float)
    if not np.all(np.isfinite(A)):
        raise ProductOverflow("non-finite matrix")
    a, b, c, d = A[0, 0], A[0, 1], A[1, 0], A[1, 1]
    if check_det and abs(a * d - b * c - 1.0) > 1e-9 * (1.0 + (a * a + b * b + c * c + d * d)):
        raise ValueError("matrix is not unimodular")
    sig, _, u, s = polar_arrays(a, b, c, d)
    if sig - 1.0 < tol_degenerate:
        raise DegenerateNorm(f"|A| - 1 = {sig - 1.0:.3g} below {tol_degenerate:g}")
    return PolarForm(float(np.log(sig)), float(u), float(s), _polar_sign(a, b, c, d))


def polar_scaled(N, log_scale, tol_degenerate=1e-8):
    """Polar form of exp(log_scale) * N where N is a renormalized product.

    Only the direction of N matters for the angles, so N may be numerically
    rank one; the singular value ratio is not needed.
    """
    a, b, c, d = N[0, 0], N[0, 1], N[1, 0], N[1, 1]
    sig, _, u, s = polar_arrays(a, b, c, d)
    log_norm = float(log_scale + np.log(sig))
    if log_norm < np.log1p(tol_degenerate):
        raise DegenerateNorm(f"log|A| = {log_norm:.3g}; directions undefined")
    return PolarForm(log_norm, float(u), float(s), _polar_sign(a, b, c, d))
