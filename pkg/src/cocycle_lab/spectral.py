"""Lyapunov exponent and IDS estimators, Thouless sums, avalanche and LDT checks.

All logarithms are natural.  Finite-scale exponents average log|A_n(x)|
over the equidistributed grid x_j = j / x_grid, which is the integral form
L_n = (1/n) int log|A_n(x)| dx.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal
from scipy.optimize import least_squares

from .cocycle import QpCocycle, orbit_offsets, product_batch
from .errors import DegenerateData, LambdaTooSmall, SingularEnergy


@dataclass(frozen=True)
class SpectralSample:
    E: float
    L_n: float
    L_refined: float
    n: int
    N_n: float
    x_count: int


@dataclass(frozen=True)
class DeviationReport:
    i: int
    epsilon: float
    measure_hat: float
    bound: float


def x_grid_points(x_grid):
    if x_grid < 1:
        raise ValueError("x_grid must be >= 1")
    return np.arange(x_grid, dtype=float) / x_grid


def finite_le_many(c, ns, x_grid):
    """{n: L_n} for several n from one pass over the orbit."""
    ns = sorted(set(int(n) for n in ns))
    if ns[0] < 1:
        raise ValueError("n must be >= 1")
    logn, _, saved = product_batch(c, x_grid_points(x_grid), ns[-1], checkpoints=ns[:-1])
    saved[ns[-1]] = logn
    return {n: float(np.mean(saved[n]) / n) for n in ns}


def finite_le(c, n, x_grid):
    return finite_le_many(c, [n], x_grid)[int(n)]


def le_refined(c, l, x_grid):
    """2 L_{2l} - L_l; the O(1/l) boundary term cancels."""
    if l < 8:
        raise ValueError("l must be >= 8")
    L = finite_le_many(c, [l, 2 * l], x_grid)
    return 2.0 * L[2 * l] - L[l]


def avalanche_check(mats, mu):
    """Avalanche Principle hypotheses and the size of its telescoping defect.

    lhs = |log|E_n...E_1| + sum_{j=2}^{n-1} log|E_j| - sum_{j=1}^{n-1} log|E_{j+1} E_j||
    """
    mats = [np.asarray(m, dtype=float) for m in mats]
    n = len(mats)
    if n < 2:
        raise ValueError("need n >= 2")
    lognorm = lambda A: math.log(np.linalg.norm(A, 2))
    single = np.array([lognorm(A) for A in mats])
    pair = np.array([lognorm(mats[j + 1] @ mats[j]) for j in range(n - 1)])
    # product norm with renormalization
    M = np.eye(2)
    acc = 0.0
    for A in mats:
        M = A @ M
        sc = np.abs(M).max()
        M /= sc
        acc += math.log(sc)
    total = acc + lognorm(M)
    if n == 2:
        total = pair[0]   # same arithmetic on both sides: the sum telescopes exactly
    lhs = abs(total + single[1:-1].sum() - pair.sum())
    floor_ok = bool(single.min() >= math.log(mu) and mu >= n)
    cancel_ok = bool(np.all(single[1:] + single[:-1] - pair < 0.5 * math.log(mu)))
    return {"cond_ok": floor_ok and cancel_ok, "lhs": float(lhs), "scale": n / mu}


# --------------------------------------------------------------------- IDS

def potential_diagonal(c, n, x):
    """lam v(x + j alpha), j = 0..n-1: the diagonal of H_{n,x}."""
    if c.family != "schrodinger":
        raise ValueError("the IDS needs the schrodinger family")
    xs = np.mod(x + orbit_offsets(c.alpha, 0, n), 1.0)
    return c.lam * c.potential(xs)


def sturm_count(diag, E):
    """Number of eigenvalues below E of the tridiagonal matrix (diag, off-diagonal 1).

    Counts negative pivots of the LDL^T factorization of H - E.  Vectorized
    over E.
    """
    E = np.atleast_1d(np.asarray(E, dtype=float))
    tiny = np.finfo(float).tiny ** 0.5
    d = diag[0] - E
    cnt = (d < 0).astype(np.int64)
    for a in diag[1:]:
        d = np.where(d == 0.0, tiny, d)
        d = (a - E) - 1.0 / d
        cnt += d < 0
    return cnt


def ids_dirichlet(c, E, n, x=0.0):
    """Fraction of eigenvalues of the n x n Dirichlet truncation below E."""
    if n < 2:
        raise ValueError("n must be >= 2")
    out = sturm_count(potential_diagonal(c, n, x), E) / n
    return float(out[0]) if np.ndim(E) == 0 else out


def dirichlet_eigs(c, n, x=0.0):
    return eigvalsh_tridiagonal(potential_diagonal(c, n, x), np.ones(n - 1))


def thouless_le(eigs, E):
    """(1/n) sum_j log|E - E_j|."""
    eigs = np.asarray(eigs, dtype=float)
    if eigs.size == 0:
        raise ValueError("eigs must be nonempty")
    d = np.abs(E - eigs)
    if d.min() < 1e-12:
        raise SingularEnergy(f"E = {E!r} within 1e-12 of an eigenvalue")
    return float(np.mean(np.log(d)))


# --------------------------------------------------------------------- LDT

def ldt_default_params(lam, eps=0.1, tau=2.5, C=1.0):
    """(delta, sigma) = (0.01 eps log lam, 1/(2 tau C))."""
    return 0.01 * eps * math.log(lam), 1.0 / (2.0 * tau * C)


def ldt_deviation_measure(c, i, eps_log, x_grid, L_ref, delta=None, sigma=None):
    if x_grid < 1000:
        raise ValueError("x_grid must be >= 1000")
    if delta is None or sigma is None:
        d0, s0 = ldt_default_params(max(c.lam, math.e))
        delta = d0 if delta is None else delta
        sigma = s0 if sigma is None else sigma
    logn, _, _ = product_batch(c, x_grid_points(x_grid), int(i))
    dev = np.abs(logn / i - L_ref)
    return DeviationReport(int(i), float(eps_log), float(np.mean(dev > eps_log)),
                           math.exp(-0.5 * delta * i ** sigma))


def ldt_profile(c, i_values, eps_log, x_grid, L_ref, delta=None, sigma=None):
    """Deviation reports for several i from one pass (checkpoints)."""
    i_values = sorted(set(int(i) for i in i_values))
    logn, _, saved = product_batch(c, x_grid_points(x_grid), i_values[-1],
                                   checkpoints=i_values[:-1])
    saved[i_values[-1]] = logn
    if delta is None or sigma is None:
        d0, s0 = ldt_default_params(max(c.lam, math.e))
        delta = d0 if delta is None else delta
        sigma = s0 if sigma is None else sigma
    out = []
    for i in i_values:
        dev = np.abs(saved[i] / i - L_ref)
        out.append(DeviationReport(i, float(eps_log), float(np.mean(dev > eps_log)),
                                   math.exp(-0.5 * delta * i ** sigma)))
    return out


# ------------------------------------------------------------------ Holder

def holder_fit(Es, Ls):
    """Fit log|dL| = log C - c (log 1/|dE|)^sigma over adjacent pairs."""
    Es = np.asarray(Es, dtype=float)
    Ls = np.asarray(Ls, dtype=float)
    if Es.size < 50 or Es.size != Ls.size:
        raise ValueError("need >= 50 paired samples")
    if np.any(np.diff(Es) <= 0):
        raise ValueError("Es must be strictly increasing")
    if np.all(Ls == Ls[0]):
        raise DegenerateData("all L values are equal")
    dE = np.diff(Es)
    dL = np.abs(np.diff(Ls))
    keep = (dL > 0) & (dE < 1)
    if keep.sum() < 3:
        raise DegenerateData("fewer than three usable pairs")
    X = np.log(1.0 / dE[keep])
    Y = np.log(dL[keep])

    def res(p):
        return p[0] - p[1] * X ** p[2] - Y

    fit = least_squares(res, [0.0, 1.0, 0.5], bounds=([-np.inf, 0.0, 1e-3], [np.inf, np.inf, 3.0]))
    logC, chat, sig = fit.x
    return {"c_hat": float(chat), "C_hat": float(math.exp(logC)), "sigma_hat": float(sig),
            "residual": float(np.sqrt(np.mean(fit.fun ** 2)))}


# -------------------------------------------------------------- positivity

def spectrum_interval(v, lam):
    lo, hi = v.bounds()
    return -2.0 + lam * lo, 2.0 + lam * hi


def positivity_scan(v, lam, alpha, E_grid, n, x_grid, jobs=1, ids_n=None):
    """Refined LE 2 L_n - L_{n/2} on every E of the grid and min L / log lam."""
    if lam < 10:
        raise LambdaTooSmall("positivity scan needs lam >= 10")
    E_grid = np.sort(np.asarray(E_grid, dtype=float))
    lo, hi = spectrum_interval(v, lam)
    if E_grid[0] > lo + 1e-9 * abs(lo) or E_grid[-1] < hi - 1e-9 * abs(hi):
        raise ValueError(f"E grid must cover [{lo}, {hi}]")
    half = max(1, int(n) // 2)
    n = 2 * half

    def one(E):
        c = QpCocycle.schrodinger(alpha, float(E), lam, v)
        L = finite_le_many(c, [half, n], x_grid)
        Nn = ids_dirichlet(c, float(E), ids_n) if ids_n else float("nan")
        return SpectralSample(float(E), L[n], 2.0 * L[n] - L[half], n, Nn, int(x_grid))

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as ex:
            table = list(ex.map(one, E_grid))
    else:
        table = [one(E) for E in E_grid]
    ratios = np.array([s.L_refined for s in table]) / math.log(lam)
    return {"min_ratio": float(ratios.min()), "table": table}
