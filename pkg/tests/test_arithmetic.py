import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cocycle_lab.arithmetic import (CircleInterval, cf_expand, circle_dist, default_return_cap,
                                    diophantine_report, first_return, fold, min_return_time,
                                    orbit_offsets, parse_alpha, resonance_scan)
from cocycle_lab.errors import CapExceeded, ConfigError, PrecisionExhausted

from conftest import GOLDEN


def test_golden_quotients_are_all_one():
    cf = cf_expand(parse_alpha("golden"), depth=30)
    assert set(cf.a) == {1}
    # q_s are Fibonacci numbers
    assert cf.q[:8] == (1, 1, 2, 3, 5, 8, 13, 21)


def test_silver_quotients():
    cf = cf_expand(parse_alpha("silver"), depth=20)
    assert set(cf.a) == {2}


def test_rational_terminates_and_folds_exactly():
    x = Fraction(355, 1132)
    cf = cf_expand(x)
    assert cf.terminated
    assert fold(cf.a) == x


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-6, 1 - 1e-6))
def test_fold_reconstructs_float(alpha):
    cf = cf_expand(alpha)
    assert abs(float(fold(cf.a)) - alpha) <= 1e-14


def test_float_depth_is_bounded():
    with pytest.raises(PrecisionExhausted):
        cf_expand(GOLDEN, depth=60)


def test_parse_alpha_forms():
    assert parse_alpha("3/7") == Fraction(3, 7)
    assert parse_alpha("0.25") == Fraction(1, 4)
    assert abs(float(parse_alpha("golden")) - GOLDEN) < 1e-16
    with pytest.raises(ConfigError):
        parse_alpha("pi-ish")


def test_norm_q_alpha_against_mpmath():
    cf = cf_expand(parse_alpha("golden"), depth=40)
    with mpmath.workdps(60):
        g = (mpmath.sqrt(5) - 1) / 2
        for s in (5, 20, 39):
            y = cf.q[s] * g
            assert cf.norm_q_alpha(s) == pytest.approx(float(abs(y - mpmath.nint(y))), rel=1e-12)


def test_diophantine_golden_bounded_below():
    cf = cf_expand(parse_alpha("golden"), depth=40)
    rep = diophantine_report(cf, tau=2.0)
    # q ||q alpha|| -> 1/sqrt(5) for the golden mean
    assert rep.ok and 0.3 < rep.gamma_hat <= 1.0


def test_circle_dist():
    assert circle_dist(0.95, 0.05) == pytest.approx(0.1)
    assert circle_dist(0.3, 0.3) == 0.0


def test_orbit_offsets_against_mpmath():
    js = [1, 17, 10 ** 5, 10 ** 7 + 3, 99_999_989]
    with mpmath.workdps(40):
        g = (mpmath.sqrt(5) - 1) / 2
        for j in js:
            exact = float(mpmath.frac(j * mpmath.mpf(GOLDEN)))
            got = orbit_offsets(GOLDEN, j, 1)[0]
            assert circle_dist(got, exact) < 1e-12


def brute_first_return(x, I, alpha, min_time, cap):
    for j in range(min_time + 1, cap + 1):
        with mpmath.workdps(30):
            y = float(mpmath.frac(mpmath.mpf(x) + j * mpmath.mpf(alpha)))
        if circle_dist(y, I.center) <= I.radius:
            return j
    return None


def test_first_return_brute_force(rng):
    for _ in range(30):
        x = rng.uniform()
        I = CircleInterval(rng.uniform(), rng.uniform(0.002, 0.05))
        j = first_return(x, I, GOLDEN, 0, 5000)
        assert j == brute_first_return(x, I, GOLDEN, 0, 5000)


def test_first_return_three_distance_bound(rng):
    # N = q_k orbit points leave gaps of at most ||q_{k-1} a|| + ||q_k a||
    cf = cf_expand(parse_alpha("golden"), depth=40)
    for _ in range(20):
        x, r = rng.uniform(), 10 ** rng.uniform(-6, -1.5)
        k = next(k for k in range(1, 40) if cf.norm_q_alpha(k - 1) + cf.norm_q_alpha(k) <= 2 * r)
        j = first_return(x, CircleInterval(rng.uniform(), r), GOLDEN, 0, 10 ** 7)
        assert j <= cf.q[k]


def test_three_distance_theorem(rng):
    for N in (10, 57, 200, 1000):
        pts = np.sort(orbit_offsets(GOLDEN, 0, N))
        gaps = np.diff(np.append(pts, pts[0] + 1.0))
        assert len(np.unique(np.round(gaps, 10))) <= 3


def test_first_return_cap():
    with pytest.raises(CapExceeded):
        first_return(0.5, CircleInterval(0.0, 1e-9), GOLDEN, 0, 100)


def test_default_cap_is_enough(rng):
    cf = cf_expand(parse_alpha("golden"), depth=40)
    g = diophantine_report(cf, 2.0).gamma_hat
    for _ in range(10):
        r = 10 ** rng.uniform(-5, -2)
        cap = default_return_cap(2 * r, g, 2.0)
        first_return(rng.uniform(), CircleInterval(rng.uniform(), r), GOLDEN, 0, cap)


def _brute_min_return(Is, xs, cap):
    js = np.arange(1, cap + 1)
    pos = np.mod(xs[:, None] + js[None, :] * GOLDEN, 1.0)
    hit = np.zeros(pos.shape, dtype=bool)
    for I in Is:
        hit |= circle_dist(pos, I.center) <= I.radius
    return int(js[hit.any(axis=0)].min())


def test_min_return_time_matches_scan():
    Is = [CircleInterval(0.1, 0.004), CircleInterval(0.6, 0.004)]
    got = min_return_time(Is, GOLDEN, 0, 2000)
    xs = np.concatenate([I.grid(2001) for I in Is])
    assert got <= _brute_min_return(Is, xs, 2000)
    # attained up to the sampling width
    grown = [CircleInterval(I.center, I.radius + 1e-5) for I in Is]
    assert got >= _brute_min_return(grown, xs, 2000)


def test_resonance_scan_exhaustive(rng):
    for _ in range(100):
        I1 = CircleInterval(rng.uniform(), rng.uniform(1e-3, 0.05))
        I2 = CircleInterval(rng.uniform(), rng.uniform(1e-3, 0.05))
        qb = int(rng.integers(2, 40))
        res = resonance_scan(I1, I2, GOLDEN, qb)
        brute = None
        for k in range(1, qb):
            hits = [s * k for s in (1, -1)
                    if circle_dist(I1.center + s * math.fmod(k * GOLDEN, 1.0), I2.center)
                    <= I1.radius + I2.radius]
            if hits:
                brute = hits[0]
                break
        assert (res.k if res else None) == brute
