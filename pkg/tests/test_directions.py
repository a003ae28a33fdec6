import math

import numpy as np
import pytest

from cocycle_lab import sl2core
from cocycle_lab.arithmetic import CircleInterval
from cocycle_lab.cocycle import QpCocycle, transfer
from cocycle_lab.directions import (DirectionField, _directions, almost_invariance_residuals,
                                    concat_floor_check, ess_change_predict, gap_curve,
                                    refine_field, sample_directions, to_csv)
from cocycle_lab.errors import AngleCollision, RegimeViolation, UnwrapFailure
from cocycle_lab.sl2core import PI, PolarForm, proj_dist

from conftest import GOLDEN, random_sl2

ROUNDOFF = 1e-14


def test_direction_field_converges():
    c = QpCocycle.reduced(GOLDEN, 0.3, 1e3)
    xs = np.linspace(0, 1, 400, endpoint=False)
    xs = xs[np.abs(np.cos(2 * np.pi * xs) - 0.3) > 0.2]   # away from the criticals
    sup = [proj_dist(_directions(c, xs, n)[0], _directions(c, xs, 2 * n)[0]).max()
           for n in (25, 50, 100)]
    # non-increasing down to round-off
    assert all(b <= max(a, ROUNDOFF) for a, b in zip(sup, sup[1:]))
    assert sup[-1] < 1e-4


def test_samples_consistent_with_transfer(rng):
    c = QpCocycle.reduced(GOLDEN, 0.1, 100.0)
    I = CircleInterval(0.2, 0.05)
    f = sample_directions(c, I, 13, 8, grid=32)
    for i in rng.integers(0, 32, 6):
        x = f.xs[i]
        assert proj_dist(f.s_vals[i], transfer(c, x, 13).polar().s) <= 1e-9
        assert proj_dist(f.u_vals[i], transfer(c, x, -8).polar().s) <= 1e-9


def test_step_one_gap_has_two_sign_changes():
    t = 0.3
    c = QpCocycle.reduced(GOLDEN, t, 1e3)
    xs = np.linspace(0, 1, 4001)[:-1] + 1e-4
    g = sl2core.wrap_signed(_directions(c, xs, 1)[0] - _directions(c, xs, -1)[0])
    # for the idealized family g_1 = arctan(t - v(x)) exactly
    assert np.allclose(g, np.arctan(t - np.cos(2 * np.pi * xs)), atol=1e-12)
    changes = np.sum(np.sign(g) != np.sign(np.roll(g, 1)))
    assert changes == 2


def test_gap_curve_left_representative():
    c = QpCocycle.reduced(GOLDEN, 0.3, 1e3)
    f = sample_directions(c, CircleInterval(0.2, 0.1), 1, 1, grid=64)
    g = gap_curve(f)
    assert -PI / 2 < g.g_vals[0] <= PI / 2
    assert np.all(np.abs(np.diff(g.g_vals)) <= PI / 4)


def _field(xs, s_vals):
    z = np.zeros_like(xs)
    return DirectionField(CircleInterval(0.5, 0.2), xs, s_vals, z, 1, 1, z + 1, z + 1)


def test_unwrap_failure_is_raised():
    xs = np.linspace(0.4, 0.6, 5)
    with pytest.raises(UnwrapFailure):
        gap_curve(_field(xs, np.array([0.0, 0.1, 0.2, 1.3, 1.4])))


def test_unwrap_lifts_through_pi():
    xs = np.linspace(0.4, 0.6, 7)
    s = sl2core.wrap(np.linspace(1.2, 2.2, 7))
    g = gap_curve(_field(xs, s))
    assert np.allclose(np.diff(g.g_vals), 1 / 6)


def test_refinement_resolves_a_steep_gap():
    # near a critical point the depth-3 curve turns fast; refinement keeps steps small
    c = QpCocycle.reduced(GOLDEN, 0.3, 1e3)
    x0 = math.acos(0.3) / (2 * PI)
    f = sample_directions(c, CircleInterval(x0, 0.01), 3, 3, grid=16)
    f = refine_field(c, f)
    g = gap_curve(f)
    assert np.all(np.abs(np.diff(g.g_vals)) <= PI / 8 + 1e-12)
    assert np.all(np.isin(sample_directions(c, f.interval, 3, 3, grid=16).xs, f.xs))


def test_xs_must_be_inside():
    c = QpCocycle.reduced(GOLDEN, 0.3, 1e3)
    with pytest.raises(ValueError):
        sample_directions(c, CircleInterval(0.2, 0.01), 1, 1, xs=[0.5])


def test_csv_round_trip(tmp_path):
    c = QpCocycle.reduced(GOLDEN, 0.3, 1e3)
    f = sample_directions(c, CircleInterval(0.2, 0.1), 1, 1, grid=20)
    p = tmp_path / "g.csv"
    to_csv(f, p, header=["test"])
    text = p.read_text()
    assert text.startswith("# test\n") and "\r" not in text
    data = np.loadtxt(p, delimiter=",", skiprows=2)
    assert np.array_equal(data[:, 1], f.s_vals)


# ------------------------------------------------------------- direction lemmas

@pytest.mark.parametrize("branch", ["e2>e1", "e1>e2", "equal"])
def test_ess_change_matches_polar(rng, branch):
    worst = 1.0
    for _ in range(300):
        e1, e2 = np.exp(rng.uniform(math.log(1e2), math.log(1e6), 2))
        if branch == "equal":
            e2 = e1
        elif (e2 > e1) != (branch == "e2>e1"):
            e1, e2 = e2, e1
        th = rng.uniform(0.01, PI - 0.01)
        p = sl2core.polar_decompose(np.diag([e2, 1 / e2]) @ sl2core.rot(th) @ np.diag([e1, 1 / e1]))
        pred = ess_change_predict(e1, e2, th)
        for a, b in ((p.s, pred["s_pred"]), (p.u, pred["u_pred"])):
            a, b = abs(sl2core.wrap_signed(a)), abs(sl2core.wrap_signed(b))
            worst = max(worst, max(a / b, b / a))
    assert worst <= 50


def test_ess_change_branches_meet_at_equal_norms(rng):
    for _ in range(50):
        e, th = 10 ** rng.uniform(2, 5), rng.uniform(0.05, PI - 0.05)
        mid = ess_change_predict(e, e, th)
        for side in (ess_change_predict(e, e * (1 + 1e-12), th), ess_change_predict(e * (1 + 1e-12), e, th)):
            for key in ("s_pred", "u_pred"):
                a, b = abs(sl2core.wrap_signed(mid[key])), abs(sl2core.wrap_signed(side[key]))
                assert a == pytest.approx(b, rel=1e-6)


def test_ess_change_regime():
    with pytest.raises(RegimeViolation):
        ess_change_predict(5.0, 100.0, 0.3)


def test_almost_invariance_identity_is_exact(rng):
    E2 = random_sl2(rng, math.log(1e4))
    res = almost_invariance_residuals(np.eye(2), E2)
    assert res["r1"] == res["r2"] == res["r3"] == res["r4"] == 0.0


def test_almost_invariance_scale(rng):
    for _ in range(50):
        E1 = random_sl2(rng, math.log(rng.uniform(10, 100)))
        n1 = np.linalg.norm(E1, 2)
        E2 = random_sl2(rng, math.log(n1 * n1 * rng.uniform(1, 100)))
        res = almost_invariance_residuals(E1, E2)
        assert max(res[f"r{i}"] / res[f"b{i}"] for i in range(1, 5)) <= 50


def test_almost_invariance_regime(rng):
    with pytest.raises(RegimeViolation):
        almost_invariance_residuals(random_sl2(rng, math.log(50)), random_sl2(rng, math.log(60)))


def _seq(rng, n, gap):
    out, u_prev = [], None
    for _ in range(n):
        u = rng.uniform(0, PI)
        s = rng.uniform(0, PI) if u_prev is None else sl2core.wrap(u_prev + gap)
        out.append(PolarForm(math.log(rng.uniform(1e2, 1e4)), u, s))
        u_prev = u
    return out


def test_concat_floor_orthogonal_gaps(rng):
    # gaps of pi/2 lose nothing: l_n is the full sum of log norms up to O(n / lam^2)
    seq = _seq(rng, 20, PI / 2)
    rep = concat_floor_check(seq)
    assert rep.holds and rep.eta_needed < 1e-3
    assert rep.s_drift <= rep.s_bound * 10 and rep.u_drift <= rep.u_bound * 10


def test_concat_floor_matches_dense_product(rng):
    seq = _seq(rng, 4, 0.7)
    M = np.eye(2)
    for p in seq:
        M = p.matrix() @ M
    rep = concat_floor_check(seq)
    assert rep.l_n == pytest.approx(math.log(np.linalg.norm(M, 2)), abs=1e-9)


def test_concat_collision(rng):
    with pytest.raises(AngleCollision):
        concat_floor_check(_seq(rng, 5, 1e-6))
