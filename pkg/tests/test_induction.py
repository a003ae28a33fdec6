import dataclasses
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cocycle_lab.arithmetic import cf_expand, parse_alpha
from cocycle_lab.cocycle import QpCocycle, trig2
from cocycle_lab.directions import GapCurve
from cocycle_lab.errors import (ClassificationLost, FloorViolated, OutsideParameterRange)
from cocycle_lab.induction import (FunctionClass, classify, composed_type3,
                                   default_N, first_criticals, iterate_step, lambda_schedule,
                                   lattice_zeros, level1_resonance, min_gap_floor, residual,
                                   run_induction, scan_resonant_t, starting_radius,
                                   starting_step, type3_bifurcation)
from cocycle_lab.sl2core import PI

from conftest import GOLDEN

R = 0.01


def curve(fn, r=R, n=2001):
    xs = np.linspace(-r, r, n)
    return GapCurve(xs, fn(xs), 0)


def type1(xs):
    return 0.5 * (xs - 0.001)


def type2(xs):
    return 40.0 * xs ** 2 - 1e-4


def type3(xs, l=1e3):
    # background slope -1, a rise of pi across x = 0.002 of width l^-2
    return -xs + np.arctan(l * l * (xs - 0.002)) + 0.5 * PI - 0.3


# --------------------------------------------------------------- helpers

def test_residual_distance_to_lattice():
    assert residual(PI + 0.1) == pytest.approx(0.1)
    assert residual(-2 * PI - 0.2) == pytest.approx(-0.2)


def test_lattice_zeros_counts_exact_sample_once():
    xs = np.array([0.0, 1.0, 2.0])
    assert lattice_zeros(xs, np.array([-1.0, 0.0, 1.0])) == [1.0]


def test_lattice_zeros_crossing_several_multiples():
    xs = np.array([0.0, 1.0])
    z = lattice_zeros(xs, np.array([-0.5, 2 * PI + 0.5]))
    assert len(z) == 3


# ---------------------------------------------------------- classification

def test_classify_type1_polarity():
    up = classify(curve(type1), R)
    down = classify(curve(lambda x: -type1(x)), R)
    assert up.tag == "TypeIPlus" and down.tag == "TypeIMinus"
    assert up.is_type1 and up.witness["x0"] == pytest.approx(0.001, abs=1e-9)


def test_classify_type2():
    cl = classify(curve(type2), R)
    assert cl.tag == "TypeII"
    assert len(cl.witness["zeros"]) == 2


def test_classify_type2_tangency():
    cl = classify(curve(lambda x: 40.0 * x ** 2 + 1e-5), R)
    assert cl.tag == "TypeII" and cl.witness["zeros"] == []


def test_classify_type3():
    cl = classify(curve(type3, n=4001), R, l=1e3)
    assert cl.tag == "TypeIII"
    assert cl.witness["background_slope"] < 0 < cl.witness["jump"]["height"]


def test_type3_needs_opposite_background():
    cl = classify(curve(lambda x: x + np.arctan(1e6 * (x - 0.002)), n=4001), R)
    assert cl.tag == "Unclassified"


def test_classify_unclassified_wiggle():
    cl = classify(curve(lambda x: 1e-3 * np.sin(2000 * x)), R)
    assert cl.tag == "Unclassified" and "failed" in cl.witness


def test_classify_zero_outside_middle_third():
    cl = classify(curve(lambda x: 0.5 * (x - 0.008)), R)
    assert cl.tag == "Unclassified"


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([type1, type2, type3]), st.floats(-1, 1), st.integers(1, 6),
       st.floats(0, 2 * np.pi))
def test_classification_stable_under_small_perturbation(fn, amp, freq, phase):
    base = curve(fn, n=4001)
    cl = classify(base, R, l=1e3)
    # scale the wiggle so that max(|h|, r|h'|, r^2|h''|) stays below 0.1 margin
    w = freq * PI
    eps = 0.1 * cl.witness["margin"] * amp / max(1.0, w, w * w)
    pert = GapCurve(base.xs, base.g_vals + eps * np.cos(w * base.xs / R + phase), 0)
    assert classify(pert, R, l=1e3).tag == cl.tag


def test_min_gap_floor():
    g = curve(type1)
    out = min_gap_floor(g, 0.001, 0.002)
    assert out["floor_ok"] and out["measured_min"] == pytest.approx(0.5 * 0.002, rel=1e-2)
    assert not min_gap_floor(g, 0.005, 0.001)["floor_ok"]


# ------------------------------------------------------- type III bifurcation

def test_composed_type3_formula():
    l = 1e3
    F = composed_type3(lambda x: x, lambda x: -x - 0.01, l)
    xs = np.array([-0.05, 0.003, 0.05])
    assert np.allclose(F(xs), np.arctan(l * l * np.tan(xs)) - 0.5 * PI - xs - 0.01)


@pytest.mark.parametrize("l", [1e3, 1e4])
def test_bifurcation_point_scales_like_inverse_l(l):
    ds = np.array([0.0, 0.5, 1.0, 1.5, 2.5, 5.0, 10.0]) / l
    out = type3_bifurcation(lambda x: x, lambda x: -x, l, ds, interval=(-0.1, 0.1))
    assert out["d0_hat"] * l / 2 == pytest.approx(1.0, rel=0.05)
    counts = out["zero_counts"]
    assert np.all(np.diff(counts) >= 0) and counts[0] == 0 and counts[-1] == 2
    assert out["count_at_d0"] == 1


def test_bifurcation_closed_form_oracle():
    # f1 = x, f2 = -(x - d): zeros of l^2 x (d - x) = 1, i.e. two roots iff d^2 l^2 > 4
    l = 300.0
    for d in (1.0 / l, 1.9 / l, 2.1 / l, 4.0 / l):
        cnt = type3_bifurcation(lambda x: x, lambda x: -x, l, [d], interval=(-0.1, 0.1))["zero_counts"][0]
        disc = d * d * l * l - 4
        assert cnt == (2 if disc > 1e-9 else 0)


# ---------------------------------------------------------------- schedule

def test_lambda_schedule_recursion():
    q = cf_expand(GOLDEN, depth=20).q[5:]
    s = lambda_schedule(math.log(1e3), q, 1.0, 4, enforce=False)
    logs = [math.log(1e3)]
    for n in range(1, 5):
        logs.append(logs[-1] * (1 - math.log(q[n]) / q[n - 1]))
    assert np.allclose(s.logs, logs, rtol=0, atol=0)


def test_lambda_schedule_floor_is_enforced():
    q = cf_expand(parse_alpha("golden"), depth=40).q[1:]
    with pytest.raises(FloorViolated):
        lambda_schedule(math.log(1e3), q, 1.0, 30)
    s = lambda_schedule(math.log(1e3), q, 1.0, 30, enforce=False)
    assert not s.clears


def test_lambda_schedule_guards():
    with pytest.raises(ValueError):
        lambda_schedule(1.0, (1, 2, 3), -1.0, 1)
    with pytest.raises(ValueError):
        lambda_schedule(1.0, (1, 3, 2), 1.0, 1)
    with pytest.raises(ValueError):
        lambda_schedule(1.0, (1, 2), 1.0, 3)


# ------------------------------------------------------------- the iteration

def test_starting_objects():
    c = QpCocycle.reduced(GOLDEN, 0.3, 1e3)
    r = starting_radius(c.potential)
    assert r == pytest.approx(0.05)
    c1 = first_criticals(c.potential, 0.3)
    assert np.allclose(np.cos(2 * np.pi * np.array(c1)), 0.3, atol=1e-13)
    cf = cf_expand(GOLDEN)
    N = default_N(cf, r, 2.5)
    assert cf.q[N] ** -5 < r / 10 <= cf.q[N - 1] ** -5


def test_trig2_first_criticals():
    v = trig2(0.1)
    c1 = first_criticals(v, 0.2)
    assert np.allclose(v(np.array(c1)), 0.2, atol=1e-12)


@pytest.fixture(scope="module")
def generic_run():
    c = QpCocycle.reduced(GOLDEN, 0.2, 1e3)
    return c, run_induction(c, 3)


def test_generic_run_completes(generic_run):
    c, (states, stop) = generic_run
    assert stop is None and len(states) == 4
    for st_ in states:
        assert st_.norm_floor_ok and st_.drift_ok
        assert st_.klass != "Unclassified"


def test_interval_radii_schedule(generic_run):
    c, (states, _) = generic_run
    q = cf_expand(GOLDEN).q
    for st_ in states:
        i, N = st_.level, st_.N
        assert st_.intervals[0].radius == 2.0 ** -i * q[N + i - 1] ** (-2.0 * 2.5)


def test_type1_polarity_is_opposite(generic_run):
    _, (states, _) = generic_run
    for st_ in states:
        if len(st_.classes) == 2 and all(cl.is_type1 for cl in st_.classes):
            assert st_.classes[0].tag != st_.classes[1].tag


def test_trace_records_are_json(generic_run):
    _, (states, _) = generic_run
    for st_ in states:
        rec = json.loads(st_.to_json())
        assert rec["level"] == st_.level and rec["returns"] == [st_.r_plus, st_.r_minus]


def test_iterate_is_deterministic(generic_run):
    c, (states, _) = generic_run
    again = iterate_step(states[0], c)
    assert again.to_json() == states[1].to_json()


def test_uh_stop_state_is_fixed(generic_run):
    c, (states, _) = generic_run
    st_ = dataclasses.replace(states[-1], uh_stop=True)
    assert iterate_step(st_, c) is st_


def test_unclassified_state_raises(generic_run):
    c, (states, _) = generic_run
    bad = dataclasses.replace(states[0], classes=(FunctionClass("Unclassified", {"failed": "x"}),) * 2)
    with pytest.raises(ClassificationLost):
        iterate_step(bad, c)


def test_outside_spectrum_stops_hyperbolic():
    c = QpCocycle.reduced(GOLDEN, 1 + 2 / 1e3, 1e3)
    st_ = starting_step(c)
    assert st_.uh_stop


def test_parameter_guards():
    with pytest.raises(OutsideParameterRange):
        starting_step(QpCocycle.reduced(GOLDEN, 1.5, 1e3))
    with pytest.raises(ValueError):
        starting_step(QpCocycle.schrodinger(GOLDEN, 0.0, 1e3))


def test_resonance_scan_signs():
    found = scan_resonant_t(GOLDEN, 1e3, ts=np.linspace(-0.99, 0.99, 199))
    ks = {k for _, k in found}
    assert found and ks <= {-2, -1, 1, 2}
    t, k = found[0]
    assert level1_resonance(GOLDEN, t, 1e3) == k
