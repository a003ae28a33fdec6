import math

import numpy as np
import pytest

from cocycle_lab import sl2core
from cocycle_lab.cocycle import QpCocycle, cos_potential
from cocycle_lab.errors import DegenerateData, LambdaTooSmall, SingularEnergy
from cocycle_lab.spectral import (avalanche_check, dirichlet_eigs, finite_le, finite_le_many,
                                  holder_fit, ids_dirichlet, ldt_default_params,
                                  ldt_deviation_measure, ldt_profile, le_refined,
                                  positivity_scan, spectrum_interval, sturm_count, thouless_le)

from conftest import GOLDEN


def test_free_exponent_closed_form():
    # v = 0, |E| > 2: L = arcosh(|E|/2)
    c = QpCocycle.schrodinger(GOLDEN, 3.0, 0.0)
    assert le_refined(c, 256, 64) == pytest.approx(math.acosh(1.5), abs=1e-6)


def test_free_band_exponent_vanishes():
    c = QpCocycle.schrodinger(GOLDEN, 0.7, 0.0)
    assert finite_le(c, 4000, 64) < 5e-3


def test_zero_potential_at_zero_energy_is_a_rotation():
    # lam v = 0 and E = 0 leave R_{pi/2} at every x: A_4 = Id, so L = 0 exactly
    c = QpCocycle.schrodinger(GOLDEN, 0.0, 0.0)
    assert finite_le(c, 400, 16) == pytest.approx(0.0, abs=1e-14)


def test_herman_lower_bound():
    # L(E) >= log(lam / 2) for the almost Mathieu operator at every E
    for E in (-8.0, 0.0, 3.3):
        c = QpCocycle.schrodinger(GOLDEN, E, 10.0)
        assert le_refined(c, 512, 512) >= math.log(5.0) - 1e-3


def test_large_energy_exponent():
    # far outside the spectrum L ~ log|E|
    c = QpCocycle.schrodinger(GOLDEN, 1e6, 1.0)
    assert le_refined(c, 64, 64) == pytest.approx(math.log(1e6), abs=1e-5)


def test_checkpoints_match_separate_runs():
    c = QpCocycle.schrodinger(GOLDEN, 0.3, 3.0)
    many = finite_le_many(c, [50, 200], 128)
    assert many[50] == pytest.approx(finite_le(c, 50, 128), abs=1e-13)
    assert many[200] == pytest.approx(finite_le(c, 200, 128), abs=1e-13)


def test_subadditivity_integral_form():
    c = QpCocycle.schrodinger(GOLDEN, 0.0, 1e3)
    for n, m in ((64, 64), (128, 64), (256, 256)):
        L = finite_le_many(c, sorted({n, m, n + m}), 2 ** 14)
        assert (n + m) * L[n + m] <= n * L[n] + m * L[m] + 1e-3


def test_le_refined_needs_l():
    with pytest.raises(ValueError):
        le_refined(QpCocycle.schrodinger(GOLDEN, 0.0, 1.0), 4, 64)


# ----------------------------------------------------------------- avalanche

def test_avalanche_two_factors_exact(rng):
    for _ in range(20):
        mats = [sl2core.rot(rng.uniform(0, 3)) @ np.diag([s, 1 / s]) for s in rng.uniform(10, 1e6, 2)]
        assert avalanche_check(mats, 10.0)["lhs"] == 0.0


def test_avalanche_in_hypothesis(rng):
    mu, n = 1e4, 50
    mats = [sl2core.rot(rng.uniform(-0.3, 0.3)) @ np.diag([s, 1 / s])
            for s in mu * rng.uniform(1, 10, n)]
    rep = avalanche_check(mats, mu)
    assert rep["cond_ok"]
    assert rep["lhs"] <= 10 * n / mu


def test_avalanche_flags_cancellation():
    # alternating factors that undo each other break the cancellation hypothesis
    A = np.diag([1e5, 1e-5])
    B = np.diag([1e-5, 1e5])
    assert not avalanche_check([A, B, A], 1e4)["cond_ok"]


# ----------------------------------------------------------------------- IDS

def test_sturm_matches_dense_eigenvalues(rng):
    diag = rng.normal(size=60) * 3
    H = np.diag(diag) + np.diag(np.ones(59), 1) + np.diag(np.ones(59), -1)
    ev = np.linalg.eigvalsh(H)
    Es = rng.uniform(-6, 6, 40)
    assert np.array_equal(sturm_count(diag, Es), (ev[None, :] < Es[:, None]).sum(axis=1))


def test_free_ids_half_at_zero():
    c = QpCocycle.schrodinger(GOLDEN, 0.0, 0.0)
    assert abs(ids_dirichlet(c, 0.0, 100) - 0.5) <= 1 / 100


def test_free_ids_closed_form():
    # Dirichlet free eigenvalues are 2 cos(pi k / (n + 1))
    n = 200
    c = QpCocycle.schrodinger(GOLDEN, 0.0, 0.0)
    E = 0.77
    k = np.arange(1, n + 1)
    assert ids_dirichlet(c, E, n) == np.sum(2 * np.cos(np.pi * k / (n + 1)) < E) / n


def test_ids_bounds_monotone_constant_outside():
    lam = 3.0
    c = QpCocycle.schrodinger(GOLDEN, 0.0, lam)
    lo, hi = spectrum_interval(cos_potential(), lam)
    Es = np.linspace(lo - 3, hi + 3, 301)
    N = ids_dirichlet(c, Es, 300)
    assert np.all((0 <= N) & (N <= 1))
    assert np.all(np.diff(N) >= 0)
    assert np.all(N[Es < lo] == 0) and np.all(N[Es > hi] == 1)


def test_thouless_agrees_with_transfer():
    lam, n = 10.0, 2000
    c0 = QpCocycle.schrodinger(GOLDEN, 0.0, lam)
    eigs = dirichlet_eigs(c0, n)
    for E in (-7.3, 2.1, 6.6):
        E = eigs[np.searchsorted(eigs, E)] + 1e-3      # in the spectrum's bulk
        Lt = thouless_le(eigs, E)
        Ln = finite_le(QpCocycle.schrodinger(GOLDEN, E, lam), n, 256)
        assert abs(Lt - Ln) / Ln <= 0.05


def test_thouless_singular():
    with pytest.raises(SingularEnergy):
        thouless_le(np.array([0.0, 1.0]), 1.0)


# ----------------------------------------------------------------------- LDT

def test_ldt_measure_range_and_profile():
    lam = 1e3
    c = QpCocycle.schrodinger(GOLDEN, 100.0, lam)
    L_ref = le_refined(c, 256, 2048)
    eps = 0.05 * math.log(lam)
    reps = ldt_profile(c, [100, 1000], eps, 2048, L_ref)
    one = ldt_deviation_measure(c, 1000, eps, 2048, L_ref)
    assert reps[1].measure_hat == one.measure_hat
    assert all(0 <= r.measure_hat <= 1 for r in reps)


def test_ldt_default_params():
    d, s = ldt_default_params(1e3, eps=0.1, tau=2.5, C=1.0)
    assert d == pytest.approx(0.01 * 0.1 * math.log(1e3))
    assert s == pytest.approx(0.2)


def test_ldt_grid_floor():
    with pytest.raises(ValueError):
        ldt_deviation_measure(QpCocycle.schrodinger(GOLDEN, 0.0, 10.0), 10, 0.1, 100, 0.0)


# -------------------------------------------------------------------- Holder

def test_holder_fit_recovers_synthetic_modulus(rng):
    C, cc, sig = 2.0, 0.8, 0.5
    Es = np.cumsum(np.exp(-rng.uniform(2, 12, 200)))
    dE = np.diff(Es)
    dL = C * np.exp(-cc * np.log(1 / dE) ** sig)
    Ls = np.concatenate([[0.0], np.cumsum(dL)])
    fit = holder_fit(Es, Ls)
    assert fit["sigma_hat"] == pytest.approx(sig, abs=1e-3)
    assert fit["c_hat"] == pytest.approx(cc, rel=1e-3)


def test_holder_fit_degenerate():
    with pytest.raises(DegenerateData):
        holder_fit(np.linspace(0, 1, 60), np.ones(60))


# ---------------------------------------------------------------- positivity

def test_positivity_scan_small():
    lam = 50.0
    lo, hi = spectrum_interval(cos_potential(), lam)
    res = positivity_scan(cos_potential(), lam, GOLDEN, np.linspace(lo, hi, 9), 400, 256)
    assert res["min_ratio"] > 0.7
    assert len(res["table"]) == 9


def test_positivity_scan_guards():
    with pytest.raises(LambdaTooSmall):
        positivity_scan(cos_potential(), 5.0, GOLDEN, [0.0], 10, 16)
    with pytest.raises(ValueError):
        positivity_scan(cos_potential(), 50.0, GOLDEN, [0.0, 1.0], 10, 16)
