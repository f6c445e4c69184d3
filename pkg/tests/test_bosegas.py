import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cylwig import bosegas as bg


def test_config_validation():
    with pytest.raises(ValueError):
        bg.GasConfig(4, 1.0, 1.0, 0.01)
    with pytest.raises(ValueError):
        bg.GasConfig(3, 1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        bg.GasConfig(3, 1.0, 1.0, 0.01, beta_scaling="other")


def test_energy_and_occupation():
    cfg = bg.GasConfig(2, 1.5, 1.0, 0.01)
    assert cfg.energy([0, 0]) == pytest.approx(1.5 * 0.1)
    assert cfg.energy([2, 1]) == pytest.approx(1.5 * 0.1 * 4)
    assert bg.occupation(cfg, [0, 0], 0.0) == pytest.approx(0.01 / math.expm1(0.15))
    with pytest.raises(ValueError):
        bg.occupation(cfg, [0, 0], 1.0)
    with pytest.raises(ValueError):
        cfg.energy([1, 2, 3])


def test_degeneracy_counts_multi_indices():
    for d in (1, 2, 3):
        for n in range(6):
            count = sum(1 for m in itertools.product(range(n + 1), repeat=d) if sum(m) == n)
            assert bg.degeneracy(n, d) == count


def test_level_sum_matches_brute_force():
    """Direct enumeration of multi-indices, independent of the degree grouping."""
    cfg = bg.GasConfig(2, 1.0, 1.0, 0.01)
    gap = 0.05
    mu = cfg.ground_energy - gap / cfg.beta_h
    idx = np.arange(0, 400)
    m1, m2 = np.meshgrid(idx, idx, indexing="ij")
    e = cfg.level_spacing * (m1 + m2 + 1)
    direct = cfg.h * np.sum(1.0 / np.expm1(cfg.beta_h * (e - mu)))
    assert bg._level_sum(cfg, gap).total == pytest.approx(direct, rel=1e-12)


def test_euler_maclaurin_branch(monkeypatch):
    cfg = bg.GasConfig(1, 1.0, 1.0, 1e-4)
    exact = bg._level_sum(cfg, 1e-3)
    monkeypatch.setattr(bg, "EXACT_DEGREES", 500)
    approx = bg._level_sum(cfg, 1e-3)
    assert approx.total == pytest.approx(exact.total, rel=1e-10)


def test_solve_mu_consistency():
    cfg = bg.GasConfig(3, 1.0, 1.5, 1e-3)
    sol = bg.solve_mu(cfg)
    assert sol.residual <= 1e-12 and sol.mu < cfg.ground_energy
    fr = bg.condensed_fraction(cfg, sol)
    assert fr.f0 + sol.sums.excited == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=15)
@given(st.floats(0.2, 5.0), st.sampled_from([1e-2, 1e-3, 1e-4]), st.sampled_from([1, 2, 3]))
def test_fraction_in_unit_interval(beta, h, d):
    fr = bg.condensed_fraction(bg.GasConfig(d, 1.0, beta, h))
    assert 0.0 <= fr.f0 <= 1.0 and fr.solution.residual <= 1e-10


def test_three_dimensional_transition():
    betas = np.geomspace(0.25, 4, 13)
    res = bg.scan(3, 1.0, betas, [1e-4])
    f0 = res.column("f0", 1e-4)
    assert f0[0] <= 0.05 and f0[-1] >= 0.5
    assert np.all(np.diff(f0) >= -1e-6)
    assert np.all(res.column("residual") <= 1e-10)


def test_condensate_fraction_follows_thermodynamic_law():
    """Above beta* the fraction approaches 1 - (beta*/beta)^3 as h -> 0."""
    beta_c = bg.critical_beta(3, 1.0)
    assert beta_c == pytest.approx(1.0633, abs=1e-4)
    f0 = bg.condensed_fraction(bg.GasConfig(3, 1.0, 2.0, 1e-6)).f0
    assert f0 == pytest.approx(1 - (beta_c / 2.0) ** 3, abs=0.02)


def test_one_dimensional_no_condensate():
    betas = np.geomspace(0.25, 4, 13)
    res = bg.scan(1, 1.0, betas, [1e-5])
    assert res.column("f0").max() <= 0.05


def test_scaled_beta_moves_transition():
    """With beta_h = beta h^(2/3) and 1/h particles the transition drifts with h."""
    betas = np.geomspace(0.5, 64, 15)
    stars = bg.scan(3, 1.0, betas, [1e-2, 1e-3], threshold=0.01, beta_scaling="scaled").beta_star
    assert stars[1e-3] > stars[1e-2]


def test_literal_normalization_condenses_in_one_dimension():
    cfg = bg.GasConfig(1, 1.0, 2.0, 1e-3, beta_scaling="scaled", normalization="literal")
    assert bg.condensed_fraction(cfg).f0 > 0.05


def test_gibbs_agreement_constant():
    etas = np.array([[a, b] for a in np.linspace(-1, 1, 5) for b in np.linspace(-1, 1, 5)])
    r = bg.gibbs_genfun_check([1.0], 1.0, 0.0, 1.0, etas)
    assert r.constant_std <= 1e-6
    assert r.constant_mean == pytest.approx(math.e + 1, rel=1e-10)
    assert r.constant_mean == pytest.approx(r.predicted_constant, rel=1e-10)
    assert r.factorization_defect == 0.0
