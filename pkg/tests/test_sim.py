"""Contrastive objective simulator and the toy positional-bias trainer."""

import math

import numpy as np
import pytest

from oscope.errors import TrainingError
from oscope.sim import (
    SimConfig,
    analytic_limit,
    convergence_sweep,
    estimate_objective,
    estimate_pair,
    per_trial_values,
    spearman_rho,
    toy_bias_trainer,
)


def test_analytic_limit_closed_forms():
    assert abs(analytic_limit(1) - 0.7310585786300049) < 1e-12
    assert abs(analytic_limit(1) - math.e / (math.e + 1)) < 1e-15
    limits = [analytic_limit(b) for b in (1, 2, 15, 127, 1000)]
    assert all(a > b for a, b in zip(limits, limits[1:]))  # monotone decreasing in b


def test_k_zero_truncated_equals_ideal_exactly():
    cfg = SimConfig(d=256, k=0, b=4, trials=150, seed=3)
    ideal, trunc = per_trial_values(cfg)
    assert np.array_equal(ideal, trunc)


def test_same_seed_identical_output():
    cfg = SimConfig(d=128, k=4, b=3, trials=100, seed=9)
    assert estimate_pair(cfg) == estimate_pair(cfg)


def test_estimates_strictly_inside_unit_interval():
    cfg = SimConfig(d=64, k=2, b=5, trials=200, seed=1)
    vi, vt = per_trial_values(cfg)
    for v in (vi, vt):
        assert np.all((v > 0.0) & (v < 1.0))


def test_estimate_objective_selects_encoder():
    cfg = SimConfig(d=64, k=8, b=2, trials=50, seed=4)
    ei = estimate_objective(cfg, "ideal")
    et = estimate_objective(cfg, "truncated")
    pi, pt = estimate_pair(cfg)
    assert ei == pi and et == pt
    with pytest.raises(ValueError):
        estimate_objective(cfg, "perfect")


def test_mean_approaches_limit():
    cfg = SimConfig(d=4096, k=4, b=7, trials=500, seed=6)
    ideal, trunc = estimate_pair(cfg)
    for est in (ideal, trunc):
        assert abs(est.mean - analytic_limit(7)) < 5e-3


def test_rademacher_option():
    cfg = SimConfig(d=1024, k=4, b=7, trials=400, seed=8, latent="rademacher")
    ideal, trunc = estimate_pair(cfg)
    assert abs(ideal.mean - analytic_limit(7)) < 4 * ideal.std_error + 2e-3
    cfg0 = SimConfig(d=1024, k=0, b=7, trials=100, seed=8, latent="rademacher")
    vi, vt = per_trial_values(cfg0)
    assert np.array_equal(vi, vt)


def test_negative_cosine_variance_shrinks_with_d():
    def cosine_variance(d: int) -> float:
        cfg = SimConfig(d=d, k=0, b=1, trials=800, seed=12)
        values, _ = per_trial_values(cfg)
        # with b=1: value = e/(e + e^s)  =>  s = 1 + log((1 - v) / v)
        s = 1.0 + np.log((1.0 - values) / values)
        return float(s.var())

    assert cosine_variance(4096) < cosine_variance(64)


def test_convergence_sweep_shapes_and_determinism():
    rows = convergence_sweep(b=3, k=2, dims=[32, 128], trials=60, seed=5)
    assert [d for d, _, _ in rows] == [32, 128]
    assert rows == convergence_sweep(b=3, k=2, dims=[32, 128], trials=60, seed=5)
    single = convergence_sweep(b=3, k=2, dims=[64], trials=60, seed=5)
    assert len(single) == 1
    with pytest.raises(ValueError):
        convergence_sweep(b=3, k=2, dims=[64, 64], trials=10, seed=5)


def test_sim_config_validation():
    with pytest.raises(ValueError):
        SimConfig(d=8, k=8, b=1, trials=1, seed=0)
    with pytest.raises(ValueError):
        SimConfig(d=8, k=0, b=0, trials=1, seed=0)
    with pytest.raises(ValueError):
        SimConfig(d=8, k=0, b=1, trials=0, seed=0)
    with pytest.raises(ValueError):
        SimConfig(d=8, k=0, b=1, trials=1, seed=0, latent="cauchy")


# --- toy trainer ---

TOY = dict(d=64, vocab_size=50, steps=600, batch=32, lr=0.1, seed=77)


def test_toy_steps_zero_is_flat_at_init():
    series = toy_bias_trainer(gamma_data=0.9, n_positions=4, **{**TOY, "steps": 0})
    assert len(series) == 1 and series[0][0] == 0
    assert 0.0 <= series[0][1] <= 1.0


def test_toy_no_correlation_stays_at_chance():
    series = toy_bias_trainer(gamma_data=0.5, n_positions=2, **TOY)
    final = series[-1][1]
    assert abs(final - 0.5) <= 0.05


def test_toy_strong_correlation_learns_first_position():
    series = toy_bias_trainer(gamma_data=0.9, n_positions=4, **TOY)
    assert series[-1][1] > 0.40  # chance is 0.25


@pytest.mark.parametrize("gamma_data", [0.7, 0.9])
def test_toy_trend_is_monotone(gamma_data):
    series = toy_bias_trainer(gamma_data=gamma_data, n_positions=4, **TOY)
    rates = [r for _, r in series]
    assert spearman_rho(rates) > 0.8


def test_toy_deterministic():
    a = toy_bias_trainer(gamma_data=0.8, n_positions=4, **TOY)
    b = toy_bias_trainer(gamma_data=0.8, n_positions=4, **TOY)
    assert a == b


def test_toy_divergence_raises():
    with pytest.raises(TrainingError):
        toy_bias_trainer(gamma_data=0.9, n_positions=4, d=64, vocab_size=50,
                         steps=5, batch=8, lr=math.inf, seed=1)


def test_toy_validation():
    with pytest.raises(ValueError):
        toy_bias_trainer(d=64, vocab_size=3, gamma_data=0.9, steps=1, batch=8, lr=0.1,
                         seed=1, n_positions=4)
    with pytest.raises(ValueError):
        toy_bias_trainer(d=64, vocab_size=50, gamma_data=1.5, steps=1, batch=8, lr=0.1, seed=1)


def test_spearman_rho_basics():
    assert spearman_rho([1, 2, 3, 4]) == 1.0
    assert spearman_rho([4, 3, 2, 1]) == -1.0
    assert abs(spearman_rho([1, 1, 1, 1])) == 0.0
