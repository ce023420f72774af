"""Ensemble and sweep tests on small fast systems.

Averaging identities (max of averages vs average of maxima, the n_traj = 1
degenerate case) are checked against direct trajectory runs with the same
derived seeds, and the sweep's failure capture is forced deliberately with
an impossible drift tolerance.
"""

import dataclasses

import numpy as np
import pytest

from spinmem import ensemble, kmc, model, rates


def small_spec(**overrides):
    base = dict(
        params=model.ModelParams(num_spins=12, num_patterns=2, eta=4.0),
        n_traj=3,
        n_distr=2,
        eta_grid=(4.0,),
        master_seed=5,
        t_end=60.0,
        n_samples=24,
    )
    base.update(overrides)
    return ensemble.EnsembleSpec(**base)


# ------------------------------------------------------------- validation


def test_window_validation():
    with pytest.raises(ValueError, match="burn_in"):
        ensemble.StationarityWindow(burn_in=1.0)
    with pytest.raises(ValueError, match="window"):
        ensemble.StationarityWindow(burn_in=0.5, window=0.6)
    with pytest.raises(ValueError, match="drift_tol"):
        ensemble.StationarityWindow(drift_tol=0.0)


def test_initial_condition_validation():
    with pytest.raises(ValueError, match="kind"):
        ensemble.InitialCondition(kind="warm")
    with pytest.raises(ValueError, match="target_overlap"):
        ensemble.InitialCondition(kind="pattern", target_overlap=1.5)


def test_spec_validation():
    with pytest.raises(ValueError, match="n_traj"):
        small_spec(n_traj=0)
    with pytest.raises(ValueError, match="eta_grid"):
        small_spec(eta_grid=())
    with pytest.raises(ValueError, match="workers"):
        small_spec(workers=0)
    with pytest.raises(ValueError, match="n_samples"):
        small_spec(n_samples=4)


def test_derive_seed_is_stable_and_keyed():
    a = ensemble.derive_seed(7, 1, 2, 3)
    assert a == ensemble.derive_seed(7, 1, 2, 3)
    assert a != ensemble.derive_seed(7, 1, 2, 4)
    assert a != ensemble.derive_seed(8, 1, 2, 3)


# ---------------------------------------------------- trajectory_ensemble


@pytest.fixture(scope="module")
def shared_system():
    spec = small_spec()
    coupling_seed = ensemble.derive_seed(spec.master_seed, 0, 0)
    couplings = model.sample_couplings(spec.params, coupling_seed)
    kp = rates.KernelParams.from_model(spec.params)
    tables = rates.build_tables(couplings, kp)
    return spec, couplings, tables


def test_single_trajectory_ensemble_is_that_trajectory(shared_system):
    spec, couplings, tables = shared_system
    one = dataclasses.replace(spec, n_traj=1)
    curves = ensemble.trajectory_ensemble(couplings, one, 4.0, tables=tables)
    seed = curves.trajectory_seeds[0]
    init_seed = ensemble.derive_seed(one.master_seed, 2, 0, 0, 0)
    sigma0 = model.random_configuration(12, init_seed)
    record = kmc.run_trajectory(
        couplings, sigma0, tables, curves.t_end, curves.times, seed
    )
    abs_m = np.abs(record.overlaps)
    assert np.allclose(curves.mean_abs_overlap, abs_m, atol=1e-14)
    assert np.allclose(curves.mean_max_overlap, abs_m.max(axis=1), atol=1e-14)


def test_max_of_mean_below_mean_of_max(shared_system):
    spec, couplings, tables = shared_system
    curves = ensemble.trajectory_ensemble(couplings, spec, 4.0, tables=tables)
    pointwise_max = curves.mean_abs_overlap.max(axis=1)
    assert np.all(curves.mean_max_overlap >= pointwise_max - 1e-12)
    assert np.all(curves.mean_max_overlap <= 1.0 + 1e-12)


def test_pattern_initial_condition_starts_at_target(shared_system):
    spec, couplings, tables = shared_system
    biased = dataclasses.replace(
        spec,
        initial=ensemble.InitialCondition(
            kind="pattern", pattern=0, target_overlap=0.5
        ),
    )
    curves = ensemble.trajectory_ensemble(couplings, biased, 4.0, tables=tables)
    assert curves.mean_abs_overlap[0, 0] == pytest.approx(0.5, abs=1e-12)


def test_default_t_end_rule(shared_system):
    spec, couplings, tables = shared_system
    auto = dataclasses.replace(spec, t_end=None, n_traj=2)
    curves = ensemble.trajectory_ensemble(couplings, auto, 4.0, tables=tables)
    # 50 N / R0 of the slowest of the two initial configurations
    slowest = np.inf
    for ti in range(2):
        init_seed = ensemble.derive_seed(auto.master_seed, 2, 0, 0, ti)
        sigma0 = model.random_configuration(12, init_seed)
        state = kmc.init_state(couplings, sigma0, tables)
        slowest = min(slowest, state.total_rate)
    assert curves.t_end == pytest.approx(50.0 * 12 / slowest)


# ----------------------------------------------------- stationary_estimate


def test_stationary_estimate_constant_curve():
    t = np.linspace(0.0, 100.0, 64)
    assert ensemble.stationary_estimate(t, np.full(64, 0.37)) == pytest.approx(0.37)


def test_stationary_estimate_detects_drift():
    t = np.linspace(0.0, 100.0, 200)
    drifting = 0.006 * t  # window halves differ by 0.075 > drift_tol
    with pytest.raises(ensemble.NotConverged) as excinfo:
        ensemble.stationary_estimate(t, drifting)
    err = excinfo.value
    assert err.second_half > err.first_half
    assert "differ" in str(err)


def test_stationary_estimate_needs_samples():
    t = np.linspace(0.0, 100.0, 8)
    with pytest.raises(ValueError, match="samples"):
        ensemble.stationary_estimate(
            t, np.zeros(8), ensemble.StationarityWindow(window=0.1)
        )


# ------------------------------------------------------------ disorder_sweep


def test_sweep_is_deterministic():
    spec = small_spec(eta_grid=(4.0, 8.0))
    a = ensemble.disorder_sweep(spec)
    b = ensemble.disorder_sweep(spec)
    assert np.array_equal(a.values, b.values, equal_nan=True)
    assert a.failures == b.failures
    assert a.coupling_seeds == b.coupling_seeds
    assert a.axis == (4.0, 8.0)
    finite = a.values[np.isfinite(a.values)]
    assert finite.size > 0
    assert np.all((finite >= 0.0) & (finite <= 1.0))


def test_sweep_records_failures_without_aborting():
    impossible = ensemble.StationarityWindow(drift_tol=1e-12)
    spec = small_spec(window=impossible)
    result = ensemble.disorder_sweep(spec)
    assert len(result.failures) == spec.n_distr
    assert np.all(np.isnan(result.values))
    assert np.all(np.isnan(result.mean_m))


def test_sweep_pool_matches_sequential():
    spec = small_spec()
    sequential = ensemble.disorder_sweep(spec)
    pooled = ensemble.disorder_sweep(dataclasses.replace(spec, workers=2))
    assert np.array_equal(sequential.values, pooled.values, equal_nan=True)


def test_sweep_reuses_couplings_across_grid():
    spec = small_spec(eta_grid=(4.0, 8.0))
    result = ensemble.disorder_sweep(spec)
    assert len(result.coupling_seeds) == spec.n_distr
    # the per-realization seeds do not depend on eta, by construction
    expected = tuple(
        ensemble.derive_seed(spec.master_seed, 0, ri) for ri in range(spec.n_distr)
    )
    assert result.coupling_seeds == expected


# ----------------------------------------------------------- random floor


def test_random_overlap_floor_matches_analytic():
    # E max(|m_1|, |m_2|) = 2 / sqrt(pi N) for two independent random
    # patterns at large N (folded-Gaussian pair)
    floor = ensemble.random_overlap_floor(50, 2, n_samples=40000, seed=1)
    assert floor == pytest.approx(2.0 / np.sqrt(np.pi * 50.0), abs=0.01)


def test_random_overlap_floor_single_pattern():
    floor = ensemble.random_overlap_floor(50, 1, n_samples=40000, seed=2)
    assert floor == pytest.approx(np.sqrt(2.0 / (np.pi * 50.0)), abs=0.01)
