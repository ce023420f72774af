"""Model-layer tests: sampling, energies, flip costs, gauge tools.

Energies and flip costs are checked against brute-force double-loop oracles
that never touch the mode-field shortcut used by the implementation.
"""

from dataclasses import dataclass

import numpy as np
import pytest

from spinmem import model


def energy_double_loop(g, sigma):
    """O(N^2 M) reference: E = -1/4 sum_mu sum_{i != j} g_im g_jm s_i s_j."""
    n, m = g.shape
    total = 0.0
    for mu in range(m):
        for i in range(n):
            for j in range(n):
                if i != j:
                    total += g[i, mu] * g[j, mu] * sigma[i] * sigma[j]
    return -0.25 * total


def small_params(n=8, m=2, s=0.25):
    return model.ModelParams(num_spins=n, num_patterns=m, eta=1.0, coupling_width=s)


# ---------------------------------------------------------------- sampling


def test_sample_couplings_zero_width_gives_signs():
    c = model.sample_couplings(small_params(s=0.0), seed=3)
    assert np.all(np.isin(c.values, (-1.0, 1.0)))


def test_sample_couplings_moments():
    # 1e5 draws: |g| concentrates at 1 and (g - sign g) at width 0.25.
    s = 0.25
    params = model.ModelParams(num_spins=500, num_patterns=200, eta=1.0, coupling_width=s)
    g = model.sample_couplings(params, seed=11).values.ravel()
    n = g.size
    se_mean = s / np.sqrt(n)
    assert abs(np.abs(g).mean() - 1.0) < 3 * se_mean
    noise = g - np.sign(g)
    se_std = s / np.sqrt(2 * n)
    assert abs(noise.std() - s) < 3 * se_std


def test_sample_couplings_deterministic():
    params = small_params()
    a = model.sample_couplings(params, seed=42)
    b = model.sample_couplings(params, seed=42)
    assert np.array_equal(a.values, b.values)


def test_extract_patterns_sign_convention():
    c = model.CouplingMatrix(np.array([[1.2, -0.7], [-0.8, 0.0], [0.9, 2.0]]))
    patterns = model.extract_patterns(c)
    assert np.array_equal(patterns[:, 0], [1.0, -1.0, 1.0])
    assert patterns[1, 1] == 1.0  # sign(0) := +1


def test_patterns_of_clean_couplings_are_the_couplings():
    c = model.sample_couplings(small_params(s=0.0), seed=7)
    assert np.array_equal(model.extract_patterns(c), c.values)


# ---------------------------------------------------------------- overlaps


def test_overlap_aligned_and_anti():
    c = model.sample_couplings(small_params(), seed=1)
    patterns = model.extract_patterns(c)
    assert model.overlap(patterns, patterns[:, 0], 0) == 1.0
    assert model.overlap(patterns, -patterns[:, 0], 0) == -1.0


def test_overlap_forty_of_fifty_sites():
    params = model.ModelParams(num_spins=50, num_patterns=2, eta=1.0)
    patterns = model.extract_patterns(model.sample_couplings(params, seed=5))
    sigma = patterns[:, 0].copy()
    sigma[:10] *= -1.0
    assert model.overlap(patterns, sigma, 0) == pytest.approx(0.6, abs=0)


def test_overlap_index_guard():
    patterns = np.ones((4, 2))
    with pytest.raises(IndexError):
        model.overlap(patterns, np.ones(4), 2)
    with pytest.raises(IndexError):
        model.overlap(patterns, np.ones(4), -1)


def test_overlap_quantization_and_mean():
    # m_mu lives on the grid {-1, -1 + 2/N, ..., 1}; random configurations
    # average to zero within the CLT band.
    n, trials = 50, 400
    params = model.ModelParams(num_spins=n, num_patterns=2, eta=1.0)
    patterns = model.extract_patterns(model.sample_couplings(params, seed=2))
    rng = np.random.default_rng(9)
    values = []
    for _ in range(trials):
        sigma = rng.integers(0, 2, size=n) * 2.0 - 1.0
        m = model.overlap(patterns, sigma, 0)
        counts = (m * n + n) / 2.0
        assert abs(counts - round(counts)) < 1e-9
        assert -1.0 <= m <= 1.0
        values.append(m)
    assert abs(np.mean(values)) < 3.0 / np.sqrt(n * trials)


# ---------------------------------------------------------------- energies


def test_interaction_energy_hand_value():
    c = model.CouplingMatrix(np.array([[1.0], [1.0]]))
    sigma = np.array([1.0, 1.0])
    assert model.interaction_energy(c, sigma) == pytest.approx(-0.5, abs=1e-15)


def test_interaction_energy_z2():
    c = model.sample_couplings(small_params(), seed=13)
    sigma = model.random_configuration(8, seed=4)
    assert model.interaction_energy(c, sigma) == model.interaction_energy(c, -sigma)


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_interaction_energy_matches_double_loop(seed):
    c = model.sample_couplings(small_params(), seed=seed)
    sigma = model.random_configuration(8, seed=seed + 100)
    expected = energy_double_loop(c.values, sigma)
    assert model.interaction_energy(c, sigma) == pytest.approx(expected, rel=1e-12)


def test_flip_cost_two_spin_hand_values():
    c = model.CouplingMatrix(np.array([[1.0], [1.0]]))
    assert model.flip_cost(c, np.array([1.0, 1.0]), 0) == pytest.approx(1.0)
    assert model.flip_cost(c, np.array([1.0, -1.0]), 0) == pytest.approx(-1.0)


@pytest.mark.parametrize("seed", [5, 6, 7])
def test_flip_cost_matches_energy_difference_oracle(seed):
    c = model.sample_couplings(small_params(), seed=seed)
    sigma = model.random_configuration(8, seed=seed)
    for i in range(8):
        flipped = sigma.copy()
        flipped[i] *= -1.0
        expected = energy_double_loop(c.values, flipped) - energy_double_loop(c.values, sigma)
        assert model.flip_cost(c, sigma, i) == pytest.approx(expected, abs=1e-10)


@pytest.mark.parametrize("seed", range(6))
def test_flip_cost_telescopes(seed):
    # |flip_cost - (E(flip) - E)| < 1e-10 max(1, |E|) on random instances.
    params = model.ModelParams(num_spins=20, num_patterns=3, eta=1.0)
    c = model.sample_couplings(params, seed=seed)
    sigma = model.random_configuration(20, seed=seed + 50)
    e0 = model.interaction_energy(c, sigma)
    for i in range(20):
        flipped = sigma.copy()
        flipped[i] *= -1.0
        delta = model.interaction_energy(c, flipped) - e0
        tol = 1e-10 * max(1.0, abs(e0))
        assert abs(model.flip_cost(c, sigma, i) - delta) < tol


def test_flip_cost_z2():
    c = model.sample_couplings(small_params(), seed=21)
    sigma = model.random_configuration(8, seed=22)
    for i in range(8):
        assert model.flip_cost(c, sigma, i) == model.flip_cost(c, -sigma, i)


def test_flip_costs_vector_matches_scalar():
    c = model.sample_couplings(small_params(), seed=23)
    sigma = model.random_configuration(8, seed=24)
    vec = model.flip_costs(c, sigma)
    for i in range(8):
        assert vec[i] == pytest.approx(model.flip_cost(c, sigma, i), rel=1e-14)


def test_gauge_invariance_of_energy_and_costs():
    c = model.sample_couplings(small_params(), seed=31)
    sigma = model.random_configuration(8, seed=32)
    eps = model.random_configuration(8, seed=33)
    gauged = model.apply_gauge(c, eps)
    assert model.interaction_energy(gauged, eps * sigma) == pytest.approx(
        model.interaction_energy(c, sigma), abs=1e-12
    )
    assert np.allclose(gauged.g_sq, c.g_sq, atol=1e-12)
    for i in range(8):
        assert model.flip_cost(gauged, eps * sigma, i) == pytest.approx(
            model.flip_cost(c, sigma, i), abs=1e-12
        )


# ------------------------------------------------------- initial conditions


def test_prepare_initial_exact_alignment():
    params = model.ModelParams(num_spins=50, num_patterns=2, eta=1.0)
    patterns = model.extract_patterns(model.sample_couplings(params, seed=8))
    sigma = model.prepare_initial_configuration(patterns, 0, 1.0, seed=0)
    assert np.array_equal(sigma, patterns[:, 0])


def test_prepare_initial_sixty_percent():
    params = model.ModelParams(num_spins=50, num_patterns=2, eta=1.0)
    patterns = model.extract_patterns(model.sample_couplings(params, seed=8))
    sigma = model.prepare_initial_configuration(patterns, 0, 0.6, seed=1)
    assert model.overlap(patterns, sigma, 0) == pytest.approx(0.6, abs=0)
    assert int(np.sum(sigma == patterns[:, 0])) == 40


def test_prepare_initial_rejects_unreachable_overlap():
    patterns = np.ones((50, 2))
    with pytest.raises(model.UnreachableOverlap) as err:
        model.prepare_initial_configuration(patterns, 0, 0.57, seed=0)
    assert err.value.nearest == (0.56, 0.6)
    assert "0.56" in str(err.value) and "0.6" in str(err.value)


def test_prepare_initial_randomizes_misaligned_sites():
    patterns = np.ones((50, 1))
    a = model.prepare_initial_configuration(patterns, 0, 0.6, seed=1)
    b = model.prepare_initial_configuration(patterns, 0, 0.6, seed=2)
    assert not np.array_equal(a, b)
    # same seed: identical
    c = model.prepare_initial_configuration(patterns, 0, 0.6, seed=1)
    assert np.array_equal(a, c)


# ------------------------------------------------------------------- gauge


@dataclass
class FakeRecord:
    final_state: np.ndarray
    overlaps: np.ndarray
    spin_samples: np.ndarray = None


def test_gauge_align_pattern_one_becomes_plus():
    params = small_params()
    patterns = model.extract_patterns(model.sample_couplings(params, seed=14))
    record = FakeRecord(final_state=patterns[:, 0].copy(), overlaps=np.zeros((1, 2)))
    aligned = model.gauge_align(patterns, record)
    assert np.all(aligned.final_state == 1.0)


def test_gauge_align_blocks_and_invariant_overlaps():
    params = model.ModelParams(num_spins=30, num_patterns=2, eta=1.0)
    c = model.sample_couplings(params, seed=15)
    patterns = model.extract_patterns(c)
    eps, perm = model.gauge_alignment(patterns)
    aligned_p = model.align_patterns(patterns, eps, perm)
    assert np.all(aligned_p[:, 0] == 1.0)
    second = aligned_p[:, 1]
    drops = np.nonzero(np.diff(second) != 0)[0]
    assert len(drops) <= 1  # one contiguous +1 block then one -1 block
    if len(drops) == 1:
        assert second[0] == 1.0 and second[-1] == -1.0

    sigma = model.random_configuration(30, seed=16)
    record = FakeRecord(
        final_state=sigma,
        overlaps=model.overlaps(patterns, sigma)[None, :],
        spin_samples=sigma[None, :],
    )
    aligned = model.gauge_align(patterns, record)
    # overlaps recomputed in the transformed frame agree with the stored ones
    recomputed = model.overlaps(aligned_p, aligned.final_state)
    assert np.allclose(recomputed, record.overlaps[0], atol=1e-12)
    assert np.array_equal(aligned.spin_samples[0], aligned.final_state)


def test_model_params_validation():
    with pytest.raises(ValueError, match="eta"):
        model.ModelParams(num_spins=4, num_patterns=1, eta=0.0)
    with pytest.raises(ValueError, match="theta"):
        model.ModelParams(num_spins=4, num_patterns=1, eta=1.0, theta=1.0)
    with pytest.raises(ValueError, match="num_spins"):
        model.ModelParams(num_spins=1, num_patterns=1, eta=1.0)
    with pytest.raises(ValueError, match="omega"):
        model.ModelParams(num_spins=4, num_patterns=1, eta=1.0, omega=0.0)
