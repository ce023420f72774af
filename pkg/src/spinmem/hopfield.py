"""Classical Hopfield network with heat-bath Monte Carlo.

The connectivity is J_ij = (1/N) sum_mu xi_imu xi_jmu with the diagonal
excluded, so E(sigma) = -(N/2) sum_mu zeta~_mu^2 + (1/(2N)) sum_imu xi_imu^2
where zeta~_mu = xi_mu . sigma / N.  Patterns may carry the same bimodal
noise as the spin-boson couplings; retrieval overlaps are measured against
the sign patterns by default (raw xi behind a flag).

Single-site heat-bath updates at uniformly random sites; with J as defined
the paramagnet-to-retrieval transition sits at temperature T = 1.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from . import model
from .ensemble import SweepResult, derive_seed

_NS_PATTERNS = 0
_NS_CHAIN = 1
_NS_INITIAL = 2


@dataclass(frozen=True)
class HopfieldModel:
    """Noisy patterns xi (N x p) and their sign patterns."""

    xi: np.ndarray

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=float)
        if xi.ndim != 2 or xi.shape[0] < 1 or xi.shape[1] < 1:
            raise ValueError("xi must be an N x p matrix")
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "sign_patterns", np.where(xi >= 0.0, 1.0, -1.0))

    @property
    def num_spins(self):
        return self.xi.shape[0]

    @property
    def num_patterns(self):
        return self.xi.shape[1]


@dataclass(frozen=True)
class ThermalChainConfig:
    """Length and temperature of one heat-bath chain."""

    beta: float
    sweeps: int = 2000
    burn_in: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if not self.beta > 0.0:
            raise ValueError("beta must be positive")
        if self.sweeps < 1:
            raise ValueError("sweeps must be >= 1")
        if not 0.0 <= self.burn_in < 1.0:
            raise ValueError("burn_in must lie in [0, 1)")


def sample_noisy_patterns(num_spins, num_patterns, width, seed):
    """Patterns drawn entrywise from (1/2)[N(+1,s^2) + N(-1,s^2)]."""
    if num_spins < 2 or num_patterns < 1:
        raise ValueError("need at least 2 spins and 1 pattern")
    if width < 0.0:
        raise ValueError("pattern noise width must be >= 0")
    return HopfieldModel(model.sample_bimodal(num_spins, num_patterns, width, seed))


def hopfield_energy(m, sigma):
    """E = -(N/2) sum_mu zeta~_mu^2 + (1/(2N)) sum xi^2 (diagonal excluded)."""
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (m.num_spins,):
        raise ValueError("sigma has wrong length")
    zeta_raw = m.xi.T @ sigma / m.num_spins
    return float(
        -0.5 * m.num_spins * (zeta_raw @ zeta_raw)
        + 0.5 * np.sum(m.xi * m.xi) / m.num_spins
    )


def overlap_zeta(m, sigma, mu, raw=False):
    """Overlap with pattern mu: sign(xi_mu).sigma/N, or xi_mu.sigma/N if raw."""
    if not 0 <= mu < m.num_patterns:
        raise IndexError("pattern index %d out of range" % mu)
    sigma = np.asarray(sigma, dtype=float)
    column = m.xi[:, mu] if raw else m.sign_patterns[:, mu]
    return float(column @ sigma / m.num_spins)


def glauber_sweep(m, sigma, beta, rng):
    """N heat-bath updates at random sites; returns the new configuration.

    Each update sets sigma_i = +1 with probability 1/(1 + exp(-2 beta h_i))
    where h_i = sum_{j != i} J_ij sigma_j is the diagonal-free local field.
    """
    sigma = np.asarray(sigma, dtype=float).copy()
    n = m.num_spins
    q = m.xi.T @ sigma  # per-pattern raw sums, updated incrementally
    sites = rng.integers(0, n, size=n)
    draws = rng.random(n)
    xi = m.xi
    xi_sq = np.einsum("ij,ij->i", xi, xi)
    for site, draw in zip(sites, draws):
        h = (xi[site] @ q - xi_sq[site] * sigma[site]) / n
        new = 1.0 if draw < expit(2.0 * beta * h) else -1.0
        if new != sigma[site]:
            q += (new - sigma[site]) * xi[site]
            sigma[site] = new
    return sigma


@dataclass(frozen=True)
class ChainRecord:
    """Per-sweep sign-pattern overlaps of one heat-bath chain."""

    seed: int
    zeta_samples: np.ndarray  # (sweeps + 1, p), index 0 is the initial state
    final_state: np.ndarray


def run_chain(m, sigma0, cfg):
    """Run a heat-bath chain, recording zeta_mu after every sweep."""
    sigma = np.asarray(sigma0, dtype=float).copy()
    if sigma.shape != (m.num_spins,) or not np.all(np.abs(sigma) == 1.0):
        raise ValueError("sigma0 must be a vector of +-1 of length N")
    rng = np.random.default_rng(cfg.seed)
    samples = np.empty((cfg.sweeps + 1, m.num_patterns))
    samples[0] = m.sign_patterns.T @ sigma / m.num_spins
    for k in range(cfg.sweeps):
        sigma = glauber_sweep(m, sigma, cfg.beta, rng)
        samples[k + 1] = m.sign_patterns.T @ sigma / m.num_spins
    return ChainRecord(seed=cfg.seed, zeta_samples=samples, final_state=sigma)


def chain_order_parameter(record, burn_in):
    """max_mu of the time-averaged |zeta_mu| after discarding the burn-in."""
    n = record.zeta_samples.shape[0]
    start = int(np.floor(burn_in * n))
    tail = np.abs(record.zeta_samples[start:])
    if tail.shape[0] < 1:
        raise ValueError("burn-in leaves no samples")
    return float(tail.mean(axis=0).max())


def chain_state_counts(m, sigma0, beta, n_updates, seed):
    """Visit counts over all 2^N states, one count per single-site update.

    Exact-enumeration companion for small N: the empirical distribution
    should match exp(-beta E)/Z once the chain mixes.
    """
    n = m.num_spins
    if n > 16:
        raise ValueError("state histogram limited to N <= 16")
    sigma = np.asarray(sigma0, dtype=float).copy()
    rng = np.random.default_rng(seed)
    counts = np.zeros(2**n, dtype=np.int64)
    bits = (2 ** np.arange(n)).astype(np.int64)
    index = int(bits[sigma > 0.0].sum())
    q = m.xi.T @ sigma
    xi = m.xi
    xi_sq = np.einsum("ij,ij->i", xi, xi)
    block = 65536
    done = 0
    while done < n_updates:
        todo = min(block, n_updates - done)
        sites = rng.integers(0, n, size=todo)
        draws = rng.random(todo)
        for site, draw in zip(sites, draws):
            h = (xi[site] @ q - xi_sq[site] * sigma[site]) / n
            new = 1.0 if draw < expit(2.0 * beta * h) else -1.0
            if new != sigma[site]:
                q += (new - sigma[site]) * xi[site]
                sigma[site] = new
                index += int(bits[site]) * (1 if new > 0 else -1)
            counts[index] += 1
        done += todo
    return counts


def temperature_sweep(num_spins, num_patterns, width, t_grid, chain_cfg,
                      n_disorder, master_seed):
    """Order parameter against temperature, averaged over pattern draws.

    Each disorder realization reuses its patterns across the whole
    temperature grid; chains start from fresh random configurations and the
    order parameter is max_mu of the post-burn-in time average of |zeta_mu|.
    """
    t_grid = tuple(float(t) for t in t_grid)
    if any(t <= 0.0 for t in t_grid):
        raise ValueError("temperatures must be positive")
    if n_disorder < 1:
        raise ValueError("n_disorder must be >= 1")
    pattern_seeds = tuple(
        derive_seed(master_seed, _NS_PATTERNS, ri) for ri in range(n_disorder)
    )
    models = [
        sample_noisy_patterns(num_spins, num_patterns, width, s)
        for s in pattern_seeds
    ]
    values = np.empty((len(t_grid), n_disorder))
    for ti, temperature in enumerate(t_grid):
        for ri in range(n_disorder):
            init_seed = derive_seed(master_seed, _NS_INITIAL, ti, ri)
            sigma0 = model.random_configuration(num_spins, init_seed)
            cfg = ThermalChainConfig(
                beta=1.0 / temperature,
                sweeps=chain_cfg.sweeps,
                burn_in=chain_cfg.burn_in,
                seed=derive_seed(master_seed, _NS_CHAIN, ti, ri),
            )
            record = run_chain(models[ri], sigma0, cfg)
            values[ti, ri] = chain_order_parameter(record, cfg.burn_in)
    return SweepResult(
        axis_name="T",
        axis=t_grid,
        mean_m=values.mean(axis=1),
        std_m=values.std(axis=1, ddof=0),
        values=values,
        t_end=tuple(float(chain_cfg.sweeps) for _ in t_grid),
        coupling_seeds=pattern_seeds,
        master_seed=master_seed,
        failures=(),
    )
