"""Rejection-free kinetic Monte Carlo over single-spin-flip rates.

Standard Gillespie scheme: waiting times are exponential with the total rate
R = sum_i W_i, the flipped site is chosen proportionally to W_i, and the
per-mode fields h_mu are updated incrementally (O(M) per flip, with all N
flip costs refreshed in O(NM) through the cached fields).  Rates come from
the per-spin lookup tables built by the rates module; when every table
shares one grid (the build_tables layout) lookups vectorize across spins.

For N <= 12 the full 2^N generator of the jump process can be built
explicitly; its null space is the stationary distribution and serves as an
exact oracle for the simulation.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space

from . import model
from .rates import OutOfBounds, lookup_rate, rate_direct

# full refresh of fields and flip costs, to keep incremental float drift bounded
RECOMPUTE_EVERY = 10_000


class ZeroTotalRate(RuntimeError):
    """Every flip rate vanished; the chain cannot advance."""


@dataclass
class TrajectoryRecord:
    """Piecewise-constant samples of one KMC trajectory."""

    seed: int
    sample_times: np.ndarray
    overlaps: np.ndarray  # (n_samples, M)
    final_state: np.ndarray
    flip_count: int
    spin_samples: np.ndarray = None  # (n_samples, N) when spin recording is on


@dataclass
class DynamicalState:
    """Mutable simulation state owned by a single trajectory."""

    couplings: model.CouplingMatrix
    tables: list
    sigma: np.ndarray
    h: np.ndarray
    delta_e: np.ndarray
    rates: np.ndarray
    total_rate: float
    time: float = 0.0
    step_count: int = 0
    # stacked table data when all tables share one grid (fast path)
    _stack: np.ndarray = field(default=None, repr=False)
    _grid_lo: float = field(default=0.0, repr=False)
    _grid_step: float = field(default=1.0, repr=False)
    _grid_len: int = field(default=0, repr=False)


def _try_stack(tables):
    first = tables[0]
    for t in tables[1:]:
        if (
            len(t.grid) != len(first.grid)
            or t.step != first.step
            or t.grid[0] != first.grid[0]
        ):
            return None
    return np.vstack([t.rates for t in tables])


def _lookup_all(state, delta_es):
    if state._stack is None:
        return np.array(
            [lookup_rate(t, x) for t, x in zip(state.tables, delta_es)]
        )
    pos = (delta_es - state._grid_lo) / state._grid_step
    if pos.min() < 0.0 or pos.max() > state._grid_len - 1:
        raise OutOfBounds("flip cost left the tabulated range")
    idx = np.minimum(pos.astype(np.intp), state._grid_len - 2)
    frac = pos - idx
    flat = state._stack.ravel()
    base = np.arange(len(delta_es)) * state._grid_len + idx
    return flat[base] * (1.0 - frac) + flat[base + 1] * frac


def _refresh(state):
    """Recompute fields, flip costs, and rates from sigma alone."""
    c = state.couplings
    state.h = c.values.T @ state.sigma
    state.delta_e = model.flip_costs(c, state.sigma, state.h)
    state.rates = _lookup_all(state, state.delta_e)
    state.total_rate = float(state.rates.sum())


def init_state(c, sigma0, tables):
    """Fresh DynamicalState with everything computed from scratch."""
    if len(tables) != c.num_spins:
        raise ValueError("need one rate table per spin")
    sigma = np.asarray(sigma0, dtype=float).copy()
    if sigma.shape != (c.num_spins,) or not np.all(np.abs(sigma) == 1.0):
        raise ValueError("sigma0 must be a vector of +-1 of length N")
    state = DynamicalState(
        couplings=c,
        tables=list(tables),
        sigma=sigma,
        h=None,
        delta_e=None,
        rates=None,
        total_rate=0.0,
    )
    stack = _try_stack(state.tables)
    if stack is not None:
        state._stack = stack
        state._grid_lo = float(tables[0].grid[0])
        state._grid_step = float(tables[0].step)
        state._grid_len = len(tables[0].grid)
    _refresh(state)
    return state


def kmc_step(state, rng):
    """One rejection-free update; returns (flipped site, waiting time).

    The waiting time is exponential with mean 1/R for the state *before* the
    flip; the site is chosen with probability W_i / R.
    """
    r_total = state.total_rate
    if not r_total > 0.0:
        raise ZeroTotalRate("total rate %.3e at step %d" % (r_total, state.step_count))
    wait = rng.exponential(1.0 / r_total)
    cumulative = np.cumsum(state.rates)
    target = rng.random() * cumulative[-1]
    site = int(np.searchsorted(cumulative, target, side="right"))
    if site >= len(state.sigma):  # float-edge guard, measure-zero
        site = len(state.sigma) - 1

    c = state.couplings
    state.sigma[site] = -state.sigma[site]
    state.h += 2.0 * c.values[site] * state.sigma[site]
    state.delta_e = state.sigma * (c.values @ state.h) - c.g_sq
    state.rates = _lookup_all(state, state.delta_e)
    state.total_rate = float(state.rates.sum())
    state.time += wait
    state.step_count += 1
    if state.step_count % RECOMPUTE_EVERY == 0:
        _refresh(state)
    return site, wait


def run_trajectory(c, sigma0, tables, t_end, sample_grid, seed, record_spins=False):
    """KMC trajectory with piecewise-constant sampling on a fixed grid.

    Each sample time takes the overlaps of the last state before it; sample
    times beyond the final flip read the final state.  Deterministic given
    the seed.
    """
    sample_grid = np.asarray(sample_grid, dtype=float)
    if sample_grid.size:
        if np.any(np.diff(sample_grid) < 0.0):
            raise ValueError("sample grid must be non-decreasing")
        if sample_grid[0] < 0.0 or sample_grid[-1] > t_end:
            raise ValueError("sample grid must lie within [0, t_end]")
    rng = np.random.default_rng(seed)
    state = init_state(c, sigma0, tables)
    patterns = model.extract_patterns(c)
    n = c.num_spins
    n_samples = sample_grid.size
    overlaps_out = np.empty((n_samples, c.num_patterns))
    spins_out = np.empty((n_samples, n)) if record_spins else None

    current_m = model.overlaps(patterns, state.sigma)
    ptr = 0
    overshoot_site = None
    while state.time < t_end:
        held_m = current_m
        held_sigma = state.sigma.copy() if record_spins else None
        site, _ = kmc_step(state, rng)
        if state.time > t_end:
            # this flip happens beyond the horizon: the state at t_end is
            # still the held one, so undo it below and stop sampling flips
            overshoot_site = site
            current_m = held_m
            break
        while ptr < n_samples and sample_grid[ptr] < state.time:
            overlaps_out[ptr] = held_m
            if record_spins:
                spins_out[ptr] = held_sigma
            ptr += 1
        current_m = held_m + (2.0 / n) * state.sigma[site] * patterns[site]
        if state.step_count % RECOMPUTE_EVERY == 0:
            current_m = model.overlaps(patterns, state.sigma)

    final_sigma = state.sigma.copy()
    flips = state.step_count
    if overshoot_site is not None:
        final_sigma[overshoot_site] = -final_sigma[overshoot_site]
        flips -= 1
    while ptr < n_samples:
        overlaps_out[ptr] = current_m
        if record_spins:
            spins_out[ptr] = final_sigma
        ptr += 1

    return TrajectoryRecord(
        seed=seed,
        sample_times=sample_grid,
        overlaps=overlaps_out,
        final_state=final_sigma,
        flip_count=flips,
        spin_samples=spins_out,
    )


# ----------------------------------------------------------- exact oracle


def state_index(sigma):
    """Bit encoding of a configuration: bit i set iff sigma_i = +1."""
    bits = 0
    for i, s in enumerate(sigma):
        if s > 0:
            bits |= 1 << i
    return bits


def decode_state(index, n):
    return np.array([1.0 if (index >> i) & 1 else -1.0 for i in range(n)])


def _rate_of(c, tables, kp, quad, delta_e, i):
    if tables is not None:
        return lookup_rate(tables[i], delta_e)
    if quad is None:
        return rate_direct(delta_e, float(c.g_sq[i]), kp)
    return rate_direct(delta_e, float(c.g_sq[i]), kp, quad)


def exact_generator(c, tables=None, kp=None, quad=None):
    """Full 2^N x 2^N jump-rate generator (columns sum to zero).

    Entry (s', s) holds the rate from configuration s to s'; rates come from
    the given tables or, if absent, from rate_direct with kernel params kp.
    Only sensible for N <= 12.
    """
    n = c.num_spins
    if n > 12:
        raise ValueError("exact generator limited to N <= 12 (got %d)" % n)
    if tables is None and kp is None:
        raise ValueError("need rate tables or kernel params")
    size = 1 << n
    gen = np.zeros((size, size))
    for s in range(size):
        sigma = decode_state(s, n)
        costs = model.flip_costs(c, sigma)
        for i in range(n):
            gen[s ^ (1 << i), s] = _rate_of(c, tables, kp, quad, float(costs[i]), i)
    np.fill_diagonal(gen, -gen.sum(axis=0))
    return gen


def stationary_distribution(gen):
    """Normalized null-space vector of the generator.

    Raises if the null space is not one-dimensional (the chain should be
    irreducible: every rate is positive for eta > 0) or the result is not a
    probability vector within tolerance.
    """
    ns = null_space(gen)
    if ns.shape[1] != 1:
        raise RuntimeError(
            "degenerate stationary space (dimension %d)" % ns.shape[1]
        )
    p = ns[:, 0]
    p = p / p.sum()
    if p.min() < -1e-10:
        raise RuntimeError("stationary vector has negative mass %.3e" % p.min())
    p = np.maximum(p, 0.0)
    p = p / p.sum()
    residual = np.abs(gen @ p).max()
    scale = max(np.abs(gen).max(), 1.0)
    if residual > 1e-10 * scale:
        raise RuntimeError("stationary residual %.3e too large" % residual)
    return p


def occupancy_distribution(c, sigma0, tables, n_jumps, seed):
    """Empirical stationary distribution from one long KMC run.

    States are weighted by their waiting times (jump-chain correction), which
    is the estimator the exact generator's null space should match.
    """
    n = c.num_spins
    if n > 12:
        raise ValueError("occupancy histogram limited to N <= 12")
    rng = np.random.default_rng(seed)
    state = init_state(c, sigma0, tables)
    weights = np.zeros(1 << n)
    index = state_index(state.sigma)
    for _ in range(n_jumps):
        site, wait = kmc_step(state, rng)
        weights[index] += wait
        index ^= 1 << site
    return weights / weights.sum()
