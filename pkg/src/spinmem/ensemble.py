"""Trajectory ensembles, stationarity estimates, and disorder-averaged sweeps.

The order parameter is the averaged maximum overlap
M(t) = mean over trajectories of max_mu |m_mu(t)|, with the absolute value
taken per trajectory before averaging so the global spin-flip symmetry does
not cancel it.  Sweeps average the stationary value of M over independent
coupling realizations and report the population spread across realizations
as the error bar.

Seeds are derived from one master seed through numpy SeedSequence spawn
keys, so every coupling realization and every trajectory has its own
reproducible stream regardless of execution order.  The same coupling
realizations are reused at every grid point, which makes sweep curves vary
smoothly along the grid.
"""

import dataclasses
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kmc, model, rates

# spawn-key namespaces for seed derivation
_NS_COUPLINGS = 0
_NS_TRAJECTORY = 1
_NS_INITIAL = 2

# default sizing of t_end from the initial total rate when none is given
T_END_RATE_MULTIPLE = 50.0


class NotConverged(RuntimeError):
    """Stationary window still drifting; carries both half-window means."""

    def __init__(self, first_half, second_half, drift_tol):
        self.first_half = float(first_half)
        self.second_half = float(second_half)
        self.drift_tol = float(drift_tol)
        super().__init__(
            "window halves differ: %.4f vs %.4f (tolerance %.4f)"
            % (self.first_half, self.second_half, self.drift_tol)
        )

    def __reduce__(self):
        # keep the exception picklable across worker-process boundaries
        return (NotConverged, (self.first_half, self.second_half, self.drift_tol))


def derive_seed(master_seed, *key):
    """Stable 64-bit seed for the stream identified by the integer key path."""
    ss = np.random.SeedSequence(master_seed, spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class StationarityWindow:
    """Burn-in / measurement-window fractions of a trajectory."""

    burn_in: float = 0.5
    window: float = 0.25
    drift_tol: float = 0.05

    def __post_init__(self):
        if not 0.0 <= self.burn_in < 1.0:
            raise ValueError("burn_in must lie in [0, 1)")
        if not 0.0 < self.window <= 1.0 - self.burn_in:
            raise ValueError("window must lie in (0, 1 - burn_in]")
        if not self.drift_tol > 0.0:
            raise ValueError("drift_tol must be positive")


@dataclass(frozen=True)
class InitialCondition:
    """How each trajectory starts: fully random or biased toward a pattern."""

    kind: str = "random"
    pattern: int = 0
    target_overlap: float = 0.6

    def __post_init__(self):
        if self.kind not in ("random", "pattern"):
            raise ValueError("kind must be 'random' or 'pattern'")
        if self.pattern < 0:
            raise ValueError("pattern index must be non-negative")
        if not -1.0 <= self.target_overlap <= 1.0:
            raise ValueError("target_overlap must lie in [-1, 1]")


@dataclass(frozen=True)
class EnsembleSpec:
    """Everything a sweep needs besides the couplings themselves."""

    params: model.ModelParams
    n_traj: int = 200
    n_distr: int = 30
    eta_grid: tuple = (1.0,)
    initial: InitialCondition = InitialCondition()
    master_seed: int = 0
    window: StationarityWindow = StationarityWindow()
    t_end: float = None  # None sizes each cell from its initial total rate
    n_samples: int = 400
    workers: int = 1

    def __post_init__(self):
        if self.n_traj < 1:
            raise ValueError("n_traj must be >= 1")
        if self.n_distr < 1:
            raise ValueError("n_distr must be >= 1")
        if len(self.eta_grid) == 0:
            raise ValueError("eta_grid must not be empty")
        if any(e < model.ETA_MIN for e in self.eta_grid):
            raise ValueError("eta_grid entries must be >= %g" % model.ETA_MIN)
        if self.t_end is not None and not self.t_end > 0.0:
            raise ValueError("t_end must be positive")
        if self.n_samples < 8:
            raise ValueError("n_samples must be >= 8 to resolve the window")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass(frozen=True)
class EnsembleCurves:
    """Averaged overlap curves of one (couplings, eta) cell."""

    times: np.ndarray
    mean_abs_overlap: np.ndarray  # (n_samples, M)
    mean_max_overlap: np.ndarray  # (n_samples,)
    n_traj: int
    t_end: float
    trajectory_seeds: tuple


@dataclass(frozen=True)
class SweepResult:
    """Disorder-averaged order parameter along one axis (eta or T)."""

    axis_name: str
    axis: tuple
    mean_m: np.ndarray
    std_m: np.ndarray
    values: np.ndarray  # (n_points, n_distr); NaN marks a failed cell
    t_end: tuple
    coupling_seeds: tuple
    master_seed: int
    failures: tuple = ()

    def __post_init__(self):
        n_points = len(self.axis)
        if self.values.shape[0] != n_points or self.mean_m.shape != (n_points,):
            raise ValueError("sweep arrays disagree on the number of grid points")
        finite = self.values[np.isfinite(self.values)]
        if finite.size and (finite.min() < -1e-9 or finite.max() > 1.0 + 1e-9):
            raise ValueError("overlap order parameter outside [0, 1]")
        if np.any(self.std_m[np.isfinite(self.std_m)] < 0.0):
            raise ValueError("negative std")


def _initial_configuration(patterns, initial, seed):
    if initial.kind == "random":
        return model.random_configuration(patterns.shape[0], seed)
    return model.prepare_initial_configuration(
        patterns, initial.pattern, initial.target_overlap, seed
    )


def _default_t_end(c, tables, sigma0s):
    """Sweep length from the slowest initial state: T_END_RATE_MULTIPLE * N / R0."""
    state_rates = []
    for sigma0 in sigma0s:
        state = kmc.init_state(c, sigma0, tables)
        state_rates.append(state.total_rate)
    slowest = min(state_rates)
    if not slowest > 0.0:
        raise kmc.ZeroTotalRate("an initial configuration has zero total rate")
    return T_END_RATE_MULTIPLE * c.num_spins / slowest


def trajectory_ensemble(couplings, spec, eta, eta_index=0, realization_index=0,
                        tables=None):
    """Average |m_mu(t)| and max_mu |m_mu(t)| over spec.n_traj trajectories.

    All trajectories share one sample grid; absolute values are taken per
    trajectory before averaging.  Tables are built here unless passed in.
    """
    params = dataclasses.replace(spec.params, eta=eta)
    patterns = model.extract_patterns(couplings)
    if tables is None:
        kp = rates.KernelParams.from_model(params)
        tables = rates.build_tables(couplings, kp)

    traj_seeds = []
    init_seeds = []
    sigma0s = []
    for ti in range(spec.n_traj):
        init_seed = derive_seed(
            spec.master_seed, _NS_INITIAL, eta_index, realization_index, ti
        )
        init_seeds.append(init_seed)
        sigma0s.append(_initial_configuration(patterns, spec.initial, init_seed))

    t_end = spec.t_end
    if t_end is None:
        t_end = _default_t_end(couplings, tables, sigma0s)
    grid = np.linspace(0.0, t_end, spec.n_samples)

    sum_abs = np.zeros((spec.n_samples, couplings.num_patterns))
    sum_max = np.zeros(spec.n_samples)
    for ti in range(spec.n_traj):
        seed = derive_seed(
            spec.master_seed, _NS_TRAJECTORY, eta_index, realization_index, ti
        )
        traj_seeds.append(seed)
        record = kmc.run_trajectory(couplings, sigma0s[ti], tables, t_end, grid, seed)
        abs_m = np.abs(record.overlaps)
        sum_abs += abs_m
        sum_max += abs_m.max(axis=1)
    return EnsembleCurves(
        times=grid,
        mean_abs_overlap=sum_abs / spec.n_traj,
        mean_max_overlap=sum_max / spec.n_traj,
        n_traj=spec.n_traj,
        t_end=float(t_end),
        trajectory_seeds=tuple(traj_seeds),
    )


def stationary_estimate(times, curve, window=StationarityWindow()):
    """Time-average of the trailing window; NotConverged when halves drift.

    The window is the final `window.window` fraction of the run; the drift
    detector compares the means of its two halves against window.drift_tol.
    """
    times = np.asarray(times, dtype=float)
    curve = np.asarray(curve, dtype=float)
    if times.shape != curve.shape:
        raise ValueError("times and curve must have the same shape")
    t_end = times[-1]
    t_start = (1.0 - window.window) * t_end
    sel = times >= t_start
    if sel.sum() < 4:
        raise ValueError("fewer than 4 samples in the stationary window")
    t_mid = (1.0 - window.window / 2.0) * t_end
    first = curve[sel & (times < t_mid)]
    second = curve[sel & (times >= t_mid)]
    drift = abs(first.mean() - second.mean())
    if drift > window.drift_tol:
        raise NotConverged(first.mean(), second.mean(), window.drift_tol)
    return float(curve[sel].mean())


def _run_cell(spec, eta, eta_index, realization_index, coupling_seed):
    """One (eta, realization) cell: build tables, run ensemble, estimate."""
    params = dataclasses.replace(spec.params, eta=eta)
    couplings = model.sample_couplings(params, coupling_seed)
    curves = trajectory_ensemble(
        couplings, spec, eta, eta_index=eta_index,
        realization_index=realization_index,
    )
    value = stationary_estimate(curves.times, curves.mean_max_overlap, spec.window)
    return value, curves.t_end


def disorder_sweep(spec):
    """Stationary order parameter against eta, averaged over realizations.

    Coupling realizations are shared across the eta grid.  Cells that fail
    (non-converged quadrature or stationarity) are recorded in `failures`
    and left NaN; the sweep itself always completes.
    """
    n_eta = len(spec.eta_grid)
    coupling_seeds = tuple(
        derive_seed(spec.master_seed, _NS_COUPLINGS, ri) for ri in range(spec.n_distr)
    )
    values = np.full((n_eta, spec.n_distr), np.nan)
    t_ends = np.full(n_eta, np.nan)
    failures = []

    cells = [
        (ei, eta, ri)
        for ei, eta in enumerate(spec.eta_grid)
        for ri in range(spec.n_distr)
    ]

    def _record(ei, eta, ri, outcome, error):
        if error is not None:
            failures.append("eta=%g realization=%d: %s" % (eta, ri, error))
            return
        value, t_end = outcome
        values[ei, ri] = value
        # cells of one eta share the grid only when t_end is explicit; keep
        # the longest cell as the representative time otherwise
        if np.isnan(t_ends[ei]) or t_end > t_ends[ei]:
            t_ends[ei] = t_end

    recoverable = (
        NotConverged,
        kmc.ZeroTotalRate,
        rates.NonConvergedQuadrature,
        rates.NegativeRate,
        rates.OutOfBounds,
    )
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            futures = {
                (ei, eta, ri): pool.submit(
                    _run_cell, spec, eta, ei, ri, coupling_seeds[ri]
                )
                for ei, eta, ri in cells
            }
            for (ei, eta, ri), fut in futures.items():
                try:
                    _record(ei, eta, ri, fut.result(), None)
                except recoverable as exc:
                    _record(ei, eta, ri, None, exc)
    else:
        for ei, eta, ri in cells:
            try:
                outcome = _run_cell(spec, eta, ei, ri, coupling_seeds[ri])
                _record(ei, eta, ri, outcome, None)
            except recoverable as exc:
                _record(ei, eta, ri, None, exc)

    mean_m = np.full(n_eta, np.nan)
    std_m = np.full(n_eta, np.nan)
    for ei in range(n_eta):
        good = values[ei][np.isfinite(values[ei])]
        if good.size:
            mean_m[ei] = good.mean()
            std_m[ei] = good.std(ddof=0)
    return SweepResult(
        axis_name="eta",
        axis=tuple(float(e) for e in spec.eta_grid),
        mean_m=mean_m,
        std_m=std_m,
        values=values,
        t_end=tuple(float(t) for t in t_ends),
        coupling_seeds=coupling_seeds,
        master_seed=spec.master_seed,
        failures=tuple(failures),
    )


def random_overlap_floor(num_spins, num_patterns, n_samples=20000, seed=0):
    """Finite-size floor of max_mu |m_mu| for uniformly random configurations.

    Direct sampling: random sign patterns against random configurations; the
    mean of the max folded overlap is the level an unordered system shows.
    """
    rng = np.random.default_rng(seed)
    draws = rng.integers(0, 2, size=(n_samples, num_patterns, num_spins)) * 2.0 - 1.0
    overlaps = draws.mean(axis=2)
    return float(np.abs(overlaps).max(axis=1).mean())
