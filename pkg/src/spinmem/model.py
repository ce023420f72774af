"""Disordered spin model: couplings, patterns, configurations, energies.

N Ising spins couple to M bosonic modes with strengths g_{i,mu} drawn from a
symmetric two-peak Gaussian mixture (peaks at +-1, width s).  Adiabatic
elimination of the lossy modes leaves an effective pairwise energy

    E(sigma) = -1/4 sum_mu [ h_mu^2 - sum_i g_{i,mu}^2 ],  h_mu = sum_j g_{j,mu} sigma_j,

whose minima lie near the sign patterns G_mu = sign(g_{., mu}).  Everything in
this module is a pure function of (couplings, configuration); the KMC engine
consumes the flip costs defined here and the rate kernel maps them to rates.

Spins are +-1.0 float arrays throughout so they can enter dot products
without casts.
"""

import dataclasses
from dataclasses import dataclass

import numpy as np

# Below ~1e-3 the net boson loss is too weak for the rate integrand to decay
# on a tractable window (nu -> 0), so we refuse the parameters outright.
ETA_MIN = 1e-3


class UnreachableOverlap(ValueError):
    """Requested initial overlap is not a multiple of 2/N."""

    def __init__(self, target, below, above):
        self.target = target
        self.nearest = (below, above)
        super().__init__(
            "target overlap %g is not representable with N spins; nearest "
            "achievable values are %g and %g" % (target, below, above)
        )

    def __reduce__(self):
        # keep the exception picklable across worker-process boundaries
        return (UnreachableOverlap, (self.target,) + self.nearest)


@dataclass(frozen=True)
class ModelParams:
    """Static parameters of one model instance.

    eta = (gamma - kappa)/omega is the net dimensionless boson loss, theta =
    kappa/gamma the gain-to-loss ratio.  omega and drive are kept symbolic but
    every shipped configuration uses omega = drive = 1 (time measured in units
    where the rate prefactor is order one).
    """

    num_spins: int
    num_patterns: int
    eta: float
    theta: float = 0.9
    omega: float = 1.0
    coupling_width: float = 0.25
    drive: float = 1.0

    def __post_init__(self):
        if self.num_spins < 2:
            raise ValueError("num_spins must be >= 2")
        if self.num_patterns < 1:
            raise ValueError("num_patterns must be >= 1")
        if not self.eta >= ETA_MIN:
            raise ValueError("eta must be >= eta_min = %g" % ETA_MIN)
        if not 0.0 <= self.theta < 1.0:
            raise ValueError("theta must satisfy 0 <= theta < 1")
        if not self.omega > 0.0:
            raise ValueError("omega must be > 0")
        if self.coupling_width < 0.0:
            raise ValueError("coupling_width must be >= 0")


@dataclass(frozen=True)
class CouplingMatrix:
    """N x M couplings with the per-spin norms g_i^2 = sum_mu g_{i,mu}^2 cached."""

    values: np.ndarray
    g_sq: np.ndarray = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise ValueError("coupling matrix must be 2-d (spins x modes)")
        object.__setattr__(self, "values", values)
        g_sq = np.einsum("im,im->i", values, values)
        if np.any(g_sq <= 0.0):
            raise ValueError("every spin needs at least one nonzero coupling")
        object.__setattr__(self, "g_sq", g_sq)

    @property
    def num_spins(self):
        return self.values.shape[0]

    @property
    def num_patterns(self):
        return self.values.shape[1]


def sample_bimodal(num_spins, num_patterns, width, seed):
    """Matrix of i.i.d. draws from the mixture (1/2)[N(+1,s^2) + N(-1,s^2)].

    Each entry picks a peak at +-1 with probability 1/2 and adds Gaussian
    noise of width s.  `seed` is anything numpy's default_rng accepts
    (integer, SeedSequence, Generator).  s = 0 gives exact +-1 entries.
    """
    rng = np.random.default_rng(seed)
    n, m = num_spins, num_patterns
    signs = rng.integers(0, 2, size=(n, m)) * 2.0 - 1.0
    return signs + width * rng.standard_normal((n, m))


def sample_couplings(params, seed):
    """Draw the coupling matrix g_{i,mu} from the bimodal mixture of width s."""
    values = sample_bimodal(
        params.num_spins, params.num_patterns, params.coupling_width, seed
    )
    return CouplingMatrix(values)


def extract_patterns(c):
    """Sign patterns G_mu = sign(g_{., mu}) as an N x M matrix of +-1.

    sign(0) := +1, a fixed convention for the measure-zero case so that runs
    stay reproducible.
    """
    return np.where(c.values >= 0.0, 1.0, -1.0)


def overlap(patterns, sigma, mu):
    """Overlap m_mu = G_mu . sigma / N with the mu-th sign pattern."""
    n, m = patterns.shape
    if not 0 <= mu < m:
        raise IndexError("pattern index %d out of range for M=%d" % (mu, m))
    return float(patterns[:, mu] @ sigma) / n


def overlaps(patterns, sigma):
    """All M overlaps at once."""
    return (patterns.T @ sigma) / patterns.shape[0]


def mode_fields(c, sigma):
    """Per-mode fields h_mu = sum_j g_{j,mu} sigma_j."""
    return c.values.T @ sigma


def interaction_energy(c, sigma):
    """E(sigma) = -1/4 sum_mu [h_mu^2 - sum_i g_{i,mu}^2].

    The subtracted diagonal implements the i != j restriction of the pairwise
    form, so E is independent of sigma's diagonal terms.
    """
    h = mode_fields(c, sigma)
    return -0.25 * (float(h @ h) - float(c.g_sq.sum()))


def flip_cost(c, sigma, i):
    """Energy cost Delta E_i = E(sigma with spin i flipped) - E(sigma).

    Evaluated through the mode fields: sigma_i sum_mu g_{i,mu} (h_mu -
    g_{i,mu} sigma_i) = sigma_i (g_i . h) - g_i^2.
    """
    n = c.num_spins
    if not 0 <= i < n:
        raise IndexError("site index %d out of range for N=%d" % (i, n))
    h = mode_fields(c, sigma)
    return float(sigma[i] * (c.values[i] @ h)) - float(c.g_sq[i])


def flip_costs(c, sigma, h=None):
    """All N flip costs as a vector; pass h to reuse precomputed fields."""
    if h is None:
        h = mode_fields(c, sigma)
    return sigma * (c.values @ h) - c.g_sq


def random_configuration(n, seed):
    """Uniformly random +-1 configuration."""
    rng = np.random.default_rng(seed)
    return rng.integers(0, 2, size=n) * 2.0 - 1.0


def prepare_initial_configuration(patterns, mu, target_overlap, seed):
    """Configuration with exact overlap target_overlap on pattern mu.

    Exactly k = (1 + target)/2 * N uniformly chosen sites carry G_{i,mu}, the
    rest carry -G_{i,mu}, so the initial overlap is (2k - N)/N with no
    sampling error.  Raises UnreachableOverlap when k is not an integer,
    naming the two nearest achievable overlaps.
    """
    n = patterns.shape[0]
    if not -1.0 <= target_overlap <= 1.0:
        raise ValueError("target overlap must lie in [-1, 1]")
    k_exact = (1.0 + target_overlap) * n / 2.0
    k = int(round(k_exact))
    if abs(k_exact - k) > 1e-9:
        below = (2.0 * np.floor(k_exact) - n) / n
        above = (2.0 * np.ceil(k_exact) - n) / n
        raise UnreachableOverlap(target_overlap, below, above)
    rng = np.random.default_rng(seed)
    aligned = rng.permutation(n)[:k]
    sigma = -patterns[:, mu].copy()
    sigma[aligned] = patterns[aligned, mu]
    return sigma


def gauge_alignment(patterns):
    """Gauge signs and site permutation that tidy a record for visualization.

    eps_i = G_{i,1} maps pattern 1 to all +1; the permutation then groups the
    +1 components of the transformed pattern 2 ahead of the -1 ones (stable
    within blocks).  With a single pattern the permutation is the identity.
    Returns (eps, perm).
    """
    eps = patterns[:, 0].copy()
    n, m = patterns.shape
    if m >= 2:
        second = eps * patterns[:, 1]
        perm = np.argsort(-second, kind="stable")
    else:
        perm = np.arange(n)
    return eps, perm


def align_patterns(patterns, eps, perm):
    """Apply a gauge transformation and site permutation to the patterns."""
    return (eps[:, None] * patterns)[perm]


def gauge_align(patterns, record):
    """Gauge-transformed copy of a trajectory record.

    Spins are multiplied by eps_i = G_{i,1} and sites reordered so pattern 1
    reads all +1 and pattern 2 splits into contiguous sign blocks; overlaps
    are gauge-invariant and left untouched.  Works on any record dataclass
    with final_state (and optionally spin_samples) fields.
    """
    eps, perm = gauge_alignment(patterns)
    if len(record.final_state) != len(eps):
        raise ValueError("record and pattern dimensions disagree")
    fields = {"final_state": (eps * record.final_state)[perm]}
    samples = getattr(record, "spin_samples", None)
    if samples is not None:
        fields["spin_samples"] = (eps[None, :] * samples)[:, perm]
    return dataclasses.replace(record, **fields)


def apply_gauge(c, eps):
    """Coupling matrix with rows sign-flipped by eps (for equivariance tests)."""
    return CouplingMatrix(eps[:, None] * c.values)
