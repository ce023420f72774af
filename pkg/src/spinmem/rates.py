"""Spin-flip rate kernel: controlled quadrature plus fast lookup tables.

The flip rate of spin i is a semi-infinite oscillatory integral

    W(dE, g2) = (2 Omega^2 / omega) * int_0^inf dt
                exp{-(2 g2 nu / omega^2) [f(t) + t]}
                cos[ 16 (dE t - g2 s(t)) / (omega^2 (eta^2 + 4)) ],

with envelope function f, phase function s, and nu = 4(1+theta)eta /
[(eta^2+4)(1-theta)] set by the boson loss parameters.  Two independent
evaluation routes are provided:

* ``rate_direct`` -- adaptive Gauss-Kronrod (G7/K15) panel quadrature with an
  explicit error estimate; the reference implementation and the anchor every
  table is verified against.
* a Filon-type batch evaluator used by ``build_rate_table``: the integrand is
  W(dE) = Re int G(t) exp(i a dE t) dt where G collects everything
  independent of dE, so G is fitted once by piecewise Legendre polynomials
  and the oscillatory moments reduce to spherical Bessel functions.  This
  makes a full table over thousands of dE values about as cheap as a handful
  of direct evaluations, which is what keeps 50-spin sweeps tractable.

Truncation: the envelope is bounded by exp{-A [t + f(inf) - C e^{-eta t/2}]}
with A = 2 g2 nu / omega^2 and C computable from f's coefficients, so the
upper limit T solving that bound = cutoff certifies the discarded tail.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import spherical_jn


class NonConvergedQuadrature(RuntimeError):
    """Subdivision limit hit before the error tolerance was met."""


class NegativeRate(RuntimeError):
    """Integral came out more negative than the quadrature noise floor."""


class OutOfBounds(ValueError):
    """Lookup outside the tabulated dE range; tables never extrapolate."""


def nu_coefficient(eta, theta):
    """nu = 4 (1+theta) eta / [(eta^2+4)(1-theta)]."""
    return 4.0 * (1.0 + theta) * eta / ((eta * eta + 4.0) * (1.0 - theta))


@dataclass(frozen=True)
class KernelParams:
    """Loss parameters of the rate kernel with the derived coefficient nu."""

    eta: float
    theta: float
    omega: float = 1.0
    drive_sq: float = 1.0
    nu: float = None

    def __post_init__(self):
        if not self.eta > 0.0:
            raise ValueError("eta must be > 0")
        if not 0.0 <= self.theta < 1.0:
            raise ValueError("theta must satisfy 0 <= theta < 1")
        if not self.omega > 0.0:
            raise ValueError("omega must be > 0")
        expected = nu_coefficient(self.eta, self.theta)
        if self.nu is None:
            object.__setattr__(self, "nu", expected)
        elif abs(self.nu - expected) > 1e-14 * expected:
            raise ValueError("nu inconsistent with (eta, theta)")

    @classmethod
    def from_model(cls, params):
        return cls(
            eta=params.eta,
            theta=params.theta,
            omega=params.omega,
            drive_sq=params.drive * params.drive,
        )


@dataclass(frozen=True)
class QuadratureConfig:
    """Tolerances and subdivision limits for rate evaluation.

    abs_tol is also the negative-rate noise floor: values in (-abs_tol, 0)
    clamp to zero, anything more negative is a hard error.
    """

    abs_tol: float = 1e-10
    rel_tol: float = 1e-6
    panels_per_period: int = 8
    max_panels: int = 4096
    envelope_cutoff: float = 1e-14


DEFAULT_QUAD = QuadratureConfig()


def envelope_f(t, eta):
    """Envelope correction f(t); the integrand decays as exp(-A [f(t)+t])."""
    scalar = np.ndim(t) == 0
    t = np.asarray(t, dtype=float)
    denom = eta * eta + 4.0
    c1 = (8.0 - 2.0 * eta * eta) / (eta * denom)
    c2 = 8.0 / denom
    damp = np.exp(-0.5 * eta * t)
    out = c1 * (1.0 - damp * np.cos(t)) - c2 * damp * np.sin(t)
    return float(out) if scalar else out


def phase_s(t, eta):
    """Phase function s(t) multiplying g^2 inside the cosine."""
    scalar = np.ndim(t) == 0
    t = np.asarray(t, dtype=float)
    denom = eta * eta + 4.0
    damp = np.exp(-0.5 * eta * t)
    out = (4.0 * eta * (damp * np.cos(t) - 1.0) + (eta * eta - 4.0) * damp * np.sin(t)) / denom
    return float(out) if scalar else out


def _coefficients(kp, g_sq):
    """(A, a, b, prefactor): envelope strength, phase scale, and 2 Omega^2/omega."""
    omega_sq = kp.omega * kp.omega
    envelope_a = 2.0 * g_sq * kp.nu / omega_sq
    phase_a = 16.0 / (omega_sq * (kp.eta * kp.eta + 4.0))
    return envelope_a, phase_a, phase_a * g_sq, 2.0 * kp.drive_sq / kp.omega


def _f_limit_and_bound(eta):
    """(f(inf), C) with |f(t) - f(inf)| <= C exp(-eta t / 2)."""
    denom = eta * eta + 4.0
    c1 = (8.0 - 2.0 * eta * eta) / (eta * denom)
    c2 = 8.0 / denom
    return c1, math.hypot(c1, c2)


def _t_max(eta, envelope_a, cutoff):
    """Truncation point T with exp(-A [f(t)+t]) <= cutoff guaranteed for t >= T.

    Uses the monotone lower bound f(t)+t >= t + f(inf) - C e^{-eta t/2}; once
    that bound crosses q* = -ln(cutoff)/A the true envelope is below cutoff
    for good (the bound is increasing in t).
    """
    q_star = -math.log(cutoff) / envelope_a
    f_inf, c = _f_limit_and_bound(eta)

    def gap(t):
        return t + f_inf - c * math.exp(-0.5 * eta * t) - q_star

    hi = q_star + abs(f_inf) + c + 1.0
    return brentq(gap, 0.0, hi, xtol=1e-9, rtol=1e-12)


# 15-point Kronrod extension of 7-point Gauss (standard QUADPACK constants).
_GK_NODES = np.array([
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898, 0.0, 0.207784955007898, 0.405845151377397,
    0.586087235467691, 0.741531185599394, 0.864864423359769,
    0.949107912342759, 0.991455371120813,
])
_GK_WEIGHTS = np.array([
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728, 0.204432940075298,
    0.190350578064785, 0.169004726639267, 0.140653259715525,
    0.104790010322250, 0.063092092629979, 0.022935322010529,
])
_G7_WEIGHTS = np.array([
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469, 0.381830050505119, 0.279705391489277,
    0.129484966168870,
])
_G7_SLICE = slice(1, None, 2)  # Gauss nodes sit at the odd Kronrod positions


def _gk_panels(func, lo, hi):
    """Kronrod value and |K15-G7| error estimate per panel (vectorized)."""
    center = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    t = center[:, None] + half[:, None] * _GK_NODES[None, :]
    vals = func(t)
    k15 = half * (vals @ _GK_WEIGHTS)
    g7 = half * (vals[:, _G7_SLICE] @ _G7_WEIGHTS)
    return k15, np.abs(k15 - g7)


def _adaptive_gk(func, edges, abs_tol, rel_tol, max_panels):
    """Globally adaptive G7/K15 over the given initial panel edges."""
    lo = edges[:-1].copy()
    hi = edges[1:].copy()
    vals, errs = _gk_panels(func, lo, hi)
    for _ in range(60):
        total = vals.sum()
        err = errs.sum()
        tol = max(abs_tol, rel_tol * abs(total))
        if err <= tol:
            return total, err
        split = errs > tol / (2.0 * len(lo))
        if not split.any():
            split[np.argmax(errs)] = True
        if len(lo) + split.sum() > max_panels:
            raise NonConvergedQuadrature(
                "needed more than %d panels (error %.3e, tolerance %.3e)"
                % (max_panels, err, tol)
            )
        mid = 0.5 * (lo[split] + hi[split])
        new_lo = np.concatenate([lo[~split], lo[split], mid])
        new_hi = np.concatenate([hi[~split], mid, hi[split]])
        keep_vals, keep_errs = vals[~split], errs[~split]
        split_vals, split_errs = _gk_panels(
            func, np.concatenate([lo[split], mid]), np.concatenate([mid, hi[split]])
        )
        lo, hi = new_lo, new_hi
        vals = np.concatenate([keep_vals, split_vals])
        errs = np.concatenate([keep_errs, split_errs])
    raise NonConvergedQuadrature("panel refinement failed to settle")


def _apply_rate_policy(value, abs_tol):
    """Clamp quadrature noise below zero; reject anything worse."""
    if value < 0.0:
        if value < -abs_tol:
            raise NegativeRate("rate %.3e below -abs_tol %.3e" % (value, abs_tol))
        return 0.0
    return value


def _initial_edges(eta, envelope_a, t_max, freq, panels_per_period):
    """Panel edges resolving both the oscillation and the envelope scales."""
    q2 = (eta * eta + 4.0) / (2.0 * eta)  # curvature of f(t)+t at t=0
    width = math.sqrt(2.0 / (envelope_a * q2))
    dt = min(
        2.0 * math.pi / (panels_per_period * max(freq, 1.0)),
        2.0 * math.pi / panels_per_period,  # intrinsic cos t scale of f, s
        width,
        t_max / 4.0,
    )
    n = max(4, int(math.ceil(t_max / dt)))
    return np.linspace(0.0, t_max, n + 1)


def rate_direct(delta_e, g_sq, kp, quad=DEFAULT_QUAD):
    """Flip rate W(delta_e, g_sq) by adaptive Gauss-Kronrod quadrature.

    The returned value carries an absolute error below quad.abs_tol (or
    quad.rel_tol relative, whichever is larger); tiny negative results are
    clamped to zero per the noise-floor policy.
    """
    if not g_sq > 0.0:
        raise ValueError("g_sq must be > 0")
    envelope_a, phase_a, phase_b, pref = _coefficients(kp, g_sq)
    t_max = _t_max(kp.eta, envelope_a, quad.envelope_cutoff)
    freq = abs(phase_a * delta_e) + phase_b * math.sqrt(1.0 + 0.25 * kp.eta * kp.eta)
    edges = _initial_edges(kp.eta, envelope_a, t_max, freq, quad.panels_per_period)

    def integrand(t):
        envelope = np.exp(-envelope_a * (envelope_f(t, kp.eta) + t))
        return pref * envelope * np.cos(phase_a * delta_e * t - phase_b * phase_s(t, kp.eta))

    value, _ = _adaptive_gk(integrand, edges, quad.abs_tol, quad.rel_tol, quad.max_panels)
    return _apply_rate_policy(value, quad.abs_tol)


# --------------------------------------------------------------------------
# Filon-Legendre batch evaluation: W(dE) = Re int_0^T G(t) e^{i a dE t} dt
# with G(t) = pref * exp(-A [f(t)+t]) * exp(-i b s(t)) fitted by piecewise
# Legendre polynomials; int_{-1}^{1} P_n(x) e^{i kappa x} dx = 2 i^n j_n(kappa).

_FIT_ORDER = 16


def _legendre_fit_matrix(order):
    """Nodes x and matrix turning samples G(x) into Legendre coefficients."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    vander = np.polynomial.legendre.legvander(nodes, order - 1)  # (nodes, order)
    scale = (2.0 * np.arange(order) + 1.0) / 2.0
    return nodes, (vander * weights[:, None]) * scale[None, :]


_FIT_NODES, _FIT_MATRIX = _legendre_fit_matrix(_FIT_ORDER)
_MOMENT_PHASE_POS = 2.0 * (1j) ** np.arange(_FIT_ORDER)
_MOMENT_PHASE_NEG = 2.0 * (-1j) ** np.arange(_FIT_ORDER)


class _FilonPlan:
    """Shared panel decomposition of [0, T] for a set of spins.

    Panels are sized to the fastest envelope among the spins (they share eta,
    so the oscillation scale of G is common); each spin stores its own
    Legendre coefficients per panel.  Moments depend only on (panel, dE), so
    a whole dE grid costs one matrix product per panel.
    """

    def __init__(self, kp, g_sqs, quad=DEFAULT_QUAD):
        self.kp = kp
        self.quad = quad
        self.g_sqs = np.atleast_1d(np.asarray(g_sqs, dtype=float))
        if np.any(self.g_sqs <= 0.0):
            raise ValueError("g_sq must be > 0")
        coef = [_coefficients(kp, g) for g in self.g_sqs]
        self.envelope_as = np.array([c[0] for c in coef])
        self.phase_a = coef[0][1]
        self.phase_bs = np.array([c[2] for c in coef])
        self.pref = coef[0][3]
        self.t_max = max(
            _t_max(kp.eta, a, quad.envelope_cutoff) for a in self.envelope_as
        )
        q2 = (kp.eta * kp.eta + 4.0) / (2.0 * kp.eta)
        width = math.sqrt(2.0 / (self.envelope_as.max() * q2))
        self.edges = self._grow_edges(first=width / 1.5)
        self._fit_all_panels()
        self._refine_fit()

    def _grow_edges(self, first, growth=1.7, cap=0.45):
        edges = [0.0]
        step = min(first, cap)
        while edges[-1] < self.t_max:
            edges.append(min(edges[-1] + step, self.t_max))
            step = min(step * growth, cap)
        return np.array(edges)

    def _g_samples(self, t):
        """G(t) for every spin: (n_spins, len(t)) complex."""
        envelope = np.exp(
            -self.envelope_as[:, None] * (envelope_f(t, self.kp.eta) + t)[None, :]
        )
        phase = np.exp(-1j * self.phase_bs[:, None] * phase_s(t, self.kp.eta)[None, :])
        return self.pref * envelope * phase

    def _panel_coeffs(self, lo, hi):
        center = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        t = center + half * _FIT_NODES
        return self._g_samples(t) @ _FIT_MATRIX  # (n_spins, order)

    def _fit_all_panels(self):
        self.coeffs = [
            self._panel_coeffs(lo, hi) for lo, hi in zip(self.edges[:-1], self.edges[1:])
        ]

    def _fit_tail_error(self, coeff, half):
        # crude bound on |int (G - fit) e^{ikt}| from the trailing coefficients
        return 2.0 * half * (np.abs(coeff[:, -1]) + np.abs(coeff[:, -2])).max()

    def _refine_fit(self):
        """Split panels until the truncated-fit error sits below abs_tol."""
        for _ in range(40):
            halves = 0.5 * np.diff(self.edges)
            errors = np.array(
                [self._fit_tail_error(c, h) for c, h in zip(self.coeffs, halves)]
            )
            threshold = 0.5 * self.quad.abs_tol / max(len(errors), 1)
            bad = np.nonzero(errors > threshold)[0]
            if bad.size == 0:
                return
            if len(self.edges) + bad.size > self.quad.max_panels:
                raise NonConvergedQuadrature("Filon fit refinement exceeded panel cap")
            new_edges = list(self.edges)
            for idx in reversed(bad):
                mid = 0.5 * (self.edges[idx] + self.edges[idx + 1])
                new_edges.insert(idx + 1, mid)
            self.edges = np.array(new_edges)
            self._fit_all_panels()
        raise NonConvergedQuadrature("Filon fit refinement failed to settle")

    def evaluate(self, delta_es):
        """Rates for every (spin, dE) pair: (n_spins, len(delta_es)) array.

        Negative values are clamped per the noise-floor policy; anything
        below -abs_tol raises NegativeRate.
        """
        delta_es = np.asarray(delta_es, dtype=float)
        k = self.phase_a * delta_es
        total = np.zeros((len(self.g_sqs), k.size), dtype=complex)
        orders = np.arange(_FIT_ORDER)
        for coeff, lo, hi in zip(self.coeffs, self.edges[:-1], self.edges[1:]):
            center = 0.5 * (lo + hi)
            half = 0.5 * (hi - lo)
            kappa = k * half
            bessel = spherical_jn(orders[:, None], np.abs(kappa)[None, :])
            phase = np.where(
                (kappa >= 0.0)[None, :],
                _MOMENT_PHASE_POS[:, None],
                _MOMENT_PHASE_NEG[:, None],
            )
            moments = phase * bessel  # (order, n_k)
            total += (half * np.exp(1j * k * center))[None, :] * (coeff @ moments)
        rates = total.real
        floor = -self.quad.abs_tol
        if rates.min() < floor:
            raise NegativeRate(
                "batch rate %.3e below -abs_tol %.3e" % (rates.min(), self.quad.abs_tol)
            )
        return np.maximum(rates, 0.0)


@dataclass(frozen=True)
class RateTable:
    """Uniform-grid linear-interpolation table of W(dE) for one spin."""

    g_sq: float
    grid: np.ndarray
    rates: np.ndarray
    bounds: tuple
    step: float
    midpoint_error: float

    def __len__(self):
        return len(self.grid)


def lookup_rate(table, delta_e):
    """Linear interpolation of the tabulated rate; never extrapolates."""
    scalar = np.ndim(delta_e) == 0
    x = np.asarray(delta_e, dtype=float)
    lo, hi = table.grid[0], table.grid[-1]
    if np.any(x < lo) or np.any(x > hi):
        raise OutOfBounds(
            "dE outside table range [%g, %g]" % (lo, hi)
        )
    pos = (x - lo) / table.step
    idx = np.minimum(pos.astype(int), len(table.grid) - 2)
    frac = pos - idx
    out = table.rates[idx] * (1.0 - frac) + table.rates[idx + 1] * frac
    return float(out) if scalar else out


def _interleave(grid, mids, vals, mid_vals):
    merged_grid = np.empty(grid.size + mids.size)
    merged_vals = np.empty((vals.shape[0], grid.size + mids.size))
    merged_grid[0::2] = grid
    merged_grid[1::2] = mids
    merged_vals[:, 0::2] = vals
    merged_vals[:, 1::2] = mid_vals
    return merged_grid, merged_vals


def _build_shared(g_sqs, kp, bounds, quad, grid_step, rel_tol, max_levels=14):
    """Shared-grid tables for several spins at once.

    Refines the uniform dE grid by doubling until the measured midpoint
    interpolation error satisfies err <= rel_tol |W| + abs_tol for every spin
    (the absolute floor covers the tail region where W sits at the quadrature
    noise level and a purely relative criterion is meaningless).
    """
    lo, hi = bounds
    if not hi > lo:
        raise ValueError("empty dE bounds")
    plan = _FilonPlan(kp, g_sqs, quad)
    n = max(8, int(math.ceil((hi - lo) / grid_step))) + 1
    grid = np.linspace(lo, hi, n)
    vals = plan.evaluate(grid)
    for _ in range(max_levels):
        mids = 0.5 * (grid[:-1] + grid[1:])
        mid_vals = plan.evaluate(mids)
        err = np.abs(mid_vals - 0.5 * (vals[:, :-1] + vals[:, 1:]))
        tol = rel_tol * np.abs(mid_vals) + quad.abs_tol
        worst = float((err - tol).max())
        grid, vals = _interleave(grid, mids, vals, mid_vals)
        if worst <= 0.0:
            max_err = float(err.max())
            return grid, vals, max_err, plan
    raise NonConvergedQuadrature("rate table failed to reach tolerance while doubling")


def _verify_by_sampling(table, kp, quad, rel_tol, n_random=6, n_worst=2, seed=0):
    """Spot-check the finished table against the independent direct route."""
    rng = np.random.default_rng(seed)
    mids = 0.5 * (table.grid[:-1] + table.grid[1:])
    probes = list(rng.choice(mids, size=min(n_random, mids.size), replace=False))
    curvature = np.abs(np.diff(table.rates, 2))
    probes += list(mids[np.argsort(curvature)[-n_worst:]])
    for x in probes:
        direct = rate_direct(float(x), table.g_sq, kp, quad)
        seen = lookup_rate(table, float(x))
        if abs(seen - direct) > rel_tol * abs(direct) + 4.0 * quad.abs_tol:
            raise NonConvergedQuadrature(
                "table failed direct-evaluation audit at dE=%.6g "
                "(table %.6e vs direct %.6e)" % (x, seen, direct)
            )


def build_rate_table(
    g_sq, kp, bounds, quad=DEFAULT_QUAD, grid_step=0.5, rel_tol=1e-4, verify=True
):
    """Interpolation table for one spin, audited against rate_direct."""
    grid, vals, max_err, _ = _build_shared([g_sq], kp, bounds, quad, grid_step, rel_tol)
    table = RateTable(
        g_sq=float(g_sq),
        grid=grid,
        rates=vals[0],
        bounds=(float(bounds[0]), float(bounds[1])),
        step=float(grid[1] - grid[0]),
        midpoint_error=max_err,
    )
    if verify:
        _verify_by_sampling(table, kp, quad, rel_tol)
    return table


def flip_bounds(c):
    """Per-spin bound on reachable |dE_i|: sum_mu |g_imu| sum_{j!=i} |g_jmu|."""
    abs_g = np.abs(c.values)
    col = abs_g.sum(axis=0)
    return (abs_g * (col[None, :] - abs_g)).sum(axis=1)


def build_tables(c, kp, quad=DEFAULT_QUAD, grid_step=0.5, rel_tol=1e-4, verify=True):
    """Rate tables for every spin of a coupling matrix on one shared grid.

    The common grid spans the worst-case reachable |dE| over all spins (padded
    a little against floating drift in incremental field updates), which lets
    the KMC engine vectorize lookups across spins.
    """
    bound = float(flip_bounds(c).max()) * 1.000001 + 1e-9
    grid, vals, max_err, _ = _build_shared(
        c.g_sq, kp, (-bound, bound), quad, grid_step, rel_tol
    )
    step = float(grid[1] - grid[0])
    tables = [
        RateTable(
            g_sq=float(c.g_sq[i]),
            grid=grid,
            rates=vals[i],
            bounds=(-bound, bound),
            step=step,
            midpoint_error=max_err,
        )
        for i in range(c.num_spins)
    ]
    if verify:
        # audit a few spins in full; every spin shares the same machinery
        rng = np.random.default_rng(1)
        picks = rng.choice(c.num_spins, size=min(3, c.num_spins), replace=False)
        for i in picks:
            _verify_by_sampling(tables[i], kp, quad, rel_tol)
    return tables
