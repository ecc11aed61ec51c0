"""
Capacity lower bounds for the finite-memory channel.

Rates for uncompensated signal-signal distortion use the residual variance
after mean-phase compensation,

    N_ss(S) = 2 S eps(S)^2 sum_{m!=0, n!=0} |C_mn|^2,

and after ideal compensation of the deterministic distortion the signal-noise
beating penalty enters through

    c_nl(S) = 6 S^2 N sum_{m!=0, n!=0} |K_mn|^2,

giving the single-level (Gaussian-input) bound

    I0(S) = log2(1 + S / (N (1 + c_nl(S) S^2))).

Above the splice power S1 = (6 N kappa)^{-1/4} (where c_nl(S1) S1^2 = 1) a
two-level ring construction yields the analytic bound

    I1(S) = log2(1 + 1 / (2 N sqrt(C))) + 2 sqrt(pi u) e^{-u} log2(e)

with C = c_nl(S1) frozen at the splice and u = rho^2 sqrt(C) taken from the
largest root of the power requirement

    2 sqrt(pi rho^2 sqrt(C)) rho^2 e^{-rho^2 sqrt(C)} = S - S1.

The left side is bounded by 1.4532 * S1, so the root (and with it the
analytic bound) only exists on S in [S1, 2.4532 * S1]; callers above that get
NoRootError.  The numeric bound I2 optimizes a free ring mixture by
derivative-free simplex search against a Monte-Carlo mutual-information
estimator on a per-symbol circular-Gaussian surrogate channel whose variance
is frozen at the splice power (see the mi_estimate notes).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize

from .config import SystemConfig
from .coupling import CouplingTensor
from .ripple import RippleDistribution

__all__ = [
    "BelowSpliceError", "NoRootError",
    "nli_variance", "rate_uncompensated", "gn_extrapolated_mass",
    "sn_interference_coeff", "splice_power", "gaussian_input_bound",
    "two_ring_bound", "two_ring_construction", "TwoRingBound",
    "mi_estimate", "MIEstimate", "reference_noise_var",
    "optimize_ripple", "RippleOptimum", "shannon_rate",
]


class BelowSpliceError(ValueError):
    """Requested power is below the splice power S1; use the Gaussian bound."""


class NoRootError(RuntimeError):
    """The two-ring power requirement has no root at this power."""


def shannon_rate(s, n):
    return np.log2(1.0 + np.asarray(s, dtype=float) / n)


# --------------------------------------------------------------------------
# signal-signal rates
# --------------------------------------------------------------------------


def nli_variance(tensor: CouplingTensor, power: float,
                 config: SystemConfig) -> float:
    """Residual distortion variance (W) after mean-phase compensation.

    Counts the interactions with both offsets nonzero; cubic in power.
    """
    if power < 0:
        raise ValueError("power must be >= 0")
    eps = config.nonlinear_scale(power)
    return 2.0 * power * eps**2 * tensor.interior_ss_mass()


def gn_extrapolated_mass(tensor: CouplingTensor, rel_floor=1e-3) -> float:
    """Interior |C|^2 mass extrapolated to an infinite window.

    Fits the exponential decay of the axis slice and scales the measured
    interior mass by the squared axis-completion factor (separable lattice
    model); this is the infinite-memory reference the windowed rate converges
    to as the window widens.
    """
    ax = np.abs(tensor.axis_slice())
    rel = ax / ax[0]
    idx = np.nonzero(rel[1:] > rel_floor)[0] + 1
    if idx.size < 3:
        return tensor.interior_ss_mass()
    mm = idx.astype(float)
    lg = np.log(ax[idx])
    coef = np.polyfit(mm, lg, 1)
    slope = min(coef[0], -1e-12)
    q = np.exp(2.0 * slope)
    mass = ax**2
    beyond = mass[-1] * q / (1.0 - q)
    a_meas = mass[0] + 2.0 * np.sum(mass[1:])
    a_inf = a_meas + 2.0 * beyond
    return tensor.interior_ss_mass() * (a_inf / a_meas) ** 2


def rate_uncompensated(tensor: CouplingTensor, power: float, noise: float,
                       config: SystemConfig, infinite_memory=False) -> float:
    """log2(1 + S / (N + N_ss)); bits per symbol.

    ``infinite_memory=True`` evaluates the averaged (Gaussian-noise style)
    variant with the interior mass extrapolated beyond the window.
    """
    if power <= 0 or noise <= 0:
        raise ValueError("power and noise must be positive")
    if infinite_memory:
        eps = config.nonlinear_scale(power)
        n_ss = 2.0 * power * eps**2 * gn_extrapolated_mass(tensor)
    else:
        n_ss = nli_variance(tensor, power, config)
    return float(np.log2(1.0 + power / (noise + n_ss)))


# --------------------------------------------------------------------------
# signal-noise bounds
# --------------------------------------------------------------------------


def sn_interference_coeff(tensor: CouplingTensor, power: float,
                          noise: float) -> float:
    """c_nl = 6 S^2 N sum_{m,n != 0} |K_mn|^2; quadratic in power."""
    if power < 0 or noise < 0:
        raise ValueError("power and noise must be >= 0")
    return 6.0 * power**2 * noise * tensor.interior_sn_mass()


def splice_power(tensor: CouplingTensor, noise: float) -> float:
    """S1 solving S1 = c_nl(S1)^{-1/2}, i.e. (6 N kappa)^{-1/4}."""
    kappa = tensor.interior_sn_mass()
    if kappa <= 0 or noise <= 0:
        return np.inf
    return float((6.0 * noise * kappa) ** -0.25)


def gaussian_input_bound(tensor: CouplingTensor, power: float,
                         noise: float) -> float:
    """Gaussian-input lower bound with the running-power penalty."""
    if power <= 0 or noise <= 0:
        raise ValueError("power and noise must be positive")
    cnl = sn_interference_coeff(tensor, power, noise)
    return float(np.log2(1.0 + power / (noise * (1.0 + cnl * power**2))))


# saturation of the power requirement: max over u of 2 sqrt(pi) u^{3/2} e^{-u}
_REQ_PEAK_U = 1.5
_REQ_PEAK = 2.0 * np.sqrt(np.pi) * _REQ_PEAK_U**1.5 * np.exp(-_REQ_PEAK_U)


@dataclass(frozen=True)
class TwoRingBound:
    bits: float
    plateau: float
    correction: float
    splice: float
    ring_power: float
    ring_weight: float
    residual: float


def _requirement(v, sqrt_c):
    u = v * sqrt_c
    return 2.0 * np.sqrt(np.pi * u) * v * np.exp(-u)


def saturation_power(tensor: CouplingTensor, noise: float) -> float:
    """Largest power at which the two-ring power requirement has a root."""
    s1 = splice_power(tensor, noise)
    return s1 * (1.0 + _REQ_PEAK)


def two_ring_bound(tensor: CouplingTensor, power: float,
                   noise: float) -> TwoRingBound:
    """Analytic two-level bound above the splice power.

    Raises BelowSpliceError for power < S1 and NoRootError where the power
    requirement saturates (power > ~2.4532 * S1).
    """
    s1 = splice_power(tensor, noise)
    if not np.isfinite(s1):
        raise BelowSpliceError("no signal-noise coupling; bound undefined")
    if power < s1 * (1.0 - 1e-12):
        raise BelowSpliceError(
            f"power {power!r} below the splice power {s1!r}; the Gaussian "
            "bound applies there"
        )
    cnl = 1.0 / s1**2  # frozen at the splice: c_nl(S1) S1^2 = 1
    sqrt_c = np.sqrt(cnl)
    plateau = float(np.log2(1.0 + 1.0 / (2.0 * noise * sqrt_c)))
    excess = power - s1
    if excess <= 0.0:
        return TwoRingBound(bits=plateau, plateau=plateau, correction=0.0,
                            splice=s1, ring_power=np.inf, ring_weight=0.0,
                            residual=0.0)
    v_peak = _REQ_PEAK_U / sqrt_c
    if excess > _requirement(v_peak, sqrt_c):
        raise NoRootError(
            f"power requirement saturates at {saturation_power(tensor, noise)!r} W; "
            f"no root for power {power!r}"
        )
    f = lambda v: _requirement(v, sqrt_c) - excess
    hi = 1e3 * v_peak
    if f(hi) > 0:
        raise NoRootError("no sign change in the bisection bracket")
    v = brentq(f, v_peak, hi, xtol=1e-300, rtol=8.9e-16, maxiter=400)
    residual = abs(_requirement(v, sqrt_c) - excess)
    u = v * sqrt_c
    delta = 2.0 * np.sqrt(np.pi * u) * np.exp(-u)
    correction = float(delta * np.log2(np.e))
    return TwoRingBound(bits=plateau + correction, plateau=plateau,
                        correction=correction, splice=s1, ring_power=v,
                        ring_weight=delta, residual=residual)


def two_ring_construction(tensor: CouplingTensor, power: float,
                          noise: float) -> RippleDistribution:
    """The two-level input distribution behind the analytic bound.

    Both levels share the splice variance S1; the outer ring carries the
    excess power.  Where the analytic root exists its (weight, radius) pair
    is used; beyond saturation a fixed weight 0.25 keeps the construction
    power-exact for Monte-Carlo use.
    """
    s1 = splice_power(tensor, noise)
    if power < s1 * (1.0 - 1e-12):
        raise BelowSpliceError(f"power {power!r} below the splice {s1!r}")
    excess = max(power - s1, 0.0)
    if excess == 0.0:
        return RippleDistribution.gaussian(power)
    try:
        b = two_ring_bound(tensor, power, noise)
        delta, v = b.ring_weight, b.ring_power
    except NoRootError:
        delta = 0.25
        v = excess / delta
    return RippleDistribution(
        weights=[1.0 - delta, delta],
        variances=[s1, s1],
        centers=[0.0, np.sqrt(v)],
        power=s1 + delta * v,
    )


# --------------------------------------------------------------------------
# Monte-Carlo mutual information and the numeric bound
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MIEstimate:
    bits: float
    stderr: float
    flagged: bool = False


def reference_noise_var(tensor: CouplingTensor, noise: float) -> float:
    """Surrogate-channel variance frozen at the splice power.

    N (1 + c_nl(S1) S1^2) = 2N: the per-symbol circular-Gaussian law whose
    Gaussian-input mutual information reproduces the single-level bound at
    the splice.  Ring-family bounds are mutually comparable on this channel;
    evaluating the variance at each distribution's own power instead would
    make the channel plain AWGN per power and Gaussian input trivially
    optimal, which defeats the shaping comparison.
    """
    s1 = splice_power(tensor, noise)
    if not np.isfinite(s1):
        return noise
    return float(noise * (1.0 + sn_interference_coeff(tensor, s1, noise) * s1**2))


def _mi_values(dist: RippleDistribution, noise_var, x, noise_draws):
    y = x + noise_draws
    lp_cond = -np.log(np.pi * noise_var) - np.abs(y - x) ** 2 / noise_var
    lp_marg = dist.with_added_noise(noise_var).log_pdf_point(y)
    return (lp_cond - lp_marg) / np.log(2.0)


def mi_estimate(dist: RippleDistribution, noise_var: float, n_samples: int,
                seed, stderr_tol=None, amplitude_coeff=0.0) -> MIEstimate:
    """Monte-Carlo mutual information of the ring mixture over the surrogate.

    The channel is y = x + CN(0, noise_var).  Both log densities are exact
    (the ring family is closed under Gaussian convolution), so the estimator
    is unbiased; the standard error shrinks as n^{-1/2}.

    ``amplitude_coeff`` > 0 enables the reserved amplitude-dependent variance
    extension noise_var * (1 + amplitude_coeff * |x|^4); the marginal density
    is then estimated from the mixture with the mean inflation (biased
    surrogate, demo use only).
    """
    if noise_var <= 0:
        raise ValueError("noise_var must be positive")
    rng = np.random.default_rng(seed)
    x = dist.sample(n_samples, rng)
    if amplitude_coeff > 0.0:
        local = noise_var * (1.0 + amplitude_coeff * np.abs(x) ** 4)
        noise = (rng.standard_normal(n_samples) + 1j * rng.standard_normal(n_samples))
        noise *= np.sqrt(local / 2.0)
        y = x + noise
        lp_cond = -np.log(np.pi * local) - np.abs(y - x) ** 2 / local
        mean_var = noise_var * (1.0 + amplitude_coeff
                                * float(np.mean(np.abs(x) ** 4)))
        lp_marg = dist.with_added_noise(mean_var).log_pdf_point(y)
        vals = (lp_cond - lp_marg) / np.log(2.0)
    else:
        noise = (rng.standard_normal(n_samples) + 1j * rng.standard_normal(n_samples))
        noise *= np.sqrt(noise_var / 2.0)
        vals = _mi_values(dist, noise_var, x, noise)
    bits = float(vals.mean())
    stderr = float(vals.std(ddof=1) / np.sqrt(n_samples))
    flagged = stderr_tol is not None and stderr > stderr_tol
    return MIEstimate(bits=bits, stderr=stderr, flagged=flagged)


@dataclass(frozen=True)
class RippleOptimum:
    dist: RippleDistribution
    bits: float
    stderr: float
    converged: bool
    n_evals: int


class _CRNSampler:
    """Common-random-number draws reused across objective evaluations."""

    def __init__(self, n, noise_var, seed):
        rng = np.random.default_rng(seed)
        self.u_level = rng.uniform(size=n)
        self.theta = rng.uniform(0.0, 2.0 * np.pi, size=n)
        self.g = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)
        self.noise = (
            rng.standard_normal(n) + 1j * rng.standard_normal(n)
        ) * np.sqrt(noise_var / 2.0)
        self.noise_var = noise_var

    def mi(self, dist: RippleDistribution) -> float:
        edges = np.cumsum(dist.weights)
        levels = np.searchsorted(edges, self.u_level, side="right")
        levels = np.clip(levels, 0, dist.q - 1)
        x = dist.centers[levels] * np.exp(1j * self.theta) + self.g * np.sqrt(
            dist.variances[levels]
        )
        vals = _mi_values(dist, self.noise_var, x, self.noise)
        return float(vals.mean())


def _unpack_params(p, q, power):
    a = p[:q] - np.max(p[:q])
    w = np.exp(a)
    v = np.exp(np.clip(p[q : 2 * q], -60.0, 60.0))
    c = p[2 * q : 3 * q]
    return RippleDistribution.from_raw(w, v, c, power)


def _starts(q, power, tensor, noise, seed):
    rng = np.random.default_rng(seed)
    s1 = splice_power(tensor, noise)
    starts = []
    # near-Gaussian
    starts.append(np.concatenate([
        np.zeros(q), np.full(q, np.log(power)), np.linspace(0.0, 0.3, q)
    ]))
    # analytic two-level construction padded to q levels
    if np.isfinite(s1) and power > s1:
        try:
            base = two_ring_construction(tensor, power, noise)
            w = np.concatenate([base.weights, np.full(q - 2, 1e-3)])[:q]
            v = np.concatenate([base.variances, np.full(q - 2, power)])[:q]
            c = np.concatenate([base.centers, np.zeros(q - 2)])[:q]
            starts.append(np.concatenate([
                np.log(np.maximum(w, 1e-9)), np.log(v), c
            ]))
        except BelowSpliceError:
            pass
    # evenly spread rings at Rayleigh-like radii
    radii = np.sqrt(power) * np.sqrt(np.linspace(0.2, 2.2, q))
    starts.append(np.concatenate([
        np.zeros(q), np.full(q, np.log(power / 2.0)), radii
    ]))
    while len(starts) < 5:
        starts.append(np.concatenate([
            rng.normal(0, 0.5, q),
            np.log(power) + rng.normal(0, 0.7, q),
            np.abs(rng.normal(0, np.sqrt(power), q)),
        ]))
    return starts


def optimize_ripple(q: int, power: float, noise: float,
                    tensor: CouplingTensor, budget: int = 2000, seed: int = 0,
                    n_mc: int = 16384, n_final: int = 1 << 17,
                    noise_var=None) -> RippleOptimum:
    """Numerically optimized ring-mixture bound at one power.

    Multi-start Nelder-Mead over an unconstrained reparametrization (softmax
    weights, exponential variances, centers rescaled for the exact power
    identity), sharing ``budget`` objective evaluations across at least five
    starts.  Returns the best feasible distribution with a fresh
    Monte-Carlo estimate and error bar; ``converged=False`` flags budget
    exhaustion before simplex convergence.
    """
    if q < 2:
        raise ValueError("q must be >= 2")
    if noise_var is None:
        noise_var = reference_noise_var(tensor, noise)
    sampler = _CRNSampler(n_mc, noise_var, np.random.SeedSequence([seed, 77]))
    evals = 0

    def objective(p):
        nonlocal evals
        evals += 1
        try:
            dist = _unpack_params(p, q, power)
        except ValueError:
            return 1e3
        return -sampler.mi(dist)

    starts = _starts(q, power, tensor, noise, np.random.SeedSequence([seed, 11]))
    per_start = max(60, budget // len(starts))
    best_p, best_f, converged = None, np.inf, True
    for p0 in starts:
        left = budget - evals
        if left < 30:
            converged = False
            break
        res = minimize(objective, p0, method="Nelder-Mead",
                       options=dict(maxfev=min(per_start, left),
                                    xatol=1e-3, fatol=2e-4))
        if not res.success:
            converged = False
        if res.fun < best_f:
            best_f, best_p = res.fun, res.x
    dist = _unpack_params(best_p, q, power)
    final = mi_estimate(dist, noise_var, n_final,
                        np.random.SeedSequence([seed, 991]))
    return RippleOptimum(dist=dist, bits=final.bits, stderr=final.stderr,
                         converged=converged, n_evals=evals)
