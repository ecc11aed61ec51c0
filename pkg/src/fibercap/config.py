"""
Physical link configuration, pulse shape and unit handling.

Everything downstream works in SI units; engineering units (dB/km, ps^2/km,
1/W/km, km, GBaud, ps) are converted once at the boundary by
:func:`make_config`.  The Fourier convention used throughout the package is

    F(w) = Int f(t) exp(+i w t) dt,      f(t) = (1/2pi) Int F(w) exp(-i w t) dw

and pulses are normalized to unit energy, Int |f(t)|^2 dt = 1.  Launch power
is set by the symbol variance, not the pulse.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LN2 = float(np.log(2.0))
DB_PER_NEPER = 10.0 / float(np.log(10.0))


class ConfigError(ValueError):
    """A physical parameter failed validation; the message names the field."""


def _check_positive(name, value):
    if not np.isfinite(value) or value <= 0:
        raise ConfigError(f"{name} must be finite and positive, got {value!r}")


def _check_nonneg(name, value):
    if not np.isfinite(value) or value < 0:
        raise ConfigError(f"{name} must be finite and non-negative, got {value!r}")


@dataclass(frozen=True)
class PulseShape:
    """Unit-energy Gaussian carrier pulse.

    Parameters
    ----------
    fwhm : float
        Full width at half maximum of the pulse intensity |f(t)|^2, in seconds.

    Notes
    -----
    t0 = fwhm / (2 sqrt(ln 2)) so that |f(t)|^2 = exp(-t^2/t0^2) / sqrt(pi t0^2).
    """

    fwhm: float
    kind: str = "gaussian"
    t0: float = field(init=False)
    amplitude: float = field(init=False)

    def __post_init__(self):
        if self.kind != "gaussian":
            raise ConfigError(f"pulse kind {self.kind!r} not supported")
        _check_positive("pulse.fwhm", self.fwhm)
        object.__setattr__(self, "t0", self.fwhm / (2.0 * np.sqrt(LN2)))
        object.__setattr__(self, "amplitude", (np.pi * self.t0**2) ** (-0.25))

    def time_domain(self, t):
        """f(t), unit energy."""
        t = np.asarray(t, dtype=float)
        return self.amplitude * np.exp(-(t**2) / (2.0 * self.t0**2))

    def spectrum(self, omega):
        """F(w) = Int f(t) e^{iwt} dt, analytic for the Gaussian pulse."""
        omega = np.asarray(omega, dtype=float)
        return (4.0 * np.pi * self.t0**2) ** 0.25 * np.exp(-(omega**2) * self.t0**2 / 2.0)

    def dispersed(self, t, beta2_z):
        """Pulse after accumulated dispersion beta2*z, still unit energy.

        The spectrum picks up exp(+i beta2 w^2 z / 2); for a Gaussian this is
        again a Gaussian with complex width tau^2 = t0^2 - i beta2 z.
        """
        tau2 = self.t0**2 - 1j * beta2_z
        t = np.asarray(t)
        return self.amplitude * np.sqrt(self.t0**2 / tau2) * np.exp(-(t**2) / (2.0 * tau2))

    def autocorrelation(self, lag):
        """Int f(t) f(t - lag) dt; 1 at lag 0 by unit energy."""
        return np.exp(-(np.asarray(lag, dtype=float) ** 2) / (4.0 * self.t0**2))


def pulse_spectrum(pulse: PulseShape, omega):
    """Analytic pulse spectrum under the package Fourier convention."""
    if not np.all(np.isfinite(np.asarray(omega, dtype=float))):
        raise ConfigError("omega must be finite")
    return pulse.spectrum(omega)


@dataclass(frozen=True)
class SystemConfig:
    """Physical multi-span link in SI units plus derived scales.

    Attributes
    ----------
    alpha : float
        Attenuation in 1/m (power nepers per metre).
    beta2 : float
        Group-velocity dispersion in s^2/m, signed.
    gamma : float
        Kerr coefficient in 1/(W m).
    span_length : float
        Span length in m; amplifiers with gain exp(alpha*span_length) sit at
        the end of each span.
    n_spans : int
    symbol_period : float
        T in seconds.
    pulse : PulseShape
    noise_density : float
        Total accumulated amplifier-noise spectral density over the link, W/Hz.
        Each amplifier contributes noise_density / n_spans.
    bandwidth : float
        Signal (noise-accounting) bandwidth in Hz; defaults to 1/T upstream.
    """

    alpha: float
    beta2: float
    gamma: float
    span_length: float
    n_spans: int
    symbol_period: float
    pulse: PulseShape
    noise_density: float
    bandwidth: float
    dispersion_length: float = field(init=False)

    def __post_init__(self):
        _check_nonneg("alpha", self.alpha)
        _check_nonneg("gamma", self.gamma)
        _check_positive("span_length", self.span_length)
        if self.n_spans < 1:
            raise ConfigError(f"n_spans must be >= 1, got {self.n_spans}")
        _check_positive("symbol_period", self.symbol_period)
        _check_positive("bandwidth", self.bandwidth)
        _check_nonneg("noise_density", self.noise_density)
        if not np.isfinite(self.beta2) or self.beta2 == 0.0:
            raise ConfigError(f"beta2 must be finite and nonzero, got {self.beta2!r}")
        object.__setattr__(
            self, "dispersion_length", self.pulse.t0**2 / abs(self.beta2)
        )

    @property
    def length(self):
        """Total link length in m."""
        return self.span_length * self.n_spans

    @property
    def noise_power(self):
        """N = D*B, end-to-end noise power in W."""
        return self.noise_density * self.bandwidth

    def nonlinear_length(self, power):
        """L_NL = 1/(gamma P) in m; inf for a linear channel."""
        _check_nonneg("power", power)
        if self.gamma == 0.0 or power == 0.0:
            return np.inf
        return 1.0 / (self.gamma * power)

    def nonlinear_scale(self, power):
        """Small parameter L_d/L_NL = gamma * power * L_d."""
        _check_nonneg("power", power)
        return self.gamma * self.dispersion_length * power

    def noise_scale(self, power):
        """Small parameter sqrt(N / power) (inverse root SNR of the linear link)."""
        _check_positive("power", power)
        return np.sqrt(self.noise_power / power)

    def xi_total(self):
        """Link length in units of the dispersion length."""
        return self.length / self.dispersion_length

    def xi_span(self):
        """Span length in units of the dispersion length."""
        return self.span_length / self.dispersion_length

    def fingerprint(self):
        """Short stable hash of the physical parameters."""
        import hashlib

        raw = "|".join(
            repr(v)
            for v in (
                self.alpha,
                self.beta2,
                self.gamma,
                self.span_length,
                self.n_spans,
                self.symbol_period,
                self.pulse.fwhm,
                self.noise_density,
                self.bandwidth,
            )
        )
        return hashlib.sha256(raw.encode()).hexdigest()[:16]


def make_config(
    attenuation_db_km=0.2,
    beta2_ps2_km=-20.0,
    gamma_w_km=1.3,
    span_km=100.0,
    n_spans=1,
    baud_ghz=28.0,
    pulse_fwhm_ps=10.0,
    noise_density_w_hz=0.0,
    bandwidth_ghz=None,
):
    """Build a :class:`SystemConfig` from engineering units.

    Defaults are a standard single-channel SMF link: 0.2 dB/km, -20 ps^2/km,
    1.3 1/W/km, 100 km spans, 28 GBaud, 10 ps FWHM Gaussian pulses.

    Raises
    ------
    ConfigError
        On non-finite or non-positive parameters, naming the field.
    """
    for name, v in (
        ("attenuation_db_km", attenuation_db_km),
        ("noise_density_w_hz", noise_density_w_hz),
    ):
        _check_nonneg(name, v)
    for name, v in (
        ("span_km", span_km),
        ("baud_ghz", baud_ghz),
        ("pulse_fwhm_ps", pulse_fwhm_ps),
    ):
        _check_positive(name, v)
    if bandwidth_ghz is None:
        bandwidth_ghz = baud_ghz
    _check_positive("bandwidth_ghz", bandwidth_ghz)

    pulse = PulseShape(fwhm=pulse_fwhm_ps * 1e-12)
    return SystemConfig(
        alpha=attenuation_db_km / DB_PER_NEPER / 1e3,
        beta2=beta2_ps2_km * 1e-27,
        gamma=gamma_w_km * 1e-3,
        span_length=span_km * 1e3,
        n_spans=int(n_spans),
        symbol_period=1.0 / (baud_ghz * 1e9),
        pulse=pulse,
        noise_density=noise_density_w_hz,
        bandwidth=bandwidth_ghz * 1e9,
    )


def dbm_to_watt(p_dbm):
    return 1e-3 * 10.0 ** (np.asarray(p_dbm, dtype=float) / 10.0)


def watt_to_dbm(p_watt):
    return 10.0 * np.log10(np.asarray(p_watt, dtype=float) / 1e-3)
