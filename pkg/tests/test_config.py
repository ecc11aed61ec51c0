import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import fibercap as fc
from fibercap.config import DB_PER_NEPER


def test_paper_link_accepted():
    cfg = fc.make_config(attenuation_db_km=0.2, beta2_ps2_km=-20.0,
                         gamma_w_km=1.3, span_km=100.0, baud_ghz=28.0,
                         pulse_fwhm_ps=10.0)
    assert cfg.alpha == pytest.approx(0.2 / DB_PER_NEPER / 1e3)
    assert cfg.beta2 == pytest.approx(-20e-27)
    assert cfg.gamma == pytest.approx(1.3e-3)
    assert cfg.symbol_period == pytest.approx(1 / 28e9)


def test_t0_and_dispersion_length_hand_values():
    # T0 = fwhm / (2 sqrt(ln 2)) = 6.0056 ps, L_d = T0^2/|beta2| ~ 1.803 km
    cfg = fc.make_config()
    assert cfg.pulse.t0 == pytest.approx(10e-12 / (2 * np.sqrt(np.log(2))), rel=1e-12)
    assert cfg.pulse.t0 == pytest.approx(6.0056e-12, rel=1e-4)
    assert cfg.dispersion_length == pytest.approx(1.804e3, rel=1e-3)


def test_dispersion_length_recomputes_from_pulse():
    cfg = fc.make_config(beta2_ps2_km=17.0, pulse_fwhm_ps=7.0)
    ld = cfg.pulse.t0**2 / abs(cfg.beta2)
    assert abs(ld - cfg.dispersion_length) <= 1e-12 * cfg.dispersion_length


def test_zero_gamma_linear_limit():
    cfg = fc.make_config(gamma_w_km=0.0)
    assert cfg.nonlinear_length(1e-3) == np.inf
    assert cfg.nonlinear_scale(1e-3) == 0.0
    assert cfg.nonlinear_scale(1.0) == 0.0


@pytest.mark.parametrize("kwargs,field", [
    (dict(span_km=-1.0), "span_km"),
    (dict(span_km=0.0), "span_km"),
    (dict(baud_ghz=np.nan), "baud_ghz"),
    (dict(pulse_fwhm_ps=-3.0), "pulse_fwhm_ps"),
    (dict(attenuation_db_km=-0.1), "attenuation_db_km"),
    (dict(noise_density_w_hz=-1e-18), "noise_density_w_hz"),
    (dict(beta2_ps2_km=0.0), "beta2"),
    (dict(n_spans=0), "n_spans"),
])
def test_validation_errors_name_the_field(kwargs, field):
    with pytest.raises(fc.ConfigError, match=field):
        fc.make_config(**kwargs)


def test_scale_parameters_exact_scaling():
    cfg = fc.make_config(noise_density_w_hz=1e-13)
    for p in (1e-4, 1e-3, 2.7e-3):
        assert cfg.nonlinear_scale(2 * p) == 2 * cfg.nonlinear_scale(p)
        assert cfg.noise_scale(4 * p) == cfg.noise_scale(p) / 2


@settings(max_examples=60, deadline=None)
@given(
    att=st.floats(0.05, 1.0),
    b2=st.floats(1.0, 60.0),
    g=st.floats(0.3, 3.0),
    span=st.floats(20.0, 150.0),
    baud=st.floats(10.0, 80.0),
    fwhm=st.floats(2.0, 30.0),
)
def test_unit_round_trip(att, b2, g, span, baud, fwhm):
    cfg = fc.make_config(att, -b2, g, span, 1, baud, fwhm)
    assert cfg.alpha * DB_PER_NEPER * 1e3 == pytest.approx(att, rel=1e-12)
    assert cfg.beta2 * 1e27 == pytest.approx(-b2, rel=1e-12)
    assert cfg.gamma * 1e3 == pytest.approx(g, rel=1e-12)
    assert cfg.span_length / 1e3 == pytest.approx(span, rel=1e-12)
    assert 1e-9 / cfg.symbol_period == pytest.approx(baud, rel=1e-12)
    assert cfg.pulse.fwhm * 1e12 == pytest.approx(fwhm, rel=1e-12)


def test_dbm_round_trip():
    p = np.array([-20.0, -3.2, 0.0, 6.0])
    assert np.allclose(fc.watt_to_dbm(fc.dbm_to_watt(p)), p, rtol=1e-13)


# ---------------------------------------------------------------------------
# pulse shape
# ---------------------------------------------------------------------------


def test_pulse_unit_energy_by_quadrature():
    pulse = fc.PulseShape(fwhm=10e-12)
    t = np.linspace(-40, 40, 40001) * pulse.t0
    energy = np.trapezoid(np.abs(pulse.time_domain(t)) ** 2, t)
    assert energy == pytest.approx(1.0, rel=1e-10)


def test_spectrum_parseval_by_quadrature():
    pulse = fc.PulseShape(fwhm=10e-12)
    w = np.linspace(-30, 30, 60001) / pulse.t0
    lhs = np.trapezoid(np.abs(fc.pulse_spectrum(pulse, w)) ** 2, w) / (2 * np.pi)
    assert lhs == pytest.approx(1.0, rel=1e-8)


def test_spectrum_peak_and_symmetry():
    pulse = fc.PulseShape(fwhm=7e-12)
    peak = fc.pulse_spectrum(pulse, 0.0)
    assert peak.imag == 0.0 and peak.real > 0.0
    w = np.linspace(0.1, 5, 7) / pulse.t0
    assert np.allclose(fc.pulse_spectrum(pulse, w), fc.pulse_spectrum(pulse, -w))
    assert np.all(np.abs(fc.pulse_spectrum(pulse, w)) < peak.real)


def test_spectrum_rejects_nonfinite():
    pulse = fc.PulseShape(fwhm=7e-12)
    with pytest.raises(fc.ConfigError):
        fc.pulse_spectrum(pulse, np.inf)


def test_dispersed_pulse_keeps_unit_energy():
    pulse = fc.PulseShape(fwhm=10e-12)
    bz = -20e-27 * 50e3  # xi ~ 28, width ~ 28 t0
    t = np.linspace(-400, 400, 200001) * pulse.t0
    energy = np.trapezoid(np.abs(pulse.dispersed(t, bz)) ** 2, t)
    assert energy == pytest.approx(1.0, rel=1e-9)


def test_unknown_pulse_kind():
    with pytest.raises(fc.ConfigError, match="kind"):
        fc.PulseShape(fwhm=1e-12, kind="sech")
