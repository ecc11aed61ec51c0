import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import kstest

import fibercap as fc
from fibercap.ripple import RippleDistribution


def test_single_level_is_rayleigh_amplitude():
    s = 0.8
    dist = RippleDistribution.gaussian(s)
    r = np.linspace(0, 4 * np.sqrt(s), 200)
    rayleigh = (2 * r / s) * np.exp(-(r**2) / s)
    assert np.allclose(dist.pdf_radial(r), rayleigh, rtol=1e-12, atol=1e-300)


def test_three_level_pdf_normalized_by_quadrature():
    dist = RippleDistribution(
        weights=[0.6, 0.3, 0.1],
        variances=[0.4, 0.2, 0.1],
        centers=[0.0, 1.2, 2.5],
        power=0.6 * 0.4 + 0.3 * (0.2 + 1.2**2) + 0.1 * (0.1 + 2.5**2),
    )
    total, err = quad(dist.pdf_radial, 0, np.inf, limit=200)
    assert abs(total - 1.0) < 1e-6


def test_point_density_consistent_with_radial():
    dist = RippleDistribution(
        weights=[0.5, 0.5], variances=[0.3, 0.2], centers=[0.0, 1.0],
        power=0.5 * 0.3 + 0.5 * (0.2 + 1.0),
    )
    r = np.array([0.2, 0.7, 1.3, 2.0])
    # radial density = 2 pi r * two-dimensional density
    p2d = np.exp(dist.log_pdf_point(r + 0j))
    assert np.allclose(dist.pdf_radial(r), 2 * np.pi * r * p2d, rtol=1e-10)


def test_sample_second_moment_matches_power():
    dist = RippleDistribution(
        weights=[0.7, 0.3], variances=[0.5, 0.25], centers=[0.0, 2.0],
        power=0.7 * 0.5 + 0.3 * (0.25 + 4.0),
    )
    rng = np.random.default_rng(3)
    x = dist.sample(200_000, rng)
    p2 = np.abs(x) ** 2
    se = p2.std(ddof=1) / np.sqrt(p2.size)
    assert abs(p2.mean() - dist.power) < 3 * se


def test_sampled_amplitudes_follow_radial_cdf():
    dist = RippleDistribution(
        weights=[0.5, 0.5], variances=[0.2, 0.2], centers=[0.0, 1.5],
        power=0.5 * 0.2 + 0.5 * (0.2 + 2.25),
    )
    rng = np.random.default_rng(5)
    r = np.abs(dist.sample(20_000, rng))

    def cdf(v):
        return np.array([quad(dist.pdf_radial, 0, t, limit=200)[0]
                         for t in np.atleast_1d(v)])

    stat = kstest(np.sort(r)[::40], cdf)
    assert stat.pvalue > 1e-3


def test_power_identity_enforced():
    with pytest.raises(ValueError, match="power identity"):
        RippleDistribution(weights=[1.0], variances=[1.0], centers=[0.0],
                           power=2.0)


def test_weights_must_normalize():
    with pytest.raises(ValueError):
        RippleDistribution(weights=[0.5, 0.2], variances=[1, 1],
                           centers=[0, 0], power=1.0)


def test_from_raw_exact_power():
    dist = RippleDistribution.from_raw(
        weights=[2.0, 1.0, 1.0], variances=[0.2, 0.4, 0.1],
        centers=[0.0, 1.0, 3.0], power=1.7,
    )
    second = np.sum(dist.weights * (dist.variances + dist.centers**2))
    assert second == pytest.approx(1.7, rel=1e-12)


def test_from_raw_shrinks_oversized_variances():
    dist = RippleDistribution.from_raw(
        weights=[1.0], variances=[5.0], centers=[1.0], power=1.0,
    )
    assert dist.power == pytest.approx(1.0, rel=1e-12)
    assert dist.variances[0] < 1.0


def test_added_noise_closure_against_samples():
    dist = RippleDistribution(
        weights=[0.6, 0.4], variances=[0.3, 0.15], centers=[0.0, 1.8],
        power=0.6 * 0.3 + 0.4 * (0.15 + 1.8**2),
    )
    nv = 0.25
    out = dist.with_added_noise(nv)
    rng = np.random.default_rng(7)
    x = dist.sample(20_000, rng)
    y = x + np.sqrt(nv / 2) * (rng.standard_normal(x.size)
                               + 1j * rng.standard_normal(x.size))

    def cdf(v):
        return np.array([quad(out.pdf_radial, 0, t, limit=200)[0]
                         for t in np.atleast_1d(v)])

    stat = kstest(np.sort(np.abs(y))[::40], cdf)
    assert stat.pvalue > 1e-3


def test_bessel_overflow_guarded():
    # far ring with tiny variance: naive I0 would overflow
    dist = RippleDistribution(
        weights=[1.0], variances=[1e-4], centers=[50.0],
        power=1e-4 + 2500.0,
    )
    vals = dist.pdf_radial(np.array([49.9, 50.0, 50.1]))
    assert np.all(np.isfinite(vals)) and vals[1] > 0
    lp = dist.log_pdf_point(np.array([50.0 + 0j]))
    assert np.isfinite(lp[0])
