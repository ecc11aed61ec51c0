import numpy as np
import pytest
from scipy.stats import ks_2samp

import fibercap as fc


def test_qam64_exact_grid_power():
    const = fc.Constellation(kind="qam64", power=2.5)
    pts = const.points()
    assert pts.size == 64
    assert np.mean(np.abs(pts) ** 2) == pytest.approx(2.5, rel=1e-12)


def test_qam64_empirical_power_within_3_sigma():
    const = fc.Constellation(kind="qam64", power=1.0)
    blk = fc.sample_block(const, 4096, seed=42)
    p2 = np.abs(blk.symbols) ** 2
    sigma = p2.std(ddof=1) / np.sqrt(p2.size)
    assert abs(p2.mean() - 1.0) < 3 * sigma


def test_same_seed_bit_identical():
    const = fc.Constellation(kind="gaussian_iid", power=1e-3)
    a = fc.sample_block(const, 1000, seed=7)
    b = fc.sample_block(const, 1000, seed=7)
    assert np.array_equal(a.symbols, b.symbols)
    c = fc.sample_block(const, 1000, seed=8)
    assert not np.array_equal(a.symbols, c.symbols)


def test_unknown_kind_rejected():
    with pytest.raises(fc.ConfigError, match="kind"):
        fc.Constellation(kind="psk8", power=1.0)


def test_bad_length_rejected():
    const = fc.Constellation(kind="qam64", power=1.0)
    with pytest.raises(fc.ConfigError):
        fc.sample_block(const, 0, seed=1)


def test_single_ring_at_origin_matches_gaussian():
    # ripple with one zero-centered level reduces to the circular Gaussian
    s = 0.7
    ripple = fc.RippleDistribution.gaussian(s)
    const_r = fc.Constellation(kind="ripple", power=s, ripple=ripple)
    const_g = fc.Constellation(kind="gaussian_iid", power=s)
    xr = fc.sample_block(const_r, 20000, seed=5).symbols
    xg = fc.sample_block(const_g, 20000, seed=6).symbols
    stat = ks_2samp(np.abs(xr) ** 2, np.abs(xg) ** 2)
    assert stat.pvalue > 1e-3


def test_ripple_power_mismatch_rejected():
    ripple = fc.RippleDistribution.gaussian(1.0)
    with pytest.raises(fc.ConfigError):
        fc.Constellation(kind="ripple", power=2.0, ripple=ripple)


def test_normalized_unit_power():
    const = fc.Constellation(kind="gaussian_iid", power=4.0)
    blk = fc.sample_block(const, 5000, seed=3)
    assert np.mean(np.abs(blk.normalized()) ** 2) == pytest.approx(
        blk.empirical_power / 4.0, rel=1e-12
    )
