import numpy as np
import pytest

import fibercap as fc

# noise density chosen so the splice power of the 10-span link sits at a
# moderate plateau SNR; capacity criteria are scale-free in splice units
NOISE_DENSITY = 1.7e-13


@pytest.fixture(scope="session")
def cfg_100km():
    return fc.make_config(n_spans=1)


@pytest.fixture(scope="session")
def cfg_1000km():
    return fc.make_config(n_spans=10, noise_density_w_hz=NOISE_DENSITY)


@pytest.fixture(scope="session")
def cfg_linear():
    # gamma = 0, noisy: exercises the AWGN limits
    return fc.make_config(n_spans=10, gamma_w_km=0.0,
                          noise_density_w_hz=NOISE_DENSITY)


@pytest.fixture(scope="session")
def tensor_1000_m8(cfg_1000km):
    return fc.integrate_tensor(cfg_1000km, 8)


@pytest.fixture(scope="session")
def tensor_1000_m24(cfg_1000km):
    return fc.integrate_tensor(cfg_1000km, 24)


@pytest.fixture(scope="session")
def tensor_100_m8(cfg_100km):
    return fc.integrate_tensor(cfg_100km, 8)
