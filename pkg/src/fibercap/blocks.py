"""Symbol blocks and constellations.

Symbols are complex amplitudes on a sqrt(W) scale: the mean of |X_k|^2 is the
launch power in watts.  All sampling is reproducible through explicit seeds;
no global RNG state is touched.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ConfigError


@dataclass(frozen=True)
class SymbolBlock:
    """A finite complex symbol sequence with its nominal average power."""

    symbols: np.ndarray
    power: float

    def __post_init__(self):
        object.__setattr__(
            self, "symbols", np.ascontiguousarray(self.symbols, dtype=complex)
        )
        if self.symbols.ndim != 1:
            raise ConfigError("symbols must be a 1-d sequence")

    def __len__(self):
        return self.symbols.size

    @property
    def empirical_power(self):
        return float(np.mean(np.abs(self.symbols) ** 2))

    def normalized(self):
        """Unit-power copy of the symbols (divide by sqrt(power))."""
        return self.symbols / np.sqrt(self.power)


# 64-QAM levels, unit mean power: levels +-1,+-3,+-5,+-7 on each rail,
# E|X|^2 = 2 * (1+9+25+49)/4 = 42.
_QAM64_LEVELS = np.array([-7.0, -5.0, -3.0, -1.0, 1.0, 3.0, 5.0, 7.0]) / np.sqrt(42.0)


@dataclass(frozen=True)
class Constellation:
    """Symbol source: 64-QAM grid, i.i.d. complex Gaussian, or a ring mixture.

    For kind="ripple", ``ripple`` must be a RippleDistribution whose total
    power equals ``power``.
    """

    kind: str
    power: float
    ripple: object = None

    def __post_init__(self):
        if self.kind not in ("qam64", "gaussian_iid", "ripple"):
            raise ConfigError(f"unknown constellation kind {self.kind!r}")
        if not np.isfinite(self.power) or self.power <= 0:
            raise ConfigError(f"power must be positive, got {self.power!r}")
        if self.kind == "ripple":
            if self.ripple is None:
                raise ConfigError("ripple constellation needs a RippleDistribution")
            if abs(self.ripple.power - self.power) > 1e-9 * self.power:
                raise ConfigError("ripple distribution power does not match")

    def points(self):
        """Discrete constellation points (qam64 only)."""
        if self.kind != "qam64":
            raise ConfigError(f"{self.kind} has no discrete point set")
        re, im = np.meshgrid(_QAM64_LEVELS, _QAM64_LEVELS)
        return np.sqrt(self.power) * (re + 1j * im).ravel()


def sample_block(constellation: Constellation, d: int, seed: int) -> SymbolBlock:
    """Draw d i.i.d. symbols; identical output for identical seeds."""
    if d < 1:
        raise ConfigError(f"block length must be >= 1, got {d}")
    rng = np.random.default_rng(seed)
    s = constellation.power
    if constellation.kind == "qam64":
        pts = constellation.points()
        x = pts[rng.integers(0, pts.size, size=d)]
    elif constellation.kind == "gaussian_iid":
        x = np.sqrt(s / 2.0) * (rng.standard_normal(d) + 1j * rng.standard_normal(d))
    else:
        x = constellation.ripple.sample(d, rng)
    return SymbolBlock(symbols=x, power=s)
