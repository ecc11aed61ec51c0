"""
Ring-mixture ("ripple") input distributions.

A level alpha is a complex Gaussian of variance S_alpha whose mean sits on a
ring of radius rho_alpha with uniform phase; mixing q such levels with
weights p_alpha gives the radial amplitude density

    P(r) = sum_alpha p_alpha * (2 r / S_alpha)
           * exp(-(r^2 + rho_alpha^2) / S_alpha) * I0(2 r rho_alpha / S_alpha)

with second moment sum_alpha p_alpha (S_alpha + rho_alpha^2).  A single level
with rho = 0 is exactly the circular Gaussian of variance S.  The family is
closed under additive circular Gaussian noise: adding CN(0, v) maps
S_alpha -> S_alpha + v with unchanged centers, which the mutual-information
estimator exploits for an exact output density.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import i0e

__all__ = ["RippleDistribution"]


@dataclass(frozen=True)
class RippleDistribution:
    """Mixture of uniform-phase Gaussian rings.

    weights sum to one, variances are positive, centers are non-negative ring
    radii; ``power`` is the mixture second moment and is validated against
    the parameters at construction.
    """

    weights: np.ndarray
    variances: np.ndarray
    centers: np.ndarray
    power: float

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        v = np.atleast_1d(np.asarray(self.variances, dtype=float))
        c = np.atleast_1d(np.asarray(self.centers, dtype=float))
        if not (w.size == v.size == c.size):
            raise ValueError("weights, variances, centers must share a length")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("weights must be non-negative and sum to 1")
        if np.any(v <= 0):
            raise ValueError("variances must be positive")
        if np.any(c < 0):
            raise ValueError("ring centers must be non-negative")
        second = float(np.sum(w * (v + c**2)))
        if abs(second - self.power) > 1e-10 * max(self.power, 1e-300):
            raise ValueError(
                f"power identity violated: sum p (S + rho^2) = {second!r} "
                f"!= {self.power!r}"
            )
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "variances", v)
        object.__setattr__(self, "centers", c)

    @property
    def q(self):
        return self.weights.size

    @classmethod
    def gaussian(cls, power):
        """The q = 1, rho = 0 member: circular Gaussian of variance power."""
        return cls(weights=[1.0], variances=[power], centers=[0.0], power=power)

    @classmethod
    def from_raw(cls, weights, variances, centers, power):
        """Scale ring centers so the power identity holds exactly.

        If the weighted variances already exceed the target power they are
        scaled down to 99.9% of it first; the centers then absorb the exact
        remainder.  Used by the optimizer's unconstrained reparametrization.
        """
        w = np.asarray(weights, dtype=float)
        w = w / w.sum()
        v = np.asarray(variances, dtype=float).copy()
        c = np.abs(np.asarray(centers, dtype=float))
        pw = float(np.sum(w * v))
        if pw >= 0.999 * power:
            v *= 0.999 * power / pw
            pw = 0.999 * power
        denom = float(np.sum(w * c**2))
        if denom <= 0:
            # no rings to absorb the remainder: put it into the variances
            v *= power / pw
            c = np.zeros_like(c)
        else:
            c = c * np.sqrt((power - pw) / denom)
        second = float(np.sum(w * (v + c**2)))
        # remove the last-ulp mismatch through the variances
        v = v * (1.0 + (power - second) / max(pw, 1e-300))
        return cls(weights=w, variances=v, centers=c, power=power)

    def with_added_noise(self, noise_var):
        """Output distribution after adding CN(0, noise_var)."""
        return RippleDistribution(
            weights=self.weights,
            variances=self.variances + noise_var,
            centers=self.centers,
            power=self.power + noise_var,
        )

    def pdf_radial(self, r):
        """Amplitude density P(r), integrates to 1 over r >= 0."""
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        for w, v, c in zip(self.weights, self.variances, self.centers):
            # exponentially scaled Bessel keeps the far rings finite
            out = out + w * (2.0 * r / v) * np.exp(-((r - c) ** 2) / v) * i0e(
                2.0 * r * c / v
            )
        return out

    def log_pdf_point(self, y):
        """Log of the two-dimensional density at complex points y."""
        r = np.abs(np.asarray(y))
        comps = np.empty((self.q, r.size), dtype=float)
        flat = r.ravel()
        for a, (w, v, c) in enumerate(
            zip(self.weights, self.variances, self.centers)
        ):
            with np.errstate(divide="ignore"):
                comps[a] = (
                    np.log(w)
                    - np.log(np.pi * v)
                    - (flat - c) ** 2 / v
                    + np.log(i0e(2.0 * flat * c / v))
                )
        top = comps.max(axis=0)
        out = top + np.log(np.sum(np.exp(comps - top[None, :]), axis=0))
        return out.reshape(r.shape)

    def sample(self, n, rng):
        """n complex draws using the provided numpy Generator."""
        rng = np.random.default_rng(rng)
        levels = rng.choice(self.q, size=n, p=self.weights)
        theta = rng.uniform(0.0, 2.0 * np.pi, size=n)
        g = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * np.sqrt(
            self.variances[levels] / 2.0
        )
        return self.centers[levels] * np.exp(1j * theta) + g

    def to_dict(self):
        return {
            "q": int(self.q),
            "weights": self.weights.tolist(),
            "variances": self.variances.tolist(),
            "centers": self.centers.tolist(),
            "power": self.power,
        }
