"""
Multivariate complex normal law of the received block given the transmitted.

For y = mean + M zeta + L conj(zeta) with zeta circular unit-variance the
second-order statistics are the covariance and relation (pseudo-covariance)
matrices

    cov = M M^H + L L^H          relation = M L^T + L M^T

and the density is the augmented-form complex normal

    p(y) = pi^-d * det(Sigma)^-1/2 * exp(-1/2 w^H Sigma^-1 w),
    Sigma = [[cov, relation], [relation^H, conj(cov)]],   w = [y - mean; conj(y - mean)]

which reduces exactly to pi^-d |det cov|^-1 exp(-r^H cov^-1 r) when the
relation matrix vanishes (circular case).  det(Sigma) = det(cov) * det(P)
with the Schur complement P = conj(cov) - relation^H cov^-1 relation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .channel import NoiseMixing

__all__ = ["ComplexNormalLaw", "DegenerateLawError", "law_from_mixing",
           "log_pdf", "sample_law"]


class DegenerateLawError(np.linalg.LinAlgError):
    """Augmented covariance not positive definite within the jitter cap."""


@dataclass(frozen=True)
class ComplexNormalLaw:
    mean: np.ndarray
    covariance: np.ndarray
    relation: np.ndarray
    schur: np.ndarray = field(init=False)
    _chol: np.ndarray = field(init=False, repr=False)
    _logdet: float = field(init=False, repr=False)

    def __post_init__(self):
        mean = np.ascontiguousarray(self.mean, dtype=complex)
        cov = np.ascontiguousarray(self.covariance, dtype=complex)
        rel = np.ascontiguousarray(self.relation, dtype=complex)
        d = mean.size
        if cov.shape != (d, d) or rel.shape != (d, d):
            raise ValueError("covariance/relation must be d x d")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "relation", rel)
        aug = np.block([[cov, rel], [rel.conj().T, cov.conj()]])
        chol = self._factor(aug)
        object.__setattr__(self, "_chol", chol)
        object.__setattr__(
            self, "_logdet", float(2.0 * np.sum(np.log(np.abs(np.diag(chol)))))
        )
        cov_inv_rel = scipy.linalg.solve(cov, rel, assume_a="pos")
        object.__setattr__(
            self, "schur", cov.conj() - rel.conj().T @ cov_inv_rel
        )

    @staticmethod
    def _factor(aug):
        jitter_cap = 1e-10 * float(np.abs(np.trace(aug)))
        jitter = 0.0
        for _ in range(4):
            try:
                return scipy.linalg.cholesky(
                    aug + jitter * np.eye(aug.shape[0]), lower=True
                )
            except np.linalg.LinAlgError:
                jitter = max(jitter * 10.0, jitter_cap / 1e3)
                if jitter > jitter_cap:
                    break
        raise DegenerateLawError(
            "augmented covariance is not positive definite within the "
            f"jitter cap {jitter_cap:.2e}; degenerate or pathological mixing"
        )

    @property
    def d(self):
        return self.mean.size


def law_from_mixing(mixing: NoiseMixing, mean) -> ComplexNormalLaw:
    """Conditional law of the received block for a given mixing.

    ``mean`` is the (normalized) distorted block the noise is centered on.
    """
    M, L = mixing.direct, mixing.conjugate
    cov = M @ M.conj().T + L @ L.conj().T
    rel = M @ L.T + L @ M.T
    return ComplexNormalLaw(mean=np.asarray(mean, dtype=complex),
                            covariance=cov, relation=rel)


def log_pdf(law: ComplexNormalLaw, y) -> float:
    """Exact log density at y (natural log)."""
    y = np.asarray(y, dtype=complex)
    if y.shape != law.mean.shape:
        raise ValueError("dimension mismatch")
    r = y - law.mean
    w = np.concatenate([r, r.conj()])
    u = scipy.linalg.solve_triangular(law._chol, w, lower=True)
    quad = float(np.real(np.vdot(u, u)))
    return -law.d * np.log(np.pi) - 0.5 * law._logdet - 0.5 * quad


def sample_law(law: ComplexNormalLaw, seed, size=1) -> np.ndarray:
    """Draw from the law; shape (size, d).

    Sampling goes through the real composite representation: for
    z = u + i v the real covariance blocks follow from the covariance C and
    relation R as E[uu^T] = Re(C+R)/2, E[vv^T] = Re(C-R)/2,
    E[uv^T] = Im(R-C)/2.
    """
    rng = np.random.default_rng(seed)
    C, R = law.covariance, law.relation
    K = 0.5 * np.block([
        [np.real(C + R), np.imag(R - C)],
        [np.imag(R - C).T, np.real(C - R)],
    ])
    # symmetrize against roundoff before factoring
    K = 0.5 * (K + K.T)
    d = law.d
    jitter = 1e-12 * max(float(np.trace(K)), 1e-300)
    try:
        chol = scipy.linalg.cholesky(K + jitter * np.eye(2 * d), lower=True)
    except np.linalg.LinAlgError as exc:
        raise DegenerateLawError(str(exc)) from exc
    g = rng.standard_normal((size, 2 * d))
    uv = g @ chol.T
    return law.mean[None, :] + uv[:, :d] + 1j * uv[:, d:]
