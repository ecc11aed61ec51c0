import numpy as np
import pytest

import fibercap as fc
from fibercap.channel import NoiseMixing
from fibercap.cnormal import log_pdf, sample_law


def _mixing(direct, conjugate, rho=1.0, eps=0.1, power=1.0):
    direct = np.asarray(direct, dtype=complex)
    return NoiseMixing(direct=direct, conjugate=np.asarray(conjugate, dtype=complex),
                       power=power, rho=rho, eps=eps,
                       memory=direct.shape[0])


def _random_banded(d, M, seed, scale=0.3):
    rng = np.random.default_rng(seed)
    direct = np.eye(d, dtype=complex)
    conj = np.zeros((d, d), dtype=complex)
    for off in range(-M, M + 1):
        idx = np.arange(max(0, -off), min(d, d - off))
        direct[idx, idx + off] += scale * (rng.standard_normal(idx.size)
                                           + 1j * rng.standard_normal(idx.size))
        conj[idx, idx + off] = scale * (rng.standard_normal(idx.size)
                                        + 1j * rng.standard_normal(idx.size))
    return _mixing(direct, conj)


def test_identity_mixing_algebra():
    rho = 0.4
    mix = _mixing(rho * np.eye(3), np.zeros((3, 3)))
    law = fc.law_from_mixing(mix, np.zeros(3))
    assert np.allclose(law.covariance, rho**2 * np.eye(3))
    assert np.allclose(law.relation, 0.0)
    assert np.allclose(law.schur, rho**2 * np.eye(3))


def test_scalar_hand_algebra():
    c = 0.3 - 0.2j
    mix = _mixing([[1.0]], [[c]])
    law = fc.law_from_mixing(mix, np.zeros(1))
    assert law.covariance[0, 0] == pytest.approx(1 + abs(c) ** 2)
    assert law.relation[0, 0] == pytest.approx(2 * c)
    # schur = conj(cov) - |rel|^2 / cov
    expected = (1 + abs(c) ** 2) - abs(2 * c) ** 2 / (1 + abs(c) ** 2)
    assert law.schur[0, 0] == pytest.approx(expected)


def test_gram_structure_is_psd():
    for seed in range(5):
        mix = _random_banded(8, 2, seed)
        law = fc.law_from_mixing(mix, np.zeros(8))
        eig = np.linalg.eigvalsh(law.covariance)
        assert eig.min() >= -1e-12 * eig.max()


def test_schur_identity_reproduced():
    mix = _random_banded(6, 2, 3)
    law = fc.law_from_mixing(mix, np.zeros(6))
    direct = law.covariance.conj() - law.relation.conj().T @ np.linalg.solve(
        law.covariance, law.relation
    )
    assert np.allclose(law.schur, direct, rtol=1e-10)


def test_circular_case_matches_closed_form():
    rng = np.random.default_rng(1)
    d = 3
    A = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    cov = A @ A.conj().T + 0.5 * np.eye(d)
    law = fc.ComplexNormalLaw(mean=np.zeros(d), covariance=cov,
                              relation=np.zeros((d, d)))
    y = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    sign, logdet = np.linalg.slogdet(cov)
    closed = (-d * np.log(np.pi) - logdet
              - np.real(np.conj(y) @ np.linalg.solve(cov, y)))
    assert log_pdf(law, y) == pytest.approx(closed, abs=1e-12)


def test_scalar_circular_value():
    # variance 2 at unit offset: log pdf = -log(2 pi) - 1/2
    law = fc.ComplexNormalLaw(mean=np.zeros(1), covariance=2 * np.eye(1),
                              relation=np.zeros((1, 1)))
    assert log_pdf(law, np.array([1.0 + 0j])) == pytest.approx(
        -np.log(2 * np.pi) - 0.5, abs=1e-13
    )


def test_mc_normalization_d2():
    # importance-sample the density against a wide circular proposal
    mix = _random_banded(2, 1, 7, scale=0.4)
    law = fc.law_from_mixing(mix, np.array([0.2 + 0.1j, -0.3 + 0.4j]))
    rng = np.random.default_rng(11)
    n = 400_000
    width = 3.0 * np.sqrt(np.abs(np.diag(law.covariance)).max())
    z = (rng.standard_normal((n, 2)) + 1j * rng.standard_normal((n, 2)))
    z = law.mean[None, :] + width * z / np.sqrt(2)
    logq = (-2 * np.log(np.pi * width**2)
            - np.sum(np.abs(z - law.mean[None, :]) ** 2, axis=1) / width**2)
    logp = np.array([log_pdf(law, zi) for zi in z])
    ratio = np.exp(logp - logq)
    est = ratio.mean()
    se = ratio.std(ddof=1) / np.sqrt(n)
    assert abs(est - 1.0) < max(0.01, 4 * se)


def test_sampling_reproduces_covariances():
    mix = _random_banded(5, 2, 13)
    mean = np.arange(5) * (0.1 - 0.05j)
    law = fc.law_from_mixing(mix, mean)
    n = 100_000
    draws = sample_law(law, seed=3, size=n)
    resid = draws - mean[None, :]
    cov_emp = resid.T @ resid.conj() / n
    rel_emp = resid.T @ resid / n
    scale = np.abs(np.diag(law.covariance)).max()
    tol = 3.5 * scale / np.sqrt(n)
    assert np.max(np.abs(cov_emp - law.covariance)) < tol
    assert np.max(np.abs(rel_emp - law.relation)) < tol
    se = np.abs(resid).std() / np.sqrt(n)
    assert np.max(np.abs(draws.mean(axis=0) - mean)) < 4 * se


def test_circular_sampling_has_no_relation():
    law = fc.ComplexNormalLaw(mean=np.zeros(2), covariance=np.eye(2),
                              relation=np.zeros((2, 2)))
    draws = sample_law(law, seed=5, size=50_000)
    rel = draws.T @ draws / draws.shape[0]
    assert np.max(np.abs(rel)) < 3.5 / np.sqrt(draws.shape[0])


def test_entropy_consistency_scalar():
    # mean negative log-likelihood of own samples estimates the entropy
    mix = _mixing([[1.0]], [[0.45 + 0.2j]])
    law = fc.law_from_mixing(mix, np.zeros(1))
    draws = sample_law(law, seed=9, size=60_000)
    ll = np.array([log_pdf(law, y) for y in draws])
    det = np.real(law.covariance[0, 0] * law.schur[0, 0])
    entropy = np.log(np.pi * np.e) + 0.5 * np.log(det)
    assert -ll.mean() == pytest.approx(entropy, abs=4 * ll.std() / np.sqrt(ll.size))


def test_log_pdf_permutation_invariant():
    mix = _random_banded(4, 1, 21)
    mean = np.array([0.1, -0.2j, 0.3 + 0.1j, 0.0])
    law = fc.law_from_mixing(mix, mean)
    y = np.array([0.5, -0.1 + 0.2j, 0.7j, -0.3])
    perm = np.array([2, 0, 3, 1])
    law_p = fc.ComplexNormalLaw(
        mean=mean[perm],
        covariance=law.covariance[np.ix_(perm, perm)],
        relation=law.relation[np.ix_(perm, perm)],
    )
    assert log_pdf(law_p, y[perm]) == pytest.approx(log_pdf(law, y), rel=1e-12)


def test_dimension_guard():
    law = fc.ComplexNormalLaw(mean=np.zeros(2), covariance=np.eye(2),
                              relation=np.zeros((2, 2)))
    with pytest.raises(ValueError):
        log_pdf(law, np.zeros(3))


def test_degenerate_law_rejected():
    mix = _mixing(np.zeros((2, 2)), np.zeros((2, 2)))
    with pytest.raises(fc.DegenerateLawError):
        fc.law_from_mixing(mix, np.zeros(2))


def test_trace_collapses_to_noise_floor(cfg_1000km, tensor_1000_m8):
    # trace(cov) -> d rho^2 as the nonlinear parameter vanishes
    s = 1e-5  # deep linear regime
    d = 24
    blk = fc.sample_block(fc.Constellation(kind="gaussian_iid", power=s), d, 2)
    mix = fc.noise_mixing(tensor_1000_m8, blk, cfg_1000km)
    law = fc.law_from_mixing(mix, blk.normalized())
    rho2 = cfg_1000km.noise_scale(s) ** 2
    eps = cfg_1000km.nonlinear_scale(s)
    rel_err = abs(np.trace(law.covariance).real - d * rho2) / (d * rho2)
    assert rel_err < 50 * eps
