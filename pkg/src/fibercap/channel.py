"""
Finite-memory discrete-time channel model.

The deterministic Kerr distortion of a block is built order by order from the
recurrence

    y_k^(N) = sum_{i+j+l = N-1} sum_{m,n} C_mn y_{k+n}^(i) y_{k+m}^(j) conj(y_{k+n+m}^(l))

applied to power-normalized symbols, with the distorted block
x_tilde = sum_N eps^N y^(N) and eps = gamma * S * L_d.  Symbols outside the
block are treated as zero (burst transmission).

Stochastic signal-noise coupling enters through two banded matrices acting on
a unit-variance circular noise vector zeta and its conjugate:

    y = x_tilde + M zeta + L conj(zeta)
    M[k, m] = rho delta_km + rho eps sum_n K[n, m-k] (xt[k+n] conj(xt[m+n]) + xt[m+n] conj(xt[k+n]))
    L[k, m] = rho eps sum_n K[n, m-k-n] xt[k+n] xt[m-n]

with rho = sqrt(N / S).  Public functions accept and return blocks on the
physical sqrt(W) scale; the normalization is handled internally.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .blocks import SymbolBlock
from .config import SystemConfig
from .coupling import CouplingTensor

__all__ = ["NoiseMixing", "deterministic_orders", "apply_first_order",
           "nonlinear_phase_shift", "noise_mixing", "forward_sample"]


def _shifted(padded, offset, d, pad):
    """View of a zero-padded block shifted by ``offset`` symbols."""
    return padded[pad + offset : pad + offset + d]


def deterministic_orders(tensor: CouplingTensor, block: SymbolBlock,
                         n_orders: int, config: SystemConfig,
                         max_orders: int = 3):
    """Perturbative orders of the deterministic distortion.

    Returns a list [y0, y1, ..., y_{n_orders}] of arrays on the sqrt(W)
    scale; the distorted block is sum_N eps^N y_N with the normalization
    already folded in, i.e. ``sum(orders)`` is the distorted block.

    Cost grows as (2M+1)^2 * d per order; orders above ``max_orders`` are
    rejected.
    """
    if n_orders < 0:
        raise ValueError("n_orders must be >= 0")
    if n_orders > max_orders:
        raise ValueError(
            f"n_orders={n_orders} above the configured limit {max_orders}"
        )
    d = len(block)
    M = tensor.memory
    s = block.power
    eps = config.nonlinear_scale(s)
    x = block.normalized()
    pad = 2 * M * max(n_orders, 1)
    orders = [x]
    C = tensor.ss
    for N in range(1, n_orders + 1):
        acc = np.zeros(d, dtype=complex)
        padded = [np.zeros(d + 2 * pad, dtype=complex) for _ in orders]
        for i, y in enumerate(orders):
            padded[i][pad : pad + d] = y
        for i in range(N):
            for j in range(N - i):
                l = N - 1 - i - j
                pi, pj, pl = padded[i], padded[j], padded[l]
                for a, m in enumerate(range(-M, M + 1)):
                    row = C[a]
                    ym = _shifted(pj, m, d, pad)
                    for b, n in enumerate(range(-M, M + 1)):
                        c = row[b]
                        if c == 0.0:
                            continue
                        acc += c * _shifted(pi, n, d, pad) * ym * np.conj(
                            _shifted(pl, n + m, d, pad)
                        )
        orders.append(acc)
    # zeroth order stays bit-identical to the input block
    scaled = [block.symbols.copy()]
    scaled += [np.sqrt(s) * (eps**N) * y for N, y in enumerate(orders) if N >= 1]
    return scaled


def apply_first_order(tensor: CouplingTensor, block: SymbolBlock,
                      config: SystemConfig):
    """x + eps * y1 on the sqrt(W) scale, vectorized over the window.

    Same result as summing the first two entries of
    :func:`deterministic_orders`; kept separate because the first order is
    the workhorse for validation sweeps.
    """
    d = len(block)
    M = tensor.memory
    s = block.power
    eps = config.nonlinear_scale(s)
    x = block.normalized()
    pad = 2 * M
    xp = np.zeros(d + 2 * pad, dtype=complex)
    xp[pad : pad + d] = x
    acc = np.zeros(d, dtype=complex)
    for a, m in enumerate(range(-M, M + 1)):
        xm = _shifted(xp, m, d, pad)
        for b, n in enumerate(range(-M, M + 1)):
            c = tensor.ss[a, b]
            if c == 0.0:
                continue
            acc += c * _shifted(xp, n, d, pad) * xm * np.conj(
                _shifted(xp, n + m, d, pad)
            )
    return block.symbols + np.sqrt(s) * eps * acc


def nonlinear_phase_shift(tensor: CouplingTensor, power: float,
                          config: SystemConfig) -> float:
    """Mean Kerr-induced phase rotation at the given launch power.

    2 * eps(S) * sum_m Im C_{m,0}.  For the Gaussian pulse the axis entries
    are purely imaginary, so this coincides with 2 * eps * sum_m |C_{m,0}|;
    removal as y * exp(-i phi) centers the received cloud before distortion
    variances are read off.
    """
    if power < 0:
        raise ValueError("power must be >= 0")
    if power == 0.0:
        return 0.0
    eps = config.nonlinear_scale(power)
    return float(2.0 * eps * np.sum(tensor.ss[:, tensor.memory].imag))


@dataclass(frozen=True)
class NoiseMixing:
    """Banded mixing matrices of the stochastic channel for one block."""

    direct: np.ndarray
    conjugate: np.ndarray
    power: float
    rho: float
    eps: float
    memory: int

    @property
    def d(self):
        return self.direct.shape[0]


def noise_mixing(tensor: CouplingTensor, xtilde: SymbolBlock,
                 config: SystemConfig) -> NoiseMixing:
    """Assemble the direct and conjugate mixing matrices for a block.

    ``xtilde`` is the (distorted) transmitted block on the sqrt(W) scale; its
    ``power`` attribute sets both small parameters.  Entries with
    |k - m| > 2 * memory vanish identically.
    """
    d = len(xtilde)
    M = tensor.memory
    s = xtilde.power
    eps = config.nonlinear_scale(s)
    rho = config.noise_scale(s)
    xt = xtilde.normalized()
    pad = 2 * M
    xp = np.zeros(d + 2 * pad, dtype=complex)
    xp[pad : pad + d] = xt
    K = tensor.sn
    direct = np.zeros((d, d), dtype=complex)
    conjugate = np.zeros((d, d), dtype=complex)
    k_idx = np.arange(d)
    # direct: columns m with |m - k| <= M; conjugate: |m - k| <= 2M
    for off in range(-M, M + 1):
        m_idx = k_idx + off
        valid = (m_idx >= 0) & (m_idx < d)
        if not np.any(valid):
            continue
        kk = k_idx[valid]
        acc = np.zeros(kk.size, dtype=complex)
        for b, n in enumerate(range(-M, M + 1)):
            kn = K[b, off + M]
            if kn == 0.0:
                continue
            xa = xp[pad + n + kk]
            xb = xp[pad + n + kk + off]
            acc += kn * (xa * np.conj(xb) + xb * np.conj(xa))
        direct[kk, kk + off] = rho * eps * acc
    direct[k_idx, k_idx] += rho
    for off in range(-2 * M, 2 * M + 1):
        m_idx = k_idx + off
        valid = (m_idx >= 0) & (m_idx < d)
        if not np.any(valid):
            continue
        kk = k_idx[valid]
        acc = np.zeros(kk.size, dtype=complex)
        for b, n in enumerate(range(-M, M + 1)):
            col = off - n
            if col < -M or col > M:
                continue
            kn = K[b, col + M]
            if kn == 0.0:
                continue
            acc += kn * xp[pad + n + kk] * xp[pad + kk + off - n]
        conjugate[kk, kk + off] = rho * eps * acc
    return NoiseMixing(direct=direct, conjugate=conjugate, power=s, rho=rho,
                       eps=eps, memory=M)


def forward_sample(xtilde: SymbolBlock, mixing: NoiseMixing,
                   seed) -> SymbolBlock:
    """Draw one received block y = x_tilde + M zeta + L conj(zeta).

    zeta is i.i.d. unit-variance circular complex normal; the result is on
    the sqrt(W) scale.
    """
    d = len(xtilde)
    if mixing.d != d:
        raise ValueError("mixing matrices do not match the block length")
    rng = np.random.default_rng(seed)
    zeta = (rng.standard_normal(d) + 1j * rng.standard_normal(d)) / np.sqrt(2.0)
    y_norm = (
        xtilde.normalized()
        + mixing.direct @ zeta
        + mixing.conjugate @ np.conj(zeta)
    )
    return SymbolBlock(symbols=np.sqrt(xtilde.power) * y_norm,
                       power=xtilde.power)
