"""
Inter-symbol interaction kernel and its link-integrated coupling matrices.

The kernel at normalized distance xi = z / L_d is

    ctilde_mn(xi) = i * Int dt  g*(t) g(t - mT) g(t - nT) g*(t - (m+n)T)

with g the pulse after accumulated dispersion beta2 * z.  It equals the
triple frequency-domain integral

    i/(2pi)^3 * Int dw dw1 dw2  exp(-i w1 w2 beta2 L_d xi - i w1 m T - i w2 n T)
               * F*(w) F(w+w1) F(w+w2) F*(w+w1+w2)

and both forms are implemented as independent quadratures
(:func:`interaction_kernel_time`, :func:`interaction_kernel_freq`); a
closed-form Gaussian fast path fills large grids.

Link integration weights the kernel with the signal power profile (for the
signal-signal matrix) or with the geometric mean of noise and signal profiles
(for the signal-noise matrix):

    C_mn = T * Int dxi Psi_s(xi) ctilde_mn(xi)
    K_mn = T * Int dxi sqrt(Psi_n(xi) Psi_s(xi)) ctilde_mn(xi)

The T prefactor makes both matrices dimensionless; with the small parameter
gamma*S*L_d they reproduce the exact first-order perturbative solution of the
propagation equation (validated against the split-step simulator in tests).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from .config import SystemConfig

__all__ = [
    "PowerProfiles",
    "CouplingTensor",
    "interaction_kernel_time",
    "interaction_kernel_freq",
    "interaction_kernel_freq_grid",
    "integrate_tensor",
    "select_memory",
    "MemoryChoice",
    "QuadratureError",
    "MemoryFitError",
    "save_tensor",
    "load_tensor",
]


class QuadratureError(RuntimeError):
    """Quadrature failed to converge; message carries diagnostics."""


class MemoryFitError(RuntimeError):
    """Exponential-decay fit too poor to extrapolate a memory window."""


# --------------------------------------------------------------------------
# power profiles along the link
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PowerProfiles:
    """Per-distance signal attenuation and amplifier-noise accumulation.

    Distances are normalized (xi = z / L_d).  The signal profile resets to 1
    at every amplifier; the noise profile carries the squared count of
    amplifiers passed, normalized by the span count, so that
    sqrt(psi_n * psi_s) = (count / n_spans) * exp(-alpha * mod(z, L_s)).
    """

    config: SystemConfig

    def amp_count(self, xi):
        """Number of amplifiers located before normalized distance xi."""
        z = np.asarray(xi, dtype=float) * self.config.dispersion_length
        return np.floor(z / self.config.span_length)

    def psi_s(self, xi):
        z = np.asarray(xi, dtype=float) * self.config.dispersion_length
        return np.exp(-self.config.alpha * np.mod(z, self.config.span_length))

    def psi_n(self, xi):
        return (self.amp_count(xi) / self.config.n_spans) ** 2 * self.psi_s(xi)

    def noise_signal_weight(self, xi):
        """sqrt(psi_n * psi_s), the signal-noise integration weight."""
        return (self.amp_count(xi) / self.config.n_spans) * self.psi_s(xi)


# --------------------------------------------------------------------------
# kernel evaluation
# --------------------------------------------------------------------------


def _overlap_gaussian(config: SystemConfig, m, n, z):
    """Closed form of Int g*(t) g(t-mT) g(t-nT) g*(t-(m+n)T) dt, Gaussian pulse.

    The product of the four dispersed Gaussians has a purely real quadratic
    and linear part (the chirps of the conjugated and unconjugated pairs
    cancel), so the integral is elementary.  Broadcasts over m, n, z.
    """
    t0 = config.pulse.t0
    T = config.symbol_period
    m = np.asarray(m, dtype=float)
    n = np.asarray(n, dtype=float)
    tau2 = t0**2 - 1j * config.beta2 * np.asarray(z, dtype=float)
    c = 1.0 / (2.0 * tau2)
    p = 4.0 * c.real
    q = 4.0 * T * (m + n) * c.real
    r = -c * T**2 * (m**2 + n**2) - np.conj(c) * T**2 * (m + n) ** 2
    pref = (1.0 / (np.pi * t0**2)) * (t0**4 / np.abs(tau2) ** 2)
    return pref * np.sqrt(np.pi / p) * np.exp(q**2 / (4.0 * p) + r)


def interaction_kernel_time(config: SystemConfig, m: int, n: int, xi: float,
                            n_nodes: int = 480) -> complex:
    """Kernel via 1-d quadrature of the dispersed-pulse quadruple product.

    Serves as the independent oracle for :func:`interaction_kernel_freq`.
    """
    if xi < 0:
        raise ValueError("xi must be >= 0")
    T = config.symbol_period
    t0 = config.pulse.t0
    z = xi * config.dispersion_length
    bz = config.beta2 * z
    # real envelope width of the dispersed pulse
    sigma = t0 * np.sqrt((1.0 + (bz / t0**2) ** 2) / 2.0)
    centers = np.array([0.0, m * T, n * T, (m + n) * T])
    lo = centers.min() - 12.0 * sigma
    hi = centers.max() + 12.0 * sigma
    x, w = leggauss(n_nodes)
    t = 0.5 * (hi + lo) + 0.5 * (hi - lo) * x
    w = 0.5 * (hi - lo) * w
    g = config.pulse.dispersed
    prod = (
        np.conj(g(t, bz))
        * g(t - m * T, bz)
        * g(t - n * T, bz)
        * np.conj(g(t - (m + n) * T, bz))
    )
    return complex(1j * np.sum(w * prod))


# frequency-axis truncation in units of 1/t0; the spectrum product envelope
# is exp(-(w1^2+w2^2) t0^2 / 2), so the cut leaves ~exp(-28) of the peak
_OMEGA_REL = 7.5


class _FreqQuadrature:
    """Precomputed machinery for the triple frequency-domain integral.

    The inner w-integral h(w1, w2) is independent of (m, n, xi), so it is
    evaluated once on a Gauss-Legendre (w1, w2) grid and reused; each xi then
    costs one phase multiply and each batch of (m, n) two small matmuls.
    """

    def __init__(self, config, n_axis, omega_max_rel=None, n_inner=128):
        t0 = config.pulse.t0
        om = (omega_max_rel or _OMEGA_REL) / t0
        x, w = leggauss(n_axis)
        self.nodes = om * x
        self.weights = om * w
        self.config = config
        # inner integral on a grid centered at the envelope centroid
        xi_in, wi_in = leggauss(n_inner)
        half = 5.5 / t0
        self._inner_nodes = half * xi_in
        self._inner_weights = half * wi_in
        self.h = self._build_h()

    def _build_h(self):
        f = self.config.pulse.spectrum
        n = self.nodes.size
        h = np.empty((n, n), dtype=complex)
        winner = self._inner_weights
        for i in range(n):
            w1 = self.nodes[i]
            w2 = self.nodes[None, :, None]
            u = (w1 + self.nodes[:, None]) / 2.0  # (w1+w2)/2 per column
            v = (w1 - self.nodes[:, None]) / 2.0
            wp = self._inner_nodes[None, :]
            vals = (
                np.conj(f(wp - u))
                * f(wp - v)
                * f(wp + v)
                * np.conj(f(wp + u))
            )
            h[i, :] = vals @ winner
        return h / (2.0 * np.pi) ** 3

    def evaluate(self, ms, ns, xi):
        """Kernel values for all (m in ms) x (n in ns) at one xi."""
        cfg = self.config
        sgn = np.sign(cfg.beta2)
        t0 = cfg.pulse.t0
        T = cfg.symbol_period
        phase = np.exp(-1j * sgn * xi * np.outer(self.nodes * t0, self.nodes * t0))
        G = (self.weights[:, None] * self.weights[None, :]) * self.h * phase
        W1 = np.exp(-1j * np.outer(np.asarray(ms), self.nodes) * T)
        W2 = np.exp(-1j * np.outer(self.nodes, np.asarray(ns)) * T)
        return 1j * (W1 @ G @ W2)


def _freq_axis_nodes(config, xis, ms, ns, min_nodes=128, omega_max_rel=None,
                     per_cycle=7.0):
    """Node count resolving the oscillation of the (w1, w2) integrand."""
    om_rel = omega_max_rel or _OMEGA_REL
    t0 = config.pulse.t0
    T = config.symbol_period
    xi_max = float(np.max(xis))
    m_max = max(np.max(np.abs(ms)), np.max(np.abs(ns)))
    cycles = (xi_max * om_rel**2 + m_max * (T / t0) * om_rel * 2.0) / np.pi
    return int(max(min_nodes, np.ceil(per_cycle * cycles)))


def interaction_kernel_freq_grid(config, ms, ns, xis, n_axis=None, certify=False,
                                 rel_tol=1e-7, omega_max_rel=None):
    """Kernel on a (m, n, xi) grid by the triple frequency-domain quadrature.

    Returns an array of shape (len(ms), len(ns), len(xis)).  With
    ``certify=True`` the grid is recomputed at 1.4x the node count and a
    QuadratureError raised if any entry above the magnitude floor moved by
    more than ``rel_tol`` relative.
    """
    ms = np.atleast_1d(ms)
    ns = np.atleast_1d(ns)
    xis = np.atleast_1d(np.asarray(xis, dtype=float))
    if np.any(xis < 0):
        raise ValueError("xi must be >= 0")
    if n_axis is None:
        n_axis = _freq_axis_nodes(config, xis, ms, ns,
                                  omega_max_rel=omega_max_rel)
    quad = _FreqQuadrature(config, n_axis, omega_max_rel=omega_max_rel)
    out = np.empty((ms.size, ns.size, xis.size), dtype=complex)
    for k, xi in enumerate(xis):
        out[:, :, k] = quad.evaluate(ms, ns, xi)
    if certify:
        quad2 = _FreqQuadrature(config, int(n_axis * 1.4),
                                omega_max_rel=omega_max_rel)
        ref = np.empty_like(out)
        for k, xi in enumerate(xis):
            ref[:, :, k] = quad2.evaluate(ms, ns, xi)
        scale = np.abs(ref).max()
        mask = np.abs(ref) > 1e-12 * scale
        err = np.max(np.abs(out[mask] - ref[mask]) / np.abs(ref[mask]))
        if err > rel_tol:
            raise QuadratureError(
                f"frequency-domain kernel did not converge: refinement moved "
                f"entries by {err:.3e} relative (tolerance {rel_tol:.1e}, "
                f"n_axis={n_axis})"
            )
        out = ref
    return out


def interaction_kernel_freq(config: SystemConfig, m: int, n: int, xi: float,
                            n_axis=None, certify=False) -> complex:
    """Scalar frequency-domain kernel value (see the grid variant)."""
    return complex(
        interaction_kernel_freq_grid(config, [m], [n], [xi], n_axis=n_axis,
                                     certify=certify)[0, 0, 0]
    )


# --------------------------------------------------------------------------
# link integration
# --------------------------------------------------------------------------

# first-span panel edges resolve the fast small-xi evolution of the kernel;
# later spans only track the attenuation profile
_EDGES_FIRST = (0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 14.0, 22.0, 34.0, None)
_EDGES_LATER = (0.0, 3.0, 10.0, 22.0, None)


def _xi_quadrature(config, n_xi):
    """Composite Gauss-Legendre nodes over the whole link in xi.

    Returns (nodes, weights, amplifier count at each node).
    """
    xg, wg = leggauss(n_xi)
    xi_s = config.xi_span()
    nodes, weights, counts = [], [], []
    for s in range(config.n_spans):
        edges = _EDGES_FIRST if s == 0 else _EDGES_LATER
        pts = [xi_s if e is None else min(e, xi_s) for e in edges]
        pts = sorted(set(p for p in pts if p <= xi_s))
        for a, b in zip(pts[:-1], pts[1:]):
            mid, half = 0.5 * (a + b), 0.5 * (b - a)
            nodes.append(s * xi_s + mid + half * xg)
            weights.append(half * wg)
            counts.append(np.full(n_xi, float(s)))
    return np.concatenate(nodes), np.concatenate(weights), np.concatenate(counts)


@dataclass(frozen=True)
class CouplingTensor:
    """Memory window plus the integrated coupling matrices.

    ``ss[i, j]`` is the signal-signal coupling for (m, n) = (i - memory,
    j - memory); ``sn`` the signal-noise analogue.  Both are dimensionless,
    symmetric and purely geometric (pulse shape, dispersion, power profiles);
    ``kerr_scale`` = gamma * L_d (1/W) carries the link's nonlinear strength,
    so kerr_scale * power is the per-symbol perturbation parameter and
    kerr_scale * ss is the per-watt coupling entering distortion variances.
    """

    memory: int
    ss: np.ndarray
    sn: np.ndarray
    fingerprint: str
    n_xi: int
    kerr_scale: float = 0.0

    def __post_init__(self):
        w = 2 * self.memory + 1
        if self.ss.shape != (w, w) or self.sn.shape != (w, w):
            raise ValueError("coupling arrays do not match the memory window")

    @property
    def offsets(self):
        return np.arange(-self.memory, self.memory + 1)

    def entry(self, m, n):
        return self.ss[m + self.memory, n + self.memory]

    def axis_slice(self):
        """C_{m,0} for m = 0..memory."""
        return self.ss[self.memory:, self.memory]

    def interior_ss_mass(self):
        """Sum of |C_mn|^2 over entries with both m and n nonzero."""
        mask = np.ones_like(self.ss, dtype=bool)
        mask[self.memory, :] = False
        mask[:, self.memory] = False
        return float(np.sum(np.abs(self.ss[mask]) ** 2))

    def interior_sn_mass(self):
        """Sum of |K_mn|^2 over entries with both m and n nonzero."""
        mask = np.ones_like(self.sn, dtype=bool)
        mask[self.memory, :] = False
        mask[:, self.memory] = False
        return float(np.sum(np.abs(self.sn[mask]) ** 2))


def _axis_kernel_integrals(config, m_values, n_xi):
    """T * Int dxi [psi_s, sqrt(psi_n psi_s)] * ctilde_{m,0}(xi) for many m."""
    xi, w, count = _xi_quadrature(config, n_xi)
    z = xi * config.dispersion_length
    psi = np.exp(-config.alpha * np.mod(z, config.span_length))
    w_s = w * psi
    w_n = w * (count / config.n_spans) * psi
    T = config.symbol_period
    m = np.asarray(m_values, dtype=float)[:, None]
    O = _overlap_gaussian(config, m, 0.0, z[None, :])
    return T * ((1j * O) @ w_s), T * ((1j * O) @ w_n)


def integrate_tensor(config: SystemConfig, memory: int, n_xi: int = 24,
                     cost_limit: float = 4e8) -> CouplingTensor:
    """Integrate the kernel over the link into the coupling matrices.

    Parameters
    ----------
    memory : int
        Half-width M of the window; matrices are (2M+1) x (2M+1).
    n_xi : int
        Gauss-Legendre nodes per distance panel (>= 4); panels cluster near
        span starts where the signal profile peaks.
    cost_limit : float
        Guard on kernel evaluations (entries x distance nodes); a window too
        large for the budget raises QuadratureError before any work is done.
    """
    if memory < 1:
        raise ValueError("memory must be >= 1")
    if n_xi < 4:
        raise ValueError("n_xi must be >= 4")
    xi, w, count = _xi_quadrature(config, n_xi)
    width = 2 * memory + 1
    cost = float(width * width) * xi.size
    if cost > cost_limit:
        raise QuadratureError(
            f"tensor fill needs {cost:.2e} kernel evaluations, over the "
            f"budget {cost_limit:.2e}; reduce memory or raise cost_limit"
        )
    z = xi * config.dispersion_length
    psi = np.exp(-config.alpha * np.mod(z, config.span_length))
    w_s = w * psi
    w_n = w * (count / config.n_spans) * psi
    T = config.symbol_period

    offs = np.arange(-memory, memory + 1, dtype=float)
    mg, ng = np.meshgrid(offs, offs, indexing="ij")
    flat_m = mg.ravel()
    flat_n = ng.ravel()
    ss = np.empty(flat_m.size, dtype=complex)
    sn = np.empty(flat_m.size, dtype=complex)
    chunk = max(1, int(2**21 // max(xi.size, 1)))
    for lo in range(0, flat_m.size, chunk):
        sl = slice(lo, min(lo + chunk, flat_m.size))
        O = _overlap_gaussian(config, flat_m[sl][:, None], flat_n[sl][:, None],
                              z[None, :])
        ct = 1j * O
        ss[sl] = T * (ct @ w_s)
        sn[sl] = T * (ct @ w_n)
    return CouplingTensor(
        memory=memory,
        ss=ss.reshape(width, width),
        sn=sn.reshape(width, width),
        fingerprint=config.fingerprint(),
        n_xi=n_xi,
    )


# --------------------------------------------------------------------------
# memory window selection
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MemoryChoice:
    window: int
    slope: float
    r_squared: float
    tail_fraction: float


def select_memory(config: SystemConfig, tail_tol: float, n_xi: int = 24,
                  rel_floor: float = 1e-3, m_cap: int = 1024) -> MemoryChoice:
    """Smallest window whose estimated excluded mass is below tail_tol.

    The axis slice |C_{m,0}| is computed out to where it falls below
    ``rel_floor`` relative to C_00 (doubling the reach as needed), an
    exponential decay is fitted to log|C_{m,0}| over that range, and the mass
    outside a candidate window is estimated from the measured axis entries
    plus the fitted geometric tail under a separable lattice model.

    Raises
    ------
    MemoryFitError
        If the decay fit has R^2 < 0.8; the exponential-memory assumption
        does not hold and no window is returned.
    """
    if not 0.0 < tail_tol < 1.0:
        raise ValueError("tail_tol must be in (0, 1)")
    m_max = 32
    while True:
        ms = np.arange(0, m_max + 1)
        ax_s, _ = _axis_kernel_integrals(config, ms, n_xi)
        rel = np.abs(ax_s) / np.abs(ax_s[0])
        if rel[-1] < rel_floor * 1e-2 or m_max >= m_cap:
            break
        m_max *= 2

    fit_idx = np.nonzero(rel[1:] > rel_floor)[0] + 1
    if fit_idx.size < 3:
        fit_idx = np.arange(1, min(6, rel.size))
    mm = fit_idx.astype(float)
    logm = np.log(np.abs(ax_s[fit_idx]))
    A = np.vstack([mm, np.ones_like(mm)]).T
    coef, res, *_ = np.linalg.lstsq(A, logm, rcond=None)
    slope = float(coef[0])
    ss_tot = float(np.sum((logm - logm.mean()) ** 2))
    r2 = 1.0 - float(res[0]) / ss_tot if ss_tot > 0 and res.size else 1.0
    if r2 < 0.8:
        raise MemoryFitError(
            f"axis decay fit R^2 = {r2:.3f} < 0.8 over m = 1..{fit_idx[-1]}; "
            "memory window cannot be extrapolated"
        )
    if slope >= 0:
        raise MemoryFitError(f"axis decay slope {slope:.3e} is not negative")

    mass = np.abs(ax_s) ** 2
    q = np.exp(2.0 * slope)
    # measured cumulative axis mass + fitted geometric remainder beyond m_max
    beyond = mass[-1] * q / (1.0 - q)
    total_axis = mass[0] + 2.0 * (np.sum(mass[1:]) + beyond)

    def tail_fraction(M):
        if M >= m_max:
            inside = mass[0] + 2.0 * (np.sum(mass[1:]) + beyond
                                      - mass[-1] * q * (1 - q ** (M - m_max)) / (1 - q))
            inside = min(inside, total_axis)
        else:
            inside = mass[0] + 2.0 * np.sum(mass[1 : M + 1])
        return 1.0 - (inside / total_axis) ** 2

    for M in range(1, m_cap + 1):
        frac = tail_fraction(M)
        if frac < tail_tol:
            return MemoryChoice(window=M, slope=slope, r_squared=r2,
                                tail_fraction=frac)
    raise MemoryFitError(f"no window up to {m_cap} reaches tail_tol={tail_tol}")


# --------------------------------------------------------------------------
# cache file (deterministic flat binary: JSON header line + raw array bytes)
# --------------------------------------------------------------------------

_MAGIC = b"FCTEN1\n"


def save_tensor(tensor: CouplingTensor, path):
    header = {
        "fingerprint": tensor.fingerprint,
        "memory": tensor.memory,
        "n_xi": tensor.n_xi,
        "dtype": "complex128-le",
    }
    blob = json.dumps(header, sort_keys=True).encode() + b"\n"
    ss = tensor.ss.astype("<c16").tobytes()
    sn = tensor.sn.astype("<c16").tobytes()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(blob)
        fh.write(ss)
        fh.write(sn)


def load_tensor(path) -> CouplingTensor:
    with open(path, "rb") as fh:
        magic = fh.read(len(_MAGIC))
        if magic != _MAGIC:
            raise ValueError(f"{path} is not a coupling tensor cache")
        header = json.loads(fh.readline().decode())
        w = 2 * header["memory"] + 1
        nbytes = w * w * 16
        ss = np.frombuffer(fh.read(nbytes), dtype="<c16").reshape(w, w)
        sn = np.frombuffer(fh.read(nbytes), dtype="<c16").reshape(w, w)
    return CouplingTensor(
        memory=header["memory"],
        ss=ss.copy(),
        sn=sn.copy(),
        fingerprint=header["fingerprint"],
        n_xi=header["n_xi"],
    )


def tensor_heatmap_rows(tensor: CouplingTensor):
    """(m, n, |C_mn|, |K_mn|) rows for CSV export."""
    rows = []
    for i, m in enumerate(tensor.offsets):
        for j, n in enumerate(tensor.offsets):
            rows.append((int(m), int(n), abs(tensor.ss[i, j]), abs(tensor.sn[i, j])))
    return rows
