"""Sensing-operator assembly, continuum atoms, and measurement synthesis.

Conventions frozen here and relied on by every other module:

* rows are receiver-major: row index = k*M + n for receiver k, sample n;
* columns are angle-major: column index = v*N + m for angle bin v,
  range bin m;
* the global normalization is 1/sqrt(NT*NR*Nc*M);
* delays are handled internally in units of range bins (delta = Delay*B)
  so the continuum atom interpolates the discrete columns exactly.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .config import SystemConfig, make_grids, config_fingerprint
from .errors import AllocError, DomainError, ShapeError
from .illumination import ToneAssignment

TWO_PI = 2.0 * np.pi
DEFAULT_MEMORY_BUDGET = 4 << 30  # bytes


@dataclass(frozen=True)
class SensingOperator:
    """Dense sensing matrix of shape (NR*M, N*N_theta) plus its provenance."""

    matrix: np.ndarray
    config: SystemConfig
    tones: ToneAssignment

    @property
    def shape(self):
        return self.matrix.shape

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ x

    def adjoint(self, y: np.ndarray) -> np.ndarray:
        return self.matrix.conj().T @ y

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(config_fingerprint(self.config).encode())
        h.update(self.tones.to_json().encode())
        return h.hexdigest()[:16]

    def dump_binary(self, path: str) -> None:
        """Row-major complex128 dump (interleaved re/im float64)."""
        np.ascontiguousarray(self.matrix, dtype=np.complex128).tofile(path)


@dataclass(frozen=True)
class Measurement:
    """Stacked receiver samples y of length NR*M."""

    y: np.ndarray
    noise_sigma: float
    snr_db: float


@dataclass(frozen=True)
class Atom:
    """Continuum response for one scatterer at (delay, cos-angle)."""

    delay: float
    angle: float
    value: np.ndarray


def rx_steering(config: SystemConfig, cos_theta: float) -> np.ndarray:
    k = np.arange(config.n_rx_NR)
    return np.exp(1j * TWO_PI * config.rx_spacing_dR * k * cos_theta)


def chirp_basis(config: SystemConfig) -> np.ndarray:
    """The de-chirped tone basis (M x N), normalized by 1/sqrt(M*Nc).

    Row n, column r holds exp(-2*pi*j*r*n/N). Its Gram is exactly
    (N/(M*Nc)) * I because the Dirichlet kernel hits its zeros on the
    integer frequency grid.
    """
    M, N = config.n_samples_M, config.n_range_bins_N
    n = np.arange(M)[:, None]
    r = np.arange(N)[None, :]
    return np.exp(-2j * np.pi * n * r / N) / np.sqrt(M * config.tones_per_tx_Nc)


def _alias_ramp(config: SystemConfig) -> np.ndarray:
    """T[n, r] = exp(+2*pi*j * p*r*n / M): tone r aliased to sample ramp."""
    M, N, p = config.n_samples_M, config.n_range_bins_N, config.alias_p
    n = np.arange(M)[:, None]
    r_alias = (p * np.arange(N)) % M
    return np.exp(2j * np.pi * n * r_alias[None, :] / M)


def _tx_phases(config: SystemConfig, cos_theta: float) -> np.ndarray:
    """Per-tone transmit steering exp(j*2*pi*dT*xi(r)*cos_theta)."""
    xi = np.arange(config.n_range_bins_N) % config.n_tx_NT
    return np.exp(1j * TWO_PI * config.tx_spacing_dT * xi * cos_theta)


def _siso_block(config: SystemConfig, tones: ToneAssignment,
                cos_theta: float, ramp: np.ndarray) -> np.ndarray:
    """M x N block of per-sample responses for one angle bin."""
    M, N = config.n_samples_M, config.n_range_bins_N
    c_v = tones.coeffs * _tx_phases(config, cos_theta)
    n = np.arange(M)[:, None]
    m = np.arange(N)[None, :]
    r = np.arange(N)
    G = np.exp(-2j * np.pi * np.outer(r, m.ravel()) / N)
    E = np.exp(-2j * np.pi * n * m / N)
    scale = 1.0 / np.sqrt(M * config.tones_per_tx_Nc)
    return ((ramp * c_v[None, :]) @ G) * E * scale


def assemble_matrix(config: SystemConfig, tones: ToneAssignment,
                    memory_budget: int = DEFAULT_MEMORY_BUDGET
                    ) -> SensingOperator:
    """Build the dense sensing matrix for one tone realization."""
    M, N = config.n_samples_M, config.n_range_bins_N
    NR, NT = config.n_rx_NR, config.n_tx_NT
    n_theta = config.n_angle_bins
    nbytes = NR * M * N * n_theta * 16
    if nbytes > memory_budget:
        raise AllocError(
            f"dense matrix needs {nbytes} bytes, budget is {memory_budget}; "
            "use MatrixFreeOperator instead")

    angles = make_grids(config).angle_bins
    ramp = _alias_ramp(config)
    A = np.empty((NR * M, N * n_theta), dtype=np.complex128)
    mimo_scale = 1.0 / np.sqrt(NR * NT)
    for v, th in enumerate(angles):
        block = _siso_block(config, tones, th, ramp) * mimo_scale
        a_r = rx_steering(config, th)
        for k in range(NR):
            A[k * M:(k + 1) * M, v * N:(v + 1) * N] = a_r[k] * block
    return SensingOperator(matrix=A, config=config, tones=tones)


class MatrixFreeOperator:
    """Apply/adjoint of the sensing operator without storing it densely.

    Blocks for one angle bin at a time are materialized on the fly, so
    peak memory is O(M*N) regardless of the number of angle bins. Safe
    for concurrent calls: no mutable state beyond cached read-only arrays.
    """

    def __init__(self, config: SystemConfig, tones: ToneAssignment):
        self.config = config
        self.tones = tones
        self._ramp = _alias_ramp(config)
        self._angles = make_grids(config).angle_bins
        M, NR = config.n_samples_M, config.n_rx_NR
        self.shape = (NR * M, config.n_range_bins_N * config.n_angle_bins)

    def _blocks(self):
        scale = 1.0 / np.sqrt(self.config.n_rx_NR * self.config.n_tx_NT)
        for v, th in enumerate(self._angles):
            yield (v, rx_steering(self.config, th),
                   _siso_block(self.config, self.tones, th, self._ramp) * scale)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        if x.shape[-1] != self.shape[1]:
            raise ShapeError(f"expected length {self.shape[1]}, got {x.shape}")
        cfg = self.config
        M, N, NR = cfg.n_samples_M, cfg.n_range_bins_N, cfg.n_rx_NR
        y = np.zeros(NR * M, dtype=np.complex128)
        for v, a_r, block in self._blocks():
            bx = block @ x[v * N:(v + 1) * N]
            y += np.kron(a_r, bx)
        return y

    def rmatvec(self, y: np.ndarray) -> np.ndarray:
        if y.shape[-1] != self.shape[0]:
            raise ShapeError(f"expected length {self.shape[0]}, got {y.shape}")
        cfg = self.config
        M, N, NR = cfg.n_samples_M, cfg.n_range_bins_N, cfg.n_rx_NR
        ymat = y.reshape(NR, M)
        out = np.empty(self.shape[1], dtype=np.complex128)
        for v, a_r, block in self._blocks():
            y_v = a_r.conj() @ ymat
            out[v * N:(v + 1) * N] = block.conj().T @ y_v
        return out


def _check_domain(config: SystemConfig, delay: float, angle: float) -> None:
    if not (0.0 < delay < config.unambiguous_tu):
        raise DomainError(
            f"delay {delay} outside (0, t_u={config.unambiguous_tu})")
    if not (-1.0 < angle < 1.0):
        raise DomainError(f"cos-angle {angle} outside (-1, 1)")


def _atom_sums(config: SystemConfig, tones: ToneAssignment, delay: float,
               angle: float):
    """Weighted ramp sums shared by the atom and its gradients."""
    M, N = config.n_samples_M, config.n_range_bins_N
    delta = delay * config.bandwidth_B  # delay in range-bin units
    r = np.arange(N)
    xi = r % config.n_tx_NT
    w = (tones.coeffs * np.exp(1j * TWO_PI * config.tx_spacing_dT * xi * angle)
         * np.exp(-2j * np.pi * r * delta / N))
    ramp = _alias_ramp(config)
    s0 = ramp @ w
    s1 = ramp @ (r * w)
    s2 = ramp @ (xi * w)
    n = np.arange(M)
    env = np.exp(-2j * np.pi * n * delta / N)
    norm = 1.0 / np.sqrt(config.n_tx_NT * config.n_rx_NR
                         * config.tones_per_tx_Nc * M)
    return delta, n, env, norm, s0, s1, s2


def evaluate_atom(config: SystemConfig, tones: ToneAssignment,
                  delay: float, angle: float) -> Atom:
    """Continuum response Psi(delay, angle), length NR*M.

    On grid points (delay = m/B, angle = theta_v) this reproduces column
    (m, v) of the assembled matrix.
    """
    _check_domain(config, delay, angle)
    _, _, env, norm, s0, _, _ = _atom_sums(config, tones, delay, angle)
    psi = norm * env * s0
    value = np.kron(rx_steering(config, angle), psi)
    return Atom(delay=delay, angle=angle, value=value)


def atom_matrix(config: SystemConfig, tones: ToneAssignment,
                delays: np.ndarray, angles: np.ndarray) -> np.ndarray:
    """Stack of atoms, shape (NR*M, len(delays)); vectorized over points."""
    delays = np.atleast_1d(np.asarray(delays, dtype=float))
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    if delays.shape != angles.shape:
        raise ShapeError("delays and angles must have matching shapes")
    for d, th in zip(delays, angles):
        _check_domain(config, d, th)

    M, N = config.n_samples_M, config.n_range_bins_N
    NR = config.n_rx_NR
    deltas = delays * config.bandwidth_B
    r = np.arange(N)
    xi = r % config.n_tx_NT
    # per-point weighted tone vectors, shape (N, P)
    w = (tones.coeffs[:, None]
         * np.exp(1j * TWO_PI * config.tx_spacing_dT
                  * np.outer(xi, angles))
         * np.exp(-2j * np.pi * np.outer(r, deltas) / N))
    s0 = _alias_ramp(config) @ w                      # (M, P)
    n = np.arange(M)
    env = np.exp(-2j * np.pi * np.outer(n, deltas) / N)
    norm = 1.0 / np.sqrt(config.n_tx_NT * NR
                         * config.tones_per_tx_Nc * M)
    psi = norm * env * s0                             # (M, P)
    k = np.arange(NR)
    a_r = np.exp(1j * TWO_PI * config.rx_spacing_dR
                 * np.outer(k, angles))               # (NR, P)
    # kron over the receiver axis: out[k*M + n, j] = a_r[k, j] * psi[n, j]
    return (a_r[:, None, :] * psi[None, :, :]).reshape(NR * M, -1)


def atom_gradient(config: SystemConfig, tones: ToneAssignment,
                  delay: float, angle: float):
    """Analytic partials (dPsi/d_delay, dPsi/d_angle) of the atom."""
    _check_domain(config, delay, angle)
    _, n, env, norm, s0, s1, s2 = _atom_sums(config, tones, delay, angle)
    a_r = rx_steering(config, angle)
    psi = norm * env * s0

    # delay enters every term through exp(-2*pi*j*(r + n)*delta/N) * B
    dpsi_ddelta = norm * env * (-2j * np.pi / config.n_range_bins_N) \
        * (s1 + n * s0)
    d_delay = config.bandwidth_B * np.kron(a_r, dpsi_ddelta)

    # angle enters through both steering phases
    k = np.arange(config.n_rx_NR)
    d_rx = 1j * TWO_PI * config.rx_spacing_dR * k * a_r
    dpsi_dtheta = 1j * TWO_PI * config.tx_spacing_dT * norm * env * s2
    d_angle = np.kron(d_rx, psi) + np.kron(a_r, dpsi_dtheta)
    return d_delay, d_angle


def synthesize(operator, scene, noise_sigma: float,
               rng: np.random.Generator) -> Measurement:
    """y = A x + w for grid scenes, or a sum of atoms for continuum scenes.

    Noise is circular complex Gaussian CN(0, sigma^2) per component.
    The `operator` argument is a SensingOperator for grid scenes or a
    (config, tones) pair for continuum scenes.
    """
    from .scenes import GridScene, ContinuumScene  # avoid import cycle

    if isinstance(scene, GridScene):
        if not isinstance(operator, SensingOperator):
            raise ShapeError("grid scenes require an assembled SensingOperator")
        x = scene.as_vector(operator.config)
        if x.size != operator.shape[1]:
            raise ShapeError(
                f"scene length {x.size} != operator columns {operator.shape[1]}")
        signal = operator.apply(x)
    elif isinstance(scene, ContinuumScene):
        config, tones = (operator.config, operator.tones) \
            if isinstance(operator, SensingOperator) else operator
        m_len = config.n_rx_NR * config.n_samples_M
        signal = np.zeros(m_len, dtype=np.complex128)
        for delay, angle, amp in scene.targets:
            signal += amp * evaluate_atom(config, tones, delay, angle).value
    else:
        raise ShapeError(f"unsupported scene type {type(scene).__name__}")

    if noise_sigma < 0:
        raise ShapeError("noise_sigma must be nonnegative")
    if noise_sigma > 0:
        w = noise_sigma / np.sqrt(2.0) * (
            rng.standard_normal(signal.size)
            + 1j * rng.standard_normal(signal.size))
        y = signal + w
        snr = float(np.sum(np.abs(signal) ** 2)
                    / (signal.size * noise_sigma ** 2))
        snr_db = 10.0 * np.log10(snr) if snr > 0 else -np.inf
    else:
        y = signal
        snr_db = np.inf
    return Measurement(y=y, noise_sigma=noise_sigma, snr_db=float(snr_db))


def sigma_for_snr_db(signal: np.ndarray, snr_db: float) -> float:
    """Noise std giving the requested SNR = ||signal||^2 / (len * sigma^2)."""
    energy = float(np.sum(np.abs(signal) ** 2))
    return np.sqrt(energy / (signal.size * 10.0 ** (snr_db / 10.0)))


def rescaled_block(config: SystemConfig, tones: ToneAssignment,
                   i: int) -> np.ndarray:
    """The i-th variance-normalized summand A_hat_i of the factorization.

    A_hat_i = sqrt(Nc*NT/N) * (alpha_R_bar @ alpha_T_bar(xi(i)))
              kron (H_i @ A_bar @ D_i); the sum over i of A_hat_i* A_hat_i
    is the identity on C^(N*N_theta).
    """
    cfg = config
    M, N = cfg.n_samples_M, cfg.n_range_bins_N
    NR, NT, p = cfg.n_rx_NR, cfg.n_tx_NT, cfg.alias_p
    angles = make_grids(cfg).angle_bins

    alpha_r_bar = np.empty((NR, cfg.n_angle_bins), dtype=np.complex128)
    for v, th in enumerate(angles):
        alpha_r_bar[:, v] = rx_steering(cfg, th)
    alpha_r_bar /= np.sqrt(NR * NT)
    xi_i = i % NT
    alpha_t = np.exp(1j * TWO_PI * cfg.tx_spacing_dT * xi_i * angles)

    a_bar = chirp_basis(cfg)
    n = np.arange(M)
    r = np.arange(N)
    h_i = np.exp(2j * np.pi * ((i * p) % M) * n / M)
    d_i = np.exp(-2j * np.pi * i * r / N)
    left = alpha_r_bar * alpha_t[None, :]
    right = (h_i[:, None] * a_bar) * d_i[None, :]
    return np.sqrt(cfg.tones_per_tx_Nc * NT / N) * np.kron(left, right)
