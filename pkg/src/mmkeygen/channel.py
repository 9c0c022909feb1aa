"""Clustered narrowband mmWave channel model.

A channel realization is a small set of propagation rays (one optional
line-of-sight ray plus Rayleigh-faded weaker rays), each carrying departure
and arrival angles.  The module builds array responses and channel matrices,
evolves ray gains with an AR(1) process inside a session, and provides the
angular (virtual) domain transform used by the sparse-domain key scheme.

Conventions
-----------
* Element spacing is in wavelengths (half wavelength by default).
* Angles are radians in [-pi/2, pi/2); NLoS angles are drawn uniformly in
  sine space over [-1, 1).
* SNR convention: unit-power transmitted pilot, additive receiver noise of
  variance ``10**(-snr_db / 10)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_CARRIER_GHZ = 28.0
DEFAULT_NLOS_OFFSET_DB = 10.0

_HALF_PI = np.pi / 2.0


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform planar array; a ULA is the ``rows == 1`` (or ``cols == 1``) case."""

    rows: int
    cols: int
    spacing: float = 0.5

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"invalid geometry: rows={self.rows}, cols={self.cols} (need >= 1)")
        if not np.isfinite(self.spacing) or self.spacing <= 0.0:
            raise ValueError(f"invalid geometry: spacing={self.spacing} (need > 0)")

    @property
    def size(self) -> int:
        return self.rows * self.cols


@dataclass(frozen=True)
class PathComponent:
    """One propagation ray: complex gain plus departure/arrival angles."""

    gain: complex
    aod_az: float
    aod_el: float
    aoa_az: float
    aoa_el: float
    is_los: bool = False

    def __post_init__(self) -> None:
        for name in ("aod_az", "aod_el", "aoa_az", "aoa_el"):
            angle = getattr(self, name)
            if not (-_HALF_PI <= angle < _HALF_PI):
                raise ValueError(f"path angle {name}={angle} outside [-pi/2, pi/2)")


@dataclass(frozen=True)
class ChannelParams:
    """Sampling parameters for one-ray-per-path clustered channels."""

    num_paths: int = 2
    nlos_offset_db: float = DEFAULT_NLOS_OFFSET_DB
    angle_distribution: str = "sine-uniform"
    temporal_rho: float = 0.0

    def __post_init__(self) -> None:
        if self.num_paths < 1:
            raise ValueError(f"invalid params: num_paths={self.num_paths} (need >= 1)")
        if self.nlos_offset_db < 0.0:
            raise ValueError(f"invalid params: nlos_offset_db={self.nlos_offset_db} (need >= 0)")
        if self.angle_distribution != "sine-uniform":
            raise ValueError(f"unknown angle_distribution {self.angle_distribution!r}")
        if not 0.0 <= self.temporal_rho <= 1.0:
            raise ValueError(f"invalid params: temporal_rho={self.temporal_rho} not in [0, 1]")


@dataclass(frozen=True)
class ChannelRealization:
    """One coherence-block channel: ordered rays plus the array geometries."""

    paths: tuple[PathComponent, ...]
    tx_geom: ArrayGeometry
    rx_geom: ArrayGeometry
    carrier_ghz: float = DEFAULT_CARRIER_GHZ
    nlos_offset_db: float = DEFAULT_NLOS_OFFSET_DB

    def __post_init__(self) -> None:
        if len(self.paths) < 1:
            raise ValueError("channel realization needs at least one path")
        if sum(1 for p in self.paths if p.is_los) > 1:
            raise ValueError("at most one path may be line-of-sight")

    @property
    def num_paths(self) -> int:
        return len(self.paths)


def array_response(geom: ArrayGeometry, az: float, el: float = 0.0) -> np.ndarray:
    """Unit-norm response of ``geom`` toward (az, el), flattened row-major.

    Element (m, n) has phase ``2*pi*spacing*(m*sin(el) + n*sin(az)*cos(el))``.
    """
    if not (np.isfinite(az) and np.isfinite(el)):
        raise ValueError(f"angles must be finite, got az={az}, el={el}")
    m = np.arange(geom.rows)[:, None]
    n = np.arange(geom.cols)[None, :]
    phase = 2.0 * np.pi * geom.spacing * (m * np.sin(el) + n * np.sin(az) * np.cos(el))
    return (np.exp(1j * phase) / np.sqrt(geom.size)).ravel()


def _nlos_power(nlos_offset_db: float) -> float:
    return 10.0 ** (-nlos_offset_db / 10.0)


def _draw_nlos_gains(count: int, nlos_offset_db: float, rng: np.random.Generator) -> np.ndarray:
    sigma = np.sqrt(_nlos_power(nlos_offset_db) / 2.0)
    return sigma * (rng.standard_normal(count) + 1j * rng.standard_normal(count))


def sample_channel(
    params: ChannelParams,
    tx_geom: ArrayGeometry,
    rx_geom: ArrayGeometry,
    rng: np.random.Generator,
) -> ChannelRealization:
    """Draw a fresh realization: one unit-power LoS ray plus L-1 NLoS rays.

    The LoS gain is a uniform random phase of unit magnitude; NLoS gains are
    circularly-symmetric complex Gaussian with expected power
    ``10**(-nlos_offset_db/10)``.
    """
    L = params.num_paths
    sines = rng.uniform(-1.0, 1.0, size=(L, 4))
    angles = np.arcsin(sines)
    los_gain = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi))
    nlos_gains = _draw_nlos_gains(L - 1, params.nlos_offset_db, rng)

    paths = []
    for l in range(L):
        gain = los_gain if l == 0 else nlos_gains[l - 1]
        paths.append(
            PathComponent(
                gain=complex(gain),
                aod_az=float(angles[l, 0]),
                aod_el=float(angles[l, 1]),
                aoa_az=float(angles[l, 2]),
                aoa_el=float(angles[l, 3]),
                is_los=(l == 0),
            )
        )
    return ChannelRealization(
        paths=tuple(paths),
        tx_geom=tx_geom,
        rx_geom=rx_geom,
        nlos_offset_db=params.nlos_offset_db,
    )


def response_matrices(ch: ChannelRealization) -> tuple[np.ndarray, np.ndarray]:
    """Stacked per-path responses: (rx_size x L, tx_size x L)."""
    a_rx = np.stack([array_response(ch.rx_geom, p.aoa_az, p.aoa_el) for p in ch.paths], axis=1)
    a_tx = np.stack([array_response(ch.tx_geom, p.aod_az, p.aod_el) for p in ch.paths], axis=1)
    return a_rx, a_tx


def channel_matrix(ch: ChannelRealization) -> np.ndarray:
    """Narrowband channel matrix, shape (rx_size, tx_size).

    ``H = sqrt(Nt*Nr/L) * sum_l gain_l * a_rx(aoa_l) a_tx(aod_l)^T``.  The
    transpose (rather than conjugate-transpose) on the departure response
    pairs with the transpose receive convention of the probing module, so a
    conjugate steering beamformer is matched on both sides of a reciprocal
    exchange.
    """
    a_rx, a_tx = response_matrices(ch)
    gains = np.array([p.gain for p in ch.paths])
    scale = np.sqrt(ch.tx_geom.size * ch.rx_geom.size / ch.num_paths)
    return scale * ((a_rx * gains) @ a_tx.T)


def evolve(ch: ChannelRealization, rho: float, rng: np.random.Generator) -> ChannelRealization:
    """One AR(1) step on the path gains; angles are held fixed.

    ``gain' = rho*gain + sqrt(1-rho^2)*eps`` with ``eps`` a fresh draw from
    the path's own gain distribution, so marginal power is preserved.
    """
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"invalid params: rho={rho} not in [0, 1]")
    los_eps = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi))
    n_nlos = sum(1 for p in ch.paths if not p.is_los)
    nlos_eps = _draw_nlos_gains(n_nlos, ch.nlos_offset_db, rng)

    mix = np.sqrt(1.0 - rho * rho)
    new_paths = []
    i = 0
    for p in ch.paths:
        eps = los_eps if p.is_los else nlos_eps[i]
        if not p.is_los:
            i += 1
        new_gain = rho * p.gain + mix * eps
        new_paths.append(
            PathComponent(
                gain=complex(new_gain),
                aod_az=p.aod_az,
                aod_el=p.aod_el,
                aoa_az=p.aoa_az,
                aoa_el=p.aoa_el,
                is_los=p.is_los,
            )
        )
    return ChannelRealization(
        paths=tuple(new_paths),
        tx_geom=ch.tx_geom,
        rx_geom=ch.rx_geom,
        carrier_ghz=ch.carrier_ghz,
        nlos_offset_db=ch.nlos_offset_db,
    )


def dft_matrix(n: int) -> np.ndarray:
    """Unitary n x n DFT matrix, entry (j, k) = exp(-2i*pi*j*k/n)/sqrt(n)."""
    if n < 1:
        raise ValueError(f"invalid DFT size {n}")
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n) / np.sqrt(n)


def _upa_dft_basis(geom: ArrayGeometry) -> np.ndarray:
    # Kronecker of per-axis DFTs matches the row-major (m*cols + n) flattening
    # used by array_response.
    return np.kron(dft_matrix(geom.rows), dft_matrix(geom.cols))


def virtual_channel(H: np.ndarray, tx_geom: ArrayGeometry, rx_geom: ArrayGeometry) -> np.ndarray:
    """Angular-domain representation ``U_r^H H U_t`` under per-axis DFT bases."""
    H = np.asarray(H)
    if H.shape != (rx_geom.size, tx_geom.size):
        raise ValueError(
            f"dimension mismatch: H is {H.shape}, geometries give "
            f"({rx_geom.size}, {tx_geom.size})"
        )
    U_r = _upa_dft_basis(rx_geom)
    U_t = _upa_dft_basis(tx_geom)
    return U_r.conj().T @ H @ U_t


def inverse_virtual_channel(
    H_v: np.ndarray, tx_geom: ArrayGeometry, rx_geom: ArrayGeometry
) -> np.ndarray:
    """Inverse of :func:`virtual_channel`: ``U_r H_v U_t^H``."""
    U_r = _upa_dft_basis(rx_geom)
    U_t = _upa_dft_basis(tx_geom)
    return U_r @ np.asarray(H_v) @ U_t.conj().T


def noise_like(x: np.ndarray | complex, snr_db: float, rng: np.random.Generator) -> np.ndarray:
    """Circularly-symmetric complex Gaussian of variance 10**(-snr_db/10)."""
    shape = np.shape(x)
    sigma = np.sqrt(10.0 ** (-snr_db / 10.0) / 2.0)
    return sigma * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def awgn(x: np.ndarray | complex, snr_db: float, rng: np.random.Generator) -> np.ndarray | complex:
    """Add receiver noise to ``x`` under the unit-pilot SNR convention."""
    noisy = np.asarray(x, dtype=complex) + noise_like(x, snr_db, rng)
    if np.isscalar(x) or np.ndim(x) == 0:
        return complex(noisy)
    return noisy
