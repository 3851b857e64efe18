"""Non-stationary Kronecker channel with cluster-evolution survival masks.

The channel of user k is ``H_k = (E_R * R_R)^(1/2) H_W (E_T * R_T)^(1/2)``
where ``*`` is the elementwise product, ``R`` are exponential Toeplitz
correlation matrices and ``E`` are the scatterer survival matrices
``exp(-beta |m - n|)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InsufficientSamples, InvalidBeta, InvalidRho, ValidationError
from .numerics import hermitian_sqrt

__all__ = [
    "ChannelConfig",
    "CorrelationSet",
    "ChannelRealization",
    "survival_matrix",
    "base_correlation_matrix",
    "build_correlation_set",
    "complex_gaussian",
    "draw_channels",
    "realize_channel",
    "estimate_spatial_correlation",
    "expected_shared_scatterers",
]

MIN_CORRELATION_SAMPLES = 1000


@dataclass(frozen=True)
class ChannelConfig:
    """Array sizes and correlation knobs of the multi-user channel.

    ``beta_rx`` defaults to ``beta_tx`` when left as ``None``.
    """

    n_tx: int = 64
    n_rx: int = 2
    n_users: int = 1
    beta_tx: float = 0.3
    beta_rx: Optional[float] = None
    rho_tx: float = 0.5
    rho_rx: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.beta_rx is None:
            object.__setattr__(self, "beta_rx", self.beta_tx)
        for name in ("n_tx", "n_rx", "n_users"):
            if int(getattr(self, name)) < 1:
                raise ValidationError(f"{name} must be >= 1")
        for name in ("beta_tx", "beta_rx"):
            if not getattr(self, name) >= 0:
                raise InvalidBeta(f"{name} must be >= 0")
        for name in ("rho_tx", "rho_rx"):
            if not 0 <= getattr(self, name) < 1:
                raise InvalidRho(f"{name} must lie in [0, 1)")


@dataclass(frozen=True, eq=False)
class CorrelationSet:
    r_tx: np.ndarray
    r_rx: np.ndarray
    e_tx: np.ndarray
    e_rx: np.ndarray
    r_tx_eff: np.ndarray
    r_rx_eff: np.ndarray
    sqrt_tx: np.ndarray
    sqrt_rx: np.ndarray

    def __post_init__(self):
        for arr in vars(self).values():
            arr.setflags(write=False)

    @property
    def n_tx(self):
        return self.r_tx.shape[0]

    @property
    def n_rx(self):
        return self.r_rx.shape[0]


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """Per-user channel matrices, ``per_user[k]`` is N_r x N_t."""

    per_user: np.ndarray
    correlation: Optional[CorrelationSet] = field(default=None, repr=False)

    @property
    def n_users(self):
        return self.per_user.shape[0]

    @property
    def stacked(self):
        """All users stacked vertically, shape (K * N_r, N_t)."""
        k, nr, nt = self.per_user.shape
        return self.per_user.reshape(k * nr, nt)


def survival_matrix(n, beta):
    """Probability that antennas m and n still share a cluster: ``exp(-beta |m-n|)``."""
    if not beta >= 0:
        raise InvalidBeta(f"evolution factor must be >= 0, got {beta}")
    idx = np.arange(n)
    return np.exp(-beta * np.abs(idx[:, None] - idx[None, :]).astype(float))


def base_correlation_matrix(n, rho):
    """Exponential Toeplitz correlation ``rho^|m-n|`` of a uniform linear array."""
    if not 0 <= rho < 1:
        raise InvalidRho(f"adjacent correlation must lie in [0, 1), got {rho}")
    idx = np.arange(n)
    return float(rho) ** np.abs(idx[:, None] - idx[None, :]).astype(float)


def build_correlation_set(cfg: ChannelConfig) -> CorrelationSet:
    r_tx = base_correlation_matrix(cfg.n_tx, cfg.rho_tx)
    r_rx = base_correlation_matrix(cfg.n_rx, cfg.rho_rx)
    e_tx = survival_matrix(cfg.n_tx, cfg.beta_tx)
    e_rx = survival_matrix(cfg.n_rx, cfg.beta_rx)
    r_tx_eff = e_tx * r_tx
    r_rx_eff = e_rx * r_rx
    return CorrelationSet(
        r_tx=r_tx,
        r_rx=r_rx,
        e_tx=e_tx,
        e_rx=e_rx,
        r_tx_eff=r_tx_eff,
        r_rx_eff=r_rx_eff,
        sqrt_tx=hermitian_sqrt(r_tx_eff),
        sqrt_rx=hermitian_sqrt(r_rx_eff),
    )


def complex_gaussian(rng, shape):
    """Circularly-symmetric CN(0, 1) samples."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * np.sqrt(0.5)


def draw_channels(corr: CorrelationSet, n_users, rng, batch=None):
    """Draw independent correlated channels.

    Returns an array of shape ``(n_users, N_r, N_t)``, or
    ``(batch, n_users, N_r, N_t)`` when `batch` is given.
    """
    lead = (n_users,) if batch is None else (batch, n_users)
    h_w = complex_gaussian(rng, lead + (corr.n_rx, corr.n_tx))
    return corr.sqrt_rx @ h_w @ corr.sqrt_tx


def realize_channel(corr: CorrelationSet, cfg: ChannelConfig, rng) -> ChannelRealization:
    return ChannelRealization(draw_channels(corr, cfg.n_users, rng), corr)


def estimate_spatial_correlation(samples, tx_lag, rx_lag):
    """Normalized sample correlation ``E{h[q, p] conj(h[q + rx_lag, p + tx_lag])}``.

    Averages over every valid antenna pair, every user and every
    realization, then divides by the zero-lag average power.
    """
    if len(samples) < MIN_CORRELATION_SAMPLES:
        raise InsufficientSamples(
            f"need at least {MIN_CORRELATION_SAMPLES} realizations, got {len(samples)}"
        )
    h = np.stack([s.per_user if isinstance(s, ChannelRealization) else np.asarray(s) for s in samples])
    h = h.reshape((-1,) + h.shape[-2:])
    nr, nt = h.shape[-2:]
    if not (0 <= rx_lag < nr and 0 <= tx_lag < nt):
        raise ValueError(f"lags ({tx_lag}, {rx_lag}) exceed array size ({nt}, {nr})")
    if tx_lag == 0 and rx_lag == 0:
        return 1.0 + 0.0j
    a = h[:, : nr - rx_lag, : nt - tx_lag]
    b = h[:, rx_lag:, tx_lag:]
    cross = np.mean(a * b.conj())
    power = np.mean(np.abs(h) ** 2)
    return complex(cross / power)


def expected_shared_scatterers(antenna_index, beta, initial_count):
    """Expected number of clusters antenna `antenna_index` (1-based) shares with antenna 1."""
    if antenna_index < 1:
        raise ValueError("antenna_index is 1-based")
    if initial_count < 0:
        raise ValueError("initial_count must be >= 0")
    return float(initial_count) * float(np.exp(-beta * (antenna_index - 1)))
