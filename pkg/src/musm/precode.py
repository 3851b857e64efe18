"""Block-diagonalization precoding and the channel-inversion baseline."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization, CorrelationSet, draw_channels
from .errors import (
    BeamCountViolation,
    DimensionViolation,
    InsufficientSamples,
    RankDeficient,
    SingleUser,
    ZeroMatrix,
)
from .numerics import TOLERANCES, pseudo_inverse

__all__ = [
    "BdPrecoder",
    "max_beams",
    "interference_matrix",
    "power_scaling",
    "bd_null_space",
    "bd_precoder",
    "channel_inversion_precoder",
    "channel_inversion_batch",
    "beam_ccf_estimate",
]

MIN_CCF_SAMPLES = 10_000


@dataclass(frozen=True, eq=False)
class BdPrecoder:
    """Per-user BD precoders for one channel realization.

    Attributes
    ----------
    per_user_v : ndarray, shape (K, N_t, N)
        Orthonormal beam patterns of every user.
    rho : ndarray, shape (K,)
        Amplitude scaling making ``rho_k**2 * tr(V_k V_k^H) == e_tr``.
    effective : ndarray, shape (K, N_r, N)
        Unscaled effective channels ``H_k V_k``.
    """

    per_user_v: np.ndarray
    rho: np.ndarray
    effective: np.ndarray
    n_beams: int
    e_tr: float

    @property
    def n_users(self):
        return self.per_user_v.shape[0]


def max_beams(n_tx, n_rx, n_users):
    """Null-space dimension ``J_k = N_t - (K - 1) N_r`` left to each user."""
    return n_tx - (n_users - 1) * n_rx


def _per_user(h_all):
    if isinstance(h_all, ChannelRealization):
        return h_all.per_user
    return np.asarray(h_all)


def interference_matrix(h_all, k):
    """Channels of every user except the 1-based user `k`, stacked in ascending order."""
    h = _per_user(h_all)
    n_users = h.shape[0]
    if n_users < 2:
        raise SingleUser("interference matrix needs at least two users")
    if not 1 <= k <= n_users:
        raise IndexError(f"user {k} outside 1..{n_users}")
    others = [j for j in range(n_users) if j != k - 1]
    return h[others].reshape(-1, h.shape[-1])


def power_scaling(v, e_tr):
    """``sqrt(e_tr / tr(V V^H))``."""
    energy = float(np.sum(np.abs(np.asarray(v)) ** 2))
    if energy == 0.0:
        raise ZeroMatrix("precoder has zero energy")
    return float(np.sqrt(e_tr / energy))


def _fix_column_phase(v):
    """Rotate each column so its first non-negligible entry is real positive."""
    mag = np.abs(v)
    thresh = 1e-12 * np.max(mag, axis=-2, keepdims=True)
    first = np.argmax(mag > thresh, axis=-2)[..., None, :]
    pivot = np.take_along_axis(v, first, axis=-2)
    phase = pivot / np.where(np.abs(pivot) > 0, np.abs(pivot), 1.0)
    return v * phase.conj()


def bd_null_space(h, n_beams):
    """Batched BD beam selection.

    Parameters
    ----------
    h : ndarray, shape (..., K, N_r, N_t)
    n_beams : int

    Returns
    -------
    ndarray, shape (..., K, N_t, n_beams)
        For each user, the first `n_beams` right-singular vectors spanning
        the null space of the other users' stacked channels.
    """
    h = np.asarray(h)
    *lead, n_users, n_rx, n_tx = h.shape
    j_k = max_beams(n_tx, n_rx, n_users)
    if j_k <= 0:
        raise DimensionViolation(
            f"N_t={n_tx} must exceed (K-1)*N_r={(n_users - 1) * n_rx}"
        )
    if not 2 <= n_beams <= j_k:
        raise BeamCountViolation(f"beam count {n_beams} outside [2, J_k={j_k}]")
    if n_users == 1:
        v = np.zeros(tuple(lead) + (1, n_tx, n_beams), dtype=complex)
        v[..., np.arange(n_beams), np.arange(n_beams)] = 1.0
        return v
    others = np.array([[j for j in range(n_users) if j != k] for k in range(n_users)])
    h_int = h[..., others, :, :].reshape(tuple(lead) + (n_users, (n_users - 1) * n_rx, n_tx))
    _, s, vh = np.linalg.svd(h_int, full_matrices=True)
    rank = (n_users - 1) * n_rx
    if np.any(s[..., -1] <= TOLERANCES.psd_clamp_rel * s[..., 0]):
        raise RankDeficient("interference matrix is rank deficient")
    v = vh[..., rank : rank + n_beams, :].conj().swapaxes(-1, -2)
    return _fix_column_phase(v)


def bd_precoder(h_all, n_beams, e_tr=1.0) -> BdPrecoder:
    h = _per_user(h_all)
    v = bd_null_space(h, n_beams)
    energy = np.sum(np.abs(v) ** 2, axis=(-2, -1))
    rho = np.sqrt(e_tr / energy)
    return BdPrecoder(
        per_user_v=v,
        rho=rho,
        effective=h @ v,
        n_beams=int(n_beams),
        e_tr=float(e_tr),
    )


def channel_inversion_precoder(h_stack, e_tr_total):
    """Globally scaled Moore-Penrose precoder for single-antenna users.

    Returns ``(w_scaled, rho)`` with ``h_stack @ w_scaled == rho * I``.
    """
    w = pseudo_inverse(h_stack)
    rho = power_scaling(w, e_tr_total)
    return rho * w, rho


def channel_inversion_batch(h_stack, e_tr_total):
    """Scale factors ``rho`` for a batch of (..., K, N_t) stacked channels.

    Only the scale is needed at the receiver: ``tr(W W^H) = tr((H H^H)^-1)``.
    """
    h_stack = np.asarray(h_stack)
    gram = h_stack @ h_stack.conj().swapaxes(-1, -2)
    cond = np.linalg.cond(gram)
    if np.any(~np.isfinite(cond) | (cond > TOLERANCES.max_condition)):
        raise RankDeficient("stacked channel is ill-conditioned")
    inv_trace = np.trace(np.linalg.inv(gram), axis1=-2, axis2=-1).real
    return np.sqrt(e_tr_total / inv_trace)


def beam_ccf_estimate(corr_set: CorrelationSet, precoder: BdPrecoder, i, k, samples, rng=None, user=1):
    """Normalized Monte Carlo cross-correlation of two beam patterns.

    Fresh channels are drawn from `corr_set` while the beams of `user` stay
    fixed; returns ``E[(H v_i)^H (H v_k)] / sqrt(E|H v_i|^2 E|H v_k|^2)``.
    Beam indices are 1-based.
    """
    if samples < MIN_CCF_SAMPLES:
        raise InsufficientSamples(f"need at least {MIN_CCF_SAMPLES} samples, got {samples}")
    if i == k:
        return 1.0 + 0.0j
    rng = np.random.default_rng(rng)
    v = precoder.per_user_v[user - 1][:, [i - 1, k - 1]]
    h = draw_channels(corr_set, samples, rng)
    g = h @ v
    cross = np.mean(np.sum(g[..., 0].conj() * g[..., 1], axis=-1))
    p_i = np.mean(np.sum(np.abs(g[..., 0]) ** 2, axis=-1))
    p_k = np.mean(np.sum(np.abs(g[..., 1]) ** 2, axis=-1))
    return complex(cross / np.sqrt(p_i * p_k))
