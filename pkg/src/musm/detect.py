"""Exhaustive maximum-likelihood detectors and the detector complexity count."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DimensionMismatch, LayerExcess
from .modem import Constellation, int_to_bits

__all__ = [
    "DetectionResult",
    "ml_sm_batch",
    "ml_detect_sm",
    "vblast_candidates",
    "ml_vblast_batch",
    "ml_detect_vblast",
    "ml_complexity",
]


@dataclass(frozen=True)
class DetectionResult:
    index: int  # 1-based
    label: int
    metric: float
    bits_per_symbol: int

    @property
    def symbol_label(self):
        return int_to_bits(self.label, self.bits_per_symbol)


def ml_sm_batch(y, candidates, points):
    """Joint index/symbol ML search for many received vectors at once.

    Parameters
    ----------
    y : ndarray, shape (..., N_r, L)
        `L` received vectors sharing the same candidate set.
    candidates : ndarray, shape (..., N_r, N)
        Per-index channel responses (columns).
    points : ndarray, shape (M,)
        Constellation points in label order.

    Returns
    -------
    index, label : int ndarrays, shape (..., L)
        Zero-based index and symbol label of the minimizer. Ties go to the
        lowest index, then the lowest label.
    metric : ndarray, shape (..., L)
        ``min ||y - c_p x||^2``.
    """
    z = candidates.conj().swapaxes(-1, -2) @ y  # (..., N, L)
    col_energy = np.sum(np.abs(candidates) ** 2, axis=-2)  # (..., N)
    z = np.swapaxes(z, -1, -2)[..., :, :, None]  # (..., L, N, 1)
    e = np.abs(points) ** 2
    partial = e * col_energy[..., None, :, None] - 2.0 * (z * points.conj()).real
    n, m = partial.shape[-2:]
    flat = partial.reshape(partial.shape[:-2] + (n * m,))
    best = np.argmin(flat, axis=-1)
    best_val = np.take_along_axis(flat, best[..., None], axis=-1)[..., 0]
    metric = np.maximum(np.sum(np.abs(y) ** 2, axis=-2) + best_val, 0.0)
    return best // m, best % m, metric


def ml_detect_sm(y, candidates, constellation: Constellation) -> DetectionResult:
    """ML estimate of the active index (1-based) and symbol label for one vector."""
    y = np.asarray(y, dtype=complex).reshape(-1)
    c = np.asarray(candidates, dtype=complex)
    if c.ndim != 2 or c.shape[1] < 2:
        raise DimensionMismatch("candidates must be a matrix with at least two columns")
    if c.shape[0] != y.size:
        raise DimensionMismatch(f"y has {y.size} entries, candidates have {c.shape[0]} rows")
    idx, lab, metric = ml_sm_batch(y[:, None], c, constellation.points)
    return DetectionResult(int(idx[0]) + 1, int(lab[0]), float(metric[0]), constellation.bits_per_symbol)


@lru_cache(maxsize=None)
def _candidate_labels(order, layers):
    grids = np.meshgrid(*([np.arange(order)] * layers), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=0)  # (layers, M**layers)


def vblast_candidates(constellation: Constellation, layers):
    """All symbol vectors, shape (layers, M**layers), lexicographic in the labels."""
    labels = _candidate_labels(constellation.order, layers)
    return labels, constellation.points[labels]


def ml_vblast_batch(y, h_eff, constellation: Constellation):
    """Joint ML over all symbol vectors.

    `y` is (..., N_r, L) and `h_eff` is (..., N_r, layers). Returns label
    arrays of shape (..., L, layers).
    """
    layers = h_eff.shape[-1]
    labels, cand = vblast_candidates(constellation, layers)
    hc = h_eff @ cand  # (..., N_r, C)
    energy = np.sum(np.abs(hc) ** 2, axis=-2)  # (..., C)
    corr = (hc.conj().swapaxes(-1, -2) @ y).real  # (..., C, L)
    partial = energy[..., :, None] - 2.0 * corr
    best = np.argmin(partial, axis=-2)  # (..., L)
    return np.moveaxis(labels[:, best], 0, -1)


def ml_detect_vblast(y, h_eff, constellation: Constellation):
    """Joint ML detection of every layer; returns one label bit string per layer."""
    y = np.asarray(y, dtype=complex).reshape(-1)
    h = np.asarray(h_eff, dtype=complex)
    if h.ndim != 2 or h.shape[0] != y.size:
        raise DimensionMismatch("h_eff rows must match the received vector")
    if h.shape[1] > h.shape[0]:
        raise LayerExcess(f"{h.shape[1]} layers exceed {h.shape[0]} receive antennas")
    labels = ml_vblast_batch(y[:, None], h, constellation)[0]
    return [int_to_bits(int(lab), constellation.bits_per_symbol) for lab in labels]


def ml_complexity(n_t, n_r, j_k, n_beams, m_order):
    """Real-operation count of the BD-SM ML detector.

    ``2 N_t N_r J_k + 2 N N_r^2 2^(N_r log2 M) + 2 N M N_r + N M``
    """
    for v in (n_t, n_r, j_k, n_beams, m_order):
        if v < 1:
            raise ValueError("all complexity inputs must be >= 1")
    return (
        2 * n_t * n_r * j_k
        + 2 * n_beams * n_r**2 * int(m_order) ** n_r
        + 2 * n_beams * m_order * n_r
        + n_beams * m_order
    )
