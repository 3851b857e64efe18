"""Gray-labelled constellations and the spatial-modulation bit mapping.

A spatial-modulation word of ``m = log2(n_index) + log2(M)`` bits is split
into a leading index field (natural binary, selects the active antenna or
beam) and a trailing symbol field (Gray label of the constellation point).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import IndexOutOfRange, LengthMismatch, UnsupportedOrder

__all__ = [
    "SUPPORTED_ORDERS",
    "Constellation",
    "SmFrame",
    "build_constellation",
    "bits_to_int",
    "int_to_bits",
    "sm_map",
    "sm_demap",
    "sm_map_batch",
    "sm_demap_batch",
    "index_bits",
    "usable_index_size",
]

SUPPORTED_ORDERS = (2, 4, 8, 16, 32, 64, 128, 256, 512, 1024, 2048, 4096, 8192)


def _gray(n):
    return n ^ (n >> 1)


def _gray_inverse(g):
    g = np.asarray(g).copy()
    shift = g >> 1
    while np.any(shift):
        g ^= shift
        shift >>= 1
    return g


@dataclass(frozen=True, eq=False)
class Constellation:
    """Unit-energy rectangular Gray constellation.

    ``points[label]`` is the point carrying the integer label `label`, so the
    point order is the label order.
    """

    order: int
    points: np.ndarray
    bits_i: int
    bits_q: int

    @property
    def bits_per_symbol(self):
        return self.bits_i + self.bits_q

    @property
    def labels(self):
        """Label bit strings, MSB first, one row per point."""
        return int_to_bits(np.arange(self.order), self.bits_per_symbol)

    @property
    def energies(self):
        return np.abs(self.points) ** 2

    def grid_position(self, label):
        """(column, row) of a label on the I/Q grid."""
        label = np.asarray(label)
        gi = label >> self.bits_q
        gq = label & ((1 << self.bits_q) - 1)
        return _gray_inverse(gi), _gray_inverse(gq)

    def nearest_labels(self, z):
        """Minimum-distance labels for points `z` (per-axis slicing on the grid)."""
        z = np.asarray(z) * self._scale
        side_i, side_q = 1 << self.bits_i, 1 << self.bits_q
        # amplitude a = (side - 1) - 2 * pos
        pos_i = np.clip(np.rint(((side_i - 1) - z.real) / 2.0), 0, side_i - 1).astype(np.int64)
        pos_q = np.clip(np.rint(((side_q - 1) - z.imag) / 2.0), 0, side_q - 1).astype(np.int64)
        return (_gray(pos_i) << self.bits_q) | _gray(pos_q)

    @property
    def _scale(self):
        side_i, side_q = 1 << self.bits_i, 1 << self.bits_q
        return np.sqrt((side_i**2 - 1) / 3.0 + (side_q**2 - 1) / 3.0)


@lru_cache(maxsize=None)
def build_constellation(order) -> Constellation:
    """BPSK or square/rectangular QAM with unit average energy.

    Odd bit counts use a ``2^ceil(b/2) x 2^floor(b/2)`` rectangle so that
    every label differs from its grid neighbours in a single bit.
    """
    order = int(order)
    if order not in SUPPORTED_ORDERS:
        raise UnsupportedOrder(f"modulation order {order} not in {SUPPORTED_ORDERS}")
    b = order.bit_length() - 1
    bits_i, bits_q = (b + 1) // 2, b // 2
    side_i, side_q = 1 << bits_i, 1 << bits_q
    labels = np.arange(order)
    gi, gq = labels >> bits_q, labels & ((1 << bits_q) - 1)
    amp_i = (side_i - 1) - 2.0 * _gray_inverse(gi)
    amp_q = (side_q - 1) - 2.0 * _gray_inverse(gq)
    pts = amp_i + 1j * amp_q
    pts /= np.sqrt((side_i**2 - 1) / 3.0 + (side_q**2 - 1) / 3.0)
    pts.setflags(write=False)
    return Constellation(order=order, points=pts, bits_i=bits_i, bits_q=bits_q)


def bits_to_int(bits):
    """MSB-first bit arrays (last axis) to integers."""
    bits = np.asarray(bits, dtype=np.int64)
    if bits.shape[-1] == 0:
        return np.zeros(bits.shape[:-1], dtype=np.int64)
    weights = 1 << np.arange(bits.shape[-1] - 1, -1, -1, dtype=np.int64)
    return bits @ weights


def int_to_bits(values, width):
    values = np.asarray(values, dtype=np.int64)
    shifts = np.arange(width - 1, -1, -1, dtype=np.int64)
    return ((values[..., None] >> shifts) & 1).astype(np.uint8)


def index_bits(n_index):
    n_index = int(n_index)
    if n_index < 2 or n_index & (n_index - 1):
        raise LengthMismatch(f"spatial alphabet size must be a power of two >= 2, got {n_index}")
    return n_index.bit_length() - 1


def usable_index_size(n_beams):
    """Largest power of two not exceeding `n_beams`."""
    if n_beams < 2:
        raise ValueError("need at least two spatial resources")
    return 1 << (int(n_beams).bit_length() - 1)


@dataclass(frozen=True, eq=False)
class SmFrame:
    index: int  # 1-based
    symbol: complex
    bits: np.ndarray
    label: int


def sm_map(bits, n_index, constellation: Constellation) -> SmFrame:
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    nb = index_bits(n_index)
    if bits.size != nb + constellation.bits_per_symbol:
        raise LengthMismatch(
            f"expected {nb + constellation.bits_per_symbol} bits, got {bits.size}"
        )
    index = int(bits_to_int(bits[:nb])) + 1
    label = int(bits_to_int(bits[nb:]))
    return SmFrame(index=index, symbol=complex(constellation.points[label]), bits=bits, label=label)


def sm_demap(index, symbol_label, n_index):
    """Bits of the SM word that selected the 1-based `index` and `symbol_label`."""
    nb = index_bits(n_index)
    if not 1 <= index <= n_index:
        raise IndexOutOfRange(f"index {index} outside 1..{n_index}")
    label = np.asarray(symbol_label, dtype=np.uint8).ravel()
    return np.concatenate([int_to_bits(index - 1, nb), label]).astype(np.uint8)


def sm_map_batch(bits, n_index, constellation: Constellation):
    """Vectorized map of ``(..., m)`` bits to zero-based indices and labels."""
    bits = np.asarray(bits)
    nb = index_bits(n_index)
    if bits.shape[-1] != nb + constellation.bits_per_symbol:
        raise LengthMismatch("bit word length does not match the SM alphabet")
    return bits_to_int(bits[..., :nb]), bits_to_int(bits[..., nb:])


def sm_demap_batch(index0, labels, n_index, constellation: Constellation):
    nb = index_bits(n_index)
    return np.concatenate(
        [int_to_bits(index0, nb), int_to_bits(labels, constellation.bits_per_symbol)], axis=-1
    )
