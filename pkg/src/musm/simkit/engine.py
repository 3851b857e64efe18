"""Monte Carlo link simulation of the four multi-user systems.

Every (config, SNR, run) cell owns a random stream derived from
``SeedSequence(master_seed, spawn_key=(config_index, snr_index, run_index))``
and can therefore be executed in any process and in any order.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from threadpoolctl import threadpool_limits

from ..channel import ChannelConfig, CorrelationSet, build_correlation_set, complex_gaussian, draw_channels
from ..detect import ml_complexity, ml_sm_batch, ml_vblast_batch
from ..errors import MusmError, ValidationError
from ..modem import Constellation, build_constellation, usable_index_size
from ..precode import bd_null_space, channel_inversion_batch, max_beams

__all__ = [
    "SYSTEMS",
    "SimConfig",
    "BerRecord",
    "CellState",
    "cell_seed",
    "noise_variance",
    "simulate_symbols",
    "simulate_symbol",
    "simulate_cell",
    "run_campaign",
    "transmit_power",
]

SYSTEMS = ("tdma_sm", "bd_sm", "bd_vblast", "channel_inversion")

# "radiated": the BD budget E_Tr is sized so that every user radiates e_tr per
# symbol period (E_Tr = e_tr * N / active beams). "budget": E_Tr = e_tr, so an
# SM symbol on one of N beams radiates only e_tr / N.
BD_POWER_MODES = ("radiated", "budget")

# Upper bound on floats held by one vectorized detection step.
_WORK_BUDGET = 4_000_000


@dataclass(frozen=True)
class SimConfig:
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    system: str = "tdma_sm"
    n_beams: int = 32
    mod_order: int = 2
    snr_grid_db: tuple = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    runs: int = 10
    symbols_per_run: int = 100_000
    coherence_block: int = 100
    master_seed: int = 0
    e_tr: float = 1.0
    bd_power: str = "radiated"

    def __post_init__(self):
        object.__setattr__(self, "snr_grid_db", tuple(float(s) for s in self.snr_grid_db))
        if self.system == "bd_vblast":
            object.__setattr__(self, "n_beams", 2)
        self.validate()

    def validate(self):
        ch = self.channel
        if self.system not in SYSTEMS:
            raise ValidationError(f"unknown system {self.system!r}; choose from {SYSTEMS}")
        for name in ("runs", "symbols_per_run", "coherence_block"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be >= 1")
        if not self.e_tr > 0:
            raise ValidationError("e_tr must be positive")
        if self.bd_power not in BD_POWER_MODES:
            raise ValidationError(f"bd_power must be one of {BD_POWER_MODES}")
        build_constellation(self.mod_order)
        if self.system == "tdma_sm":
            if ch.n_tx < 2 or ch.n_tx & (ch.n_tx - 1):
                raise ValidationError("tdma_sm needs a power-of-two number of Tx antennas >= 2")
        elif self.system in ("bd_sm", "bd_vblast"):
            j_k = max_beams(ch.n_tx, ch.n_rx, ch.n_users)
            if j_k < 2:
                raise ValidationError(
                    f"N_t={ch.n_tx} leaves J_k={j_k} < 2 beams for K={ch.n_users}, N_r={ch.n_rx}"
                )
            if not 2 <= self.n_beams <= j_k:
                raise ValidationError(f"n_beams={self.n_beams} outside [2, J_k={j_k}]")
            if self.system == "bd_vblast" and ch.n_rx < 2:
                raise ValidationError("bd_vblast needs N_r >= 2 for two layers")
        elif self.system == "channel_inversion":
            if ch.n_users > ch.n_tx:
                raise ValidationError("channel inversion needs K <= N_t")

    @property
    def j_k(self):
        return max_beams(self.channel.n_tx, self.channel.n_rx, self.channel.n_users)

    def bd_budget(self, n_beams, active):
        """Power budget E_Tr handed to the BD precoder normalization."""
        if self.bd_power == "budget":
            return self.e_tr
        return self.e_tr * n_beams / active

    @property
    def index_size(self):
        """Size of the spatial alphabet carrying index bits (0 if none)."""
        if self.system == "tdma_sm":
            return self.channel.n_tx
        if self.system == "bd_sm":
            return usable_index_size(self.n_beams)
        return 0

    @property
    def bits_per_user(self):
        k = int(math.log2(self.mod_order))
        if self.system in ("tdma_sm", "bd_sm"):
            return int(math.log2(self.index_size)) + k
        if self.system == "bd_vblast":
            return 2 * k
        return k

    @property
    def users_counted(self):
        return 1 if self.system == "tdma_sm" else self.channel.n_users

    @property
    def ml_ops(self):
        """Detector complexity; the index alphabet is N_t for TDMA."""
        ch = self.channel
        n = {"tdma_sm": ch.n_tx, "bd_sm": self.index_size, "bd_vblast": 2}.get(self.system, 1)
        j_k = max(self.j_k, 1) if self.system != "tdma_sm" else ch.n_tx
        return ml_complexity(ch.n_tx, ch.n_rx, j_k, n, self.mod_order)


@dataclass
class BerRecord:
    system: str
    k_users: int
    n_tx: int
    n_rx: int
    beta: float
    rho: float
    n_beams: int
    mod_order: int
    snr_db: float
    bits_sent: int
    bit_errors: int
    ber: float
    ml_ops: float
    seed: int
    wall_time_s: float = 0.0
    error: str = ""


@dataclass
class CellState:
    """Everything a cell needs besides its random stream."""

    cfg: SimConfig
    corr: CorrelationSet
    constellation: Constellation
    sigma2: float

    @classmethod
    def create(cls, cfg: SimConfig, snr_db: float):
        return cls(
            cfg=cfg,
            corr=build_correlation_set(cfg.channel),
            constellation=build_constellation(cfg.mod_order),
            sigma2=noise_variance(cfg.e_tr, snr_db),
        )


def noise_variance(e_tr, snr_db):
    """Per-receive-antenna noise variance for ``SNR = e_tr / sigma^2``."""
    return float(e_tr) * 10.0 ** (-float(snr_db) / 10.0)


def cell_seed(master_seed, cfg_index, snr_index, run_index):
    return np.random.SeedSequence(int(master_seed), spawn_key=(int(cfg_index), int(snr_index), int(run_index)))


def _popcount(x):
    return np.bitwise_count(np.asarray(x, dtype=np.uint64)).astype(np.int64)


def _noise(rng, shape, sigma2):
    if sigma2 == 0.0:
        return np.zeros(shape, dtype=complex)
    return complex_gaussian(rng, shape) * np.sqrt(sigma2)


def _draw_words(rng, shape, index_size, order):
    """Uniform index and label integers, equivalent to drawing uniform bits."""
    idx = rng.integers(0, index_size, size=shape) if index_size else None
    lab = rng.integers(0, order, size=shape)
    return idx, lab


def _tdma_sm(state, rng, n_blocks, block):
    cfg, const = state.cfg, state.constellation
    h = draw_channels(state.corr, 1, rng, batch=n_blocks)[:, 0]  # (B, Nr, Nt)
    idx, lab = _draw_words(rng, (n_blocks, block), cfg.channel.n_tx, const.order)
    x = const.points[lab] * np.sqrt(cfg.e_tr)
    cols = np.take_along_axis(h, np.broadcast_to(idx[:, None, :], (n_blocks, h.shape[1], block)), axis=-1)
    y = cols * x[:, None, :] + _noise(rng, cols.shape, state.sigma2)
    idx_hat, lab_hat, _ = ml_sm_batch(y, h * np.sqrt(cfg.e_tr), const.points)
    errors = _popcount(idx ^ idx_hat).sum() + _popcount(lab ^ lab_hat).sum()
    return idx.size * cfg.bits_per_user, int(errors)


def _bd_effective(state, rng, n_blocks, n_beams, active):
    cfg = state.cfg
    h = draw_channels(state.corr, cfg.channel.n_users, rng, batch=n_blocks)  # (B, K, Nr, Nt)
    v = bd_null_space(h, n_beams)
    rho = np.sqrt(cfg.bd_budget(n_beams, active) / np.sum(np.abs(v) ** 2, axis=(-2, -1)))
    return rho[..., None, None] * (h @ v)  # (B, K, Nr, N)


def _bd_sm(state, rng, n_blocks, block):
    cfg, const = state.cfg, state.constellation
    n = cfg.index_size
    heff = _bd_effective(state, rng, n_blocks, n, 1)
    lead = heff.shape[:2]
    idx, lab = _draw_words(rng, lead + (block,), n, const.order)
    cols = np.take_along_axis(heff, np.broadcast_to(idx[..., None, :], lead + (heff.shape[2], block)), axis=-1)
    y = cols * const.points[lab][..., None, :] + _noise(rng, cols.shape, state.sigma2)
    idx_hat, lab_hat, _ = ml_sm_batch(y, heff, const.points)
    errors = _popcount(idx ^ idx_hat).sum() + _popcount(lab ^ lab_hat).sum()
    return idx.size * cfg.bits_per_user, int(errors)


def _bd_vblast(state, rng, n_blocks, block):
    cfg, const = state.cfg, state.constellation
    heff = _bd_effective(state, rng, n_blocks, 2, 2)  # (B, K, Nr, 2)
    lead = heff.shape[:2]
    _, lab = _draw_words(rng, lead + (2, block), 0, const.order)
    y = heff @ const.points[lab] + _noise(rng, lead + (heff.shape[2], block), state.sigma2)
    lab_hat = ml_vblast_batch(y, heff, const)  # (B, K, L, 2)
    errors = _popcount(lab ^ np.swapaxes(lab_hat, -1, -2)).sum()
    return lab.shape[0] * lab.shape[1] * block * cfg.bits_per_user, int(errors)


def _channel_inversion(state, rng, n_blocks, block):
    cfg, const = state.cfg, state.constellation
    k = cfg.channel.n_users
    h = draw_channels(state.corr, k, rng, batch=n_blocks)[:, :, 0, :]  # first Rx antenna, (B, K, Nt)
    rho = channel_inversion_batch(h, k * cfg.e_tr)  # (B,)
    _, lab = _draw_words(rng, (n_blocks, k, block), 0, const.order)
    y = rho[:, None, None] * const.points[lab] + _noise(rng, lab.shape, state.sigma2)
    lab_hat = const.nearest_labels(y / rho[:, None, None])
    errors = _popcount(lab ^ lab_hat).sum()
    return lab.size * cfg.bits_per_user, int(errors)


_KERNELS = {
    "tdma_sm": _tdma_sm,
    "bd_sm": _bd_sm,
    "bd_vblast": _bd_vblast,
    "channel_inversion": _channel_inversion,
}


def _blocks_per_chunk(cfg: SimConfig, block):
    ch = cfg.channel
    m = cfg.mod_order
    per_block = {
        "tdma_sm": block * ch.n_tx * m + ch.n_rx * ch.n_tx,
        "bd_sm": ch.n_users * (block * cfg.index_size * m + ch.n_tx * ch.n_tx),
        "bd_vblast": ch.n_users * (block * m * m + ch.n_tx * ch.n_tx),
        "channel_inversion": ch.n_users * (block + ch.n_tx),
    }[cfg.system]
    return max(1, _WORK_BUDGET // max(per_block, 1))


def simulate_symbols(state: CellState, rng, n_symbols):
    """Simulate `n_symbols` symbol periods per user in coherence blocks.

    Returns ``(bits_sent, bit_errors)`` pooled over the simulated users.
    """
    cfg = state.cfg
    kernel = _KERNELS[cfg.system]
    block = cfg.coherence_block
    full, rest = divmod(int(n_symbols), block)
    step = _blocks_per_chunk(cfg, block)
    bits = errs = 0
    done = 0
    while done < full:
        nb = min(step, full - done)
        b, e = kernel(state, rng, nb, block)
        bits += b
        errs += e
        done += nb
    if rest:
        b, e = kernel(state, rng, 1, rest)
        bits += b
        errs += e
    return bits, errs


def simulate_symbol(system, state: CellState, rng):
    """One symbol period (a single fresh channel) of `system`."""
    if system != state.cfg.system:
        state = replace(state, cfg=replace(state.cfg, system=system))
    return _KERNELS[system](state, rng, 1, 1)


def transmit_power(state: CellState, rng, n_blocks=200):
    """Measured average power radiated per user and symbol period."""
    cfg, const = state.cfg, state.constellation
    k = cfg.channel.n_users
    block = cfg.coherence_block
    if cfg.system == "tdma_sm":
        lab = rng.integers(0, const.order, size=n_blocks * block)
        return float(np.mean(np.abs(const.points[lab]) ** 2) * cfg.e_tr)
    h = draw_channels(state.corr, k, rng, batch=n_blocks)
    if cfg.system == "channel_inversion":
        hs = h[:, :, 0, :]
        rho = channel_inversion_batch(hs, k * cfg.e_tr)
        w = np.linalg.solve(hs @ hs.conj().swapaxes(-1, -2), hs).conj().swapaxes(-1, -2)
        lab = rng.integers(0, const.order, size=(n_blocks, k, block))
        x = rho[:, None, None] * (w @ const.points[lab])
        return float(np.mean(np.sum(np.abs(x) ** 2, axis=1)) / k)
    if cfg.system == "bd_sm":
        n, active = cfg.index_size, 1
    else:
        n, active = 2, 2
    v = bd_null_space(h, n)
    rho2 = cfg.bd_budget(n, active) / np.sum(np.abs(v) ** 2, axis=(-2, -1))  # (B, K)
    lab = rng.integers(0, const.order, size=(n_blocks, k, active, block))
    if cfg.system == "bd_sm":
        idx = rng.integers(0, n, size=(n_blocks, k, block))
        s = np.zeros((n_blocks, k, n, block), dtype=complex)
        np.put_along_axis(s, idx[:, :, None, :], const.points[lab], axis=2)
    else:
        s = const.points[lab]
    x = v @ s
    return float(np.mean(rho2[..., None] * np.sum(np.abs(x) ** 2, axis=-2)))


def simulate_cell(cfg: SimConfig, cfg_index, snr_index, run_index):
    """Run one (config, SNR, run) cell; returns ``(bits, errors, seconds)``."""
    t0 = time.perf_counter()
    state = CellState.create(cfg, cfg.snr_grid_db[snr_index])
    rng = np.random.default_rng(cell_seed(cfg.master_seed, cfg_index, snr_index, run_index))
    bits, errs = simulate_symbols(state, rng, cfg.symbols_per_run)
    return bits, errs, time.perf_counter() - t0


def _cell_task(args):
    cfg, ci, si, ri = args
    try:
        with threadpool_limits(limits=1):
            return (*simulate_cell(cfg, ci, si, ri), "")
    except MusmError as exc:
        return 0, 0, 0.0, f"{type(exc).__name__}: {exc}"


def default_workers():
    env = os.environ.get("SM_SIM_WORKERS")
    return max(1, int(env)) if env else 1


def run_campaign(cfg_list, workers=None, record_timing=True, progress=None):
    """Simulate every (config, SNR) point and average over runs.

    Records come back in config order, then SNR order, and are identical
    for any `workers`. With ``record_timing=False`` the wall time column is
    zeroed so that output files can be compared byte for byte.
    """
    cfg_list = list(cfg_list)
    workers = default_workers() if workers is None else max(1, int(workers))
    tasks = [
        (cfg, ci, si, ri)
        for ci, cfg in enumerate(cfg_list)
        for si in range(len(cfg.snr_grid_db))
        for ri in range(cfg.runs)
    ]
    if workers == 1:
        results = []
        for t in tasks:
            results.append(_cell_task(t))
            if progress:
                progress(len(results), len(tasks))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_cell_task, tasks, chunksize=1))

    cells = {}
    for (cfg, ci, si, _), res in zip(tasks, results):
        cells.setdefault((ci, si), []).append(res)

    records = []
    for ci, cfg in enumerate(cfg_list):
        ch = cfg.channel
        for si, snr in enumerate(cfg.snr_grid_db):
            runs = cells[(ci, si)]
            bits = sum(r[0] for r in runs)
            errs = sum(r[1] for r in runs)
            wall = sum(r[2] for r in runs) if record_timing else 0.0
            err_msg = next((r[3] for r in runs if r[3]), "")
            # equal run sizes make the pooled ratio the mean of per-run BERs
            ber = errs / bits if bits else float("nan")
            records.append(
                BerRecord(
                    system=cfg.system,
                    k_users=ch.n_users,
                    n_tx=ch.n_tx,
                    n_rx=ch.n_rx,
                    beta=ch.beta_tx,
                    rho=ch.rho_tx,
                    n_beams=cfg.index_size if cfg.system != "channel_inversion" else 1,
                    mod_order=cfg.mod_order,
                    snr_db=snr,
                    bits_sent=bits,
                    bit_errors=errs,
                    ber=ber,
                    ml_ops=cfg.ml_ops,
                    seed=cfg.master_seed,
                    wall_time_s=wall,
                    error=err_msg,
                )
            )
    return records
