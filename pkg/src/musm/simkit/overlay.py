"""Analytical union-bound curves matched to a simulation config."""

from __future__ import annotations

import numpy as np

from ..channel import build_correlation_set, draw_channels
from ..errors import NoTheoryAvailable
from ..precode import bd_null_space
from ..theory import union_bound_bd, union_bound_tdma
from .engine import BerRecord, SimConfig

__all__ = ["PRECODER_DRAWS", "theory_curve", "theory_overlay"]

# channel draws used to average the precoder-conditional BD bound
PRECODER_DRAWS = 50


def theory_curve(cfg: SimConfig, snr_grid=None, draws=PRECODER_DRAWS):
    """Union bound for the system, labeling and power convention of `cfg`."""
    snr_grid = cfg.snr_grid_db if snr_grid is None else tuple(snr_grid)
    corr = build_correlation_set(cfg.channel)
    if cfg.system == "tdma_sm":
        return union_bound_tdma(corr, cfg.mod_order, snr_grid, e_tr=cfg.e_tr)
    if cfg.system == "bd_sm":
        n = cfg.index_size
        rng = np.random.default_rng(np.random.SeedSequence(int(cfg.master_seed), spawn_key=(2**31 - 1,)))
        h = draw_channels(corr, cfg.channel.n_users, rng, batch=draws)
        v = bd_null_space(h, n)[:, 0]  # user 1 of every draw
        rho = np.sqrt(cfg.bd_budget(n, 1) / np.sum(np.abs(v) ** 2, axis=(-2, -1)))
        return union_bound_bd(corr, v, rho, cfg.mod_order, snr_grid, e_tr=cfg.e_tr)
    raise NoTheoryAvailable(f"no analytical bound for system {cfg.system!r}")


def theory_overlay(cfg: SimConfig, snr_grid=None):
    """Theory curve as BER records with system id ``<system>_theory``."""
    curve = theory_curve(cfg, snr_grid)
    ch = cfg.channel
    return [
        BerRecord(
            system=f"{cfg.system}_theory",
            k_users=ch.n_users,
            n_tx=ch.n_tx,
            n_rx=ch.n_rx,
            beta=ch.beta_tx,
            rho=ch.rho_tx,
            n_beams=cfg.index_size,
            mod_order=cfg.mod_order,
            snr_db=float(snr),
            bits_sent=0,
            bit_errors=0,
            ber=float(a),
            ml_ops=cfg.ml_ops,
            seed=cfg.master_seed,
        )
        for snr, a in zip(curve.snr_grid, curve.aber)
    ]
