"""Union bounds on the average BER of TDMA-SM and BD-SM.

The pairwise error probability between two transmit vectors differing by
``e`` is ``E[Q(sqrt(gamma ||H e||^2 / 2))]`` over the Kronecker channel.
With the Craig form of the Q-function this becomes
``(1/pi) int_0^{pi/2} M(-gamma / (4 sin^2 t)) dt`` where
``M(s) = prod_i (1 - s lambda_i mu)^-1`` is the MGF of ``||H e||^2``,
``lambda_i`` the receive correlation eigenvalues and ``mu = e^H R_T e``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import CorrelationSet
from .errors import BudgetExceeded, DimensionMismatch, DivergentRegion
from .modem import build_constellation
from .numerics import check_hermitian, half_pi_nodes, quad_half_pi

__all__ = [
    "PEP_SCALE",
    "PAIR_BUDGET",
    "PepContext",
    "TheoryCurve",
    "pep_context",
    "mgf_quadratic_form",
    "average_pep",
    "average_pep_batch",
    "union_bound_tdma",
    "effective_tx_correlation",
    "union_bound_bd",
]

# MGF argument is -PEP_SCALE * gamma / sin^2(theta)
PEP_SCALE = 0.25
# Largest alphabet (index x symbol) enumerated without allow_large=True.
PAIR_BUDGET = 4096
REPORT_CAP = 0.5


@dataclass(frozen=True)
class PepContext:
    error_vector: np.ndarray
    lambda_rx: np.ndarray
    mu: float
    gamma: float

    def __post_init__(self):
        lam = np.clip(np.asarray(self.lambda_rx, dtype=float), 0.0, None)
        object.__setattr__(self, "lambda_rx", lam)
        object.__setattr__(self, "mu", max(float(self.mu), 0.0))


@dataclass
class TheoryCurve:
    snr_grid: np.ndarray
    aber: np.ndarray  # clipped at REPORT_CAP
    system: str
    aber_raw: np.ndarray = None
    config: dict = field(default_factory=dict)


def pep_context(e, r_tx, r_rx, gamma):
    """Build a PepContext from an error vector and the two correlation matrices."""
    e = np.asarray(e, dtype=complex).ravel()
    r_tx = check_hermitian(r_tx)
    if r_tx.shape[0] != e.size:
        raise DimensionMismatch("error vector and Tx correlation sizes differ")
    lam = np.linalg.eigvalsh(check_hermitian(r_rx))
    mu = float(np.real(e.conj() @ r_tx @ e))
    return PepContext(e, lam, mu, float(gamma))


def mgf_quadratic_form(s, ctx: PepContext):
    """MGF of ``||H e||^2`` evaluated at ``s <= 0``."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr > 0):
        raise DivergentRegion("MGF is only evaluated for s <= 0")
    terms = 1.0 - s_arr[..., None] * ctx.lambda_rx * ctx.mu
    out = np.prod(1.0 / terms, axis=-1)
    return float(out) if out.ndim == 0 else out


def average_pep(ctx: PepContext, nodes=None):
    """Channel-averaged pairwise error probability via the MGF integral."""
    def integrand(theta):
        return mgf_quadratic_form(-PEP_SCALE * ctx.gamma / np.sin(theta) ** 2, ctx)

    return quad_half_pi(integrand, nodes)


def average_pep_batch(mu, lambda_rx, gamma, nodes=None):
    """Vectorized average PEP.

    Returns an array of shape ``gamma.shape + mu.shape``.
    """
    theta, w = half_pi_nodes(nodes)
    mu = np.clip(np.asarray(mu, dtype=float), 0.0, None)
    gamma = np.asarray(gamma, dtype=float)
    lam = np.clip(np.asarray(lambda_rx, dtype=float), 0.0, None)
    scale = PEP_SCALE / np.sin(theta) ** 2  # (T,)
    # (G, P, T): gamma * mu * scale
    a = gamma.reshape(gamma.shape + (1,) * mu.ndim + (1,)) * mu[..., None] * scale
    integrand = np.ones_like(a)
    for li in lam:
        integrand /= 1.0 + a * li
    return integrand @ w


def _pair_weights(mu_of_pair, hamming):
    """Collapse pairs with equal mu; returns unique mu and summed Hamming weights."""
    key = np.round(mu_of_pair, 12)
    uniq, inverse = np.unique(key, return_inverse=True)
    weights = np.bincount(inverse.ravel(), weights=hamming.ravel().astype(float))
    return uniq, weights


def _sm_pairs(r_tx, points, index_size):
    """mu and Hamming distance for every ordered pair of SM transmit vectors.

    Pairs are indexed as (p, l, q, k): index p with label l sent, index q
    with label k decided; identical pairs carry zero weight.
    """
    n, m = index_size, points.size
    s_a = points[None, :, None, None]
    s_b = points[None, None, None, :]
    r_pp = np.real(np.diag(r_tx))[:, None, None, None]
    r_qq = np.real(np.diag(r_tx))[None, None, :, None]
    r_pq = r_tx[:, None, :, None]
    mu = np.abs(s_a) ** 2 * r_pp + np.abs(s_b) ** 2 * r_qq - 2.0 * np.real(s_a.conj() * s_b * r_pq)
    p = np.arange(n)[:, None, None, None]
    q = np.arange(n)[None, None, :, None]
    la = np.arange(m)[None, :, None, None]
    lb = np.arange(m)[None, None, None, :]
    ham = np.bitwise_count((p ^ q).astype(np.uint64)) + np.bitwise_count((la ^ lb).astype(np.uint64))
    return np.broadcast_to(mu, (n, m, n, m)), np.broadcast_to(ham, (n, m, n, m))


def _sm_union_bound(r_tx, lam, points, gammas, nodes):
    n = r_tx.shape[0]
    m = points.size
    mu, ham = _sm_pairs(r_tx, points, n)
    uniq, weights = _pair_weights(mu, ham)
    keep = weights > 0
    pep = average_pep_batch(uniq[keep], lam, gammas, nodes)  # (G, U)
    bits = np.log2(n) + np.log2(m)
    return (pep @ weights[keep]) / (n * m * bits)


def _check_budget(size, allow_large):
    if size > PAIR_BUDGET and not allow_large:
        raise BudgetExceeded(
            f"alphabet of {size} transmit vectors exceeds the enumeration budget {PAIR_BUDGET}"
        )


def _db_to_linear(snr_db):
    return 10.0 ** (np.asarray(snr_db, dtype=float) / 10.0)


def union_bound_tdma(corr: CorrelationSet, mod_order, snr_grid_db, *, e_tr=1.0, nodes=None, allow_large=False):
    """Union bound on the BER of TDMA-SM over all N_t antennas.

    The SNR axis is ``e_tr / sigma^2``; every transmit vector places
    ``sqrt(e_tr) * s`` on one antenna, so the symbol power cancels.
    """
    points = build_constellation(mod_order).points
    n_tx = corr.n_tx
    _check_budget(n_tx * points.size, allow_large)
    lam = np.linalg.eigvalsh(corr.r_rx_eff)
    gammas = _db_to_linear(snr_grid_db)
    raw = _sm_union_bound(corr.r_tx_eff, lam, points, gammas, nodes)
    return TheoryCurve(
        snr_grid=np.asarray(snr_grid_db, dtype=float),
        aber=np.minimum(raw, REPORT_CAP),
        system="tdma_sm",
        aber_raw=raw,
        config={"n_tx": n_tx, "n_rx": corr.n_rx, "mod_order": int(mod_order)},
    )


def effective_tx_correlation(r_tx_eff, v):
    """Transmit correlation seen through a precoder: ``V^H R V``."""
    r = np.asarray(r_tx_eff)
    v = np.asarray(v)
    if r.shape[-1] != v.shape[-2]:
        raise DimensionMismatch(f"R is {r.shape}, precoder is {v.shape}")
    out = v.conj().swapaxes(-1, -2) @ r @ v
    return 0.5 * (out + out.conj().swapaxes(-1, -2))


def union_bound_bd(corr: CorrelationSet, v, rho, mod_order, snr_grid_db, *, e_tr=1.0, nodes=None, allow_large=False):
    """Union bound on the BER of one BD-SM user.

    Parameters
    ----------
    v : ndarray, shape (N_t, N) or (S, N_t, N)
        Beam patterns. A stack of S precoders (e.g. from S channel draws)
        averages the conditional bound over them.
    rho : float or ndarray of shape (S,)
        Precoder amplitude scaling; the effective SNR is
        ``rho^2 * gamma / e_tr``.
    """
    v = np.asarray(v)
    single = v.ndim == 2
    v = v[None] if single else v
    rho = np.broadcast_to(np.asarray(rho, dtype=float), v.shape[:1])
    points = build_constellation(mod_order).points
    n = v.shape[-1]
    _check_budget(n * points.size, allow_large)
    lam = np.linalg.eigvalsh(corr.r_rx_eff)
    gammas = _db_to_linear(snr_grid_db)
    r_eff = effective_tx_correlation(corr.r_tx_eff, v)
    raw = np.zeros(gammas.shape)
    for r_s, rho_s in zip(r_eff, rho):
        raw += _sm_union_bound(r_s, lam, points, gammas * rho_s**2 / e_tr, nodes)
    raw /= len(r_eff)
    return TheoryCurve(
        snr_grid=np.asarray(snr_grid_db, dtype=float),
        aber=np.minimum(raw, REPORT_CAP),
        system="bd_sm",
        aber_raw=raw,
        config={"n_beams": n, "n_rx": corr.n_rx, "mod_order": int(mod_order), "precoders": len(r_eff)},
    )
