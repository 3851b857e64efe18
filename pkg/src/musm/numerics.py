"""Dense complex-matrix helpers and scalar special functions.

Everything here is a pure function of its arguments. Numerical tolerances
live in :data:`TOLERANCES` and can be overridden per call.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import erfc

from .errors import NonFiniteIntegrand, NotHermitian, NotPsd, RankDeficient

__all__ = [
    "Tolerances",
    "TOLERANCES",
    "check_hermitian",
    "hermitian_sqrt",
    "pseudo_inverse",
    "half_pi_nodes",
    "quad_half_pi",
    "q_function",
]


@dataclass(frozen=True)
class Tolerances:
    hermitian_rel: float = 1e-9
    psd_clamp_rel: float = 1e-10
    max_condition: float = 1e12
    quad_nodes: int = 64
    min_quad_nodes: int = 16


TOLERANCES = Tolerances()


def check_hermitian(a, tol=None):
    """Return `a` as a complex array, raising NotHermitian if it is not."""
    tol = TOLERANCES.hermitian_rel if tol is None else tol
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotHermitian(f"expected a square matrix, got shape {a.shape}")
    scale = np.max(np.abs(a)) if a.size else 0.0
    if np.max(np.abs(a - a.conj().T), initial=0.0) > tol * scale:
        raise NotHermitian("matrix differs from its conjugate transpose")
    return a


def hermitian_sqrt(a, *, hermitian_tol=None, clamp_tol=None):
    """Principal square root of a Hermitian positive semi-definite matrix.

    Eigenvalues in ``[-clamp_tol * lambda_max, 0)`` are treated as round-off
    and set to zero; anything more negative raises :class:`NotPsd`.

    Parameters
    ----------
    a : (n, n) array_like
        Hermitian PSD matrix (real symmetric input is fine).

    Returns
    -------
    (n, n) ndarray
        Hermitian PSD ``s`` with ``s @ s == a`` up to round-off. The dtype
        is real when `a` is real.
    """
    clamp_tol = TOLERANCES.psd_clamp_rel if clamp_tol is None else clamp_tol
    a = check_hermitian(a, hermitian_tol)
    # symmetrize away the last-digit asymmetry before eigh
    a = 0.5 * (a + a.conj().T)
    w, v = np.linalg.eigh(a)
    lam_max = max(w[-1], 0.0)
    if w[0] < -clamp_tol * lam_max or (lam_max == 0.0 and w[0] < 0.0):
        raise NotPsd(f"smallest eigenvalue {w[0]:.3e} below clamp threshold")
    w = np.clip(w, 0.0, None)
    s = (v * np.sqrt(w)) @ v.conj().T
    return 0.5 * (s + s.conj().T)


def pseudo_inverse(h, *, max_condition=None):
    """Right pseudo-inverse ``H^H (H H^H)^-1`` of a wide full-row-rank matrix."""
    max_condition = TOLERANCES.max_condition if max_condition is None else max_condition
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] > h.shape[1]:
        raise RankDeficient(f"need rows <= cols, got shape {h.shape}")
    gram = h @ h.conj().T
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > max_condition:
        raise RankDeficient(f"H H^H condition number {cond:.3e} exceeds {max_condition:.1e}")
    return np.linalg.solve(gram, h).conj().T


@lru_cache(maxsize=16)
def _leggauss(nodes):
    return np.polynomial.legendre.leggauss(nodes)


def half_pi_nodes(nodes=None):
    """Gauss-Legendre nodes on ``[0, pi/2]`` with weights already divided by pi.

    ``np.sum(w * f(theta))`` then equals ``(1/pi) * integral_0^{pi/2} f``.
    """
    nodes = TOLERANCES.quad_nodes if nodes is None else int(nodes)
    if nodes < TOLERANCES.min_quad_nodes:
        raise ValueError(f"need at least {TOLERANCES.min_quad_nodes} nodes, got {nodes}")
    x, w = _leggauss(nodes)
    theta = (x + 1.0) * (np.pi / 4.0)
    return theta, w * (np.pi / 4.0) / np.pi


def quad_half_pi(f, nodes=None):
    """Compute ``(1/pi) * integral_0^{pi/2} f(theta) dtheta``.

    `f` is called once with the array of nodes; scalar-only callables are
    evaluated node by node.
    """
    theta, w = half_pi_nodes(nodes)
    try:
        vals = np.asarray(f(theta), dtype=float)
        if vals.shape != theta.shape:
            vals = np.broadcast_to(vals, theta.shape)
    except (TypeError, ValueError):
        vals = np.array([float(f(t)) for t in theta])
    if not np.all(np.isfinite(vals)):
        raise NonFiniteIntegrand("integrand is not finite at every node")
    return float(np.dot(w, vals))


def q_function(x):
    """Gaussian tail probability Q(x) = 0.5 * erfc(x / sqrt(2))."""
    out = 0.5 * erfc(np.asarray(x, dtype=float) / np.sqrt(2.0))
    return float(out) if np.ndim(out) == 0 else out
