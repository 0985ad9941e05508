"""Entropy and purity of reduced states; exact Page average as reference.

Entropies are in nats (natural logarithm) throughout.
"""

from __future__ import annotations

import numpy as np

EIG_FLOOR = 1e-12  # eigenvalues below this are treated as exact zeros


def purity(rho: np.ndarray) -> float:
    """Tr rho^2 of a density matrix."""
    return float(np.real(np.trace(rho @ rho)))


def renyi2(rho: np.ndarray) -> float:
    """Second Renyi entropy -ln Tr rho^2."""
    p = purity(rho)
    if p <= 0.0:
        raise ValueError(f"purity {p} must be positive")
    return -np.log(p)


def renyi2_from_purity(p: float) -> float:
    """-ln p, used on estimated purities which may legitimately exceed 1."""
    if p <= 0.0:
        raise ValueError(f"purity {p} must be positive")
    return -np.log(p)


def von_neumann(rho: np.ndarray) -> float:
    """-sum lam ln lam over the spectrum of rho (zeros floored away)."""
    lam = np.linalg.eigvalsh(rho)
    lam = lam[lam > EIG_FLOOR]
    return float(-np.sum(lam * np.log(lam)))


def entropies_from_spectrum(lam: np.ndarray) -> tuple[float, float]:
    """(S1, S2) from a Schmidt spectrum, avoiding a second diagonalisation."""
    lam = np.asarray(lam, dtype=float)
    p2 = float(np.sum(lam**2))
    lam = lam[lam > EIG_FLOOR]
    s1 = float(-np.sum(lam * np.log(lam)))
    return s1, -np.log(p2)


def page_value(n_sub: int, n_total: int) -> float:
    """Exact Haar-average entanglement entropy of an n_sub-qubit subsystem.

    S = sum_{k=d_B+1}^{d_A d_B} 1/k - (d_A - 1) / (2 d_B), valid for the
    smaller half of a bipartition (n_sub <= n_total - n_sub).
    """
    if not 1 <= n_sub <= n_total - n_sub:
        raise ValueError("page_value requires 1 <= n_sub <= n_total/2")
    da = 2**n_sub
    db = 2 ** (n_total - n_sub)
    harmonic = np.sum(1.0 / np.arange(db + 1, da * db + 1))
    return float(harmonic - (da - 1) / (2.0 * db))
