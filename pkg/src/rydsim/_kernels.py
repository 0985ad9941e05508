"""Hot numeric kernels with numba-jitted and pure-numpy implementations.

The jitted path is used when numba imports cleanly; set the environment
variable ``RYDSIM_PURE_NUMPY=1`` to force the numpy fallback (useful for
debugging and for the benchmark in benchmarks/bench_kernels.py). Both
paths produce identical results up to floating-point rounding; kernels
are serial so outputs do not depend on thread or worker counts.
"""

from __future__ import annotations

import os

import numpy as np


def _want_numba() -> bool:
    flag = os.environ.get("RYDSIM_PURE_NUMPY", "").strip().lower()
    return flag not in ("1", "true", "yes", "on")


if _want_numba():
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        njit = None
else:
    njit = None

USING_NUMBA = njit is not None


def _sff_sum_numpy(eigenvalues, times):
    """Sum over realisations of |tr exp(-iHt)|^2 on a time grid.

    eigenvalues: (n_real, dim) float64, times: (n_t,) float64.
    """
    out = np.zeros(len(times))
    for row in eigenvalues:
        z = np.exp(-1j * np.outer(row, times)).sum(axis=0)
        out += z.real**2 + z.imag**2
    return out


def _hamming_quadratic_numpy(prob_rows, weights):
    """Per-row quadratic form P W P with the (-2)^-D weight matrix."""
    return np.einsum("ui,ij,uj->u", prob_rows, weights, prob_rows)


if USING_NUMBA:

    @njit(cache=True)
    def _sff_sum_numba(eigenvalues, times):
        n_real, dim = eigenvalues.shape
        n_t = times.shape[0]
        out = np.zeros(n_t)
        for k in range(n_real):
            for it in range(n_t):
                re = 0.0
                im = 0.0
                t = times[it]
                for n in range(dim):
                    ph = eigenvalues[k, n] * t
                    re += np.cos(ph)
                    im -= np.sin(ph)
                out[it] += re * re + im * im
        return out

    @njit(cache=True)
    def _hamming_quadratic_numba(prob_rows, weights):
        n_u, d = prob_rows.shape
        out = np.zeros(n_u)
        for u in range(n_u):
            acc = 0.0
            for i in range(d):
                pi = prob_rows[u, i]
                if pi == 0.0:
                    continue
                for j in range(d):
                    acc += pi * weights[i, j] * prob_rows[u, j]
            out[u] = acc
        return out

    sff_sum = _sff_sum_numba
    hamming_quadratic = _hamming_quadratic_numba
else:
    sff_sum = _sff_sum_numpy
    hamming_quadratic = _hamming_quadratic_numpy


def hamming_weights(n_sub: int) -> np.ndarray:
    """Weight matrix W[s,s'] = (-2)^(-D) over n_sub-bit strings."""
    s = np.arange(2**n_sub, dtype=np.uint32)
    d = np.bitwise_count(s[:, None] ^ s[None, :]).astype(np.float64)
    return (-2.0) ** (-d)
