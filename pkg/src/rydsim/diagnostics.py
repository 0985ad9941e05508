"""Spectral and dynamical signatures separating chaotic from localised regimes.

Everything here consumes exact-diagonalisation data of disorder ensembles:
level-spacing ratios, the spectral form factor, entropy scaling of
mid-spectrum eigenstates, the density of states, ground-state magnetisation
and excitation statistics. Ensemble members are independent tasks; the
collectors below optionally fan them out over a process pool, with results
reduced in realisation order so outputs do not depend on the worker count.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import linalg
from ._kernels import sff_sum
from ._seeding import seed_for
from .model import (ControlSnapshot, Geometry, HamiltonianSpec,
                    build_hamiltonian, sample_disorder)

EPS_DEGEN_REL = 1e-10  # spacings below this fraction of the spectral width merge


@dataclass(frozen=True)
class EnsembleSpec:
    """A disorder ensemble: one control snapshot, many grayscale draws."""

    geometry: Geometry
    omega: float
    delta_local: float
    delta_global: float
    n_realisations: int
    seed_base: int
    phi: float = 0.0

    def __post_init__(self):
        if self.n_realisations < 1:
            raise ValueError("n_realisations must be >= 1")

    def realisation(self, k: int) -> HamiltonianSpec:
        disorder = sample_disorder(self.geometry.n_atoms, seed_for(self.seed_base, k))
        snap = ControlSnapshot(omega=self.omega, phi=self.phi,
                               delta_global=self.delta_global, delta_local=self.delta_local)
        return HamiltonianSpec(geometry=self.geometry, disorder=disorder, snapshot=snap)


def _eigenvalues_task(args):
    espec, k = args
    return np.linalg.eigvalsh(build_hamiltonian(espec.realisation(k)))


def _entropy_scan_task(args):
    espec, k, n_states, center = args
    eig = linalg.eigh(build_hamiltonian(espec.realisation(k)))
    return eigenstate_entropy_scan(eig, center_energy=center, n_states=n_states)


def _half_chain_task(args):
    espec, k = args
    eig = linalg.eigh(build_hamiltonian(espec.realisation(k)))
    n = espec.geometry.n_atoms
    return eig.eigenvalues, half_chain_entropies(eig, n)


def _run_tasks(task_fn, args_list, workers):
    if workers <= 1:
        return [task_fn(a) for a in args_list]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(task_fn, args_list, chunksize=1))


def collect_eigenvalues(espec: EnsembleSpec, workers: int = 1) -> np.ndarray:
    """(n_realisations, 2^N) eigenvalue array for the ensemble."""
    rows = _run_tasks(_eigenvalues_task, [(espec, k) for k in range(espec.n_realisations)],
                      workers)
    return np.array(rows)


def collect_entropy_scan(espec: EnsembleSpec, n_states: int = 10, center: float = 0.0,
                         workers: int = 1) -> np.ndarray:
    """(n_realisations, n_states, N-1) mid-spectrum entropy-scaling tables."""
    args = [(espec, k, n_states, center) for k in range(espec.n_realisations)]
    return np.array(_run_tasks(_entropy_scan_task, args, workers))


def collect_half_chain(espec: EnsembleSpec, workers: int = 1):
    """Eigenvalues and half-chain S1 for every eigenstate of the ensemble."""
    args = [(espec, k) for k in range(espec.n_realisations)]
    out = _run_tasks(_half_chain_task, args, workers)
    energies = np.concatenate([e for e, _ in out])
    entropies = np.concatenate([s for _, s in out])
    return energies, entropies


# ---------------------------------------------------------------------------
# level-spacing statistics


def spacing_ratios(eigenvalues: np.ndarray) -> np.ndarray:
    """Consecutive-spacing ratios folded to r = min(r, 1/r).

    Spacings below EPS_DEGEN_REL times the spectral width are treated as
    numerical degeneracies and dropped before forming ratios.
    """
    ev = np.sort(np.asarray(eigenvalues, dtype=float))
    if len(ev) < 3:
        raise ValueError("need at least 3 eigenvalues for spacing ratios")
    s = np.diff(ev)
    width = ev[-1] - ev[0]
    s = s[s > EPS_DEGEN_REL * width]
    if len(s) < 2:
        raise ValueError("too few distinct spacings after degeneracy merging")
    r = s[1:] / s[:-1]
    return np.minimum(r, 1.0 / r)


def ratio_histogram(values: np.ndarray, n_bins: int = 200):
    """Normalized density of folded spacing ratios on [0, 1]."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("empty ratio sample")
    density, edges = np.histogram(values, bins=n_bins, range=(0.0, 1.0), density=True)
    return density, edges


def ensemble_mean_ratio(eigenvalue_rows: np.ndarray) -> float:
    """Mean folded ratio pooled over ensemble members."""
    return float(np.concatenate([spacing_ratios(row) for row in eigenvalue_rows]).mean())


def goe_reference_ratio(n_matrices: int = 40, dim: int = 800, seed: int = 20250) -> float:
    """Mean folded ratio of sampled GOE matrices (independent oracle)."""
    rng = np.random.default_rng(seed)
    vals = []
    for _ in range(n_matrices):
        a = rng.standard_normal((dim, dim))
        vals.append(spacing_ratios(np.linalg.eigvalsh((a + a.T) / np.sqrt(2.0))))
    return float(np.concatenate(vals).mean())


def poisson_reference_ratio(n_samples: int = 1_000_000, seed: int = 20251) -> float:
    """Mean folded ratio of i.i.d. exponential spacings (independent oracle)."""
    rng = np.random.default_rng(seed)
    s = rng.exponential(size=n_samples + 1)
    r = s[1:] / s[:-1]
    return float(np.minimum(r, 1.0 / r).mean())


# ---------------------------------------------------------------------------
# spectral form factor


def sff(eigenvalue_rows: np.ndarray, times: np.ndarray) -> np.ndarray:
    """Ensemble-averaged |tr exp(-iHt)|^2 / 4^N on a time grid; sff(0) = 1."""
    rows = np.ascontiguousarray(np.asarray(eigenvalue_rows, dtype=float))
    if rows.ndim != 2:
        raise ValueError("eigenvalue sets must form a rectangular array")
    dim = rows.shape[1]
    n = int(np.log2(dim))
    if 2**n != dim:
        raise ValueError(f"eigenvalue sets of length {dim} are not 2^N")
    times = np.ascontiguousarray(np.asarray(times, dtype=float))
    total = sff_sum(rows, times)
    return total / (rows.shape[0] * 4.0**n)


def sff_time_grid(t_min: float = 1e-2, t_max: float = 630.0, n_points: int = 480,
                  include_zero: bool = True) -> np.ndarray:
    grid = np.logspace(np.log10(t_min), np.log10(t_max), n_points)
    return np.concatenate([[0.0], grid]) if include_zero else grid


def log_smooth(times: np.ndarray, values: np.ndarray, width_decades: float = 0.3) -> np.ndarray:
    """Moving average over a log-time window, for dip extraction on log grids."""
    positive = times > 0
    lt = np.log10(times[positive])
    v = values[positive]
    out = np.array(values, dtype=float)
    sm = np.empty_like(v)
    for i in range(len(v)):
        m = np.abs(lt - lt[i]) <= width_decades / 2
        sm[i] = v[m].mean()
    out[positive] = sm
    return out


def sff_structure(times: np.ndarray, sff_values: np.ndarray,
                  dip_window=(10.0, 200.0), plateau_start: float = 200.0) -> dict:
    """Plateau level and smoothed post-decay minimum of an SFF curve.

    The dip window and plateau window are reported back so downstream
    artifacts record exactly how the numbers were extracted.
    """
    late = times >= plateau_start
    if not late.any():
        raise ValueError("no samples in the plateau window")
    plateau = float(sff_values[late].mean())
    smooth = log_smooth(times, sff_values)
    win = (times >= dip_window[0]) & (times <= dip_window[1])
    dip = float(smooth[win].min())
    t_dip = float(times[win][np.argmin(smooth[win])])
    return {
        "plateau": plateau,
        "dip": dip,
        "dip_over_plateau": dip / plateau,
        "t_dip": t_dip,
        "dip_window": list(dip_window),
        "plateau_window": [plateau_start, float(times.max())],
    }


# ---------------------------------------------------------------------------
# eigenstate entanglement


def eigenstate_entropy_scan(eig: linalg.EigenSystem, center_energy: float = 0.0,
                            n_states: int = 10) -> np.ndarray:
    """S1 of the first N_A qubits, N_A = 1..N-1, for the eigenstates nearest
    ``center_energy`` (the experimentally reachable state sits at zero).

    Returns an (n_states, N-1) table, rows ordered by |E - center|.
    """
    dim = eig.dim
    n = int(np.log2(dim))
    if n_states > dim:
        raise ValueError("n_states exceeds the Hilbert-space dimension")
    order = np.argsort(np.abs(eig.eigenvalues - center_energy), kind="stable")[:n_states]
    table = np.empty((n_states, n - 1))
    for row, idx in enumerate(order):
        vec = eig.eigenvectors[:, idx]
        for na in range(1, n):
            sv = np.linalg.svd(vec.reshape(2**na, -1), compute_uv=False)
            lam = sv**2
            lam = lam[lam > 1e-12]
            table[row, na - 1] = -np.sum(lam * np.log(lam))
    return table


def half_chain_entropies(eig: linalg.EigenSystem, n_qubits: int) -> np.ndarray:
    """Half-chain S1 of every eigenstate (batched SVD over all columns)."""
    na = n_qubits // 2
    mats = eig.eigenvectors.T.reshape(eig.dim, 2**na, -1)
    sv = np.linalg.svd(mats, compute_uv=False)
    lam = sv**2
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(lam > 1e-12, lam * np.log(lam), 0.0)
    return -terms.sum(axis=1)


def entropy_vs_energy(energies: np.ndarray, entropies: np.ndarray, j_scale: float,
                      n_bins: int = 120):
    """2D histogram of (E/J, S1) with log10(count+1) weights for display."""
    if len(energies) == 0:
        raise ValueError("empty ensemble")
    e = np.asarray(energies, dtype=float) / j_scale
    s = np.asarray(entropies, dtype=float)
    counts, e_edges, s_edges = np.histogram2d(e, s, bins=n_bins)
    return np.log10(counts + 1.0), e_edges, s_edges


# ---------------------------------------------------------------------------
# density of states, magnetisation, excitation statistics


def dos_histogram(eigenvalue_rows: np.ndarray, j_scale: float, n_bins: int = 100):
    """Normalized density of states over E/J plus its center of mass."""
    e = np.concatenate([np.asarray(r, dtype=float) for r in eigenvalue_rows]) / j_scale
    density, edges = np.histogram(e, bins=n_bins, density=True)
    return density, edges, float(e.mean())


def ground_state_magnetisation(spec: HamiltonianSpec) -> tuple[float, bool]:
    """(<GS| sum sz |GS>/N, degenerate?) from the lowest eigenvector."""
    eig = linalg.eigh(build_hamiltonian(spec))
    n = spec.geometry.n_atoms
    width = eig.eigenvalues[-1] - eig.eigenvalues[0]
    degenerate = (eig.dim > 1
                  and eig.eigenvalues[1] - eig.eigenvalues[0] <= 1e-10 * max(width, 1.0))
    gs = eig.eigenvectors[:, 0]
    weights = np.abs(gs) ** 2
    n_r = excitation_numbers(eig.dim) @ weights
    return float(1.0 - 2.0 * n_r / n), bool(degenerate)


def excitation_numbers(dim: int) -> np.ndarray:
    b = np.arange(dim, dtype=np.uint32)
    return np.bitwise_count(b).astype(float)


def rydberg_count_distribution(psi: np.ndarray) -> np.ndarray:
    """P(N_r = k), k = 0..N, of a pure state."""
    n = linalg.n_qubits_of(psi)
    counts = np.bitwise_count(np.arange(len(psi), dtype=np.uint32))
    probs = np.abs(np.asarray(psi)) ** 2
    return np.bincount(counts, weights=probs, minlength=n + 1)
