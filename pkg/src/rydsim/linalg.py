"""Dense complex linear algebra on 2^N-dimensional Hilbert spaces.

Conventions used throughout the package:

* basis index ``b`` of an N-qubit state encodes qubit ``i`` in bit
  ``N-1-i`` (qubit 0 is the most significant bit);
* bit value 0 is the ground state ``|g>``, 1 is the Rydberg state ``|r>``,
  so ``sigma_z |g> = +|g>`` and the number operator is ``n = (1-sz)/2``;
* rates are rad/us, times us.

States are plain complex ndarrays of length 2^N; reduced density matrices
are complex square ndarrays. All functions are pure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HERMITICITY_TOL = 1e-12


@dataclass(frozen=True)
class EigenSystem:
    """Ascending eigenvalues and the matching orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)


def n_qubits_of(psi: np.ndarray) -> int:
    n = int(np.log2(len(psi)))
    if 2**n != len(psi):
        raise ValueError(f"state length {len(psi)} is not a power of two")
    return n


def eigh(matrix: np.ndarray, tol: float = HERMITICITY_TOL) -> EigenSystem:
    """Hermitian eigendecomposition with an explicit Hermiticity gate.

    Rejects inputs whose anti-Hermitian part exceeds ``tol`` in relative
    Frobenius norm, reporting the offending norm in the error.
    """
    matrix = np.asarray(matrix)
    dev = np.linalg.norm(matrix - matrix.conj().T)
    scale = max(np.linalg.norm(matrix), 1.0)
    if dev > tol * scale:
        raise ValueError(
            f"matrix is not Hermitian: |H - H^dag|_F / |H|_F = {dev / scale:.3e}"
        )
    w, v = np.linalg.eigh(matrix)
    return EigenSystem(eigenvalues=w, eigenvectors=v)


def propagate(psi: np.ndarray, eig: EigenSystem, t: float) -> np.ndarray:
    """Evolve psi by exp(-iHt) in the eigenbasis of H."""
    if len(psi) != eig.dim:
        raise ValueError(f"dimension mismatch: state {len(psi)}, operator {eig.dim}")
    if t < 0:
        raise ValueError("propagation time must be nonnegative")
    coeff = eig.eigenvectors.conj().T @ psi
    return eig.eigenvectors @ (np.exp(-1j * eig.eigenvalues * t) * coeff)


def unitary_of(eig: EigenSystem, t: float) -> np.ndarray:
    """Dense matrix exp(-iHt), for repeated application to many states."""
    return (eig.eigenvectors * np.exp(-1j * eig.eigenvalues * t)) @ eig.eigenvectors.conj().T


def partial_trace(psi: np.ndarray, keep) -> np.ndarray:
    """Reduced density matrix of the qubits in ``keep`` (set of indices)."""
    n = n_qubits_of(psi)
    keep = sorted(set(int(q) for q in keep))
    if not keep:
        raise ValueError("keep must be a nonempty set of qubit indices")
    if keep[0] < 0 or keep[-1] >= n:
        raise ValueError(f"qubit indices {keep} out of range for N={n}")
    drop = [q for q in range(n) if q not in keep]
    tensor = psi.reshape((2,) * n)
    tensor = np.transpose(tensor, keep + drop)
    a = tensor.reshape(2 ** len(keep), 2 ** len(drop))
    return a @ a.conj().T


def reduced_spectrum(psi: np.ndarray, keep) -> np.ndarray:
    """Schmidt spectrum (eigenvalues of the reduced state), descending."""
    n = n_qubits_of(psi)
    keep = sorted(set(int(q) for q in keep))
    drop = [q for q in range(n) if q not in keep]
    tensor = np.transpose(psi.reshape((2,) * n), keep + drop)
    sv = np.linalg.svd(tensor.reshape(2 ** len(keep), -1), compute_uv=False)
    return sv**2


def bloch_vector(rho: np.ndarray) -> tuple[float, float, float]:
    """(<sx>, <sy>, <sz>) of a single-qubit density matrix, sz|g> = +|g>."""
    if rho.shape != (2, 2):
        raise ValueError("bloch_vector expects a 2x2 density matrix")
    x = 2.0 * rho[0, 1].real
    y = -2.0 * rho[0, 1].imag
    z = (rho[0, 0] - rho[1, 1]).real
    return (x, y, z)


def single_qubit_rho(psi: np.ndarray, qubit: int) -> np.ndarray:
    return partial_trace(psi, {qubit})


def haar_state(n_qubits: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random pure state: normalized complex-Gaussian amplitudes."""
    if n_qubits < 1:
        raise ValueError("n_qubits must be >= 1")
    dim = 2**n_qubits
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def haar_su2(rng: np.random.Generator) -> np.ndarray:
    """Haar-random 2x2 unitary (QR of a complex Ginibre matrix, phases fixed)."""
    z = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))
