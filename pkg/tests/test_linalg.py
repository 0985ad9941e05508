import numpy as np
import pytest

from rydsim import linalg
from rydsim.entanglement import purity

SX = np.array([[0.0, 1.0], [1.0, 0.0]])
SZ = np.diag([1.0, -1.0])


def random_hermitian(dim, rng):
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (a + a.conj().T) / 2


class TestEigh:
    def test_pauli_z(self):
        eig = linalg.eigh(SZ)
        assert np.allclose(eig.eigenvalues, [-1.0, 1.0])

    def test_pauli_x(self):
        eig = linalg.eigh(SX)
        assert np.allclose(eig.eigenvalues, [-1.0, 1.0])
        minus = np.array([1.0, -1.0]) / np.sqrt(2)
        plus = np.array([1.0, 1.0]) / np.sqrt(2)
        assert abs(np.vdot(minus, eig.eigenvectors[:, 0])) == pytest.approx(1.0)
        assert abs(np.vdot(plus, eig.eigenvectors[:, 1])) == pytest.approx(1.0)

    def test_reconstruction_residual(self):
        rng = np.random.default_rng(1)
        for dim in (64, 256, 1024):
            h = random_hermitian(dim, rng)
            eig = linalg.eigh(h)
            rebuilt = (eig.eigenvectors * eig.eigenvalues) @ eig.eigenvectors.conj().T
            residual = np.linalg.norm(rebuilt - h) / np.linalg.norm(h)
            assert residual < 1e-10
            ortho = eig.eigenvectors.conj().T @ eig.eigenvectors
            assert np.linalg.norm(ortho - np.eye(dim)) < 1e-10
            assert np.all(np.diff(eig.eigenvalues) >= 0)

    def test_reconstruction_residual_4096(self):
        # largest working dimension (N = 12); real symmetric is the case the
        # diagnostics ensembles exercise
        rng = np.random.default_rng(2)
        a = rng.standard_normal((4096, 4096))
        h = (a + a.T) / 2
        eig = linalg.eigh(h)
        rebuilt = (eig.eigenvectors * eig.eigenvalues) @ eig.eigenvectors.T
        assert np.linalg.norm(rebuilt - h) / np.linalg.norm(h) < 1e-10

    def test_rejects_non_hermitian(self):
        bad = np.array([[0.0, 1.0], [0.5, 0.0]])
        with pytest.raises(ValueError, match="not Hermitian"):
            linalg.eigh(bad)


class TestPropagate:
    def test_zero_time_is_identity(self):
        rng = np.random.default_rng(2)
        psi = linalg.haar_state(3, rng)
        eig = linalg.eigh(random_hermitian(8, rng))
        assert np.allclose(linalg.propagate(psi, eig, 0.0), psi)

    def test_rabi_pi_pulse(self):
        # analytic two-level oracle: exp(-i (O/2) sx t) at t = pi/O flips g -> r
        omega = 15.8
        eig = linalg.eigh(omega / 2 * SX)
        out = linalg.propagate(np.array([1.0, 0.0], dtype=complex), eig, np.pi / omega)
        assert abs(out[1]) == pytest.approx(1.0, abs=1e-12)
        assert abs(out[0]) == pytest.approx(0.0, abs=1e-12)

    def test_rabi_analytic_at_generic_time(self):
        omega, t = 7.3, 0.41
        eig = linalg.eigh(omega / 2 * SX)
        out = linalg.propagate(np.array([1.0, 0.0], dtype=complex), eig, t)
        expected = np.array([np.cos(omega * t / 2), -1j * np.sin(omega * t / 2)])
        assert np.allclose(out, expected, atol=1e-12)

    def test_unitarity_random(self):
        rng = np.random.default_rng(3)
        for _ in range(1000):
            dim = int(rng.integers(2, 9))
            eig = linalg.eigh(random_hermitian(dim, rng))
            psi = linalg.haar_state(1, rng) if dim == 2 else None
            if psi is None:
                v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
                psi = v / np.linalg.norm(v)
            out = linalg.propagate(psi, eig, float(rng.uniform(0, 10)))
            assert abs(np.linalg.norm(out) - 1) < 1e-10

    def test_dimension_mismatch(self):
        eig = linalg.eigh(SX)
        with pytest.raises(ValueError, match="mismatch"):
            linalg.propagate(np.zeros(4, dtype=complex), eig, 1.0)


class TestPartialTrace:
    def test_product_state(self):
        gg = np.zeros(4, dtype=complex)
        gg[0] = 1.0
        rho = linalg.partial_trace(gg, {0})
        assert np.allclose(rho, [[1, 0], [0, 0]])

    def test_bell_state(self):
        bell = np.zeros(4, dtype=complex)
        bell[0] = bell[3] = 1 / np.sqrt(2)
        rho = linalg.partial_trace(bell, {0})
        assert np.allclose(rho, np.eye(2) / 2)
        assert purity(rho) == pytest.approx(0.5)

    def test_big_product_state(self):
        psi = np.zeros(64, dtype=complex)
        psi[0] = 1.0
        rho = linalg.partial_trace(psi, {0, 1, 2})
        assert purity(rho) == pytest.approx(1.0)

    def test_trace_one(self):
        rng = np.random.default_rng(4)
        psi = linalg.haar_state(5, rng)
        rho = linalg.partial_trace(psi, {1, 3})
        assert np.trace(rho).real == pytest.approx(1.0)

    def test_schmidt_symmetry(self):
        # both sides of a bipartition share nonzero reduced spectra
        rng = np.random.default_rng(5)
        for _ in range(20):
            n = int(rng.integers(2, 7))
            keep = set(rng.choice(n, size=int(rng.integers(1, n)), replace=False).tolist())
            psi = linalg.haar_state(n, rng)
            a = np.sort(np.linalg.eigvalsh(linalg.partial_trace(psi, keep)))[::-1]
            comp = set(range(n)) - keep
            b = np.sort(np.linalg.eigvalsh(linalg.partial_trace(psi, comp)))[::-1]
            k = min(len(a), len(b))
            assert np.allclose(a[:k], b[:k], atol=1e-10)

    def test_bad_subsets(self):
        psi = np.zeros(4, dtype=complex)
        psi[0] = 1.0
        with pytest.raises(ValueError):
            linalg.partial_trace(psi, set())
        with pytest.raises(ValueError):
            linalg.partial_trace(psi, {5})


class TestBlochVector:
    def test_ground(self):
        assert linalg.bloch_vector(np.diag([1.0, 0.0]).astype(complex)) == (0.0, 0.0, 1.0)

    def test_maximally_mixed(self):
        assert linalg.bloch_vector(np.eye(2, dtype=complex) / 2) == (0.0, 0.0, 0.0)

    def test_plus_state(self):
        plus = np.full((2, 2), 0.5, dtype=complex)
        x, y, z = linalg.bloch_vector(plus)
        assert (x, y, z) == pytest.approx((1.0, 0.0, 0.0))

    def test_length_matches_purity(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            rho = linalg.partial_trace(linalg.haar_state(3, rng), {1})
            x, y, z = linalg.bloch_vector(rho)
            length = np.sqrt(x * x + y * y + z * z)
            assert length == pytest.approx(np.sqrt(2 * purity(rho) - 1), abs=1e-10)
            assert length <= 1 + 1e-10

    def test_wrong_shape(self):
        with pytest.raises(ValueError):
            linalg.bloch_vector(np.eye(4, dtype=complex))


class TestHaar:
    def test_state_normalized(self):
        rng = np.random.default_rng(7)
        for n in (1, 3, 6):
            assert np.linalg.norm(linalg.haar_state(n, rng)) == pytest.approx(1.0)

    def test_su2_unitary(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            u = linalg.haar_su2(rng)
            assert np.allclose(u @ u.conj().T, np.eye(2), atol=1e-12)

    def test_su2_sz_symmetry(self):
        # Monte-Carlo: <sz> of u|g> averages to zero over the Haar measure
        rng = np.random.default_rng(9)
        total = 0.0
        n_samples = 100_000
        for _ in range(n_samples):
            u = linalg.haar_su2(rng)
            total += abs(u[0, 0]) ** 2 - abs(u[1, 0]) ** 2
        assert abs(total / n_samples) < 0.01

    def test_state_requires_positive_n(self):
        with pytest.raises(ValueError):
            linalg.haar_state(0, np.random.default_rng(0))
