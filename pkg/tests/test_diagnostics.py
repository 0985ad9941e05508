import numpy as np
import pytest

from rydsim import diagnostics, model
from rydsim.diagnostics import (EnsembleSpec, collect_eigenvalues, dos_histogram,
                                eigenstate_entropy_scan, ensemble_mean_ratio,
                                entropy_vs_energy, goe_reference_ratio,
                                ground_state_magnetisation, half_chain_entropies,
                                poisson_reference_ratio, ratio_histogram,
                                rydberg_count_distribution, sff, sff_structure,
                                sff_time_grid, spacing_ratios)
from rydsim import linalg
from rydsim.model import ControlSnapshot, HamiltonianSpec, chain, sample_disorder


def espec(n, regime_name, n_real, seed=0):
    regime = model.get_regime(regime_name)
    return EnsembleSpec(geometry=chain(n), omega=15.8,
                        delta_local=regime.delta_local,
                        delta_global=regime.delta_global,
                        n_realisations=n_real, seed_base=seed)


class TestSpacingRatios:
    def test_picket_fence(self):
        assert np.allclose(spacing_ratios([0.0, 1.0, 2.0, 3.0]), 1.0)

    def test_single_ratio(self):
        # spacings 1 and 2: r = 2 folds to 0.5
        assert spacing_ratios([0.0, 1.0, 3.0]) == pytest.approx([0.5])

    def test_poisson_oracle(self):
        # i.i.d. exponential spacings: mean folded ratio 2 ln 2 - 1
        value = poisson_reference_ratio(n_samples=1_000_000)
        assert value == pytest.approx(2 * np.log(2) - 1, abs=0.002)

    def test_goe_oracle_small(self):
        value = goe_reference_ratio(n_matrices=8, dim=400)
        assert value == pytest.approx(0.5307, abs=0.01)

    def test_requires_three_levels(self):
        with pytest.raises(ValueError):
            spacing_ratios([0.0, 1.0])

    def test_degeneracy_merge(self):
        # a numerically degenerate pair must not produce r = 0 artifacts
        vals = spacing_ratios([0.0, 1.0, 1.0 + 1e-14, 2.0, 3.0])
        assert np.all(vals > 0.1)


class TestRatioHistogram:
    def test_flat_on_uniform(self):
        rng = np.random.default_rng(20)
        density, edges = ratio_histogram(rng.random(200_000), n_bins=200)
        widths = np.diff(edges)
        assert (density * widths).sum() == pytest.approx(1.0, abs=1e-9)
        assert np.all(np.abs(density - 1.0) < 0.15)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            ratio_histogram(np.array([]))

    def test_regime_shapes(self):
        # coarse shape check: weak disorder suppresses the smallest ratios,
        # strong disorder decays monotonically from r = 0
        rows_ch = collect_eigenvalues(espec(8, "chaotic", 30, seed=1))
        rows_mbl = collect_eigenvalues(espec(8, "mbl", 30, seed=2))
        rt_ch = np.concatenate([spacing_ratios(r) for r in rows_ch])
        rt_mbl = np.concatenate([spacing_ratios(r) for r in rows_mbl])
        hist_ch, _ = np.histogram(rt_ch, bins=10, range=(0, 1), density=True)
        hist_mbl, _ = np.histogram(rt_mbl, bins=10, range=(0, 1), density=True)
        assert hist_ch[0] < hist_ch[1]
        assert hist_mbl[0] == max(hist_mbl)
        assert ensemble_mean_ratio(rows_ch) > ensemble_mean_ratio(rows_mbl)


class TestSff:
    def test_unity_at_zero(self):
        rng = np.random.default_rng(21)
        rows = rng.standard_normal((5, 16))
        curve = sff(rows, np.array([0.0, 1.0]))
        assert curve[0] == pytest.approx(1.0, abs=1e-12)

    def test_two_level_analytic(self):
        # single qubit with eigenvalues {0, w}: |tr exp(-iHt)|^2/4 = cos^2(wt/2)
        w = 3.7
        times = np.linspace(0.0, 5.0, 50)
        curve = sff(np.array([[0.0, w]]), times)
        assert np.allclose(curve, np.cos(w * times / 2) ** 2, atol=1e-12)

    def test_late_plateau_diagonal_count(self):
        # nondegenerate spectra dephase to the diagonal sum: plateau 2^-N
        rng = np.random.default_rng(22)
        dim, n = 64, 6
        rows = rng.uniform(0, 60, size=(60, dim))
        times = np.linspace(200.0, 400.0, 300)
        curve = sff(rows, times)
        assert curve.mean() == pytest.approx(2.0**-n, rel=0.2)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            sff([[0.0, 1.0], [0.0, 1.0, 2.0]], np.array([0.0]))

    def test_structure_fields(self):
        rows = collect_eigenvalues(espec(6, "mbl", 10, seed=3))
        times = sff_time_grid(t_max=400.0, n_points=200)
        curve = sff(rows, times)
        out = sff_structure(times, curve)
        assert curve[0] == pytest.approx(1.0, abs=1e-12)
        assert np.all(curve >= 0.0)
        assert out["plateau"] > 0 and out["dip"] > 0
        assert out["dip_window"] == [10.0, 200.0]


class TestEigenstateEntropyScan:
    def test_diagonal_hamiltonian_product_eigenstates(self):
        spec = HamiltonianSpec(geometry=chain(4), disorder=sample_disorder(4, 5),
                               snapshot=ControlSnapshot(omega=0.0, delta_global=7.0,
                                                        delta_local=-3.0))
        eig = linalg.eigh(model.build_hamiltonian(spec))
        table = eigenstate_entropy_scan(eig, n_states=6)
        assert table.shape == (6, 3)
        assert np.all(table < 1e-10)

    def test_chaotic_grows_mbl_flat(self):
        ch = espec(8, "chaotic", 8, seed=6)
        mbl = espec(8, "mbl", 8, seed=7)
        t_ch = diagnostics.collect_entropy_scan(ch).mean(axis=(0, 1))
        t_mbl = diagnostics.collect_entropy_scan(mbl).mean(axis=(0, 1))
        half = 4
        assert np.all(np.diff(t_ch[:half]) > 0)
        assert t_mbl[half - 1] < 0.4 * t_ch[half - 1]

    def test_half_chain_batch_matches_scan(self):
        spec = espec(6, "chaotic", 1, seed=8).realisation(0)
        eig = linalg.eigh(model.build_hamiltonian(spec))
        batch = half_chain_entropies(eig, 6)
        table = eigenstate_entropy_scan(eig, n_states=1)
        idx = np.argsort(np.abs(eig.eigenvalues), kind="stable")[0]
        assert batch[idx] == pytest.approx(table[0, 2], abs=1e-9)


class TestEntropyVsEnergy:
    def test_product_eigenbasis_mass_at_zero(self):
        spec = HamiltonianSpec(geometry=chain(4), disorder=sample_disorder(4, 9),
                               snapshot=ControlSnapshot(omega=0.0, delta_global=3.0,
                                                        delta_local=-1.0))
        eig = linalg.eigh(model.build_hamiltonian(spec))
        s1 = half_chain_entropies(eig, 4)
        weights, _, s_edges = entropy_vs_energy(eig.eigenvalues, s1, j_scale=5.42)
        occupied = weights.sum(axis=0) > 0
        assert s_edges[np.argmax(occupied)] == pytest.approx(0.0, abs=1e-9)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            entropy_vs_energy(np.array([]), np.array([]), 5.42)


class TestDos:
    def test_delta_spectrum(self):
        # all controls off: every eigenvalue is zero, the density is a
        # delta at E/J = 0
        density, edges, com = dos_histogram([np.zeros(8)], 5.42)
        assert com == pytest.approx(0.0, abs=1e-12)
        occupied = np.flatnonzero(density)
        assert len(occupied) == 1
        k = occupied[0]
        assert edges[k] <= 0.0 <= edges[k + 1]

    def test_centered_when_mean_detuning_half_j(self):
        rows = collect_eigenvalues(espec(8, "chaotic", 20, seed=10))
        density, edges, com = dos_histogram(rows, j_scale=5.42)
        assert abs(com) < 0.5
        widths = np.diff(edges)
        assert (density * widths).sum() == pytest.approx(1.0, abs=1e-9)

    def test_off_center_at_large_mean_detuning(self):
        geometry = chain(8)
        spec = EnsembleSpec(geometry=geometry, omega=15.8, delta_local=-2.71,
                            delta_global=15 * 5.42 + 2.71 / 2, n_realisations=10,
                            seed_base=11)
        rows = collect_eigenvalues(spec)
        _, _, com = dos_histogram(rows, j_scale=5.42)
        assert com < -5.0  # initial zero-energy state far above the bulk


class TestMagnetisation:
    def test_all_ground_at_negative_detuning(self):
        spec = HamiltonianSpec(geometry=chain(3), disorder=sample_disorder(3, 12),
                               snapshot=ControlSnapshot(omega=0.0, delta_global=-2.0,
                                                        delta_local=-1.0))
        m, degenerate = ground_state_magnetisation(spec)
        assert m == pytest.approx(1.0)
        assert not degenerate

    def test_fully_polarised_at_large_detuning(self):
        spec = HamiltonianSpec(geometry=chain(3), disorder=sample_disorder(3, 13),
                               snapshot=ControlSnapshot(omega=0.0, delta_global=30 * 5.42,
                                                        delta_local=0.0))
        m, _ = ground_state_magnetisation(spec)
        assert m == pytest.approx(-1.0)

    def test_single_excitation_sector(self):
        # two atoms, Delta = J/2: both one-excitation states tie for the
        # ground state, each with magnetisation zero
        disorder = model.DisorderRealisation(h=np.zeros(2), seed=0)
        spec = HamiltonianSpec(geometry=chain(2), disorder=disorder,
                               snapshot=ControlSnapshot(omega=0.0,
                                                        delta_global=5.42 / 2,
                                                        delta_local=0.0))
        m, degenerate = ground_state_magnetisation(spec)
        assert m == pytest.approx(0.0, abs=1e-9)
        assert degenerate


class TestRydbergCounts:
    def test_all_ground(self):
        psi = np.zeros(16, dtype=complex)
        psi[0] = 1.0
        dist = rydberg_count_distribution(psi)
        assert dist[0] == pytest.approx(1.0)
        assert dist.sum() == pytest.approx(1.0)

    def test_two_plus_states_binomial(self):
        plus = np.full(2, 1 / np.sqrt(2))
        psi = np.kron(plus, plus).astype(complex)
        dist = rydberg_count_distribution(psi)
        assert dist == pytest.approx([0.25, 0.5, 0.25])

    def test_ground_state_shifts_with_detuning(self):
        low = espec(5, "chaotic", 1, seed=14).realisation(0)
        eig_low = linalg.eigh(model.build_hamiltonian(low))
        high_spec = EnsembleSpec(geometry=chain(5), omega=15.8, delta_local=-2.71,
                                 delta_global=15 * 5.42, n_realisations=1, seed_base=14)
        eig_high = linalg.eigh(model.build_hamiltonian(high_spec.realisation(0)))
        mean_low = rydberg_count_distribution(eig_low.eigenvectors[:, 0]) @ np.arange(6)
        mean_high = rydberg_count_distribution(eig_high.eigenvectors[:, 0]) @ np.arange(6)
        assert mean_high > mean_low + 1.0


class TestEnsembleCollectors:
    def test_deterministic(self):
        rows_a = collect_eigenvalues(espec(4, "chaotic", 5, seed=15))
        rows_b = collect_eigenvalues(espec(4, "chaotic", 5, seed=15))
        assert np.array_equal(rows_a, rows_b)

    def test_worker_count_invariance(self):
        spec = espec(4, "mbl", 6, seed=16)
        serial = collect_eigenvalues(spec, workers=1)
        parallel = collect_eigenvalues(spec, workers=2)
        assert np.array_equal(serial, parallel)
