import json

import numpy as np
import pytest

from rydsim import cli
from rydsim.optimizer import rabi_signal
from rydsim.randmeas import apply_readout_error


def run_cli(command, config, tmp_path, seed=7, workers=1, out_name="out"):
    cfg_path = tmp_path / f"{command}_config.json"
    cfg_path.write_text(json.dumps(config))
    out_dir = tmp_path / out_name
    code = cli.main([command, "--config", str(cfg_path), "--seed", str(seed),
                     "--workers", str(workers), "--out", str(out_dir)])
    return code, out_dir


class TestProtocolCommand:
    CONFIG = {
        "n_qubits": 4, "regime": "chaotic", "t_evol_us": [0.0, 0.3],
        "n_ens": 2, "n_unitaries": 3, "n_shots": 25, "subsystem": [0, 1],
        "sequence_length": 6, "n_bootstrap": 200,
        "noise": {"readout": True, "eps_g": 0.05, "eps_r": 0.1},
    }

    def test_outputs_and_manifest(self, tmp_path):
        code, out = run_cli("protocol", self.CONFIG, tmp_path)
        assert code == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["command"] == "protocol"
        assert set(manifest["outputs"]) == {"ensemble.csv", "records.jsonl"}
        header = (out / "ensemble.csv").read_text().splitlines()[0]
        assert header == "regime,t_evol_us,S2,sem,n_ens,n_U,n_S"

    def test_byte_identical_across_runs_and_workers(self, tmp_path):
        _, out1 = run_cli("protocol", self.CONFIG, tmp_path, out_name="a")
        _, out2 = run_cli("protocol", self.CONFIG, tmp_path, out_name="b", workers=2)
        for name in ("ensemble.csv", "records.jsonl", "manifest.json"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_unknown_field_rejected(self, tmp_path, capsys):
        bad = dict(self.CONFIG, typo_field=1)
        code, _ = run_cli("protocol", bad, tmp_path)
        assert code == 1
        err = json.loads(capsys.readouterr().err)
        assert "typo_field" in err["message"]

    def test_disorder_scan_mode(self, tmp_path):
        config = {
            "n_qubits": 4, "n_ens": 2, "n_unitaries": 3, "n_shots": None,
            "subsystem": [0, 1], "sequence_length": 6,
            "delta_scan": {"values_over_j": [0.5, 10.0, 23.06],
                           "t_evol_us": 0.5},
        }
        code, out = run_cli("protocol", config, tmp_path)
        assert code == 0
        lines = (out / "scan.csv").read_text().strip().splitlines()
        assert lines[0] == "regime,delta_local_over_j,S2,sem,n_ens,n_U,n_S"
        assert len(lines) == 4
        xs = [float(line.split(",")[1]) for line in lines[1:]]
        assert xs == [0.5, 10.0, 23.06]
        # weakest disorder scrambles hardest at fixed time
        s2 = [float(line.split(",")[2]) for line in lines[1:]]
        assert s2[0] > s2[2]


class TestEvolveCommand:
    def test_entropy_curves(self, tmp_path):
        config = {"n_qubits": 4, "regimes": ["chaotic", "trivial"],
                  "t_max_us": 1.0, "n_times": 5, "n_realisations": 3,
                  "subsystem": [0, 1], "bloch_qubit": 1}
        code, out = run_cli("evolve", config, tmp_path)
        assert code == 0
        text = (out / "entropy_chaotic.csv").read_text()
        lines = text.strip().splitlines()
        assert lines[0] == "time_us,s1_nats,s2_nats"
        first = [float(x) for x in lines[1].split(",")]
        assert first[1] == pytest.approx(0.0, abs=1e-9)  # S1(t=0) of |g...g>
        assert (out / "bloch_chaotic.csv").exists()
        assert (out / "entropy_trivial.csv").exists()

    def test_chaotic_grows_faster_than_trivial(self, tmp_path):
        config = {"n_qubits": 4, "regimes": ["chaotic", "trivial"],
                  "t_max_us": 2.0, "n_times": 6, "n_realisations": 5}
        code, out = run_cli("evolve", config, tmp_path)
        assert code == 0
        def final_s2(name):
            lines = (out / f"entropy_{name}.csv").read_text().strip().splitlines()
            return float(lines[-1].split(",")[2])
        assert final_s2("chaotic") > final_s2("trivial")


class TestDiagnoseCommand:
    def test_smoke_small_ensemble(self, tmp_path):
        config = {"n_qubits": 4, "n_realisations": 4, "regimes": ["chaotic"],
                  "sff_points": 60, "sff_t_max_us": 300.0,
                  "n_realisations_scan": 2, "include_entropy_vs_energy": True}
        code, out = run_cli("diagnose", config, tmp_path)
        assert code == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert "ratio_histogram_chaotic.csv" in manifest["outputs"]
        assert "sff_chaotic.csv" in manifest["outputs"]
        assert "dos_chaotic.csv" in manifest["outputs"]
        assert "eigenstate_entropy_chaotic.csv" in manifest["outputs"]
        assert "entropy_vs_energy_chaotic.csv" in manifest["outputs"]
        dee = (out / "entropy_vs_energy_chaotic.csv").read_text().splitlines()
        assert len(dee) == 1 + 120 * 120
        float(dee[1].split(",")[0])  # parses as a plain number
        summary = manifest["summary"]["chaotic"]
        assert 0.0 < summary["mean_ratio"] < 1.0
        sff_lines = (out / "sff_chaotic.csv").read_text().strip().splitlines()
        assert float(sff_lines[1].split(",")[1]) == pytest.approx(1.0)  # sff(0)

    def test_determinism(self, tmp_path):
        config = {"n_qubits": 3, "n_realisations": 3, "regimes": ["mbl"],
                  "sff_points": 40, "include_entropy_scan": False}
        _, out1 = run_cli("diagnose", config, tmp_path, out_name="a")
        _, out2 = run_cli("diagnose", config, tmp_path, out_name="b", workers=2)
        for name in json.loads((out1 / "manifest.json").read_text())["outputs"]:
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


class TestOptimizeCommand:
    def test_report_contains_monotone_trace(self, tmp_path):
        config = {"iterations": 6, "restarts": 1, "n_rot": 4, "n_qubits": 3,
                  "bounds": {"tau_us": [0.01, 0.1], "length": [2, 8],
                             "delta_global": [0.0, 40.0],
                             "delta_local": [-125.0, 0.0]},
                  "initial": {"tau_us": 0.05, "length": 4,
                              "delta_global": 15.0, "delta_local": -27.5}}
        code, out = run_cli("optimize", config, tmp_path)
        assert code == 0
        report = json.loads((out / "optimize_report.json").read_text())
        trace = report["trace"]
        assert len(trace) == 6
        assert all(b >= a for a, b in zip(trace, trace[1:]))
        assert report["score"] >= report["initial_score"]


class TestCalibrateCommand:
    def write_rabi_csv(self, tmp_path, eps_g=0.05, eps_r=0.10):
        t = np.linspace(0.0, 1.2, 160)
        clean = rabi_signal(t, 15.8)
        corrupted = [apply_readout_error(np.array([1 - p, p]), eps_g, eps_r)[1]
                     for p in clean]
        path = tmp_path / "rabi.csv"
        lines = ["time_us,p_r"] + [f"{float(a)!r},{float(b)!r}"
                                   for a, b in zip(t, corrupted)]
        path.write_text("\n".join(lines) + "\n")
        return path

    def test_recovers_injected_errors(self, tmp_path):
        path = self.write_rabi_csv(tmp_path)
        config = {"input_csv": str(path), "omega": 15.8, "delta": 0.0}
        code, out = run_cli("calibrate", config, tmp_path)
        assert code == 0
        report = json.loads((out / "calibration.json").read_text())
        assert report["corrected"]["eps_g"] == pytest.approx(0.05, abs=0.01)
        assert report["corrected"]["eps_r"] == pytest.approx(0.10, abs=0.01)
        assert report["fit"]["converged"]
        # the legacy formulas are reported alongside, with their sign
        # artifact flagged
        assert report["literal"]["eps_g"] == pytest.approx(-0.05, abs=0.01)
        assert report["literal"]["warnings"]

    def test_missing_input_is_clean_error(self, tmp_path, capsys):
        config = {"input_csv": str(tmp_path / "absent.csv")}
        code, _ = run_cli("calibrate", config, tmp_path)
        assert code == 1
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "MissingInput"


class TestErrorHandling:
    def test_missing_config_file(self, tmp_path, capsys):
        code = cli.main(["protocol", "--config", str(tmp_path / "none.json"),
                         "--out", str(tmp_path / "o")])
        assert code == 1
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "MissingInput"

    def test_invalid_json(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        code = cli.main(["evolve", "--config", str(bad), "--out", str(tmp_path / "o")])
        assert code == 1
        assert "JSON" in json.loads(capsys.readouterr().err)["message"]

    def test_workers_env_override(self, tmp_path, monkeypatch):
        monkeypatch.setenv("RYDSIM_WORKERS", "2")
        config = {"n_qubits": 3, "regime": "chaotic", "t_evol_us": [0.0],
                  "n_ens": 2, "n_unitaries": 2, "n_shots": 10, "subsystem": [0],
                  "sequence_length": 4}
        code, out = run_cli("protocol", config, tmp_path)
        assert code == 0
        assert (out / "ensemble.csv").exists()
