"""Command-line entry point: diagnose | evolve | protocol | optimize | calibrate.

Every command reads a JSON config, runs deterministically for a given
master seed (bit-identical outputs for any worker count), and writes plain
CSV/JSON artifacts plus a manifest.json recording the resolved config and
seed. Errors are emitted as one JSON object on stderr with a nonzero exit
code. The worker count may be overridden with the RYDSIM_WORKERS
environment variable; it is an execution detail and is deliberately kept
out of the manifest.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._seeding import seed_for
from .dynamics import ground_state_vector, trace_bloch, trace_entropy
from .model import (ControlSnapshot, HamiltonianSpec, Schedule, Segment,
                    chain, get_regime, sample_disorder)
from .randmeas import NoiseModel, ProtocolConfig, estimate_entropy_ensemble, \
    records_to_jsonl, results_to_csv
from . import diagnostics, optimizer


def _fail(message: str, kind: str = "ConfigError") -> "NoReturn":
    raise CliError(kind, message)


class CliError(Exception):
    def __init__(self, kind, message):
        super().__init__(message)
        self.kind = kind


def _load_config(path: str) -> dict:
    p = Path(path)
    if not p.exists():
        _fail(f"config file not found: {path}", "MissingInput")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as e:
        _fail(f"config is not valid JSON: {e}")


def _check_keys(cfg: dict, known: set, what: str):
    unknown = set(cfg) - known
    if unknown:
        _fail(f"unknown fields in {what}: {sorted(unknown)}")


def _noise_from_config(raw: dict | None) -> NoiseModel:
    if raw is None:
        return NoiseModel(readout=False, decoherence=False)
    _check_keys(raw, {"readout", "decoherence", "eps_g", "eps_r", "t2_bare_us",
                      "theta_ramsey", "fast_decoherence"}, "noise")
    return NoiseModel(
        eps_g=float(raw.get("eps_g", 0.05)),
        eps_r=float(raw.get("eps_r", 0.10)),
        t2_bare=float(raw.get("t2_bare_us", 6.2)),
        theta_ramsey=float(raw.get("theta_ramsey", 4.8)),
        readout=bool(raw.get("readout", False)),
        decoherence=bool(raw.get("decoherence", False)),
        fast_decoherence=bool(raw.get("fast_decoherence", False)),
    )


def _write(out_dir: Path, name: str, text: str, outputs: list):
    (out_dir / name).write_text(text)
    outputs.append(name)


def _write_manifest(out_dir: Path, command: str, config: dict, seed: int,
                    outputs: list, extra: dict | None = None):
    doc = {
        "command": command,
        "config": config,
        "seed": seed,
        "version": __version__,
        "outputs": sorted(outputs),
    }
    if extra:
        doc.update(extra)
    (out_dir / "manifest.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _histogram_csv(edges: np.ndarray, density: np.ndarray) -> str:
    lines = ["bin_left,bin_right,density"]
    for k in range(len(density)):
        lines.append(f"{float(edges[k])!r},{float(edges[k + 1])!r},{float(density[k])!r}")
    return "\n".join(lines) + "\n"


def _curve_csv(x_name: str, x: np.ndarray, columns: dict) -> str:
    names = list(columns)
    lines = [",".join([x_name] + names)]
    for k in range(len(x)):
        lines.append(",".join([repr(float(x[k]))] + [repr(float(columns[n][k]))
                                                     for n in names]))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# commands


def cmd_protocol(cfg: dict, seed: int, workers: int, out_dir: Path):
    known = {"n_qubits", "spacing_um", "c6_um6_per_us", "regime", "regimes",
             "t_evol_us", "delta_scan", "n_ens", "n_unitaries", "n_shots",
             "subsystem", "sequence_length", "tau_us", "noise", "n_bootstrap",
             "seed"}
    _check_keys(cfg, known, "protocol config")
    noise = _noise_from_config(cfg.get("noise"))

    def make_config(label, t_grid, delta_local=None):
        return ProtocolConfig(
            n_qubits=int(cfg.get("n_qubits", 6)),
            spacing=float(cfg.get("spacing_um", 10.0)),
            c6=float(cfg.get("c6_um6_per_us", 5.42e6)),
            regime=str(label),
            delta_local=delta_local,
            t_evol=tuple(float(t) for t in t_grid),
            n_ens=int(cfg.get("n_ens", 15)),
            n_unitaries=cfg.get("n_unitaries"),
            n_shots=cfg.get("n_shots", 200),
            subsystem=tuple(cfg.get("subsystem", [0, 1, 2])),
            sequence_length=int(cfg.get("sequence_length", 16)),
            tau=float(cfg.get("tau_us", 0.06)),
            noise=noise,
            seed=seed_for(seed, hash_regime(label)),
            n_bootstrap=int(cfg.get("n_bootstrap", 200)),
        )

    outputs = []
    all_records = []
    if "delta_scan" in cfg:
        scan = cfg["delta_scan"]
        _check_keys(scan, {"values_over_j", "t_evol_us"}, "delta_scan")
        t_fixed = float(scan.get("t_evol_us", 2.125))
        j_scale = make_config("probe", [0.0]).geometry().nn_coupling
        lines = ["regime,delta_local_over_j,S2,sem,n_ens,n_U,n_S"]
        for x in scan["values_over_j"]:
            label = f"scan-{float(x):g}J"
            pconf = make_config(label, [t_fixed], delta_local=-float(x) * j_scale)
            results, records = estimate_entropy_ensemble(pconf, workers=workers)
            all_records.extend(records)
            r = results[0]
            n_s = "" if r.n_shots is None else str(r.n_shots)
            lines.append(f"{label},{float(x)!r},{r.s2!r},{r.sem!r},"
                         f"{r.n_ens},{r.n_unitaries},{n_s}")
        _write(out_dir, "scan.csv", "\n".join(lines) + "\n", outputs)
    else:
        regimes = cfg.get("regimes", [cfg.get("regime", "chaotic")])
        t_grid = cfg.get("t_evol_us", [0.0])
        if np.isscalar(t_grid):
            t_grid = [t_grid]
        all_results = []
        for regime in regimes:
            results, records = estimate_entropy_ensemble(
                make_config(regime, t_grid), workers=workers)
            all_results.extend(results)
            all_records.extend(records)
        _write(out_dir, "ensemble.csv", results_to_csv(all_results), outputs)
    if all_records:
        _write(out_dir, "records.jsonl", records_to_jsonl(all_records), outputs)
    _write_manifest(out_dir, "protocol", cfg, seed, outputs)


def hash_regime(name: str) -> int:
    return sum((i + 1) * b for i, b in enumerate(str(name).encode()))


def cmd_evolve(cfg: dict, seed: int, workers: int, out_dir: Path):
    known = {"n_qubits", "spacing_um", "c6_um6_per_us", "regimes", "t_max_us",
             "n_times", "n_realisations", "subsystem", "bloch_qubit", "seed"}
    _check_keys(cfg, known, "evolve config")
    n = int(cfg.get("n_qubits", 6))
    geometry = chain(n, float(cfg.get("spacing_um", 10.0)),
                     float(cfg.get("c6_um6_per_us", 5.42e6)))
    regimes = cfg.get("regimes", ["chaotic", "mbl", "trivial"])
    times = np.linspace(0.0, float(cfg.get("t_max_us", 3.0)),
                        int(cfg.get("n_times", 25)))
    n_real = int(cfg.get("n_realisations", 100))
    subsystem = tuple(cfg.get("subsystem", list(range(n // 2))))
    outputs = []
    psi0 = ground_state_vector(n)
    for name in regimes:
        regime = get_regime(name)
        snap = ControlSnapshot(omega=15.8, phi=0.0, delta_global=regime.delta_global,
                               delta_local=regime.delta_local)
        s1 = np.zeros(len(times))
        s2 = np.zeros(len(times))
        for k in range(n_real):
            disorder = sample_disorder(n, seed_for(seed, hash_regime(name), k))
            spec = HamiltonianSpec(geometry=geometry, disorder=disorder, snapshot=snap)
            traj = trace_entropy(psi0, spec, times, subsystem)
            s1 += traj.columns["s1_nats"]
            s2 += traj.columns["s2_nats"]
        _write(out_dir, f"entropy_{regime.name}.csv",
               _curve_csv("time_us", times, {"s1_nats": s1 / n_real,
                                             "s2_nats": s2 / n_real}), outputs)
        if "bloch_qubit" in cfg:
            disorder = sample_disorder(n, seed_for(seed, hash_regime(name), 0))
            spec = HamiltonianSpec(geometry=geometry, disorder=disorder, snapshot=snap)
            hold = Schedule(segments=(Segment(float(times[-1]) or 1.0, "hold", snap,
                                              snap, "evolve"),))
            traj = trace_bloch(psi0, hold, geometry, disorder,
                               int(cfg["bloch_qubit"]), times[times > 0])
            _write(out_dir, f"bloch_{regime.name}.csv", traj.to_csv(), outputs)
    _write_manifest(out_dir, "evolve", cfg, seed, outputs)


def cmd_diagnose(cfg: dict, seed: int, workers: int, out_dir: Path):
    known = {"n_qubits", "spacing_um", "c6_um6_per_us", "n_realisations",
             "n_realisations_scan", "regimes", "ratio_bins", "dos_bins",
             "sff_t_max_us", "sff_points", "include_entropy_scan",
             "include_entropy_vs_energy", "seed"}
    _check_keys(cfg, known, "diagnose config")
    n = int(cfg.get("n_qubits", 10))
    geometry = chain(n, float(cfg.get("spacing_um", 10.0)),
                     float(cfg.get("c6_um6_per_us", 5.42e6)))
    j_scale = geometry.nn_coupling
    n_real = int(cfg.get("n_realisations", 200))
    outputs = []
    summary = {}
    for name in cfg.get("regimes", ["chaotic", "mbl"]):
        regime = get_regime(name)
        espec = diagnostics.EnsembleSpec(
            geometry=geometry, omega=15.8, delta_local=regime.delta_local,
            delta_global=regime.delta_global, n_realisations=n_real,
            seed_base=seed_for(seed, hash_regime(name)))
        rows = diagnostics.collect_eigenvalues(espec, workers=workers)

        ratios = np.concatenate([diagnostics.spacing_ratios(r) for r in rows])
        density, edges = diagnostics.ratio_histogram(
            ratios, int(cfg.get("ratio_bins", 200)))
        _write(out_dir, f"ratio_histogram_{regime.name}.csv",
               _histogram_csv(edges, density), outputs)

        times = diagnostics.sff_time_grid(
            t_max=float(cfg.get("sff_t_max_us", 630.0)),
            n_points=int(cfg.get("sff_points", 480)))
        sff_curve = diagnostics.sff(rows, times)
        _write(out_dir, f"sff_{regime.name}.csv",
               _curve_csv("time_us", times, {"sff": sff_curve}), outputs)
        structure = diagnostics.sff_structure(times, sff_curve)

        dos_density, dos_edges, e_com = diagnostics.dos_histogram(
            rows, j_scale, int(cfg.get("dos_bins", 100)))
        _write(out_dir, f"dos_{regime.name}.csv",
               _histogram_csv(dos_edges, dos_density), outputs)

        summary[regime.name] = {
            "mean_ratio": float(ratios.mean()),
            "sff": structure,
            "dos_center_of_mass_over_j": e_com,
        }

        if cfg.get("include_entropy_scan", True):
            scan_spec = diagnostics.EnsembleSpec(
                geometry=geometry, omega=15.8, delta_local=regime.delta_local,
                delta_global=regime.delta_global,
                n_realisations=int(cfg.get("n_realisations_scan", n_real)),
                seed_base=seed_for(seed, hash_regime(name), 1))
            tables = diagnostics.collect_entropy_scan(scan_spec, workers=workers)
            mean_curve = tables.mean(axis=(0, 1))
            _write(out_dir, f"eigenstate_entropy_{regime.name}.csv",
                   _curve_csv("n_sub", np.arange(1, n), {"s1_nats": mean_curve}),
                   outputs)

        if cfg.get("include_entropy_vs_energy", False):
            energies, entropies = diagnostics.collect_half_chain(espec, workers=workers)
            weights, e_edges, s_edges = diagnostics.entropy_vs_energy(
                energies, entropies, j_scale)
            lines = ["e_over_j_left,e_over_j_right,s1_left,s1_right,log10_count_plus_1"]
            for i in range(weights.shape[0]):
                for jj in range(weights.shape[1]):
                    lines.append(f"{float(e_edges[i])!r},{float(e_edges[i + 1])!r},"
                                 f"{float(s_edges[jj])!r},{float(s_edges[jj + 1])!r},"
                                 f"{float(weights[i, jj])!r}")
            _write(out_dir, f"entropy_vs_energy_{regime.name}.csv",
                   "\n".join(lines) + "\n", outputs)

    _write_manifest(out_dir, "diagnose", cfg, seed, outputs, extra={"summary": summary})


def cmd_optimize(cfg: dict, seed: int, workers: int, out_dir: Path):
    known = {"bounds", "initial", "iterations", "restarts", "n_rot", "n_qubits", "seed"}
    _check_keys(cfg, known, "optimize config")
    raw_bounds = cfg.get("bounds", {
        "tau_us": [0.01, 0.2], "length": [1, 16],
        "delta_global": [0.0, 65.0], "delta_local": [-125.0, 0.0]})
    bounds = {
        "tau": tuple(raw_bounds["tau_us"]),
        "length": tuple(raw_bounds["length"]),
        "delta_global": tuple(raw_bounds["delta_global"]),
        "delta_local": tuple(raw_bounds["delta_local"]),
    }
    raw_init = cfg.get("initial", {"tau_us": 0.05, "length": 5,
                                   "delta_global": 15.0, "delta_local": 27.5})
    initial = optimizer.ProtocolParams(
        tau=float(raw_init["tau_us"]), length=int(raw_init["length"]),
        delta_global=float(raw_init["delta_global"]),
        delta_local=float(raw_init["delta_local"]))
    result = optimizer.optimize_protocol(
        bounds, initial, np.random.default_rng(seed),
        iterations=int(cfg.get("iterations", 1000)),
        restarts=int(cfg.get("restarts", 5)),
        n_rot=int(cfg.get("n_rot", 50)),
        n_qubits=int(cfg.get("n_qubits", 6)))
    report = {
        "best": {
            "tau_us": result.params.tau,
            "length": result.params.length,
            "delta_global": result.params.delta_global,
            "delta_local": result.params.delta_local,
        },
        "score": result.score,
        "initial_score": result.initial_score,
        "trace": list(result.trace),
    }
    outputs = []
    _write(out_dir, "optimize_report.json",
           json.dumps(report, indent=2, sort_keys=True) + "\n", outputs)
    _write_manifest(out_dir, "optimize", cfg, seed, outputs)


def cmd_calibrate(cfg: dict, seed: int, workers: int, out_dir: Path):
    known = {"input_csv", "omega", "delta", "seed"}
    _check_keys(cfg, known, "calibrate config")
    path = Path(cfg.get("input_csv", ""))
    if not path.exists():
        _fail(f"Rabi data file not found: {path}", "MissingInput")
    rows = [line.split(",") for line in path.read_text().strip().splitlines()[1:]]
    times = np.array([float(r[0]) for r in rows])
    probs = np.array([float(r[1]) for r in rows])
    fit = optimizer.fit_rabi(times, probs)
    omega = float(cfg.get("omega", 15.8))
    delta = float(cfg.get("delta", 0.0))
    literal = optimizer.estimate_readout_errors(fit, omega, delta)
    corrected = optimizer.recover_readout_errors(fit, omega, delta)
    report = {
        "fit": {"a": fit.a, "b": fit.b, "omega_eff": fit.omega_eff,
                "varphi": fit.varphi, "residual": fit.residual,
                "converged": fit.converged},
        "literal": {"eps_r": literal.eps_r, "eps_g": literal.eps_g,
                    "warnings": list(literal.warnings)},
        "corrected": {"eps_r": corrected.eps_r, "eps_g": corrected.eps_g,
                      "warnings": list(corrected.warnings)},
    }
    outputs = []
    _write(out_dir, "calibration.json",
           json.dumps(report, indent=2, sort_keys=True) + "\n", outputs)
    _write_manifest(out_dir, "calibrate", cfg, seed, outputs)


COMMANDS = {
    "diagnose": cmd_diagnose,
    "evolve": cmd_evolve,
    "protocol": cmd_protocol,
    "optimize": cmd_optimize,
    "calibrate": cmd_calibrate,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="rydsim", description=__doc__)
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="JSON config file")
    parser.add_argument("--seed", type=int, default=0, help="master seed")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--out", required=True, help="output directory")
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args.config)
        seed = int(cfg.get("seed", args.seed)) if args.seed == 0 else args.seed
        workers = int(os.environ.get("RYDSIM_WORKERS", args.workers))
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](cfg, seed, workers, out_dir)
    except CliError as e:
        sys.stderr.write(json.dumps({"error": e.kind, "message": str(e)}) + "\n")
        return 1
    except Exception as e:  # noqa: BLE001 - boundary: report anything as JSON
        sys.stderr.write(json.dumps({"error": type(e).__name__, "message": str(e)}) + "\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
