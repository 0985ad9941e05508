"""Global-control randomised measurements of subsystem purity.

The protocol alternates two global Hamiltonians that differ only in the
drive phase (0 or pi/2) while the chain is parked in a strongly localised
parameter regime, which realises approximately local random rotations.
Projective bitstring statistics then feed a Hamming-weighted pair sum

    Tr rho_A^2 ~= 2^{N_A} sum_{s,s'} (-2)^{-D[s,s']} mean_U[P_U(s) P_U(s')]

whose plug-in form (same empirical distribution in both factors) is kept
deliberately: the shot-noise bias and the occasional purity estimate
above 1 are part of the protocol being modelled. Noise channels cover
per-qubit readout confusion, detuning-dependent dephasing via per-shot
parameter resampling, and multinomial shot noise with a parametric
bootstrap for error bars.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from ._kernels import hamming_quadratic, hamming_weights
from ._seeding import rng_for, seed_for
from .dynamics import DT_SUB_DEFAULT, Propagator, ground_state_vector
from .entanglement import renyi2_from_purity
from .model import (OMEGA_MAX, QUENCH_LENGTH_DEFAULT, QUENCH_TAU_DEFAULT,
                    RAND_DELTA_GLOBAL, RAND_DELTA_LOCAL, DisorderRealisation,
                    Geometry, Regime, chain, get_regime, preparation_schedule,
                    sample_disorder)

# seed-stream tags so every random draw has a unique, scheduler-independent key
_S_DISORDER, _S_BITS, _S_SHOTS, _S_DECO, _S_BOOT = 1, 2, 3, 4, 5


@dataclass(frozen=True)
class QuenchSequence:
    """A random phase-quench program: bits select phi=0 ('0') or pi/2 ('1')."""

    bits: str
    tau: float = QUENCH_TAU_DEFAULT
    omega: float = OMEGA_MAX
    delta_local: float = RAND_DELTA_LOCAL
    delta_global: float = RAND_DELTA_GLOBAL

    def __post_init__(self):
        if not self.bits or any(c not in "01" for c in self.bits):
            raise ValueError("bits must be a nonempty binary string")
        if len(self.bits) * self.tau > 1.0 + 1e-12:
            raise ValueError("total randomisation time L*tau must not exceed 1 us")


def sample_sequence(length: int, rng: np.random.Generator,
                    tau: float = QUENCH_TAU_DEFAULT, **snapshot) -> QuenchSequence:
    """Fair i.i.d. quench bits; deterministic under the supplied generator."""
    if length < 1:
        raise ValueError("sequence length must be >= 1")
    bits = "".join("1" if b else "0" for b in rng.integers(0, 2, size=length))
    return QuenchSequence(bits=bits, tau=tau, **snapshot)


def apply_sequence(psi, seq: QuenchSequence, disorder: DisorderRealisation,
                   geometry: Geometry, propagator: Propagator | None = None,
                   delta_local_per_qubit=None) -> np.ndarray:
    """Apply the quench product U_{y[L]} ... U_{y[1]} to psi.

    The two step unitaries are built once per call context and reused for
    every bit, since each quench is exp(-i tau H_phi) with a fixed pair of
    Hamiltonians.
    """
    prop = propagator or Propagator(geometry, disorder)
    dl = seq.delta_local if delta_local_per_qubit is None else delta_local_per_qubit
    unitaries = {}
    psi = np.asarray(psi, dtype=complex)
    for c in seq.bits:
        u = unitaries.get(c)
        if u is None:
            phi = 0.0 if c == "0" else np.pi / 2
            eig = prop.eigensystem(seq.omega, phi, seq.delta_global, dl)
            u = linalg.unitary_of(eig, seq.tau)
            unitaries[c] = u
        psi = u @ psi
    return psi


# ---------------------------------------------------------------------------
# measurement records and noise channels


@dataclass(frozen=True)
class MeasurementRecord:
    """Bitstring counts from projective readout after one random rotation.

    Bitstring character i is qubit i; '0' means the ground state.
    """

    counts: dict
    n_shots: int
    n_qubits: int
    realisation: int = 0
    unitary: int = 0
    bits: str = ""
    seed: int = 0

    def __post_init__(self):
        if sum(self.counts.values()) != self.n_shots:
            raise ValueError("counts must sum to n_shots")

    def marginal(self, subsystem) -> np.ndarray:
        """Empirical distribution over subsystem bitstrings."""
        sub = sorted(set(int(q) for q in subsystem))
        out = np.zeros(2 ** len(sub))
        for bitstring, c in self.counts.items():
            idx = 0
            for q in sub:
                idx = (idx << 1) | (bitstring[q] == "1")
            out[idx] += c
        return out / self.n_shots


def sample_shots(state_or_probs: np.ndarray, n_shots: int, rng: np.random.Generator,
                 **record_fields) -> MeasurementRecord:
    """Multinomial projective readout; accepts amplitudes or probabilities."""
    arr = np.asarray(state_or_probs)
    probs = np.abs(arr) ** 2 if np.iscomplexobj(arr) else arr.astype(float)
    probs = probs / probs.sum()
    n = linalg.n_qubits_of(probs)
    draws = rng.multinomial(n_shots, probs)
    counts = {format(i, f"0{n}b"): int(c) for i, c in enumerate(draws) if c > 0}
    return MeasurementRecord(counts=counts, n_shots=n_shots, n_qubits=n, **record_fields)


def marginal_from_probs(probs: np.ndarray, subsystem) -> np.ndarray:
    """Exact subsystem marginal of a full outcome distribution."""
    n = linalg.n_qubits_of(probs)
    sub = sorted(set(int(q) for q in subsystem))
    drop = [q for q in range(n) if q not in sub]
    tensor = probs.reshape((2,) * n)
    tensor = np.transpose(tensor, sub + drop)
    return tensor.reshape(2 ** len(sub), -1).sum(axis=1)


@dataclass(frozen=True)
class NoiseModel:
    """Readout confusion, dephasing parameters, and channel switches."""

    eps_g: float = 0.05
    eps_r: float = 0.10
    t2_bare: float = 6.2
    theta_ramsey: float = 4.8
    readout: bool = True
    decoherence: bool = True
    fast_decoherence: bool = False  # one resample per unitary instead of per shot

    def __post_init__(self):
        if not (0.0 <= self.eps_g < 1.0 and 0.0 <= self.eps_r < 1.0):
            raise ValueError("readout error rates must lie in [0, 1)")
        if self.t2_bare <= 0:
            raise ValueError("t2_bare must be positive")


NOISELESS = NoiseModel(readout=False, decoherence=False)


def readout_matrix(eps_g: float, eps_r: float) -> np.ndarray:
    """Column-stochastic per-qubit confusion map on (p_g, p_r)."""
    return np.array([[1.0 - eps_g, eps_r], [eps_g, 1.0 - eps_r]])


def apply_readout_error(probs: np.ndarray, eps_g: float, eps_r: float,
                        invert: bool = False) -> np.ndarray:
    """Apply the per-qubit confusion map (or its inverse) to an N-qubit
    outcome distribution. Total probability is preserved exactly."""
    if not (0.0 <= eps_g < 1.0 and 0.0 <= eps_r < 1.0):
        raise ValueError("readout error rates must lie in [0, 1)")
    t = readout_matrix(eps_g, eps_r)
    if invert:
        t = np.linalg.inv(t)
    n = linalg.n_qubits_of(probs)
    tensor = np.asarray(probs, dtype=float).reshape((2,) * n)
    for q in range(n):
        tensor = np.moveaxis(np.tensordot(t, tensor, axes=([1], [q])), 0, q)
    return tensor.reshape(-1)


def t2_star(delta_local_eff: float, model: NoiseModel) -> float:
    """Dephasing time at a given local-detuning magnitude (rad/us)."""
    return 1.0 / (1.0 / model.t2_bare + abs(delta_local_eff) / model.theta_ramsey)


def resample_decoherence(nominal_delta_local: float, h: np.ndarray, model: NoiseModel,
                         rng: np.random.Generator) -> np.ndarray:
    """Per-qubit local-detuning values redrawn around the nominal one.

    Qubit i sees sigma_i = sqrt(2) / T2*(h_i |Delta_local|): stronger local
    light, faster dephasing, wider resampling.
    """
    if not model.decoherence:
        return np.full(len(h), float(nominal_delta_local))
    sigma = np.array([np.sqrt(2.0) / t2_star(hi * abs(nominal_delta_local), model)
                      for hi in h])
    return nominal_delta_local + sigma * rng.standard_normal(len(h))


# ---------------------------------------------------------------------------
# purity estimation


def estimate_purity_from_marginals(rows: np.ndarray, unbiased: bool = False,
                                   n_shots: int | None = None) -> float:
    """Hamming-weighted pair sum over per-unitary subsystem distributions.

    ``rows`` is (n_U, 2^{N_A}). The default plug-in form squares each
    empirical distribution; ``unbiased=True`` removes same-shot pairs
    (requires ``n_shots``), trading the protocol-faithful bias for an
    unbiased second moment.
    """
    rows = np.atleast_2d(np.ascontiguousarray(rows, dtype=float))
    dim = rows.shape[1]
    n_sub = int(np.log2(dim))
    if 2**n_sub != dim:
        raise ValueError("marginal rows must have length 2^{N_A}")
    weights = hamming_weights(n_sub)
    quad = hamming_quadratic(rows, weights)
    if unbiased:
        if not n_shots or n_shots < 2:
            raise ValueError("unbiased estimator needs n_shots >= 2")
        # E[P^2] counts same-shot pairs at rate 1/n_shots; remove them
        diag = (rows * np.diag(weights)).sum(axis=1) / n_shots
        quad = (quad - diag) * (n_shots / (n_shots - 1.0))
    return float(dim * quad.mean())


def estimate_purity(records, subsystem, unbiased: bool = False) -> float:
    """Purity of ``subsystem`` from measurement records of n_U rotations."""
    records = list(records)
    if not records:
        raise ValueError("no measurement records")
    n = records[0].n_qubits
    if any(r.n_qubits != n for r in records):
        raise ValueError("records mix different qubit counts")
    sub = sorted(set(int(q) for q in subsystem))
    if len(sub) > n:
        raise ValueError("subsystem larger than the register")
    rows = np.array([r.marginal(sub) for r in records])
    n_shots = records[0].n_shots if unbiased else None
    return estimate_purity_from_marginals(rows, unbiased=unbiased, n_shots=n_shots)


def shot_noise_sem(records, subsystem, n_resamples: int = 200,
                   rng: np.random.Generator | None = None) -> float:
    """Parametric-bootstrap standard error of S2 under multinomial shot noise.

    Each record's counts are resampled from its own empirical distribution,
    the purity re-estimated, and the spread of -ln(purity) reported.
    """
    if n_resamples < 100:
        raise ValueError("use at least 100 bootstrap resamples")
    rng = rng or np.random.default_rng()
    records = list(records)
    sub = sorted(set(int(q) for q in subsystem))
    base_rows = np.array([r.marginal(sub) for r in records])
    n_shots = records[0].n_shots
    dim = base_rows.shape[1]
    weights = hamming_weights(int(np.log2(dim)))
    values = np.empty(n_resamples)
    for b in range(n_resamples):
        rows = rng.multinomial(n_shots, base_rows) / n_shots
        quad = hamming_quadratic(np.ascontiguousarray(rows, dtype=float), weights)
        p = dim * quad.mean()
        values[b] = -np.log(p) if p > 0 else np.nan
    values = values[np.isfinite(values)]
    return float(values.std()) if len(values) else float("nan")


# ---------------------------------------------------------------------------
# full protocol pipeline


@dataclass(frozen=True)
class ProtocolConfig:
    """Everything one ensemble protocol run depends on.

    ``regime`` names a built-in disorder setting; alternatively set
    ``delta_local`` (rad/us, negative) for an arbitrary disorder strength,
    with ``delta_global`` chosen to keep the mean detuning at half the
    nearest-neighbour coupling unless given explicitly.
    """

    n_qubits: int = 6
    spacing: float = 10.0
    c6: float = 5.42e6
    regime: str = "chaotic"
    delta_local: float | None = None
    delta_global: float | None = None
    t_evol: tuple = (0.0,)
    n_ens: int = 15
    n_unitaries: int | None = None      # None: per-regime default
    n_shots: int | None = 200           # None: exact outcome probabilities
    subsystem: tuple = (0, 1, 2)
    sequence_length: int = QUENCH_LENGTH_DEFAULT
    tau: float = QUENCH_TAU_DEFAULT
    noise: NoiseModel = NOISELESS
    seed: int = 0
    dt_sub: float = DT_SUB_DEFAULT
    n_bootstrap: int = 200
    decoherence_draws: int = 200        # only used with exact probabilities

    def geometry(self) -> Geometry:
        return chain(self.n_qubits, self.spacing, self.c6)

    def resolved_regime(self) -> Regime:
        if self.delta_local is None:
            return get_regime(self.regime)
        j = self.geometry().nn_coupling
        dg = self.delta_global
        if dg is None:
            dg = 0.5 * j - self.delta_local / 2.0  # keep <Delta_i> = 0.5 J
        strength = abs(self.delta_local) / j if j else 0.0
        n_u = 15 if strength <= 0.5 else (25 if strength >= 23.0 else 20)
        return Regime(self.regime, float(self.delta_local), float(dg), n_u)

    def resolved_n_unitaries(self) -> int:
        return self.n_unitaries if self.n_unitaries else self.resolved_regime().n_unitaries


@dataclass(frozen=True)
class EnsembleResult:
    """Disorder-averaged entropy estimate at one protocol setting."""

    regime: str
    t_evol: float
    s2: float
    sem: float
    n_ens: int
    n_unitaries: int
    n_shots: int | None
    s2_realisations: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if np.isfinite(self.sem) and self.sem < 0:
            raise ValueError("standard error must be nonnegative")


def _realisation_task(config: ProtocolConfig, k: int):
    """All evolution times for one disorder realisation (one parallel task)."""
    geometry = config.geometry()
    regime = config.resolved_regime()
    disorder = sample_disorder(config.n_qubits, seed_for(config.seed, _S_DISORDER, k))
    n_u = config.resolved_n_unitaries()
    noise = config.noise
    out = []
    all_records = []
    prop = Propagator(geometry, disorder, config.dt_sub)
    for ti, t in enumerate(config.t_evol):
        prep = preparation_schedule(t, regime)
        rows = []
        records_t = []
        for j in range(n_u):
            seq = sample_sequence(config.sequence_length,
                                  rng_for(config.seed, _S_BITS, k, ti, j), config.tau)
            if noise.decoherence:
                row, recs = _noisy_rotation(config, geometry, disorder, prep, seq, k, ti, j)
                rows.append(row)
                records_t.extend(recs)
                continue
            psi = prop.run(ground_state_vector(config.n_qubits), prep)
            psi = apply_sequence(psi, seq, disorder, geometry, propagator=prop)
            probs = np.abs(psi) ** 2
            if noise.readout:
                probs = apply_readout_error(probs, noise.eps_g, noise.eps_r)
            if config.n_shots is None:
                rows.append(marginal_from_probs(probs, config.subsystem))
            else:
                rec = sample_shots(probs, config.n_shots,
                                   rng_for(config.seed, _S_SHOTS, k, ti, j),
                                   realisation=k, unitary=j, bits=seq.bits,
                                   seed=seed_for(config.seed, _S_SHOTS, k, ti, j))
                rows.append(rec.marginal(config.subsystem))
                records_t.append(rec)
        purity = estimate_purity_from_marginals(np.array(rows))
        s2 = renyi2_from_purity(purity) if purity > 0 else float("nan")
        if records_t:
            sem = shot_noise_sem(records_t, config.subsystem, config.n_bootstrap,
                                 rng_for(config.seed, _S_BOOT, k, ti))
        else:
            sem = 0.0
        out.append((t, purity, s2, sem))
        all_records.extend(records_t)
    return out, all_records


def _noisy_rotation(config, geometry, disorder, prep, seq, k, ti, j):
    """One random rotation with per-shot decoherence resampling.

    Every shot re-evolves the chain with its own perturbed local detunings
    (the faithful mode); ``fast_decoherence`` draws one perturbation per
    rotation instead.
    """
    noise = config.noise
    regime = config.resolved_regime()
    n_draws = config.n_shots if config.n_shots is not None else config.decoherence_draws
    if noise.fast_decoherence:
        n_draws = 1
    prob_accum = np.zeros(2**config.n_qubits)
    counts_accum: dict = {}
    for s in range(n_draws):
        rng_dec = rng_for(config.seed, _S_DECO, k, ti, j, s)
        dl_evo = resample_decoherence(regime.delta_local, disorder.h, noise, rng_dec)
        dl_rand = resample_decoherence(RAND_DELTA_LOCAL, disorder.h, noise, rng_dec)
        dl_map = {float(regime.delta_local): dl_evo, float(RAND_DELTA_LOCAL): dl_rand}
        prop = Propagator(geometry, disorder, config.dt_sub)
        psi = prop.run(ground_state_vector(config.n_qubits), prep, dl_map)
        psi = apply_sequence(psi, seq, disorder, geometry, propagator=prop,
                             delta_local_per_qubit=dl_rand)
        probs = np.abs(psi) ** 2
        if noise.readout:
            probs = apply_readout_error(probs, noise.eps_g, noise.eps_r)
        if config.n_shots is None:
            prob_accum += probs / n_draws
        else:
            shots_here = config.n_shots if noise.fast_decoherence else 1
            rec = sample_shots(probs, shots_here,
                               rng_for(config.seed, _S_SHOTS, k, ti, j, s))
            for bitstring, c in rec.counts.items():
                counts_accum[bitstring] = counts_accum.get(bitstring, 0) + c
    if config.n_shots is None:
        return marginal_from_probs(prob_accum, config.subsystem), []
    record = MeasurementRecord(counts=counts_accum, n_shots=config.n_shots,
                               n_qubits=config.n_qubits, realisation=k, unitary=j,
                               bits=seq.bits, seed=seed_for(config.seed, _S_SHOTS, k, ti, j))
    return record.marginal(config.subsystem), [record]


def estimate_entropy_ensemble(config: ProtocolConfig, workers: int = 1):
    """Run the full protocol over the disorder ensemble.

    Returns (results, records): one EnsembleResult per evolution time,
    with S2 averaged over realisations and per-realisation shot-noise
    standard errors combined in quadrature.
    """
    from concurrent.futures import ProcessPoolExecutor

    tasks = list(range(config.n_ens))
    if workers <= 1:
        raw = [_realisation_task(config, k) for k in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            raw = list(pool.map(_realisation_task_star,
                                [(config, k) for k in tasks], chunksize=1))
    all_records = []
    for _, recs in raw:
        all_records.extend(recs)
    results = []
    for ti, t in enumerate(config.t_evol):
        s2_vals = np.array([raw[k][0][ti][2] for k in tasks])
        sems = np.array([raw[k][0][ti][3] for k in tasks])
        valid = np.isfinite(s2_vals)
        n_valid = int(valid.sum())
        mean = float(s2_vals[valid].mean()) if n_valid else float("nan")
        sem = (float(np.sqrt(np.nansum(sems[valid] ** 2)) / n_valid)
               if n_valid else float("nan"))
        results.append(EnsembleResult(
            regime=config.regime, t_evol=float(t), s2=mean, sem=sem,
            n_ens=config.n_ens, n_unitaries=config.resolved_n_unitaries(),
            n_shots=config.n_shots, s2_realisations=tuple(float(v) for v in s2_vals)))
    return results, all_records


def _realisation_task_star(args):
    return _realisation_task(*args)


# ---------------------------------------------------------------------------
# record files (JSON lines) and result tables (CSV)


def records_to_jsonl(records) -> str:
    lines = []
    for r in records:
        lines.append(json.dumps({
            "seed": r.seed,
            "realisation": r.realisation,
            "unitary": r.unitary,
            "bits": r.bits,
            "shots": r.n_shots,
            "counts": {k: v for k, v in sorted(r.counts.items())},
        }, sort_keys=True))
    return "\n".join(lines) + ("\n" if lines else "")


def records_from_jsonl(text: str, n_qubits: int):
    out = []
    for line in text.splitlines():
        if not line.strip():
            continue
        d = json.loads(line)
        out.append(MeasurementRecord(
            counts=dict(d["counts"]), n_shots=int(d["shots"]), n_qubits=n_qubits,
            realisation=int(d["realisation"]), unitary=int(d["unitary"]),
            bits=str(d["bits"]), seed=int(d["seed"])))
    return out


def results_to_csv(results, x_name: str = "t_evol_us") -> str:
    lines = [f"regime,{x_name},S2,sem,n_ens,n_U,n_S"]
    for r in results:
        n_s = "" if r.n_shots is None else str(r.n_shots)
        lines.append(f"{r.regime},{r.t_evol!r},{r.s2!r},{r.sem!r},"
                     f"{r.n_ens},{r.n_unitaries},{n_s}")
    return "\n".join(lines) + "\n"
