"""Chain geometry, disorder, Hamiltonian construction, and pulse schedules.

The Hamiltonian of an N-qubit chain is

    H = (Omega/2) sum_i (e^{i phi} sp_i + e^{-i phi} sm_i)
        - sum_i Delta_i n_i + sum_{i<j} J_ij n_i n_j

with sp = |r><g|, n = |r><r|, Delta_i = delta_global + h_i * delta_local,
and J_ij = c6 / |x_i - x_j|^6. All rates rad/us, distances um.

Schedules are ordered lists of hold / linear-ramp segments; the drive
phase phi is a step function and may only change at segment boundaries.
Hardware-style limits (minimum segment duration, slew rates, control
ranges) live in ``validate_schedule``, which reports all violations
instead of failing on the first.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

# hardware-scale constants (rad/us, us, um)
C6_DEFAULT = 5.42e6
OMEGA_MAX = 15.8
DELTA_LOCAL_MAX = 125.0
MIN_TIMESTEP = 0.05
DETUNE_RAMP_TIME = 0.05
OMEGA_RAMP_TIME = 0.0632
OMEGA_SLEW_MAX = OMEGA_MAX / OMEGA_RAMP_TIME          # 250 rad/us^2
DELTA_LOCAL_SLEW_MAX = DELTA_LOCAL_MAX / DETUNE_RAMP_TIME  # 2500 rad/us^2
FIELD_X_UM = 75.0
FIELD_Y_UM = 125.0

# randomisation-stage controls and the span of the quench window in the
# canonical trace (end-to-end timing of the reference pulse program)
RAND_DELTA_LOCAL = -102.72
RAND_DELTA_GLOBAL = 26.73
RANDOMISE_SPAN = 0.9953
QUENCH_LENGTH_DEFAULT = 16
QUENCH_TAU_DEFAULT = 0.06


@dataclass(frozen=True)
class Regime:
    """Evolution-stage detuning pair for one disorder-strength setting."""

    name: str
    delta_local: float
    delta_global: float
    n_unitaries: int  # default rotation budget for the measurement protocol

    @property
    def mean_detuning(self) -> float:
        return self.delta_global + self.delta_local / 2.0


REGIMES = {
    "chaotic": Regime("chaotic", -2.71, 4.065, 15),
    "mbl": Regime("mbl", -54.2, 29.81, 20),
    "trivial": Regime("trivial", -125.0, 65.21, 25),
}
_REGIME_ALIASES = {"moderate": "mbl", "localised": "mbl", "localized": "mbl"}


def get_regime(name: str) -> Regime:
    key = name.strip().lower()
    key = _REGIME_ALIASES.get(key, key)
    if key not in REGIMES:
        raise ValueError(f"unknown regime {name!r}; expected one of {sorted(REGIMES)}")
    return REGIMES[key]


@dataclass(frozen=True)
class Geometry:
    """Atom positions (um) and the van der Waals coefficient c6 (rad/us um^6)."""

    positions: np.ndarray
    c6: float = C6_DEFAULT

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.positions, dtype=float))
        object.__setattr__(self, "positions", pos)
        if pos.shape[1] != 2:
            raise ValueError("positions must be (x, y) pairs")
        span = pos.max(axis=0) - pos.min(axis=0)
        if span[0] > FIELD_X_UM + 1e-9 or span[1] > FIELD_Y_UM + 1e-9:
            raise ValueError(
                f"geometry extent {span} um exceeds the {FIELD_X_UM} x {FIELD_Y_UM} um field"
            )
        if len(pos) > 1:
            d = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=2)
            np.fill_diagonal(d, np.inf)
            if d.min() <= 0.0:
                raise ValueError("coincident atoms in geometry")

    @property
    def n_atoms(self) -> int:
        return len(self.positions)

    @property
    def nn_coupling(self) -> float:
        """Interaction energy of the closest pair (the J scale of a chain)."""
        if self.n_atoms < 2:
            return 0.0
        d = np.linalg.norm(self.positions[:, None, :] - self.positions[None, :, :], axis=2)
        np.fill_diagonal(d, np.inf)
        return self.c6 / d.min() ** 6


def chain(n_atoms: int, spacing: float = 10.0, c6: float = C6_DEFAULT) -> Geometry:
    """Equally spaced chain along the long axis of the field."""
    pos = np.column_stack([np.zeros(n_atoms), spacing * np.arange(n_atoms)])
    return Geometry(positions=pos, c6=c6)


def interaction_matrix(geom: Geometry) -> np.ndarray:
    """Symmetric J_ij = c6 / r_ij^6 with zero diagonal."""
    pos = geom.positions
    n = geom.n_atoms
    if n == 0:
        return np.zeros((0, 0))
    d = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=2)
    np.fill_diagonal(d, np.inf)
    if np.any(d == 0.0):
        raise ValueError("coincident atoms give a divergent interaction")
    return geom.c6 / d**6


def blockade_radius(omega: float, delta, c6: float = C6_DEFAULT):
    """(c6 / sqrt(omega^2 + delta^2))^(1/6); elementwise over per-atom delta."""
    delta = np.asarray(delta, dtype=float)
    denom = np.sqrt(omega**2 + delta**2)
    if np.any(denom == 0.0):
        raise ValueError("blockade radius undefined at zero drive and zero detuning")
    return (c6 / denom) ** (1.0 / 6.0)


@dataclass(frozen=True)
class DisorderRealisation:
    """One draw of grayscale coefficients h_i in [0, 1] and the seed used."""

    h: np.ndarray
    seed: int

    def __post_init__(self):
        h = np.asarray(self.h, dtype=float)
        object.__setattr__(self, "h", h)
        if np.any(h < 0.0) or np.any(h > 1.0):
            raise ValueError("grayscale coefficients must lie in [0, 1]")


def sample_disorder(n_qubits: int, seed: int) -> DisorderRealisation:
    """i.i.d. uniform grayscale coefficients, deterministic for a fixed seed."""
    rng = np.random.default_rng(seed)
    return DisorderRealisation(h=rng.random(n_qubits), seed=int(seed))


@dataclass(frozen=True)
class ControlSnapshot:
    """Instantaneous global controls: Rabi rate, phase, detunings (rad/us)."""

    omega: float = 0.0
    phi: float = 0.0
    delta_global: float = 0.0
    delta_local: float = 0.0

    def violations(self, where: str = "snapshot") -> list[str]:
        out = []
        if abs(self.omega) > OMEGA_MAX + 1e-9:
            out.append(f"{where}: omega-range |{self.omega}| > {OMEGA_MAX}")
        if abs(self.delta_local) > DELTA_LOCAL_MAX + 1e-9:
            out.append(f"{where}: delta-local-range |{self.delta_local}| > {DELTA_LOCAL_MAX}")
        return out


@dataclass(frozen=True)
class HamiltonianSpec:
    """Static geometry and disorder plus one control snapshot."""

    geometry: Geometry
    disorder: DisorderRealisation
    snapshot: ControlSnapshot

    def detunings(self) -> np.ndarray:
        return self.snapshot.delta_global + self.disorder.h * self.snapshot.delta_local


def hamiltonian_matrix(geometry: Geometry, h: np.ndarray, omega: float, phi: float,
                       delta_global: float, delta_local) -> np.ndarray:
    """Dense H for the chain; real symmetric when phi == 0.

    ``delta_local`` may be a scalar or a per-qubit array (the latter is how
    decoherence resampling perturbs the local detuning channel).
    """
    n = geometry.n_atoms
    dim = 2**n
    jm = interaction_matrix(geometry)
    deltas = delta_global + np.asarray(h, dtype=float) * np.asarray(delta_local, dtype=float)
    if deltas.shape != (n,):
        raise ValueError("per-qubit delta_local must have one entry per atom")

    b = np.arange(dim)
    bits = np.empty((n, dim), dtype=np.int8)
    for i in range(n):
        bits[i] = (b >> (n - 1 - i)) & 1
    diag = -(deltas @ bits)
    for i in range(n):
        for j in range(i + 1, n):
            if jm[i, j] != 0.0:
                diag = diag + jm[i, j] * (bits[i] * bits[j])

    real_valued = float(phi) == 0.0
    out = np.zeros((dim, dim), dtype=np.float64 if real_valued else np.complex128)
    amp = (omega / 2.0) * (1.0 if real_valued else np.exp(1j * phi))
    if omega != 0.0:
        for i in range(n):
            step = 1 << (n - 1 - i)
            src = b[bits[i] == 0]
            out[src + step, src] += amp
            out[src, src + step] += np.conj(amp)
    out[np.diag_indices(dim)] += diag
    return out


def build_hamiltonian(spec: HamiltonianSpec, delta_local_per_qubit=None) -> np.ndarray:
    snap = spec.snapshot
    dl = snap.delta_local if delta_local_per_qubit is None else delta_local_per_qubit
    return hamiltonian_matrix(spec.geometry, spec.disorder.h, snap.omega, snap.phi,
                              snap.delta_global, dl)


# ---------------------------------------------------------------------------
# schedules

HOLD = "hold"
RAMP = "linear-ramp"


@dataclass(frozen=True)
class Segment:
    duration: float
    kind: str  # HOLD or RAMP
    start: ControlSnapshot
    end: ControlSnapshot
    label: str = ""

    def at(self, frac: float) -> ControlSnapshot:
        """Controls at a fractional position inside the segment."""
        if self.kind == HOLD or frac <= 0.0:
            return self.start
        if frac >= 1.0:
            return self.end
        return ControlSnapshot(
            omega=self.start.omega + frac * (self.end.omega - self.start.omega),
            phi=self.start.phi,
            delta_global=self.start.delta_global
            + frac * (self.end.delta_global - self.start.delta_global),
            delta_local=self.start.delta_local
            + frac * (self.end.delta_local - self.start.delta_local),
        )


@dataclass(frozen=True)
class Schedule:
    segments: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))

    @property
    def duration(self) -> float:
        return sum(s.duration for s in self.segments)

    def __iter__(self):
        return iter(self.segments)

    def __len__(self):
        return len(self.segments)


def _hold(duration, snap, label=""):
    return Segment(duration, HOLD, snap, snap, label)


def _ramp(duration, start, end, label=""):
    return Segment(duration, RAMP, start, end, label)


def standard_schedule(t_evol: float, regime, quench_bits: str,
                      tau: float | None = None) -> Schedule:
    """Reference pulse program: prepare, evolve, randomise, measure.

    Stages, matching the canonical hardware trace end to end:

    1. delta_global preset; delta_local ramps to its evolution value
       over 0.05 us with the drive off;
    2. drive ramps to full scale over 0.0632 us;
    3. hold for ``t_evol`` (omitted when zero);
    4. detunings ramp to the randomisation values over 0.05 us;
    5. one hold per quench bit, phi = 0 ('0') or pi/2 ('1'); by default
       the holds split the canonical randomisation window equally, or
       pass ``tau`` for an explicit per-quench duration;
    6. drive ramps down, then the detunings, and the chain is measured.

    With the defaults and 16 quench bits the total duration is
    1.2717 + t_evol us.
    """
    if t_evol < 0:
        raise ValueError("t_evol must be nonnegative")
    regime = regime if isinstance(regime, Regime) else get_regime(regime)
    bits = [int(c) for c in str(quench_bits)]
    if any(c not in (0, 1) for c in bits):
        raise ValueError("quench_bits must be a binary string")
    if not bits:
        raise ValueError("quench_bits must be nonempty")
    tau_eff = RANDOMISE_SPAN / len(bits) if tau is None else float(tau)

    dg, dl = regime.delta_global, regime.delta_local
    s_pre = ControlSnapshot(0.0, 0.0, dg, 0.0)
    s_local = ControlSnapshot(0.0, 0.0, dg, dl)
    s_evol = ControlSnapshot(OMEGA_MAX, 0.0, dg, dl)
    s_rand0 = ControlSnapshot(OMEGA_MAX, 0.0, RAND_DELTA_GLOBAL, RAND_DELTA_LOCAL)
    s_rand1 = replace(s_rand0, phi=np.pi / 2)
    s_down = ControlSnapshot(0.0, 0.0, RAND_DELTA_GLOBAL, RAND_DELTA_LOCAL)
    s_off = ControlSnapshot(0.0, 0.0, 0.0, 0.0)

    segments = [
        _ramp(DETUNE_RAMP_TIME, s_pre, s_local, "prepare-delta-local"),
        _ramp(OMEGA_RAMP_TIME, s_local, s_evol, "prepare-drive"),
    ]
    if t_evol > 0:
        segments.append(_hold(t_evol, s_evol, "evolve"))
    segments.append(_ramp(DETUNE_RAMP_TIME, s_evol, s_rand0, "ramp-to-randomise"))
    for k, bit in enumerate(bits):
        segments.append(_hold(tau_eff, s_rand1 if bit else s_rand0, f"quench-{k}"))
    segments.append(_ramp(OMEGA_RAMP_TIME, s_rand0, s_down, "drive-down"))
    segments.append(_ramp(DETUNE_RAMP_TIME, s_down, s_off, "detuning-down"))
    return Schedule(segments=tuple(segments))


def preparation_schedule(t_evol: float, regime) -> Schedule:
    """Prepare-and-evolve stages only (through the ramp to randomisation).

    This is the part of the reference program shared by every random
    rotation of a given realisation; quench unitaries are applied on top.
    """
    full = standard_schedule(t_evol, regime, "0")
    keep = [s for s in full if not s.label.startswith(("quench", "drive-down", "detuning-down"))]
    return Schedule(segments=tuple(keep))


def validate_schedule(schedule: Schedule) -> list[str]:
    """All hardware-constraint violations of a schedule (empty list = ok)."""
    out = []
    for k, seg in enumerate(schedule):
        where = f"segment {k} ({seg.label or seg.kind})"
        if seg.duration < MIN_TIMESTEP - 1e-12:
            out.append(f"{where}: min-timestep {seg.duration} < {MIN_TIMESTEP}")
        out.extend(seg.start.violations(where))
        if seg.kind == RAMP:
            out.extend(seg.end.violations(where))
            if seg.start.phi != seg.end.phi:
                out.append(f"{where}: phi-ramp (phase must be a step function)")
            if seg.duration > 0:
                om_rate = abs(seg.end.omega - seg.start.omega) / seg.duration
                dl_rate = abs(seg.end.delta_local - seg.start.delta_local) / seg.duration
                if om_rate > OMEGA_SLEW_MAX + 1e-9:
                    out.append(f"{where}: slew-rate-omega {om_rate:.1f} > {OMEGA_SLEW_MAX:.1f}")
                if dl_rate > DELTA_LOCAL_SLEW_MAX + 1e-9:
                    out.append(
                        f"{where}: slew-rate-delta-local {dl_rate:.1f} > {DELTA_LOCAL_SLEW_MAX:.1f}"
                    )
        elif seg.kind == HOLD:
            if seg.start != seg.end:
                out.append(f"{where}: hold segment with differing endpoints")
        else:
            out.append(f"{where}: unknown segment kind {seg.kind!r}")
    return out


# ---------------------------------------------------------------------------
# JSON serialization (strict: unknown fields are rejected)


def _snapshot_to_json(s: ControlSnapshot) -> dict:
    return {
        "omega_rad_per_us": s.omega,
        "phi_rad": s.phi,
        "delta_global_rad_per_us": s.delta_global,
        "delta_local_rad_per_us": s.delta_local,
    }


def _snapshot_from_json(d: dict) -> ControlSnapshot:
    known = {"omega_rad_per_us", "phi_rad", "delta_global_rad_per_us", "delta_local_rad_per_us"}
    _reject_unknown(d, known, "control snapshot")
    return ControlSnapshot(
        omega=float(d["omega_rad_per_us"]),
        phi=float(d["phi_rad"]),
        delta_global=float(d["delta_global_rad_per_us"]),
        delta_local=float(d["delta_local_rad_per_us"]),
    )


def _reject_unknown(d: dict, known: set, what: str):
    unknown = set(d) - known
    if unknown:
        raise ValueError(f"unknown fields in {what}: {sorted(unknown)}")


def schedule_to_json(schedule: Schedule) -> str:
    doc = {
        "segments": [
            {
                "duration_us": seg.duration,
                "kind": seg.kind,
                "label": seg.label,
                "start": _snapshot_to_json(seg.start),
                "end": _snapshot_to_json(seg.end),
            }
            for seg in schedule
        ]
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def schedule_from_json(text: str) -> Schedule:
    doc = json.loads(text)
    _reject_unknown(doc, {"segments"}, "schedule")
    segments = []
    for raw in doc["segments"]:
        _reject_unknown(raw, {"duration_us", "kind", "label", "start", "end"}, "segment")
        segments.append(
            Segment(
                duration=float(raw["duration_us"]),
                kind=str(raw["kind"]),
                start=_snapshot_from_json(raw["start"]),
                end=_snapshot_from_json(raw["end"]),
                label=str(raw.get("label", "")),
            )
        )
    return Schedule(segments=tuple(segments))


def hamiltonian_spec_to_json(spec: HamiltonianSpec) -> str:
    doc = {
        "geometry": {
            "positions_um": spec.geometry.positions.tolist(),
            "c6_rad_um6_per_us": spec.geometry.c6,
        },
        "disorder": {"h": spec.disorder.h.tolist(), "seed": spec.disorder.seed},
        "snapshot": _snapshot_to_json(spec.snapshot),
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def hamiltonian_spec_from_json(text: str) -> HamiltonianSpec:
    doc = json.loads(text)
    _reject_unknown(doc, {"geometry", "disorder", "snapshot"}, "hamiltonian spec")
    _reject_unknown(doc["geometry"], {"positions_um", "c6_rad_um6_per_us"}, "geometry")
    _reject_unknown(doc["disorder"], {"h", "seed"}, "disorder")
    geom = Geometry(
        positions=np.asarray(doc["geometry"]["positions_um"], dtype=float),
        c6=float(doc["geometry"]["c6_rad_um6_per_us"]),
    )
    dis = DisorderRealisation(
        h=np.asarray(doc["disorder"]["h"], dtype=float), seed=int(doc["disorder"]["seed"])
    )
    return HamiltonianSpec(geometry=geom, disorder=dis, snapshot=_snapshot_from_json(doc["snapshot"]))
