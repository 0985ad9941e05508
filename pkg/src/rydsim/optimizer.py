"""Protocol-parameter search and readout calibration.

The randomisation quality of a parameter set (tau, L, delta_global,
delta_local) is scored by how widely repeated random quench sequences
scatter each qubit's Bloch vector in angle while preserving its length:

    C = w_angles * mean(dtheta/pi) * mean(dphi/2pi) - w_purity * mean(dr)

with spreads taken as max-minus-min over the sampled rotations (the
azimuth uses the wrapped range on the circle). C is maximised by
simulated annealing with restarts. Calibration fits damped-contrast Rabi
oscillations and converts the fit amplitude/offset into readout error
rates, both in the legacy reported form and as the exact inversion of
the confusion map (the two differ; see estimate_readout_errors).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from . import linalg
from .dynamics import Propagator
from .model import DELTA_LOCAL_MAX, Geometry, chain, sample_disorder
from .randmeas import QuenchSequence, apply_sequence

W_ANGLES = 1.0
W_PURITY = 2.0


@dataclass(frozen=True)
class ProtocolParams:
    tau: float
    length: int
    delta_global: float
    delta_local: float

    def __post_init__(self):
        if self.length < 1:
            raise ValueError("sequence length must be >= 1")
        if self.length * self.tau > 1.0 + 1e-12:
            raise ValueError("L * tau must not exceed 1 us")
        if abs(self.delta_local) > DELTA_LOCAL_MAX + 1e-9:
            raise ValueError(f"|delta_local| must not exceed {DELTA_LOCAL_MAX}")


def wrapped_range(angles: np.ndarray) -> float:
    """Length of the shortest arc containing all angles (range on a circle)."""
    a = np.sort(np.mod(angles, 2.0 * np.pi))
    if len(a) < 2:
        return 0.0
    gaps = np.diff(np.concatenate([a, [a[0] + 2.0 * np.pi]]))
    return float(2.0 * np.pi - gaps.max())


def rotation_spreads(params: ProtocolParams, rng: np.random.Generator,
                     n_rot: int = 50, n_qubits: int = 6,
                     geometry: Geometry | None = None):
    """Per-qubit Bloch-coordinate spreads over n_rot random sequences.

    Starts from a Haar-random n-qubit state with one grayscale draw, applies
    each random sequence to the same start state, and reads the single-qubit
    Bloch coordinates (r, theta, phi) after every rotation.
    """
    geometry = geometry or chain(n_qubits)
    psi0 = linalg.haar_state(n_qubits, rng)
    disorder = sample_disorder(n_qubits, int(rng.integers(2**63)))
    prop = Propagator(geometry, disorder)
    points = np.zeros((n_rot, n_qubits, 3))
    for i in range(n_rot):
        bits = "".join("1" if b else "0" for b in rng.integers(0, 2, params.length))
        seq = QuenchSequence(bits=bits, tau=params.tau,
                            delta_local=params.delta_local,
                            delta_global=params.delta_global)
        psi = apply_sequence(psi0, seq, disorder, geometry, propagator=prop)
        for q in range(n_qubits):
            points[i, q] = linalg.bloch_vector(linalg.single_qubit_rho(psi, q))
    r = np.linalg.norm(points, axis=2)
    theta = np.arccos(np.clip(points[:, :, 2] / np.maximum(r, 1e-300), -1.0, 1.0))
    phi = np.arctan2(points[:, :, 1], points[:, :, 0])
    d_r = float((r.max(axis=0) - r.min(axis=0)).mean())
    d_theta = float(((theta.max(axis=0) - theta.min(axis=0)) / np.pi).mean())
    d_phi = float(np.mean([wrapped_range(phi[:, q]) / (2.0 * np.pi)
                           for q in range(n_qubits)]))
    return d_theta, d_phi, d_r


def objective_from_spreads(d_theta: float, d_phi: float, d_r: float,
                           w_angles: float = W_ANGLES, w_purity: float = W_PURITY) -> float:
    return w_angles * d_theta * d_phi - w_purity * d_r


def objective(params: ProtocolParams, rng: np.random.Generator, n_rot: int = 50,
              n_qubits: int = 6, w_angles: float = W_ANGLES,
              w_purity: float = W_PURITY) -> float:
    """Randomisation score of one parameter set (higher is better)."""
    d_theta, d_phi, d_r = rotation_spreads(params, rng, n_rot=n_rot, n_qubits=n_qubits)
    return objective_from_spreads(d_theta, d_phi, d_r, w_angles, w_purity)


@dataclass(frozen=True)
class OptimizeResult:
    params: ProtocolParams
    score: float
    trace: tuple  # best score seen after each iteration, nondecreasing
    initial_score: float


def optimize_protocol(bounds: dict, initial: ProtocolParams, rng: np.random.Generator,
                      iterations: int = 1000, restarts: int = 5, n_rot: int = 50,
                      n_qubits: int = 6, objective_fn=None) -> OptimizeResult:
    """Simulated annealing over (tau, L, delta_global, delta_local).

    ``bounds`` maps each field name to (low, high); L proposals are rounded
    to integers and pairs violating L*tau <= 1 are clipped in tau. The
    sampled rotation ensemble is frozen per run (common random numbers), so
    score differences reflect the parameters, and the reported best-score
    trace is nondecreasing with the returned score >= the initial score.
    """
    names = ("tau", "length", "delta_global", "delta_local")
    lo = np.array([bounds[n][0] for n in names], dtype=float)
    hi = np.array([bounds[n][1] for n in names], dtype=float)
    if np.any(lo > hi):
        raise ValueError("infeasible bounds")
    if lo[0] * max(1.0, lo[1]) > 1.0:
        raise ValueError("bounds leave no feasible L * tau <= 1")
    eval_seed = int(rng.integers(2**63))

    def make_params(x) -> ProtocolParams:
        tau, length, dg, dl = x
        length = int(round(length))
        length = max(1, length)
        tau = min(tau, 1.0 / length)
        return ProtocolParams(tau=tau, length=length, delta_global=dg, delta_local=dl)

    if objective_fn is None:
        def objective_fn(p):
            return objective(p, np.random.default_rng(eval_seed), n_rot=n_rot,
                             n_qubits=n_qubits)

    x_init = np.array([initial.tau, initial.length, initial.delta_global,
                       initial.delta_local], dtype=float)
    initial_score = objective_fn(make_params(x_init))
    best_x, best_score = x_init.copy(), initial_score
    trace = []
    t_hot, t_cold = 0.3, 1e-3
    span = hi - lo
    per_restart = max(1, iterations // max(1, restarts))
    for restart in range(max(1, restarts)):
        x = best_x.copy() if restart == 0 else lo + rng.random(4) * span
        score = objective_fn(make_params(x))
        if score > best_score:
            best_score, best_x = score, x.copy()
        for it in range(per_restart):
            temp = t_hot * (t_cold / t_hot) ** (it / max(1, per_restart - 1))
            prop = x + rng.standard_normal(4) * span * (0.3 * temp / t_hot + 0.02)
            prop = np.clip(prop, lo, hi)
            cand = objective_fn(make_params(prop))
            if cand > score or rng.random() < np.exp((cand - score) / temp):
                x, score = prop, cand
            if score > best_score:
                best_score, best_x = score, x.copy()
            trace.append(best_score)
    return OptimizeResult(params=make_params(best_x), score=best_score,
                          trace=tuple(trace), initial_score=initial_score)


# ---------------------------------------------------------------------------
# Rabi calibration


@dataclass(frozen=True)
class RabiFit:
    """Sinusoid fit f(t) = a sin(omega_eff t + varphi) + b, with a >= 0."""

    a: float
    b: float
    omega_eff: float
    varphi: float
    residual: float
    converged: bool

    def __post_init__(self):
        if self.a < 0:
            raise ValueError("fit amplitude must be normalized nonnegative")


def rabi_signal(times: np.ndarray, omega: float, delta: float = 0.0) -> np.ndarray:
    """Ideal driven-qubit excited-state probability at detuning delta."""
    omega_eff = np.sqrt(omega**2 + delta**2)
    contrast = omega**2 / (omega**2 + delta**2)
    return contrast * np.sin(omega_eff * np.asarray(times) / 2.0) ** 2


def fit_rabi(times: np.ndarray, probs: np.ndarray) -> RabiFit:
    """Least-squares sinusoid fit, initialized from the discrete spectrum.

    Degenerate inputs (no oscillation, or a window shorter than one fitted
    period) come back with ``converged=False`` and the residual attached
    rather than raising.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(probs, dtype=float)
    if len(t) < 8:
        raise ValueError("need at least 8 samples to fit a Rabi oscillation")
    if len(t) != len(y):
        raise ValueError("times and probabilities differ in length")

    dt = np.median(np.diff(t))
    yc = y - y.mean()
    spectrum = np.abs(np.fft.rfft(yc))
    freqs = 2.0 * np.pi * np.fft.rfftfreq(len(t), d=dt)
    peak = int(np.argmax(spectrum[1:]) + 1)
    omega0 = max(freqs[peak], 2.0 * np.pi / (t[-1] - t[0]))

    # linear solve for the in/out-of-phase parts at the seed frequency
    design = np.column_stack([np.sin(omega0 * t), np.cos(omega0 * t), np.ones_like(t)])
    (p, q, b0), *_ = np.linalg.lstsq(design, y, rcond=None)

    def model(x):
        a, b, om, ph = x
        return a * np.sin(om * t + ph) + b - y

    x0 = [np.hypot(p, q), b0, omega0, np.arctan2(q, p)]
    sol = least_squares(model, x0)
    a, b, om, ph = sol.x
    if a < 0:
        a, ph = -a, ph + np.pi
    om = abs(om)
    ph = np.remainder(ph + np.pi, 2.0 * np.pi) - np.pi
    residual = float(np.sqrt(np.mean(sol.fun**2)))
    oscillating = a > 3.0 * (residual + 1e-12) and a > 1e-6
    spans_period = (t[-1] - t[0]) * om >= 2.0 * np.pi * 0.99
    converged = bool(sol.success and oscillating and spans_period)
    return RabiFit(a=float(a), b=float(b), omega_eff=float(om), varphi=float(ph),
                   residual=residual, converged=converged)


@dataclass(frozen=True)
class ReadoutEstimate:
    eps_r: float
    eps_g: float
    warnings: tuple = ()


def estimate_readout_errors(fit: RabiFit, omega: float, delta: float = 0.0) -> ReadoutEstimate:
    """Legacy calibration formulas, evaluated verbatim.

    eps_r = 1 - (A+B) / (omega^2 / (omega^2 + delta^2)), eps_g = A - B, with
    the programmed omega and delta (not fit parameters). A - B is the
    negative of the signal minimum, so for confusion-map-corrupted data it
    comes out with the wrong sign; out-of-range values are reported with a
    warning, never clamped. ``recover_readout_errors`` is the exact inverse.
    """
    if omega == 0.0 and delta == 0.0:
        raise ValueError("omega and delta cannot both be zero")
    contrast = omega**2 / (omega**2 + delta**2)
    eps_r = 1.0 - (fit.a + fit.b) / contrast
    eps_g = fit.a - fit.b
    warnings = tuple(f"{name}={val:.4f} outside [0, 1)"
                     for name, val in (("eps_r", eps_r), ("eps_g", eps_g))
                     if not 0.0 <= val < 1.0)
    return ReadoutEstimate(eps_r=float(eps_r), eps_g=float(eps_g), warnings=warnings)


def recover_readout_errors(fit: RabiFit, omega: float, delta: float = 0.0) -> ReadoutEstimate:
    """Exact inversion of the per-qubit confusion map from a Rabi fit.

    For corrupted excited-state data the signal minimum is eps_g and the
    maximum is eps_g (1 - C) + (1 - eps_r) C at contrast C, so
    eps_g = B - A and eps_r follows from the maximum.
    """
    if omega == 0.0 and delta == 0.0:
        raise ValueError("omega and delta cannot both be zero")
    contrast = omega**2 / (omega**2 + delta**2)
    eps_g = fit.b - fit.a
    f_max = fit.a + fit.b
    eps_r = 1.0 - (f_max - eps_g * (1.0 - contrast)) / contrast
    warnings = tuple(f"{name}={val:.4f} outside [0, 1)"
                     for name, val in (("eps_r", eps_r), ("eps_g", eps_g))
                     if not 0.0 <= val < 1.0)
    return ReadoutEstimate(eps_r=float(eps_r), eps_g=float(eps_g), warnings=warnings)
