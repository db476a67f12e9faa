"""Two-level-system response to the chain's output spectrum.

Dynamics run in the frame rotating at the qubit frequency: every tone enters
with its own detuning under the rotating-wave approximation, amplitudes come
from dBm through a 50 ohm power-to-voltage map scaled by the drive coupling.
Integration is fixed-step RK4 on the Bloch vector with T1/T2* damping.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .chain import ChainSetup, output_spectrum
from .fitting import FitResult, fit_decaying_cosine, fit_lorentzian, fit_sinusoid
from .spectra import Spectrum

__all__ = [
    "QubitSpec",
    "FitResult",
    "drive_response",
    "rabi_sweep",
    "ramsey_sweep",
    "spectroscopy_sweep",
    "fit_sinusoid",
    "fit_lorentzian",
    "fit_decaying_cosine",
    "dbm_to_drive_volts",
]


@dataclass(frozen=True)
class QubitSpec:
    """Fixed-frequency two-level system.

    ``drive_coupling_rad_per_s`` converts a unit drive amplitude into a Rabi
    rate; it absorbs the unknown line attenuation between the chain output
    and the qubit.
    """

    f_qubit_hz: float
    t1_s: float
    t2_star_s: float
    drive_coupling_rad_per_s: float

    def __post_init__(self) -> None:
        if min(self.f_qubit_hz, self.t1_s, self.t2_star_s, self.drive_coupling_rad_per_s) <= 0:
            raise ValueError("all qubit parameters must be positive")
        if self.t2_star_s > 2.0 * self.t1_s:
            raise ValueError("t2* cannot exceed 2*t1")


def dbm_to_drive_volts(power_dbm: float) -> float:
    """Peak voltage of a tone of the given power into 50 ohm."""
    power_w = 1e-3 * 10.0 ** (power_dbm / 10.0)
    return math.sqrt(2.0 * 50.0 * power_w)


def _integrate_bloch(
    drives: Sequence[tuple[float, float]],
    duration_s: float,
    t1_s: float,
    t2_s: float,
    steps_per_cycle: int = 50,
) -> float:
    """Excited population after driving from the ground state.

    ``drives`` is a list of (detuning rad/s, Rabi rate rad/s) pairs. The RK4
    step resolves the fastest of all detunings, Rabi rates and damping rates
    with ``steps_per_cycle`` points per cycle.
    """
    if duration_s < 0:
        raise ValueError("duration must be >= 0")
    if duration_s == 0 or not drives:
        return 0.0

    deltas = np.array([d for d, _ in drives])
    omegas = np.array([o for _, o in drives])

    f_char = max(
        float(np.max(np.abs(deltas))) / (2 * math.pi),
        float(np.max(np.abs(omegas))) / (2 * math.pi),
        1.0 / t1_s,
        1.0 / t2_s,
        1.0 / duration_s,
    )
    dt = 1.0 / (steps_per_cycle * f_char)
    n_steps = max(1, math.ceil(duration_s / dt))
    n_steps = min(n_steps, 5_000_000)
    dt = duration_s / n_steps

    def rhs(t: float, r: np.ndarray) -> np.ndarray:
        phases = deltas * t
        omega_x = float(np.dot(omegas, np.cos(phases)))
        omega_y = float(np.dot(omegas, np.sin(phases)))
        x, y, z = r
        return np.array(
            [
                omega_y * z - x / t2_s,
                -omega_x * z - y / t2_s,
                omega_x * y - omega_y * x - (z - 1.0) / t1_s,
            ]
        )

    r = np.array([0.0, 0.0, 1.0])  # ground state, z = +1
    t = 0.0
    for _ in range(n_steps):
        k1 = rhs(t, r)
        k2 = rhs(t + dt / 2, r + dt / 2 * k1)
        k3 = rhs(t + dt / 2, r + dt / 2 * k2)
        k4 = rhs(t + dt, r + dt * k3)
        r = r + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += dt
    population = (1.0 - float(r[2])) / 2.0
    return min(max(population, 0.0), 1.0)


def drive_response(
    qubit: QubitSpec,
    spectrum: Spectrum,
    duration_s: float,
    amplitude_scale: float = 1.0,
    steps_per_cycle: int = 50,
) -> float:
    """Excited population after driving the qubit with a whole spectrum."""
    drives = []
    for tone in spectrum.tones:
        detuning = 2 * math.pi * (tone.frequency_hz - qubit.f_qubit_hz)
        rabi = qubit.drive_coupling_rad_per_s * dbm_to_drive_volts(tone.power_dbm)
        rabi *= amplitude_scale
        if rabi != 0.0:
            drives.append((detuning, rabi))
    return _integrate_bloch(drives, duration_s, qubit.t1_s, qubit.t2_star_s, steps_per_cycle)


def rabi_sweep(
    qubit: QubitSpec,
    amplitudes: Sequence[float],
    duration_s: float = 50e-9,
) -> np.ndarray:
    """Population vs dimensionless drive amplitude for a resonant pulse."""
    if any(a < 0 for a in amplitudes):
        raise ValueError("amplitudes must be >= 0")
    populations = []
    for amplitude in amplitudes:
        rabi = qubit.drive_coupling_rad_per_s * amplitude
        drives = [(0.0, rabi)] if rabi else []
        populations.append(
            _integrate_bloch(drives, duration_s, qubit.t1_s, qubit.t2_star_s)
        )
    return np.array(populations)


def ramsey_sweep(
    qubit: QubitSpec,
    detuning_hz: float,
    waits_s: Sequence[float],
) -> np.ndarray:
    """Fringe P(t) = (1 + exp(-t/T2*) cos(2 pi detuning t)) / 2.

    The two pi/2 rotations are taken as ideal and instantaneous, so the
    envelope carries pure T2* decay and the fringe runs at the programmed
    detuning.
    """
    waits = np.asarray(waits_s, dtype=float)
    if np.any(waits < 0):
        raise ValueError("wait times must be >= 0")
    return 0.5 * (
        1.0 + np.exp(-waits / qubit.t2_star_s) * np.cos(2 * np.pi * detuning_hz * waits)
    )


def steady_state_population(
    qubit: QubitSpec, spectrum: Spectrum, amplitude_scale: float = 1.0
) -> float:
    """Weak continuous drive: sum of per-tone saturation Lorentzians."""
    total = 0.0
    t1, t2 = qubit.t1_s, qubit.t2_star_s
    for tone in spectrum.tones:
        detuning = 2 * math.pi * (tone.frequency_hz - qubit.f_qubit_hz)
        rabi = qubit.drive_coupling_rad_per_s * dbm_to_drive_volts(tone.power_dbm)
        rabi *= amplitude_scale
        s = rabi * rabi * t1 * t2
        total += 0.5 * s / (1.0 + (detuning * t2) ** 2 + s)
    return min(total, 1.0)


def spectroscopy_sweep(
    qubit: QubitSpec,
    setup: ChainSetup,
    targets_hz: Sequence[float],
    input_spectrum: Spectrum,
    amplitude_scale: float = 1.0,
    max_order: int = 3,
) -> np.ndarray:
    """Continuous-wave line scan: retune LO2 per target, drive, read out.

    Unplannable targets raise; callers sweeping past the passband edges
    should clip their grids first.
    """
    populations = []
    for target in targets_hz:
        plan = setup.plan_for_target(target)
        chain = setup.build(plan)
        out = output_spectrum(chain, input_spectrum, max_order)
        populations.append(steady_state_population(qubit, out, amplitude_scale))
    return np.array(populations)
