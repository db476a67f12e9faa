"""Least-squares readout fits: sinusoid, Lorentzian, decaying cosine.

Damped Gauss-Newton with analytic Jacobians and Levenberg-style step
control. Frequency-bearing models are seeded from the discrete-spectrum
peak of the data, which keeps the solver inside the right basin.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


@dataclass(frozen=True)
class FitResult:
    parameters: dict[str, float]
    residual_norm: float
    converged: bool
    iterations: int

    def to_json_dict(self) -> dict:
        return {
            "parameters": dict(self.parameters),
            "residual_norm": self.residual_norm,
            "converged": self.converged,
        }


def _validate_xy(x, y, n_params: int) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or x.shape != y.shape:
        raise ValueError("x and y must be 1-D arrays of equal length")
    if len(x) < 2 * n_params:
        raise ValueError(f"need at least {2 * n_params} points to fit {n_params} parameters")
    if np.any(np.diff(x) <= 0):
        raise ValueError("x must be strictly increasing")
    return x, y


def _damped_gauss_newton(
    model: Callable[[np.ndarray], np.ndarray],
    jacobian: Callable[[np.ndarray], np.ndarray],
    y: np.ndarray,
    p0: np.ndarray,
    max_iter: int = 200,
    tol: float = 1e-12,
) -> tuple[np.ndarray, float, bool, int]:
    p = np.array(p0, dtype=float)
    r = model(p) - y
    cost = float(r @ r)
    lam = 1e-3
    iterations = 0
    converged = False
    for iterations in range(1, max_iter + 1):
        jac = jacobian(p)
        jtj = jac.T @ jac
        jtr = jac.T @ r
        stepped = False
        for _ in range(25):
            try:
                delta = np.linalg.solve(jtj + lam * np.diag(np.diag(jtj) + 1e-30), -jtr)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            p_try = p + delta
            r_try = model(p_try) - y
            cost_try = float(r_try @ r_try)
            if math.isfinite(cost_try) and cost_try <= cost:
                rel_drop = (cost - cost_try) / max(cost, 1e-300)
                step_size = float(np.max(np.abs(delta) / (np.abs(p) + 1e-12)))
                p, r, cost = p_try, r_try, cost_try
                lam = max(lam / 3.0, 1e-12)
                stepped = True
                if rel_drop < tol or step_size < 1e-14:
                    converged = True
                break
            lam *= 10.0
        if not stepped:
            # stuck: either already at a minimum or the model is degenerate
            converged = cost <= float((model(p0) - y) @ (model(p0) - y))
            break
        if converged:
            break
    return p, math.sqrt(cost), converged, iterations


def _dominant_frequency(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """(frequency, phase-of-cosine) of the strongest non-DC spectral line."""
    dx = float(np.mean(np.diff(x)))
    detrended = y - np.mean(y)
    spectrum = np.fft.rfft(detrended)
    freqs = np.fft.rfftfreq(len(y), d=dx)
    if len(spectrum) < 2:
        return 0.0, 0.0
    k = 1 + int(np.argmax(np.abs(spectrum[1:])))
    phase = float(np.angle(spectrum[k] * np.exp(2j * np.pi * freqs[k] * x[0])))
    return float(freqs[k]), phase


def fit_sinusoid(x: Sequence[float], y: Sequence[float]) -> FitResult:
    """Fit y = amplitude * sin(2 pi frequency x + phase) + offset."""
    x, y = _validate_xy(x, y, 4)

    def unpack(p):
        return p[0], p[1], p[2], p[3]

    def model(p):
        a, f, ph, c = unpack(p)
        return a * np.sin(2 * np.pi * f * x + ph) + c

    def jacobian(p):
        a, f, ph, c = unpack(p)
        arg = 2 * np.pi * f * x + ph
        return np.column_stack(
            [
                np.sin(arg),
                a * np.cos(arg) * 2 * np.pi * x,
                a * np.cos(arg),
                np.ones_like(x),
            ]
        )

    f0, cos_phase = _dominant_frequency(x, y)
    amplitude0 = float(np.sqrt(2.0) * np.std(y))
    p0 = np.array([amplitude0, f0, cos_phase + np.pi / 2.0, float(np.mean(y))])
    p, norm, converged, iters = _damped_gauss_newton(model, jacobian, y, p0)
    a, f, ph, c = p
    if a < 0:  # canonical form: positive amplitude, phase wrapped to (-pi, pi]
        a, ph = -a, ph + np.pi
    ph = math.remainder(ph, 2 * math.pi)
    if f < 0:
        f, ph = -f, math.remainder(-ph, 2 * math.pi)
    params = {"amplitude": float(a), "frequency": float(f), "phase": float(ph), "offset": float(c)}
    return FitResult(params, norm, converged, iters)


def fit_lorentzian(x: Sequence[float], y: Sequence[float]) -> FitResult:
    """Fit y = amplitude * (w/2)^2 / ((x - center)^2 + (w/2)^2) + offset."""
    x, y = _validate_xy(x, y, 4)

    def model(p):
        center, width, amplitude, offset = p
        hw2 = (width / 2.0) ** 2
        return amplitude * hw2 / ((x - center) ** 2 + hw2) + offset

    def jacobian(p):
        center, width, amplitude, offset = p
        hw2 = (width / 2.0) ** 2
        denominator = (x - center) ** 2 + hw2
        shape = hw2 / denominator
        d_center = amplitude * hw2 * 2 * (x - center) / denominator**2
        d_width = amplitude * (width / 2.0) * ((x - center) ** 2) / denominator**2
        return np.column_stack([d_center, d_width, shape, np.ones_like(x)])

    edge = 0.5 * (y[0] + y[-1])
    peak_idx = int(np.argmax(np.abs(y - edge)))
    amplitude0 = float(y[peak_idx] - edge)
    center0 = float(x[peak_idx])
    above = np.abs(y - edge) >= abs(amplitude0) / 2.0
    if np.count_nonzero(above) >= 2:
        width0 = float(x[above][-1] - x[above][0])
    else:
        width0 = 0.0
    width0 = width0 or float((x[-1] - x[0]) / 10.0)
    p0 = np.array([center0, width0, amplitude0, edge])
    p, norm, converged, iters = _damped_gauss_newton(model, jacobian, y, p0)
    params = {
        "center": float(p[0]),
        "width": float(abs(p[1])),
        "amplitude": float(p[2]),
        "offset": float(p[3]),
    }
    return FitResult(params, norm, converged, iters)


def fit_decaying_cosine(x: Sequence[float], y: Sequence[float]) -> FitResult:
    """Fit y = amplitude * exp(-x/decay) * cos(2 pi frequency x + phase) + offset."""
    x, y = _validate_xy(x, y, 5)

    def model(p):
        a, f, ph, c, tau = p
        return a * np.exp(-x / tau) * np.cos(2 * np.pi * f * x + ph) + c

    def jacobian(p):
        a, f, ph, c, tau = p
        envelope = np.exp(-x / tau)
        arg = 2 * np.pi * f * x + ph
        cos_term = np.cos(arg)
        sin_term = np.sin(arg)
        return np.column_stack(
            [
                envelope * cos_term,
                -a * envelope * sin_term * 2 * np.pi * x,
                -a * envelope * sin_term,
                np.ones_like(x),
                a * envelope * cos_term * x / tau**2,
            ]
        )

    f0, cos_phase = _dominant_frequency(x, y)
    span = float(x[-1] - x[0]) or 1.0
    p0 = np.array(
        [float(np.sqrt(2.0) * np.std(y)), f0, cos_phase, float(np.mean(y)), span]
    )
    p, norm, converged, iters = _damped_gauss_newton(model, jacobian, y, p0)
    a, f, ph, c, tau = p
    if a < 0:
        a, ph = -a, ph + np.pi
    ph = math.remainder(ph, 2 * math.pi)
    if f < 0:
        f, ph = -f, math.remainder(-ph, 2 * math.pi)
    params = {
        "amplitude": float(a),
        "frequency": float(f),
        "phase": float(ph),
        "offset": float(c),
        "decay": float(abs(tau)),
    }
    return FitResult(params, norm, converged, iters)
