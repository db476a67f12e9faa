import math

import numpy as np
import pytest

from ducsim.fitting import fit_decaying_cosine, fit_lorentzian, fit_sinusoid


class TestSinusoid:
    def test_noiseless_recovery_is_exact(self):
        x = np.linspace(0, 1, 200)
        y = 0.43 * np.sin(2 * np.pi * 7.3 * x + 0.9) + 0.5
        result = fit_sinusoid(x, y)
        assert result.converged
        assert result.parameters["amplitude"] == pytest.approx(0.43, rel=1e-8)
        assert result.parameters["frequency"] == pytest.approx(7.3, rel=1e-8)
        assert result.parameters["phase"] == pytest.approx(0.9, rel=1e-8)
        assert result.parameters["offset"] == pytest.approx(0.5, rel=1e-8)
        assert result.residual_norm < 1e-10

    def test_constant_data_never_crashes(self):
        x = np.linspace(0, 1, 64)
        y = np.full_like(x, 0.25)
        result = fit_sinusoid(x, y)
        assert result.parameters["amplitude"] == pytest.approx(0.0, abs=1e-6) or not result.converged

    def test_requires_enough_points(self):
        with pytest.raises(ValueError):
            fit_sinusoid([0, 1, 2], [1, 2, 3])

    def test_requires_increasing_x(self):
        x = np.array([0.0, 0.2, 0.1] + list(np.linspace(0.3, 1, 10)))
        with pytest.raises(ValueError):
            fit_sinusoid(x, np.zeros_like(x))

    def test_noisy_recovery(self):
        rng = np.random.default_rng(42)
        x = np.linspace(0, 2, 400)
        y = 1.1 * np.sin(2 * np.pi * 4.0 * x + 0.3) - 0.2 + rng.normal(0, 0.02, x.size)
        result = fit_sinusoid(x, y)
        assert result.converged
        assert result.parameters["frequency"] == pytest.approx(4.0, rel=5e-3)


class TestLorentzian:
    def test_noiseless_recovery(self):
        x = np.linspace(-5, 5, 300)
        y = 0.8 * (0.6 / 2) ** 2 / ((x - 0.37) ** 2 + (0.6 / 2) ** 2) + 0.1
        result = fit_lorentzian(x, y)
        assert result.converged
        assert result.parameters["center"] == pytest.approx(0.37, abs=1e-9)
        assert result.parameters["width"] == pytest.approx(0.6, rel=1e-8)
        assert result.parameters["amplitude"] == pytest.approx(0.8, rel=1e-8)
        assert result.parameters["offset"] == pytest.approx(0.1, abs=1e-9)

    def test_monte_carlo_center_within_tenth_width(self):
        x = np.linspace(-4, 4, 241)
        width = 0.9
        clean = 0.7 * (width / 2) ** 2 / ((x - 0.5) ** 2 + (width / 2) ** 2) + 0.05
        misses = 0
        for seed in range(100):
            rng = np.random.default_rng(seed)
            y = clean + rng.normal(0.0, 0.01, x.size)
            result = fit_lorentzian(x, y)
            if abs(result.parameters["center"] - 0.5) > width / 10:
                misses += 1
        assert misses == 0

    def test_dip_shaped_line(self):
        x = np.linspace(-3, 3, 200)
        y = 1.0 - 0.5 * (0.4 / 2) ** 2 / ((x + 1.0) ** 2 + (0.4 / 2) ** 2)
        result = fit_lorentzian(x, y)
        assert result.converged
        assert result.parameters["center"] == pytest.approx(-1.0, abs=1e-6)
        assert result.parameters["amplitude"] == pytest.approx(-0.5, rel=1e-6)


class TestDecayingCosine:
    def test_noiseless_recovery(self):
        x = np.linspace(0, 5e-6, 400)
        y = 0.5 * np.exp(-x / 2e-6) * np.cos(2 * np.pi * 2.2e6 * x + 0.4) + 0.5
        result = fit_decaying_cosine(x, y)
        assert result.converged
        assert result.parameters["frequency"] == pytest.approx(2.2e6, rel=1e-6)
        assert result.parameters["decay"] == pytest.approx(2e-6, rel=1e-6)
        assert result.parameters["amplitude"] == pytest.approx(0.5, rel=1e-6)

    def test_residual_never_worse_than_start(self):
        rng = np.random.default_rng(9)
        x = np.linspace(0, 1, 128)
        y = rng.normal(0, 1, 128)  # pure noise: converged or not, no crash
        result = fit_decaying_cosine(x, y)
        assert math.isfinite(result.residual_norm)
