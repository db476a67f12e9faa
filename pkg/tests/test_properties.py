"""Property suites for the module-level invariants, randomized with fixed seeds."""
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from ducsim.chain import (
    DEFAULT_CONSTRAINTS,
    ChainSetup,
    MixerSpec,
    PlanningError,
    benchmark_input,
    benchmark_setup,
    plan,
    propagate,
)
from ducsim.microstrip import (
    SynthesisError,
    analyze_parallel_coupled,
    coupled_line_parameters,
    fr4_substrate,
    line_parameters,
    synthesize_parallel_coupled,
)
from ducsim.qubit import QubitSpec, drive_response
from ducsim.responses import PrototypeResponse, TabulatedResponse, passband_metrics
from ducsim.spectra import Spectrum, Tone, apply_response, merge, mix, sfdr

finite_power = st.floats(min_value=-100.0, max_value=20.0, allow_nan=False)
frequency = st.floats(min_value=1e6, max_value=2e10, allow_nan=False)


@st.composite
def spectra(draw, max_tones=12):
    count = draw(st.integers(min_value=0, max_value=max_tones))
    tones = tuple(
        Tone(draw(frequency), draw(finite_power), draw(st.sampled_from(["", "a", "b"])))
        for _ in range(count)
    )
    tolerance = draw(st.sampled_from([0.0, 1e3, 1e5]))
    return Spectrum(tones, tolerance)


class TestSpectraInvariants:
    @given(spectra(), st.sampled_from([0.0, 1e3, 1e6]))
    def test_merge_idempotent(self, spectrum, tolerance):
        once = merge(spectrum, tolerance)
        twice = merge(once, tolerance)
        assert twice == once

    @given(
        st.floats(min_value=1e9, max_value=8e9),
        st.floats(min_value=1e7, max_value=4e8),
        finite_power,
    )
    def test_ideal_mix_gives_exactly_two_tones(self, f_lo, f_in, power):
        mixer = MixerSpec(
            conversion_loss_db=7.0,
            lo_to_rf_isolation_db=math.inf,
            if_to_rf_isolation_db=math.inf,
            spur_table={(1, 1): 0.0},
            lo_range_hz=(1e6, 100e9),
        )
        spectrum = Spectrum((Tone(f_in, power, "in"),))
        out = mix(spectrum, Tone(f_lo, 10.0, "LO"), mixer, max_order=1)
        assert len(out) == 2
        freqs = sorted(t.frequency_hz for t in out.tones)
        assert freqs[0] == pytest.approx(abs(f_lo - f_in), rel=1e-12)
        assert freqs[1] == pytest.approx(f_lo + f_in, rel=1e-12)
        for tone in out.tones:
            assert tone.power_dbm == pytest.approx(power - 7.0, abs=1e-12)

    @given(spectra(max_tones=10), st.integers(min_value=0, max_value=1023))
    def test_apply_response_commutes_with_partition(self, spectrum, mask):
        response = PrototypeResponse(
            "butterworth", 3, "bandpass", f_low_hz=3e9, f_high_hz=6e9, insertion_loss_db=2.0
        )
        whole = apply_response(spectrum, response)
        part_a = tuple(t for i, t in enumerate(spectrum.tones) if (mask >> (i % 10)) & 1)
        part_b = tuple(t for i, t in enumerate(spectrum.tones) if not (mask >> (i % 10)) & 1)
        split_a = apply_response(Spectrum(part_a, spectrum.merge_tolerance_hz), response)
        split_b = apply_response(Spectrum(part_b, spectrum.merge_tolerance_hz), response)
        rejoined = Spectrum(split_a.tones + split_b.tones, spectrum.merge_tolerance_hz)
        assert rejoined == whole

    @given(spectra(max_tones=8), st.floats(min_value=-40, max_value=40))
    def test_sfdr_invariant_under_uniform_offset(self, spectrum, offset):
        assume(len(spectrum) >= 1)
        desired = spectrum.tones[0].frequency_hz
        band = (1e6, 3e10)
        from ducsim.spectra import shift_power

        base = sfdr(spectrum, desired, band)
        shifted = sfdr(shift_power(spectrum, offset), desired, band)
        if math.isinf(base):
            assert math.isinf(shifted)
        else:
            assert shifted == pytest.approx(base, abs=1e-9)

    @given(spectra(max_tones=6))
    def test_mix_is_deterministic(self, spectrum):
        mixer = MixerSpec(
            conversion_loss_db=6.0,
            lo_to_rf_isolation_db=30.0,
            if_to_rf_isolation_db=25.0,
            spur_table={(1, 1): 0.0, (1, 2): 20.0, (2, 1): 15.0},
            lo_range_hz=(1e6, 100e9),
        )
        lo = Tone(4e9, 12.0, "LO")
        assert mix(spectrum, lo, mixer, 2) == mix(spectrum, lo, mixer, 2)


class TestResponseInvariants:
    @given(
        st.sampled_from(["butterworth", "chebyshev"]),
        st.integers(min_value=1, max_value=9),
        st.floats(min_value=0.0, max_value=10.0),
        frequency,
    )
    def test_passive_response_never_exceeds_insertion_loss(self, family, order, il, f):
        ripple = 0.2 if family == "chebyshev" else None
        response = PrototypeResponse(
            family, order, "bandpass",
            f_low_hz=2e9, f_high_hz=5e9,
            ripple_db=ripple, insertion_loss_db=il,
        )
        assert response.s21_db(f) <= -il + 1e-9

    @given(st.integers(min_value=1, max_value=8), st.floats(min_value=1.01, max_value=50.0))
    def test_geometric_symmetry_in_w(self, order, ratio):
        response = PrototypeResponse(
            "butterworth", order, "bandpass", f_low_hz=2e9, f_high_hz=5e9
        )
        f0 = response.f_center_hz
        f = f0 * ratio
        mirror = f0 / ratio
        assert response.s21_db(f) == pytest.approx(response.s21_db(mirror), abs=1e-9)

    @given(
        st.integers(min_value=2, max_value=7),
        st.floats(min_value=1.5e9, max_value=4e9),
        st.floats(min_value=0.3e9, max_value=2e9),
    )
    def test_metrics_recover_prototype_edges(self, order, f_low, width):
        f_high = f_low + width
        prototype = PrototypeResponse(
            "butterworth", order, "bandpass",
            f_low_hz=f_low, f_high_hz=f_high, insertion_loss_db=3.0,
        )
        step = 2e6
        freqs = np.arange(0.5e9, 8e9, step)
        table = TabulatedResponse(tuple(zip(freqs.tolist(), prototype.s21_db(freqs).tolist())))
        metrics = passband_metrics(table, edge_drop_db=3.0)
        assert abs(metrics.f_low_edge_hz - f_low) <= step
        assert abs(metrics.f_high_edge_hz - f_high) <= step

    @given(st.integers(min_value=1, max_value=10))
    def test_butterworth_palindrome(self, order):
        from ducsim.responses import prototype_g_values

        g = prototype_g_values("butterworth", order)[:-1]
        assert g == pytest.approx(tuple(reversed(g)), rel=1e-12)

    @given(st.sampled_from([3, 5, 7, 9]), st.floats(min_value=0.05, max_value=2.0))
    def test_odd_chebyshev_palindrome(self, order, ripple):
        from ducsim.responses import prototype_g_values

        g = prototype_g_values("chebyshev", order, ripple)[:-1]
        assert g == pytest.approx(tuple(reversed(g)), rel=1e-12)


class TestMicrostripInvariants:
    @given(st.floats(min_value=0.1e-3, max_value=9e-3), st.floats(min_value=1.0, max_value=10.0))
    def test_eps_eff_bounds(self, width, eps_r):
        from ducsim.microstrip import Substrate

        z0, eps_eff = line_parameters(width, Substrate(eps_r, 1.6e-3))
        assert 1.0 - 1e-12 <= eps_eff <= eps_r + 1e-12
        assert z0 > 0

    @given(
        st.floats(min_value=0.1e-3, max_value=8e-3),
        st.floats(min_value=1.05, max_value=1.8),
    )
    def test_z0_decreases_with_width(self, width, factor):
        sub = fr4_substrate()
        narrow = line_parameters(width, sub)[0]
        wide = line_parameters(width * factor, sub)[0]
        assert wide < narrow

    @settings(max_examples=15)
    @given(
        st.sampled_from(["butterworth", "chebyshev"]),
        st.integers(min_value=2, max_value=6),
        st.floats(min_value=4e9, max_value=6.5e9),
        st.floats(min_value=0.05, max_value=0.30),
    )
    def test_synthesized_coupling_signs(self, family, order, f0, fbw):
        sub = fr4_substrate()
        f_low = f0 * (1 - fbw / 2)
        f_high = f0 * (1 + fbw / 2)
        ripple = 0.1 if family == "chebyshev" else None
        try:
            geometry = synthesize_parallel_coupled(family, order, f_low, f_high, 50.0, sub, ripple)
        except SynthesisError:
            assume(False)
            return
        for section in geometry.sections:
            z0e, z0o, _, _ = coupled_line_parameters(section.width_m, section.gap_m, sub)
            assert z0e > 50.0 > z0o
        again = synthesize_parallel_coupled(family, order, f_low, f_high, 50.0, sub, ripple)
        assert again == geometry  # bit-identical determinism

    @settings(max_examples=10)
    @given(
        st.floats(min_value=0.5e-3, max_value=3e-3),
        st.floats(min_value=0.2e-3, max_value=1.5e-3),
        st.floats(min_value=4e-3, max_value=9e-3),
    )
    def test_analysis_is_passive(self, width, gap, length):
        from ducsim.microstrip import CoupledSection, ParallelCoupledGeometry

        geometry = ParallelCoupledGeometry(
            (CoupledSection(width, length, gap),) * 2, fr4_substrate()
        )
        f = np.linspace(1e9, 12e9, 160)
        response = analyze_parallel_coupled(geometry, f)
        assert np.all(response.s21_values_db <= 0.0)


class TestChainInvariants:
    @given(st.integers(min_value=4_500, max_value=7_000))
    def test_plan_round_trip_exact(self, target_mhz):
        target = target_mhz * 1e6  # grid targets are exactly representable
        result = plan(target, DEFAULT_CONSTRAINTS)
        recomputed = result.f_lo2_hz + result.stage2_sign * (
            result.f_lo1_hz + result.stage1_sign * result.f_if_hz
        )
        assert recomputed == result.output_freq_hz == target

    @given(st.integers(min_value=-400, max_value=400))
    def test_lo2_shift_moves_output_by_delta(self, delta_mhz):
        delta = delta_mhz * 1e6
        setup = benchmark_setup()
        base = setup.plan_for_target(5.5e9)
        try:
            shifted = setup.plan_for_target(5.5e9 + delta)
        except PlanningError:
            assume(False)
            return
        assert shifted.f_lo2_hz - base.f_lo2_hz == pytest.approx(delta, abs=1e-3)
        out = propagate(setup.build(shifted), benchmark_input(), 2)
        assert out[1] == propagate(setup.build(base), benchmark_input(), 2)[1]

    @settings(max_examples=10)
    @given(st.floats(min_value=4.6e9, max_value=6.9e9))
    def test_leakage_only_adds_power(self, target):
        quiet_setup = ChainSetup(leakage=None)
        loud_setup = ChainSetup()
        plan_ = quiet_setup.plan_for_target(target)
        quiet = propagate(quiet_setup.build(plan_), benchmark_input(), 2)[-1]
        loud = propagate(loud_setup.build(plan_), benchmark_input(), 2)[-1]
        for tone in quiet.tones:
            match = loud.find(tone.frequency_hz)
            assert match is not None and match.power_dbm >= tone.power_dbm - 1e-9


class TestQubitInvariants:
    @settings(max_examples=12)
    @given(
        st.floats(min_value=-50e6, max_value=50e6),
        st.floats(min_value=-20.0, max_value=10.0),
        st.floats(min_value=5e-9, max_value=150e-9),
    )
    def test_population_stays_physical(self, detuning, power, duration):
        qubit = QubitSpec(5e9, t1_s=80e-9, t2_star_s=120e-9, drive_coupling_rad_per_s=8e8)
        spectrum = Spectrum((Tone(5e9 + detuning, power),))
        population = drive_response(qubit, spectrum, duration)
        assert 0.0 <= population <= 1.0

    @settings(max_examples=8)
    @given(st.floats(min_value=1e9, max_value=4e9), st.floats(min_value=-30e6, max_value=30e6))
    def test_translation_invariance(self, shift, detuning):
        duration = 40e-9
        base = QubitSpec(5e9, 1.0, 1.0, 2 * math.pi * 40e6)
        moved = QubitSpec(5e9 + shift, 1.0, 1.0, 2 * math.pi * 40e6)
        p_base = drive_response(base, Spectrum((Tone(5e9 + detuning, -5.0),)), duration)
        p_moved = drive_response(moved, Spectrum((Tone(5e9 + shift + detuning, -5.0),)), duration)
        assert p_base == pytest.approx(p_moved, abs=1e-9)
