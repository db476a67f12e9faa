"""Acceptance gate: one check per shipped performance claim, each printing a
PASS/FAIL line (run with ``pytest -s`` to see them inline)."""
import math

import numpy as np
import pytest

from ducsim.chain import (
    DEFAULT_CONSTRAINTS,
    ChainSetup,
    MixerSpec,
    benchmark_input,
    benchmark_setup,
    plan,
    propagate,
    output_spectrum,
    shielded_setup,
    sweep_dbc,
)
from ducsim.fitting import fit_lorentzian, fit_sinusoid
from ducsim.microstrip import (
    CoupledSection,
    ParallelCoupledGeometry,
    _abcd_multiply,
    _section_abcd,
    analyze_parallel_coupled,
    coupled_line_parameters,
    fr4_substrate,
    line_parameters,
    synthesize_parallel_coupled,
)
from ducsim.qubit import QubitSpec, dbm_to_drive_volts, drive_response, rabi_sweep, ramsey_sweep, spectroscopy_sweep
from ducsim.responses import (
    PrototypeResponse,
    TabulatedResponse,
    parse_touchstone,
    passband_metrics,
    prototype_g_values,
    write_touchstone,
)
from ducsim.spectra import Spectrum, Tone, apply_response, dbc_vs, merge, mix, sfdr, shift_power


def check(criterion: str, condition: bool, detail: str = "") -> None:
    status = "PASS" if condition else "FAIL"
    suffix = f"  ({detail})" if detail else ""
    print(f"[acceptance] {criterion}: {status}{suffix}")
    assert condition, f"{criterion}{suffix}"


# -- 1. frequency-plan reproduction ----------------------------------------


def test_criterion_1_frequency_plan():
    result = plan(5.026e9, DEFAULT_CONSTRAINTS)
    check(
        "1 frequency plan",
        result.f_lo1_hz == 3.35e9 and result.f_lo2_hz == 7.926e9,
        f"LO1={result.f_lo1_hz:g} LO2={result.f_lo2_hz:g}",
    )


# -- 2. stage separations with frozen calibrated defaults -------------------


def test_criterion_2_stage_separations():
    setup = benchmark_setup()
    plan_ = setup.plan_for_target(5.026e9)
    outputs = propagate(setup.build(plan_), benchmark_input(), 3)
    stage1 = outputs[1]
    separation = -dbc_vs(stage1, 2.9e9, 3.8e9)
    final = outputs[-1]
    desired = final.require(plan_.output_freq_hz)
    residuals = [
        tone.power_dbm
        for tone in final.tones
        if tone is not desired and abs(tone.frequency_hz - plan_.f_lo2_hz) > 1e6
    ]
    output_margin = desired.power_dbm - max(residuals)
    check(
        "2 stage-1 image separation 42 +- 6 dB",
        36.0 <= separation <= 48.0,
        f"{separation:.2f} dB",
    )
    check(
        "2 output residual separation >= 30 dB",
        output_margin >= 30.0,
        f"{output_margin:.2f} dB",
    )


# -- 3. shielded spurious-free dynamic range --------------------------------


def test_criterion_3_shielded_sfdr():
    setup = shielded_setup()
    values = []
    for target in (5e9, 6e9):
        plan_ = setup.plan_for_target(target)
        out = output_spectrum(setup.build(plan_), benchmark_input(), 3)
        values.append(sfdr(out, target, (1e9, 9e9)))
    check(
        "3 shielded SFDR >= 70 dB over 1-9 GHz",
        all(v >= 70.0 for v in values),
        f"5 GHz: {values[0]:.2f} dB, 6 GHz: {values[1]:.2f} dB",
    )


# -- 4. carrier-suppression sweep -------------------------------------------


def test_criterion_4_dbc_sweep():
    setup = benchmark_setup()
    targets = [float(t) for t in np.arange(4.5e9, 7.0e9 + 1, 25e6)]
    result = sweep_dbc(setup, targets, benchmark_input())
    values = [p.dbc_db for p in result.points]
    fraction = sum(1 for v in values if 30.0 <= v <= 40.0) / len(values)
    check(
        "4 dBc sweep >= 60% of points in [30, 40] dB",
        not result.failures and fraction >= 0.6,
        f"{fraction * 100:.0f}% of {len(values)} points",
    )


# -- 5. microstrip synthesis against the fabricated board -------------------

REFERENCE_TRIPLES = [  # (width, length, gap) in metres, input-side first
    (1.321e-3, 6.702e-3, 0.2e-3),
    (1.359e-3, 6.691e-3, 0.2e-3),
    (1.667e-3, 6.611e-3, 0.2e-3),
]


def test_criterion_5a_dimensions_within_25pct():
    geometry = synthesize_parallel_coupled("butterworth", 5, 4.5e9, 8e9, 50.0, fr4_substrate())
    deviations = []
    within = True
    for section, (w_ref, l_ref, s_ref) in zip(geometry.sections[:3], REFERENCE_TRIPLES):
        for got, ref, name in (
            (section.width_m, w_ref, "w"),
            (section.length_m, l_ref, "l"),
            (section.gap_m, s_ref, "s"),
        ):
            dev = abs(got - ref) / ref
            deviations.append(f"{name}={dev * 100:.0f}%")
            within = within and dev <= 0.25
    check("5a synthesized triples within 25% of fabricated board", within, " ".join(deviations))


def test_criterion_5b_feed_line_impedance():
    z0, _ = line_parameters(1.9e-3, fr4_substrate())
    check("5b 1.9 mm feed line Z0 in [45, 55] ohm", 45.0 <= z0 <= 55.0, f"Z0={z0:.2f} ohm")


def test_criterion_5c_round_trip_band_centre():
    geometry = synthesize_parallel_coupled("butterworth", 5, 4.5e9, 8e9, 50.0, fr4_substrate())
    grid = np.linspace(1e9, 10e9, 901)
    metrics = passband_metrics(analyze_parallel_coupled(geometry, grid), 3.0)
    centre = math.sqrt(metrics.f_low_edge_hz * metrics.f_high_edge_hz)
    f0 = math.sqrt(4.5e9 * 8e9)
    deviation = abs(centre - f0) / f0
    check(
        "5c synth->analyze centre within 5% of geometric mean",
        deviation <= 0.05,
        f"centre={centre / 1e9:.3f} GHz vs {f0 / 1e9:.3f} GHz ({deviation * 100:.1f}%)",
    )


# -- 6. qubit experiment suite -----------------------------------------------


def test_criterion_6_rabi_rate_within_1pct():
    qubit = QubitSpec(5.61e9, 1.0, 1.0, 2 * math.pi * 50e6)
    duration = 50e-9
    amplitudes = np.linspace(0, 1, 101)
    populations = rabi_sweep(qubit, amplitudes, duration)
    fit = fit_sinusoid(amplitudes, populations)
    programmed = qubit.drive_coupling_rad_per_s * duration / (2 * math.pi)
    deviation = abs(fit.parameters["frequency"] - programmed) / programmed
    check(
        "6 Rabi fitted rate within 1% of programmed",
        fit.converged and deviation <= 0.01,
        f"{deviation * 100:.3f}%",
    )


def test_criterion_6_ramsey_detuning_within_0p1pct():
    qubit = QubitSpec(5.61e9, 1.0, 1.0, 2 * math.pi * 50e6)  # T2* >> waits
    waits = np.linspace(0, 4e-6, 400)
    populations = ramsey_sweep(qubit, 2.5e6, waits)
    fit = fit_sinusoid(waits, populations)
    deviation = abs(fit.parameters["frequency"] - 2.5e6) / 2.5e6
    check(
        "6 Ramsey fringe within 0.1% of programmed detuning",
        fit.converged and deviation <= 0.001,
        f"{deviation * 100:.4f}%",
    )


def test_criterion_6_spectroscopy_lorentzian_centre():
    qubit = QubitSpec(5.61e9, 200e-9, 300e-9, 3e7)
    setup = benchmark_setup()
    targets = np.arange(5.59e9, 5.63e9 + 1, 0.25e6)
    populations = spectroscopy_sweep(qubit, setup, targets, benchmark_input())
    fit = fit_lorentzian(targets, populations)
    offset = abs(fit.parameters["center"] - 5.61e9)
    check(
        "6 spectroscopy Lorentzian centred on the qubit",
        fit.converged and offset < fit.parameters["width"] / 10,
        f"offset={offset / 1e3:.1f} kHz, width={fit.parameters['width'] / 1e6:.2f} MHz",
    )


# -- 7. oracle equivalences ---------------------------------------------------


def test_criterion_7_spur_enumeration_brute_force():
    rng = np.random.default_rng(2024)
    agreements = 0
    for _ in range(20):
        f_in = float(rng.uniform(0.1e9, 1.2e9))
        f_lo = float(rng.uniform(2e9, 7e9))
        p_in = float(rng.uniform(-20, 10))
        table = {(m, n): 12.0 * (m + n - 2) for m in range(1, 4) for n in range(1, 4)}
        table[(1, 1)] = 0.0
        mixer = MixerSpec(6.5, math.inf, math.inf, table, (1e6, 100e9))
        out = mix(Spectrum((Tone(f_in, p_in),), 0.0), Tone(f_lo, 10.0, "LO"), mixer, 3)
        expected_mw: dict[float, float] = {}
        for m in range(1, 4):
            for n in range(-3, 4):
                if n == 0:
                    continue
                freq = abs(m * f_lo + n * f_in)
                if freq == 0.0:
                    continue
                power = p_in - 6.5 - table[(m, abs(n))]
                expected_mw[freq] = expected_mw.get(freq, 0.0) + 10 ** (power / 10)
        got = {t.frequency_hz: t.power_dbm for t in out.tones}
        same = set(got) == set(expected_mw) and all(
            abs(got[f] - 10 * math.log10(expected_mw[f])) < 1e-9 for f in expected_mw
        )
        agreements += same
    check("7 spur enumeration matches brute force", agreements == 20, f"{agreements}/20 cases")


def test_criterion_7_abcd_associativity():
    sub = fr4_substrate()
    f = np.linspace(1e9, 11e9, 501)
    matrices = [
        _section_abcd(CoupledSection(w, 6.7e-3, s), sub, f)
        for w, s in [(1.3e-3, 0.2e-3), (1.4e-3, 0.3e-3), (1.7e-3, 0.25e-3)]
    ]
    left = _abcd_multiply(_abcd_multiply(matrices[0], matrices[1]), matrices[2])
    right = _abcd_multiply(matrices[0], _abcd_multiply(matrices[1], matrices[2]))
    worst = max(
        float(np.max(np.abs(x - y) / (np.abs(y) + 1.0))) for x, y in zip(left, right)
    )
    check("7 ABCD cascade associativity to 1e-9", worst < 1e-9, f"max rel err {worst:.2e}")


def test_criterion_7_touchstone_round_trip():
    rng = np.random.default_rng(5)
    freqs = np.sort(rng.uniform(0.5e9, 10e9, 200)) + np.arange(200) * 10.0
    s21 = rng.uniform(-80, 0, 200)
    original = TabulatedResponse(tuple(zip(freqs.tolist(), s21.tolist())))
    once = parse_touchstone(write_touchstone(original))
    twice = parse_touchstone(write_touchstone(once))
    worst = max(
        max(abs(f2 - f1) / f1, abs(d2 - d1) / max(abs(d1), 1e-12))
        for (f1, d1), (f2, d2) in zip(once.points, twice.points)
    )
    check("7 Touchstone round trip to 1e-9 relative", worst < 1e-9, f"max rel err {worst:.2e}")


def test_criterion_7_integrator_vs_refined_step():
    qubit = QubitSpec(5e9, 1.0, 1.0, 2 * math.pi * 50e6)
    tone = Tone(5e9 + 25e6, -2.0)
    duration = 90e-9
    got = drive_response(qubit, Spectrum((tone,)), duration)

    rabi = qubit.drive_coupling_rad_per_s * dbm_to_drive_volts(-2.0)
    detuning = 2 * math.pi * 25e6

    state = np.array([0.0, 0.0, 1.0])
    f_char = max(abs(detuning), rabi) / (2 * math.pi)
    n = 10 * max(1, math.ceil(duration * 50 * f_char))
    dt = duration / n

    def deriv(t, r):
        wx = rabi * math.cos(detuning * t)
        wy = rabi * math.sin(detuning * t)
        return np.array(
            [wy * r[2] - r[0], -wx * r[2] - r[1], wx * r[1] - wy * r[0] - (r[2] - 1.0)]
        )

    t = 0.0
    for _ in range(n):
        k1 = deriv(t, state)
        k2 = deriv(t + dt / 2, state + dt / 2 * k1)
        k3 = deriv(t + dt / 2, state + dt / 2 * k2)
        k4 = deriv(t + dt, state + dt * k3)
        state = state + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += dt
    want = (1.0 - state[2]) / 2.0
    check(
        "7 integrator agrees with 10x refined step to 1e-4",
        abs(got - want) < 1e-4,
        f"|diff| = {abs(got - want):.2e}",
    )


# -- 8. invariant batteries ----------------------------------------------------


def _random_spectrum(rng, max_tones=10) -> Spectrum:
    count = rng.integers(1, max_tones + 1)
    tones = tuple(
        Tone(float(f), float(p))
        for f, p in zip(rng.uniform(0.1e9, 15e9, count), rng.uniform(-90, 10, count))
    )
    return Spectrum(tones, float(rng.choice([0.0, 1e3, 1e5])))


def test_criterion_8_spectra_invariants():
    rng = np.random.default_rng(80)
    ok = True
    for _ in range(20):
        s = _random_spectrum(rng)
        tol = float(rng.choice([0.0, 1e3, 1e6]))
        ok = ok and merge(merge(s, tol), tol) == merge(s, tol)
        offset = float(rng.uniform(-30, 30))
        base = sfdr(s, s.tones[0].frequency_hz, (1e6, 2e10))
        moved = sfdr(shift_power(s, offset), s.tones[0].frequency_hz, (1e6, 2e10))
        ok = ok and (
            (math.isinf(base) and math.isinf(moved)) or abs(base - moved) < 1e-9
        )
        response = PrototypeResponse("butterworth", 4, "bandpass", f_low_hz=3e9, f_high_hz=7e9)
        half = tuple(t for i, t in enumerate(s.tones) if i % 2 == 0)
        rest = tuple(t for i, t in enumerate(s.tones) if i % 2 == 1)
        joined = Spectrum(
            apply_response(Spectrum(half, s.merge_tolerance_hz), response).tones
            + apply_response(Spectrum(rest, s.merge_tolerance_hz), response).tones,
            s.merge_tolerance_hz,
        )
        ok = ok and joined == apply_response(s, response)
    check("8 spectra invariants", ok)


def test_criterion_8_response_invariants():
    rng = np.random.default_rng(81)
    ok = True
    for _ in range(20):
        order = int(rng.integers(1, 9))
        il = float(rng.uniform(0, 9))
        bp = PrototypeResponse(
            "butterworth", order, "bandpass", f_low_hz=2e9, f_high_hz=5e9, insertion_loss_db=il
        )
        f = float(rng.uniform(0.2e9, 2e10))
        ok = ok and bp.s21_db(f) <= -il + 1e-9
        mirror = bp.f_center_hz**2 / f
        ok = ok and abs(bp.s21_db(f) - bp.s21_db(mirror)) < 1e-9
        g = prototype_g_values("butterworth", order)[:-1]
        ok = ok and all(abs(a - b) < 1e-12 for a, b in zip(g, reversed(g)))
    check("8 response invariants", ok)


def test_criterion_8_microstrip_invariants():
    rng = np.random.default_rng(82)
    sub = fr4_substrate()
    ok = True
    for _ in range(10):
        w = float(rng.uniform(0.2e-3, 6e-3))
        z_narrow, eps_narrow = line_parameters(w, sub)
        z_wide, _ = line_parameters(w * 1.3, sub)
        ok = ok and z_wide < z_narrow and 1.0 <= eps_narrow <= sub.eps_r
    for _ in range(4):
        f0 = float(rng.uniform(4.5e9, 6.5e9))
        fbw = float(rng.uniform(0.08, 0.30))
        geo = synthesize_parallel_coupled(
            "butterworth", int(rng.integers(2, 6)), f0 * (1 - fbw / 2), f0 * (1 + fbw / 2),
            50.0, sub,
        )
        for section in geo.sections:
            z0e, z0o, _, _ = coupled_line_parameters(section.width_m, section.gap_m, sub)
            ok = ok and z0e > 50.0 > z0o
        grid = np.linspace(1e9, 12e9, 150)
        ok = ok and bool(
            np.all(analyze_parallel_coupled(geo, grid).s21_values_db <= 0.0)
        )
    check("8 microstrip invariants", ok)


def test_criterion_8_chain_invariants():
    rng = np.random.default_rng(83)
    setup = benchmark_setup()
    quiet = ChainSetup(leakage=None)
    ok = True
    for _ in range(8):
        target = float(rng.integers(4500, 7001)) * 1e6
        plan_ = plan(target, DEFAULT_CONSTRAINTS)
        recomputed = plan_.f_lo2_hz + plan_.stage2_sign * (
            plan_.f_lo1_hz + plan_.stage1_sign * plan_.f_if_hz
        )
        ok = ok and recomputed == plan_.output_freq_hz == target
        a = propagate(setup.build(plan_), benchmark_input(), 2)
        b = propagate(setup.build(plan_), benchmark_input(), 2)
        ok = ok and a == b
        bare = propagate(quiet.build(plan_), benchmark_input(), 2)[-1]
        for tone in bare.tones:
            match = a[-1].find(tone.frequency_hz)
            ok = ok and match is not None and match.power_dbm >= tone.power_dbm - 1e-9
    # shielding plus stopband enhancement raises the spur-free range
    sh = shielded_setup()
    p5 = sh.plan_for_target(5e9)
    sfdr_shielded = sfdr(output_spectrum(sh.build(p5), benchmark_input(), 3), 5e9, (1e9, 9e9))
    p5d = setup.plan_for_target(5e9)
    sfdr_default = sfdr(output_spectrum(setup.build(p5d), benchmark_input(), 3), 5e9, (1e9, 9e9))
    ok = ok and sfdr_shielded > sfdr_default
    check("8 chain invariants", ok, f"shielded {sfdr_shielded:.1f} dB vs default {sfdr_default:.1f} dB")


def test_criterion_8_qubit_invariants():
    rng = np.random.default_rng(84)
    ok = True
    for _ in range(6):
        qubit = QubitSpec(5e9, 60e-9, 100e-9, 8e8)
        spectrum = Spectrum(
            (Tone(5e9 + float(rng.uniform(-40e6, 40e6)), float(rng.uniform(-25, 8))),)
        )
        p = drive_response(qubit, spectrum, float(rng.uniform(5e-9, 120e-9)))
        ok = ok and 0.0 <= p <= 1.0
    # doubling the drive amplitude doubles the fitted oscillation rate
    qubit = QubitSpec(5e9, 1.0, 1.0, 2 * math.pi * 40e6)
    durations = np.linspace(1e-9, 100e-9, 120)

    def fitted(power_dbm):
        pops = [
            drive_response(qubit, Spectrum((Tone(5e9, power_dbm),)), float(t))
            for t in durations
        ]
        return fit_sinusoid(durations, np.array(pops)).parameters["frequency"]

    ratio = fitted(-4.0 + 20 * math.log10(2)) / fitted(-4.0)
    ok = ok and abs(ratio - 2.0) < 0.002
    # fringe frequency equals detuning for T2* far beyond the waits
    waits = np.linspace(0, 2e-6, 256)
    fringe = fit_sinusoid(
        waits, ramsey_sweep(QubitSpec(5e9, 1.0, 1.0, 1e6), 3.3e6, waits)
    ).parameters["frequency"]
    ok = ok and abs(fringe - 3.3e6) / 3.3e6 < 1e-3
    check("8 qubit invariants", ok, f"amplitude ratio {ratio:.4f}")
