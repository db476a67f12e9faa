"""Double-upconversion chain: composition, propagation, LO planning, sweeps.

The chain moves an intermediate-frequency drive to a target output frequency
in two mixing steps. The first LO is fixed so the selected sideband of the
mid-range IF sits at the centre of the first filter passband; retuning the
output then only moves the second LO. A leakage stage models radiative
bypass of the filters (PCB filters behave as antennas when unshielded).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Mapping, Sequence, Union

from .responses import CascadeResponse, PrototypeResponse
from .spectra import (
    DEFAULT_POWER_FLOOR_DBM,
    Spectrum,
    Tone,
    ToneLookupError,
    apply_response,
    dbc_vs,
    mix,
    prune,
    shift_power,
)

Sideband = Literal["lower", "upper"]


class PlanningError(ValueError):
    """No LO assignment satisfies the stated constraint."""


@dataclass(frozen=True)
class MixerSpec:
    """Mixer non-idealities.

    ``spur_table`` maps (|m|, |n|) to suppression in dB relative to the
    (1, 1) product; pairs absent from the table do not generate products
    (infinite suppression). Isolation figures may be ``math.inf`` to disable
    the corresponding leakage tone.
    """

    conversion_loss_db: float
    lo_to_rf_isolation_db: float
    if_to_rf_isolation_db: float
    spur_table: Mapping[tuple[int, int], float]
    lo_range_hz: tuple[float, float]

    def __post_init__(self) -> None:
        if self.conversion_loss_db < 0:
            raise ValueError("conversion loss must be >= 0 dB")
        if self.spur_table.get((1, 1)) != 0.0:
            raise ValueError("spur table must anchor (1, 1) at 0 dB")
        low, high = self.lo_range_hz
        if not (0 < low <= high):
            raise ValueError(f"LO range must be non-empty and positive, got {self.lo_range_hz}")
        object.__setattr__(self, "spur_table", dict(self.spur_table))

    def spur_suppression_db(self, m: int, n: int) -> float:
        return self.spur_table.get((abs(m), abs(n)), math.inf)


def spur_table(step_db: float, max_order: int = 4) -> dict[tuple[int, int], float]:
    """Order-graded spur table: suppression step_db * (m + n - 2) for n >= 1.

    LO-harmonic (n = 0) conversion products are excluded; direct LO
    feedthrough is carried by the isolation figures instead.
    """
    table = {
        (m, n): step_db * (m + n - 2)
        for m in range(1, max_order + 1)
        for n in range(1, max_order + 1)
    }
    table[(1, 1)] = 0.0
    return table


@dataclass(frozen=True)
class MixerStage:
    spec: MixerSpec
    lo: Tone
    name: str = "mixer"


@dataclass(frozen=True)
class FilterStage:
    response: object
    name: str = "filter"


@dataclass(frozen=True)
class AttenuatorStage:
    attenuation_db: float
    name: str = "attenuator"


LeakageSource = Union[int, Literal["lo1", "lo2"], Tone]


@dataclass(frozen=True)
class LeakageCoupling:
    """Bypass path feeding an earlier signal into the output.

    ``source`` is a chain stage index (a copy of that stage's output
    spectrum couples over), one of "lo1"/"lo2" (the raw LO source tone
    couples over, covering pickup of LO radiation), or an explicit Tone.
    ``coupling_db`` is a gain, normally negative.
    """

    source: LeakageSource
    coupling_db: float


@dataclass(frozen=True)
class LeakageStage:
    couplings: tuple[LeakageCoupling, ...]
    name: str = "leakage"


Stage = Union[MixerStage, FilterStage, AttenuatorStage, LeakageStage]


@dataclass(frozen=True)
class Chain:
    stages: tuple[Stage, ...]

    def __post_init__(self) -> None:
        for idx, stage in enumerate(self.stages):
            if isinstance(stage, LeakageStage):
                for coupling in stage.couplings:
                    if isinstance(coupling.source, int) and not (0 <= coupling.source < idx):
                        raise ValueError(
                            f"leakage at stage {idx} references stage {coupling.source}, "
                            "which does not precede it"
                        )

    @property
    def mixers(self) -> tuple[MixerStage, ...]:
        return tuple(s for s in self.stages if isinstance(s, MixerStage))

    def lo_tone(self, key: str) -> Tone:
        index = {"lo1": 0, "lo2": 1}[key]
        mixers = self.mixers
        if index >= len(mixers):
            raise ValueError(f"chain has no {key} mixer stage")
        return mixers[index].lo


def build_double_upconversion(
    mixer1: MixerSpec,
    mixer2: MixerSpec,
    filter1,
    filter2,
    lo1: Tone,
    lo2: Tone,
    leakage: LeakageStage | None = None,
) -> Chain:
    """Assemble [mixer1, filter1, mixer2, filter2, (leakage)]."""
    from .spectra import LoRangeError

    for name, spec, lo in (("mixer1", mixer1, lo1), ("mixer2", mixer2, lo2)):
        low, high = spec.lo_range_hz
        if not (low <= lo.frequency_hz <= high):
            raise LoRangeError(
                f"{name}: LO at {lo.frequency_hz:g} Hz outside range [{low:g}, {high:g}] Hz"
            )
    stages: list[Stage] = [
        MixerStage(mixer1, lo1, "mixer1"),
        FilterStage(filter1, "filter1"),
        MixerStage(mixer2, lo2, "mixer2"),
        FilterStage(filter2, "filter2"),
    ]
    if leakage is not None:
        stages.append(leakage)
    return Chain(tuple(stages))


def propagate(
    chain: Chain,
    input_spectrum: Spectrum,
    max_order: int = 3,
    power_floor_dbm: float = DEFAULT_POWER_FLOOR_DBM,
) -> list[Spectrum]:
    """Fold the chain over the input, returning the spectrum after each stage.

    Tones below ``power_floor_dbm`` are pruned after every stage. A leakage
    stage merges attenuated copies of referenced stage outputs (or LO source
    tones) into the running spectrum.
    """
    outputs: list[Spectrum] = []
    current = input_spectrum
    for stage in chain.stages:
        if isinstance(stage, MixerStage):
            current = mix(current, stage.lo, stage.spec, max_order)
        elif isinstance(stage, FilterStage):
            current = apply_response(current, stage.response)
        elif isinstance(stage, AttenuatorStage):
            current = shift_power(current, -stage.attenuation_db)
        elif isinstance(stage, LeakageStage):
            tones = list(current.tones)
            for coupling in stage.couplings:
                if not math.isfinite(coupling.coupling_db):
                    continue
                if isinstance(coupling.source, int):
                    source_tones = outputs[coupling.source].tones
                elif isinstance(coupling.source, Tone):
                    source_tones = (coupling.source,)
                else:
                    source_tones = (chain.lo_tone(coupling.source),)
                for tone in source_tones:
                    tones.append(
                        Tone(
                            tone.frequency_hz,
                            tone.power_dbm + coupling.coupling_db,
                            f"{tone.label} pickup".strip(),
                        )
                    )
            current = Spectrum(tuple(tones), current.merge_tolerance_hz)
        else:
            raise TypeError(f"unknown stage type {type(stage).__name__}")
        current = prune(current, power_floor_dbm)
        outputs.append(current)
    return outputs


def output_spectrum(
    chain: Chain,
    input_spectrum: Spectrum,
    max_order: int = 3,
    power_floor_dbm: float = DEFAULT_POWER_FLOOR_DBM,
) -> Spectrum:
    outputs = propagate(chain, input_spectrum, max_order, power_floor_dbm)
    return outputs[-1] if outputs else input_spectrum


@dataclass(frozen=True)
class PlanConstraints:
    """Feasibility envelope for the two LO assignments."""

    if_range_hz: tuple[float, float]
    stage1_passband_hz: tuple[float, float]
    stage2_passband_hz: tuple[float, float]
    mixer1_lo_range_hz: tuple[float, float]
    mixer2_lo_range_hz: tuple[float, float]
    stage1_sideband: Sideband = "lower"
    stage2_sideband: Sideband = "lower"

    def __post_init__(self) -> None:
        for label, (low, high) in (
            ("if_range", self.if_range_hz),
            ("stage1_passband", self.stage1_passband_hz),
            ("stage2_passband", self.stage2_passband_hz),
            ("mixer1_lo_range", self.mixer1_lo_range_hz),
            ("mixer2_lo_range", self.mixer2_lo_range_hz),
        ):
            if not (0 < low <= high):
                raise ValueError(f"{label} must be a non-empty positive range, got ({low}, {high})")
        for sideband in (self.stage1_sideband, self.stage2_sideband):
            if sideband not in ("lower", "upper"):
                raise ValueError(f"sideband must be 'lower' or 'upper', got {sideband!r}")

    @property
    def if_mid_hz(self) -> float:
        low, high = self.if_range_hz
        return (low + high) / 2.0


def _sideband_sign(sideband: Sideband) -> int:
    return -1 if sideband == "lower" else +1


@dataclass(frozen=True)
class Plan:
    """A solved LO assignment with sideband signs recorded.

    ``stage1_sign``/``stage2_sign`` are +-1 such that
    stage1_freq = f_lo1 + stage1_sign * f_if and
    output_freq = f_lo2 + stage2_sign * stage1_freq hold exactly.
    """

    f_if_hz: float
    f_lo1_hz: float
    f_lo2_hz: float
    stage1_freq_hz: float
    output_freq_hz: float
    stage1_sign: int
    stage2_sign: int

    def __post_init__(self) -> None:
        if self.stage1_sign not in (-1, 1) or self.stage2_sign not in (-1, 1):
            raise ValueError("sideband signs must be +-1")
        if self.stage1_freq_hz != self.f_lo1_hz + self.stage1_sign * self.f_if_hz:
            raise ValueError("stage1_freq inconsistent with LO1, IF and sideband sign")
        if self.output_freq_hz != self.f_lo2_hz + self.stage2_sign * self.stage1_freq_hz:
            raise ValueError("output_freq inconsistent with LO2, stage1_freq and sideband sign")

    @property
    def stage1_sideband(self) -> Sideband:
        return "lower" if self.stage1_sign < 0 else "upper"

    @property
    def stage2_sideband(self) -> Sideband:
        return "lower" if self.stage2_sign < 0 else "upper"

    def to_json_dict(self) -> dict:
        return {
            "f_if_hz": self.f_if_hz,
            "f_lo1_hz": self.f_lo1_hz,
            "f_lo2_hz": self.f_lo2_hz,
            "stage1_freq_hz": self.stage1_freq_hz,
            "output_freq_hz": self.output_freq_hz,
            "stage1_sideband": self.stage1_sideband,
            "stage2_sideband": self.stage2_sideband,
        }


def plan_lo1(constraints: PlanConstraints) -> float:
    """First LO: place the selected sideband of the mid-range IF at the
    stage-1 passband centre, clamped to the feasible interval.

    Feasible LO1 values keep the mid-IF sideband inside the stage-1 passband
    and sit inside the mixer-1 LO range; ties break toward the lower LO1.
    """
    f_if = constraints.if_mid_hz
    band_low, band_high = constraints.stage1_passband_hz
    center = (band_low + band_high) / 2.0
    sign = _sideband_sign(constraints.stage1_sideband)
    preferred = center - sign * f_if

    # LO1 interval mapping the mid-IF sideband into the passband
    feas_low = band_low - sign * f_if
    feas_high = band_high - sign * f_if
    feas_low, feas_high = min(feas_low, feas_high), max(feas_low, feas_high)
    lo_low, lo_high = constraints.mixer1_lo_range_hz
    low = max(feas_low, lo_low)
    high = min(feas_high, lo_high)
    if low > high:
        raise PlanningError(
            f"no LO1 in mixer range [{lo_low:g}, {lo_high:g}] Hz places the "
            f"{constraints.stage1_sideband} sideband of {f_if:g} Hz inside the "
            f"stage-1 passband [{band_low:g}, {band_high:g}] Hz"
        )
    if preferred < low:
        return low
    if preferred > high:
        return high
    return preferred


def plan_lo2(
    target_hz: float,
    stage1_freq_hz: float,
    constraints: PlanConstraints,
    f_if_hz: float | None = None,
    f_lo1_hz: float | None = None,
) -> Plan:
    """Second LO for a requested output frequency, completing the plan.

    With the lower sideband selected the LO sits above the output at
    target + stage1_freq; the upper sideband puts it at target - stage1_freq.
    """
    band_low, band_high = constraints.stage2_passband_hz
    if not (band_low <= target_hz <= band_high):
        raise PlanningError(
            f"target {target_hz:g} Hz outside stage-2 passband [{band_low:g}, {band_high:g}] Hz"
        )
    sign2 = _sideband_sign(constraints.stage2_sideband)
    f_lo2 = target_hz - sign2 * stage1_freq_hz
    lo_low, lo_high = constraints.mixer2_lo_range_hz
    if not (lo_low <= f_lo2 <= lo_high):
        raise PlanningError(
            f"LO2 at {f_lo2:g} Hz outside mixer range [{lo_low:g}, {lo_high:g}] Hz "
            f"for target {target_hz:g} Hz ({constraints.stage2_sideband} sideband)"
        )
    f_if = constraints.if_mid_hz if f_if_hz is None else f_if_hz
    sign1 = _sideband_sign(constraints.stage1_sideband)
    lo1 = stage1_freq_hz - sign1 * f_if if f_lo1_hz is None else f_lo1_hz
    return Plan(
        f_if_hz=f_if,
        f_lo1_hz=lo1,
        f_lo2_hz=f_lo2,
        stage1_freq_hz=stage1_freq_hz,
        # recomputed so the sign identity holds exactly; equals target_hz
        # whenever target +- stage1_freq is exactly representable
        output_freq_hz=f_lo2 + sign2 * stage1_freq_hz,
        stage1_sign=sign1,
        stage2_sign=sign2,
    )


def plan(target_hz: float, constraints: PlanConstraints) -> Plan:
    """Full plan: fix LO1 from the constraints, then solve LO2 for the target."""
    f_lo1 = plan_lo1(constraints)
    sign1 = _sideband_sign(constraints.stage1_sideband)
    stage1_freq = f_lo1 + sign1 * constraints.if_mid_hz
    return plan_lo2(target_hz, stage1_freq, constraints, f_lo1_hz=f_lo1)


def iq_image_rejection(amplitude_imbalance_db: float, phase_error_deg: float) -> float:
    """Image-rejection ratio of a quadrature upconverter, in dB.

    With gain ratio g and phase error phi between the two arms the unwanted
    sideband is suppressed by 10 log10((1 + g^2 + 2 g cos phi) /
    (1 + g^2 - 2 g cos phi)); a perfectly balanced modulator returns inf.
    """
    g = 10.0 ** (amplitude_imbalance_db / 20.0)
    phi = math.radians(phase_error_deg)
    numerator = 1.0 + g * g + 2.0 * g * math.cos(phi)
    denominator = 1.0 + g * g - 2.0 * g * math.cos(phi)
    if denominator <= 0.0:
        return math.inf
    ratio = numerator / denominator
    if ratio <= 0.0:
        return -math.inf
    return 10.0 * math.log10(ratio)


# --------------------------------------------------------------------------
# Shipped configuration. Mixer and leakage numbers were calibrated once
# against bench measurements of the reference build (42 dB stage-1 image
# separation, 30-40 dB LO2 carrier suppression, 70 dB spur-free range when
# shielded) and are frozen here; see the test suite for the checks.
# --------------------------------------------------------------------------

STAGE1_MIXER = MixerSpec(
    conversion_loss_db=7.0,
    lo_to_rf_isolation_db=35.0,
    if_to_rf_isolation_db=30.0,
    spur_table=spur_table(10.0),
    lo_range_hz=(1.6e9, 6.0e9),
)

# The stage-2 LO reaches the output through radiative pickup rather than
# through the conducted path, so the conducted isolation is calibrated high.
STAGE2_MIXER = MixerSpec(
    conversion_loss_db=7.0,
    lo_to_rf_isolation_db=85.0,
    if_to_rf_isolation_db=30.0,
    spur_table=spur_table(30.0),
    lo_range_hz=(4.0e9, 10.0e9),
)

# Analytic surrogates matched to the measured passbands of the two PCB
# filters; stopband floors reproduce their finite measured rejection.
STAGE1_FILTER = PrototypeResponse(
    "butterworth", 5, "bandpass",
    f_low_hz=2.8e9, f_high_hz=3.0e9,
    insertion_loss_db=8.0, stopband_floor_db=50.0,
)

# Earlier first-stage board: fifth-order Chebyshev with a 1.8-2.2 GHz passband.
STAGE1_FILTER_ALT = PrototypeResponse(
    "chebyshev", 5, "bandpass",
    f_low_hz=1.8e9, f_high_hz=2.2e9,
    ripple_db=0.1, insertion_loss_db=8.0, stopband_floor_db=50.0,
)

STAGE2_FILTER = PrototypeResponse(
    "butterworth", 5, "bandpass",
    f_low_hz=4.5e9, f_high_hz=7.0e9,
    insertion_loss_db=5.0, stopband_floor_db=60.0,
)

# Connectorized lowpass used to kill LO1 harmonics when chasing deep spur-free range.
STOPBAND_LOWPASS = PrototypeResponse(
    "butterworth", 5, "lowpass", f_high_hz=5.0e9, insertion_loss_db=1.0,
)

DEFAULT_LEAKAGE = LeakageStage(
    couplings=(
        LeakageCoupling(source=1, coupling_db=-45.0),   # stage-1 output into the open output filter
        LeakageCoupling(source="lo2", coupling_db=-62.0),  # LO2 radiation picked up past the filter
    )
)

DEFAULT_CONSTRAINTS = PlanConstraints(
    if_range_hz=(450e6, 450e6),
    stage1_passband_hz=(2.8e9, 3.0e9),
    stage2_passband_hz=(4.5e9, 7.0e9),
    mixer1_lo_range_hz=STAGE1_MIXER.lo_range_hz,
    mixer2_lo_range_hz=STAGE2_MIXER.lo_range_hz,
    stage1_sideband="lower",
    stage2_sideband="lower",
)


@dataclass(frozen=True)
class ChainSetup:
    """Everything needed to build concrete chains for a stream of targets.

    ``lo1_hz``/``lo2_hz`` pin the oscillators explicitly; when unset, LO1
    comes from the passband-centre placement rule and LO2 from per-target
    planning.
    """

    mixer1: MixerSpec = STAGE1_MIXER
    mixer2: MixerSpec = STAGE2_MIXER
    filter1: object = STAGE1_FILTER
    filter2: object = STAGE2_FILTER
    lo1_power_dbm: float = 10.0
    lo2_power_dbm: float = 10.0
    leakage: LeakageStage | None = DEFAULT_LEAKAGE
    constraints: PlanConstraints = DEFAULT_CONSTRAINTS
    lo1_hz: float | None = None
    lo2_hz: float | None = None

    def build(self, plan_: Plan) -> Chain:
        return build_double_upconversion(
            self.mixer1,
            self.mixer2,
            self.filter1,
            self.filter2,
            lo1=Tone(plan_.f_lo1_hz, self.lo1_power_dbm, "LO1"),
            lo2=Tone(plan_.f_lo2_hz, self.lo2_power_dbm, "LO2"),
            leakage=self.leakage,
        )

    def plan_for_target(self, target_hz: float) -> Plan:
        if self.lo1_hz is None:
            return plan(target_hz, self.constraints)
        sign1 = _sideband_sign(self.constraints.stage1_sideband)
        stage1_freq = self.lo1_hz + sign1 * self.constraints.if_mid_hz
        return plan_lo2(target_hz, stage1_freq, self.constraints, f_lo1_hz=self.lo1_hz)

    def fixed_plan(self, f_if_hz: float | None = None) -> Plan:
        """Plan implied by the pinned LO frequencies, no target solving."""
        if self.lo1_hz is None or self.lo2_hz is None:
            raise PlanningError("fixed chain requires both lo1_hz and lo2_hz to be set")
        f_if = self.constraints.if_mid_hz if f_if_hz is None else f_if_hz
        sign1 = _sideband_sign(self.constraints.stage1_sideband)
        sign2 = _sideband_sign(self.constraints.stage2_sideband)
        stage1_freq = self.lo1_hz + sign1 * f_if
        return Plan(
            f_if_hz=f_if,
            f_lo1_hz=self.lo1_hz,
            f_lo2_hz=self.lo2_hz,
            stage1_freq_hz=stage1_freq,
            output_freq_hz=self.lo2_hz + sign2 * stage1_freq,
            stage1_sign=sign1,
            stage2_sign=sign2,
        )


def benchmark_setup() -> ChainSetup:
    """Default (unshielded) bench configuration."""
    return ChainSetup()


def shielded_setup() -> ChainSetup:
    """Shielded preset: no radiative leakage, stage-1 stopband enhanced by a
    second identical bandpass plus a 5 GHz lowpass."""
    return ChainSetup(
        filter1=CascadeResponse((STAGE1_FILTER, STAGE1_FILTER, STOPBAND_LOWPASS)),
        leakage=None,
    )


def benchmark_input(power_dbm: float = 10.0, f_if_hz: float = 450e6) -> Spectrum:
    return Spectrum((Tone(f_if_hz, power_dbm, "IF"),))


@dataclass(frozen=True)
class SweepPoint:
    target_hz: float
    dbc_db: float
    lo2_hz: float


@dataclass(frozen=True)
class SweepFailure:
    target_hz: float
    reason: str


@dataclass(frozen=True)
class SweepResult:
    points: tuple[SweepPoint, ...]
    failures: tuple[SweepFailure, ...]


def sweep_dbc(
    setup: ChainSetup,
    targets: Sequence[float],
    input_spectrum: Spectrum,
    max_order: int = 3,
) -> SweepResult:
    """Re-plan LO2 per target, propagate, and record |P(LO2) - P(target)|.

    Planning failures are collected per target instead of aborting the sweep.
    A missing LO2 tone at the output (everything below the power floor) is
    reported as unbounded suppression (inf).
    """
    points: list[SweepPoint] = []
    failures: list[SweepFailure] = []
    for target in targets:
        try:
            plan_ = setup.plan_for_target(target)
            chain = setup.build(plan_)
            out = output_spectrum(chain, input_spectrum, max_order)
            try:
                value = abs(dbc_vs(out, plan_.output_freq_hz, plan_.f_lo2_hz))
            except ToneLookupError:
                if out.find(plan_.output_freq_hz) is None:
                    raise
                value = math.inf  # no LO2 tone survives: unbounded suppression
            points.append(SweepPoint(target, value, plan_.f_lo2_hz))
        except (PlanningError, ToneLookupError) as exc:
            failures.append(SweepFailure(target, str(exc)))
    return SweepResult(tuple(points), tuple(failures))


def sweep_to_csv(result: SweepResult) -> str:
    lines = ["target_hz,dbc_db,lo2_hz"]
    for point in result.points:
        lines.append(f"{point.target_hz:.9g},{point.dbc_db:.9g},{point.lo2_hz:.9g}")
    return "\n".join(lines) + "\n"
