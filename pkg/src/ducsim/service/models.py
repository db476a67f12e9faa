"""Request/response bodies for the planning and simulation service.

Unbounded dB quantities (no spur found, perfect rejection) serialize as
null rather than IEEE infinities so the JSON stays strict.
"""
from __future__ import annotations

import math
from typing import Literal

from pydantic import Field, model_validator

from ..config import ChainConfigModel, StrictModel
from ..spectra import Spectrum, Tone


def optional_db(value: float) -> float | None:
    return None if math.isinf(value) else value


class ToneModel(StrictModel):
    frequency_hz: float = Field(gt=0)
    power_dbm: float
    label: str = ""

    def to_tone(self) -> Tone:
        return Tone(self.frequency_hz, self.power_dbm, self.label)

    @classmethod
    def from_tone(cls, tone: Tone) -> "ToneModel":
        return cls(frequency_hz=tone.frequency_hz, power_dbm=tone.power_dbm, label=tone.label)


class SpectrumModel(StrictModel):
    tones: list[ToneModel]
    merge_tolerance_hz: float = 1e3

    def to_spectrum(self) -> Spectrum:
        return Spectrum(tuple(t.to_tone() for t in self.tones), self.merge_tolerance_hz)

    @classmethod
    def from_spectrum(cls, spectrum: Spectrum) -> "SpectrumModel":
        return cls(
            tones=[ToneModel.from_tone(t) for t in spectrum.tones],
            merge_tolerance_hz=spectrum.merge_tolerance_hz,
        )


class ChainSelector(StrictModel):
    """Pick a shipped preset or carry a full inline configuration."""

    preset: Literal["default", "shielded"] | None = None
    config: ChainConfigModel | None = None

    @model_validator(mode="after")
    def _exactly_one(self) -> "ChainSelector":
        if (self.preset is None) == (self.config is None):
            raise ValueError("provide exactly one of 'preset' or 'config'")
        return self


class PlanRequest(StrictModel):
    target_hz: float = Field(gt=0)
    if_hz: float = Field(default=450e6, gt=0)
    stage1_passband_hz: tuple[float, float] = (2.8e9, 3.0e9)
    stage2_passband_hz: tuple[float, float] = (4.5e9, 7.0e9)
    mixer1_lo_range_hz: tuple[float, float] = (1.6e9, 6.0e9)
    mixer2_lo_range_hz: tuple[float, float] = (4.0e9, 10.0e9)
    stage1_sideband: Literal["lower", "upper"] = "lower"
    stage2_sideband: Literal["lower", "upper"] = "lower"


class PlanResponse(StrictModel):
    f_if_hz: float
    f_lo1_hz: float
    f_lo2_hz: float
    stage1_freq_hz: float
    output_freq_hz: float
    stage1_sideband: Literal["lower", "upper"]
    stage2_sideband: Literal["lower", "upper"]


class SimulateRequest(StrictModel):
    chain: ChainSelector = Field(default_factory=lambda: ChainSelector(preset="default"))
    input: SpectrumModel | None = None
    target_hz: float | None = None  # None: run the configured LO frequencies
    max_order: int = Field(default=3, ge=1)
    power_floor_dbm: float = -120.0


class StageOutputModel(StrictModel):
    stage: int
    name: str
    spectrum: SpectrumModel


class SimulateResponse(StrictModel):
    plan: PlanResponse
    stages: list[StageOutputModel]


class SweepDbcRequest(StrictModel):
    chain: ChainSelector = Field(default_factory=lambda: ChainSelector(preset="default"))
    input: SpectrumModel | None = None
    start_hz: float | None = None
    stop_hz: float | None = None
    step_hz: float | None = None
    targets_hz: list[float] | None = None
    max_order: int = Field(default=3, ge=1)

    @model_validator(mode="after")
    def _grid_or_list(self) -> "SweepDbcRequest":
        has_grid = None not in (self.start_hz, self.stop_hz, self.step_hz)
        has_list = self.targets_hz is not None
        if has_grid == has_list:
            raise ValueError("provide either start/stop/step or targets_hz")
        if has_grid and (self.step_hz <= 0 or self.stop_hz < self.start_hz):
            raise ValueError("sweep grid must have step > 0 and stop >= start")
        return self

    def resolve_targets(self) -> list[float]:
        if self.targets_hz is not None:
            return list(self.targets_hz)
        targets = []
        value = self.start_hz
        while value <= self.stop_hz + 1e-6:
            targets.append(value)
            value += self.step_hz
        return targets


class SweepPointModel(StrictModel):
    target_hz: float
    dbc_db: float | None  # null: reference tone fully suppressed
    lo2_hz: float


class SweepFailureModel(StrictModel):
    target_hz: float
    reason: str


class SweepDbcResponse(StrictModel):
    points: list[SweepPointModel]
    failures: list[SweepFailureModel]


class SubstrateModel(StrictModel):
    eps_r: float = 4.35
    h_m: float = 1.6e-3


class SynthFilterRequest(StrictModel):
    family: Literal["butterworth", "chebyshev"] = "butterworth"
    order: int = Field(default=5, ge=2)
    f_low_hz: float = Field(gt=0)
    f_high_hz: float = Field(gt=0)
    z0_ohm: float = Field(default=50.0, gt=0)
    ripple_db: float | None = None
    substrate: SubstrateModel = Field(default_factory=SubstrateModel)


class SectionModel(StrictModel):
    w_m: float
    l_m: float
    s_m: float


class GeometryResponse(StrictModel):
    sections: list[SectionModel]
    substrate: SubstrateModel
    violations: list[str]


class AnalyzeS2pRequest(StrictModel):
    content: str
    edge_drop_db: float = Field(default=3.0, gt=0)


class PassbandMetricsResponse(StrictModel):
    f_low_hz: float
    f_high_hz: float
    mean_il_db: float
    min_il_db: float


class QubitModel(StrictModel):
    f_qubit_hz: float = Field(gt=0)
    t1_s: float = Field(gt=0)
    t2_star_s: float = Field(gt=0)
    drive_coupling_rad_per_s: float = Field(gt=0)


class FitResultModel(StrictModel):
    parameters: dict[str, float]
    residual_norm: float
    converged: bool


class RabiRequest(StrictModel):
    qubit: QubitModel
    duration_s: float = Field(default=50e-9, gt=0)
    amplitude_start: float = Field(default=0.0, ge=0)
    amplitude_stop: float = Field(default=1.0, gt=0)
    points: int = Field(default=101, ge=8)
    fit: bool = True


class XYResponse(StrictModel):
    x: list[float]
    population: list[float]
    fit: FitResultModel | None = None


class RamseyRequest(StrictModel):
    qubit: QubitModel
    detuning_hz: float
    wait_start_s: float = Field(default=0.0, ge=0)
    wait_stop_s: float = Field(gt=0)
    points: int = Field(default=101, ge=10)
    fit: bool = True


class SpectroscopyRequest(StrictModel):
    qubit: QubitModel
    chain: ChainSelector = Field(default_factory=lambda: ChainSelector(preset="default"))
    input: SpectrumModel | None = None
    f_start_hz: float = Field(gt=0)
    f_stop_hz: float = Field(gt=0)
    points: int = Field(default=101, ge=8)
    amplitude_scale: float = 1.0
    max_order: int = Field(default=3, ge=1)
    fit: bool = True


class ImageRejectionRequest(StrictModel):
    amplitude_imbalance_db: float = Field(ge=0)
    phase_error_deg: float


class ImageRejectionResponse(StrictModel):
    rejection_db: float | None  # null: perfect quadrature, unbounded rejection
