"""Chain configuration schema: JSON in, runtime objects out.

The same pydantic models back the HTTP service bodies and the CLI config
files, so both front ends validate identically (unknown keys rejected).
"""
from __future__ import annotations

import math
import re
from pathlib import Path
from typing import Annotated, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from . import chain as chain_mod
from .chain import ChainSetup, LeakageCoupling, LeakageStage, MixerSpec, PlanConstraints
from .responses import CascadeResponse, PrototypeResponse, TabulatedResponse, parse_touchstone


class ConfigError(ValueError):
    """Configuration content is structurally valid JSON but semantically wrong."""


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class MixerModel(StrictModel):
    conversion_loss_db: float = Field(ge=0)
    lo_to_rf_isolation_db: float
    if_to_rf_isolation_db: float
    lo_range_hz: tuple[float, float]
    spur_table: dict[str, float] = Field(default_factory=lambda: {"1,1": 0.0})

    @field_validator("spur_table")
    @classmethod
    def _check_keys(cls, table: dict[str, float]) -> dict[str, float]:
        for key in table:
            if not re.fullmatch(r"\d+,\d+", key):
                raise ValueError(f"spur table keys look like 'm,n', got {key!r}")
        if table.get("1,1") != 0.0:
            raise ValueError("spur table must anchor '1,1' at 0 dB")
        return table

    def to_spec(self) -> MixerSpec:
        table = {
            tuple(int(p) for p in key.split(",")): value for key, value in self.spur_table.items()
        }
        return MixerSpec(
            conversion_loss_db=self.conversion_loss_db,
            lo_to_rf_isolation_db=self.lo_to_rf_isolation_db,
            if_to_rf_isolation_db=self.if_to_rf_isolation_db,
            spur_table=table,
            lo_range_hz=self.lo_range_hz,
        )

    @classmethod
    def from_spec(cls, spec: MixerSpec) -> "MixerModel":
        return cls(
            conversion_loss_db=spec.conversion_loss_db,
            lo_to_rf_isolation_db=spec.lo_to_rf_isolation_db,
            if_to_rf_isolation_db=spec.if_to_rf_isolation_db,
            lo_range_hz=spec.lo_range_hz,
            spur_table={f"{m},{n}": v for (m, n), v in spec.spur_table.items()},
        )


class PrototypeFilterModel(StrictModel):
    type: Literal["prototype"] = "prototype"
    family: Literal["butterworth", "chebyshev"] = "butterworth"
    kind: Literal["bandpass", "lowpass"] = "bandpass"
    order: int = Field(ge=1)
    f_low_hz: float | None = None
    f_high_hz: float
    ripple_db: float | None = None
    insertion_loss_db: float = 0.0
    stopband_floor_db: float | None = None

    def to_response(self) -> PrototypeResponse:
        return PrototypeResponse(
            family=self.family,
            order=self.order,
            kind=self.kind,
            f_low_hz=self.f_low_hz,
            f_high_hz=self.f_high_hz,
            ripple_db=self.ripple_db,
            insertion_loss_db=self.insertion_loss_db,
            stopband_floor_db=self.stopband_floor_db,
        )


class TouchstoneFilterModel(StrictModel):
    type: Literal["touchstone"] = "touchstone"
    path: str | None = None
    content: str | None = None
    extrapolation: Literal["hold-last", "floor"] = "hold-last"

    @model_validator(mode="after")
    def _exactly_one_source(self) -> "TouchstoneFilterModel":
        if (self.path is None) == (self.content is None):
            raise ValueError("provide exactly one of 'path' or 'content'")
        return self

    def to_response(self) -> TabulatedResponse:
        text = self.content if self.content is not None else Path(self.path).read_text()
        parsed = parse_touchstone(text)
        return TabulatedResponse(parsed.points, self.extrapolation)


class CascadeFilterModel(StrictModel):
    type: Literal["cascade"] = "cascade"
    elements: list["FilterModel"] = Field(min_length=1)

    def to_response(self) -> CascadeResponse:
        return CascadeResponse(tuple(e.to_response() for e in self.elements))


FilterModel = Annotated[
    Union[PrototypeFilterModel, TouchstoneFilterModel, CascadeFilterModel],
    Field(discriminator="type"),
]
CascadeFilterModel.model_rebuild()


class LeakageModel(StrictModel):
    source: str  # "stage:<index>", "lo1" or "lo2"
    coupling_db: float

    @field_validator("source")
    @classmethod
    def _check_source(cls, source: str) -> str:
        if source in ("lo1", "lo2") or re.fullmatch(r"stage:\d+", source):
            return source
        raise ValueError(f"leakage source is 'stage:<index>', 'lo1' or 'lo2', got {source!r}")

    def to_coupling(self) -> LeakageCoupling:
        if self.source.startswith("stage:"):
            return LeakageCoupling(int(self.source.split(":")[1]), self.coupling_db)
        return LeakageCoupling(self.source, self.coupling_db)


class ConstraintsModel(StrictModel):
    if_range_hz: tuple[float, float]
    stage1_passband_hz: tuple[float, float]
    stage2_passband_hz: tuple[float, float]
    mixer1_lo_range_hz: tuple[float, float] | None = None
    mixer2_lo_range_hz: tuple[float, float] | None = None
    stage1_sideband: Literal["lower", "upper"] = "lower"
    stage2_sideband: Literal["lower", "upper"] = "lower"

    def to_constraints(
        self,
        mixer1_range: tuple[float, float],
        mixer2_range: tuple[float, float],
    ) -> PlanConstraints:
        return PlanConstraints(
            if_range_hz=self.if_range_hz,
            stage1_passband_hz=self.stage1_passband_hz,
            stage2_passband_hz=self.stage2_passband_hz,
            mixer1_lo_range_hz=self.mixer1_lo_range_hz or mixer1_range,
            mixer2_lo_range_hz=self.mixer2_lo_range_hz or mixer2_range,
            stage1_sideband=self.stage1_sideband,
            stage2_sideband=self.stage2_sideband,
        )


class ChainConfigModel(StrictModel):
    """Wire/file schema of a complete double-upconversion setup."""

    mixers: list[MixerModel] = Field(min_length=2, max_length=2)
    filters: list[FilterModel] = Field(min_length=2, max_length=2)
    lo1_hz: float | None = None
    lo2_hz: float | None = None
    lo1_power_dbm: float = 10.0
    lo2_power_dbm: float = 10.0
    leakage: list[LeakageModel] = Field(default_factory=list)
    constraints: ConstraintsModel | None = None

    def to_setup(self) -> ChainSetup:
        mixer1 = self.mixers[0].to_spec()
        mixer2 = self.mixers[1].to_spec()
        if self.constraints is not None:
            constraints = self.constraints.to_constraints(mixer1.lo_range_hz, mixer2.lo_range_hz)
        else:
            constraints = PlanConstraints(
                if_range_hz=chain_mod.DEFAULT_CONSTRAINTS.if_range_hz,
                stage1_passband_hz=chain_mod.DEFAULT_CONSTRAINTS.stage1_passband_hz,
                stage2_passband_hz=chain_mod.DEFAULT_CONSTRAINTS.stage2_passband_hz,
                mixer1_lo_range_hz=mixer1.lo_range_hz,
                mixer2_lo_range_hz=mixer2.lo_range_hz,
                stage1_sideband=chain_mod.DEFAULT_CONSTRAINTS.stage1_sideband,
                stage2_sideband=chain_mod.DEFAULT_CONSTRAINTS.stage2_sideband,
            )
        leakage = (
            LeakageStage(tuple(c.to_coupling() for c in self.leakage)) if self.leakage else None
        )
        return ChainSetup(
            mixer1=mixer1,
            mixer2=mixer2,
            filter1=self.filters[0].to_response(),
            filter2=self.filters[1].to_response(),
            lo1_power_dbm=self.lo1_power_dbm,
            lo2_power_dbm=self.lo2_power_dbm,
            leakage=leakage,
            constraints=constraints,
            lo1_hz=self.lo1_hz,
            lo2_hz=self.lo2_hz,
        )


def default_config_model() -> ChainConfigModel:
    """The shipped calibrated bench configuration as a config document."""
    return ChainConfigModel(
        mixers=[
            MixerModel.from_spec(chain_mod.STAGE1_MIXER),
            MixerModel.from_spec(chain_mod.STAGE2_MIXER),
        ],
        filters=[
            PrototypeFilterModel(
                order=5, f_low_hz=2.8e9, f_high_hz=3.0e9,
                insertion_loss_db=8.0, stopband_floor_db=50.0,
            ),
            PrototypeFilterModel(
                order=5, f_low_hz=4.5e9, f_high_hz=7.0e9,
                insertion_loss_db=5.0, stopband_floor_db=60.0,
            ),
        ],
        lo1_hz=3.35e9,
        lo2_hz=7.926e9,
        leakage=[
            LeakageModel(source="stage:1", coupling_db=-45.0),
            LeakageModel(source="lo2", coupling_db=-62.0),
        ],
    )


def shielded_config_model() -> ChainConfigModel:
    """Shielded preset: cascaded stage-1 filters, 5 GHz lowpass, no leakage."""
    stage1 = PrototypeFilterModel(
        order=5, f_low_hz=2.8e9, f_high_hz=3.0e9,
        insertion_loss_db=8.0, stopband_floor_db=50.0,
    )
    lowpass = PrototypeFilterModel(
        kind="lowpass", order=5, f_high_hz=5.0e9, insertion_loss_db=1.0,
    )
    model = default_config_model()
    return model.model_copy(
        update={
            "filters": [CascadeFilterModel(elements=[stage1, stage1, lowpass]), model.filters[1]],
            "leakage": [],
        }
    )


PRESETS = {
    "default": default_config_model,
    "shielded": shielded_config_model,
}


def setup_from_preset(name: str) -> ChainSetup:
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return factory().to_setup()


_SI_SUFFIXES = [("ghz", 1e9), ("mhz", 1e6), ("khz", 1e3), ("hz", 1.0)]


def parse_frequency(text: str | float) -> float:
    """Frequency from '5.026e9', '5.026GHz', '450MHz' or a plain number."""
    if isinstance(text, (int, float)):
        value = float(text)
    else:
        stripped = text.strip()
        lowered = stripped.lower()
        value = None
        for suffix, scale in _SI_SUFFIXES:
            if lowered.endswith(suffix):
                value = float(stripped[: -len(suffix)]) * scale
                break
        if value is None:
            value = float(stripped)
    if not math.isfinite(value) or value <= 0:
        raise ValueError(f"frequency must be finite and positive, got {text!r}")
    return value
