"""Service operations as plain functions: one request model in, one
response model out. The HTTP layer and the CLI both dispatch through these,
so results are identical whichever front end is used."""
from __future__ import annotations

import numpy as np

from .. import chain as chain_mod
from .. import microstrip as ms
from ..chain import (
    ChainSetup,
    Plan,
    PlanConstraints,
    iq_image_rejection,
    plan as plan_full,
    propagate,
    sweep_dbc,
)
from ..config import setup_from_preset
from ..fitting import FitResult, fit_lorentzian, fit_sinusoid
from ..qubit import QubitSpec, rabi_sweep, ramsey_sweep, spectroscopy_sweep
from ..responses import parse_touchstone, passband_metrics
from ..spectra import Spectrum
from .models import (
    AnalyzeS2pRequest,
    ChainSelector,
    FitResultModel,
    GeometryResponse,
    ImageRejectionRequest,
    ImageRejectionResponse,
    PassbandMetricsResponse,
    PlanRequest,
    PlanResponse,
    QubitModel,
    RabiRequest,
    RamseyRequest,
    SectionModel,
    SimulateRequest,
    SimulateResponse,
    SpectroscopyRequest,
    SpectrumModel,
    StageOutputModel,
    SubstrateModel,
    SweepDbcRequest,
    SweepDbcResponse,
    SweepFailureModel,
    SweepPointModel,
    SynthFilterRequest,
    XYResponse,
    optional_db,
)


def _selector_to_setup(selector: ChainSelector) -> ChainSetup:
    if selector.preset is not None:
        return setup_from_preset(selector.preset)
    return selector.config.to_setup()


def _default_input() -> Spectrum:
    return chain_mod.benchmark_input()


def _plan_response(plan_: Plan) -> PlanResponse:
    return PlanResponse(
        f_if_hz=plan_.f_if_hz,
        f_lo1_hz=plan_.f_lo1_hz,
        f_lo2_hz=plan_.f_lo2_hz,
        stage1_freq_hz=plan_.stage1_freq_hz,
        output_freq_hz=plan_.output_freq_hz,
        stage1_sideband=plan_.stage1_sideband,
        stage2_sideband=plan_.stage2_sideband,
    )


def _qubit(model: QubitModel) -> QubitSpec:
    return QubitSpec(
        f_qubit_hz=model.f_qubit_hz,
        t1_s=model.t1_s,
        t2_star_s=model.t2_star_s,
        drive_coupling_rad_per_s=model.drive_coupling_rad_per_s,
    )


def _fit_model(result: FitResult) -> FitResultModel:
    return FitResultModel(
        parameters=result.parameters,
        residual_norm=result.residual_norm,
        converged=result.converged,
    )


def handle_plan(request: PlanRequest) -> PlanResponse:
    constraints = PlanConstraints(
        if_range_hz=(request.if_hz, request.if_hz),
        stage1_passband_hz=request.stage1_passband_hz,
        stage2_passband_hz=request.stage2_passband_hz,
        mixer1_lo_range_hz=request.mixer1_lo_range_hz,
        mixer2_lo_range_hz=request.mixer2_lo_range_hz,
        stage1_sideband=request.stage1_sideband,
        stage2_sideband=request.stage2_sideband,
    )
    return _plan_response(plan_full(request.target_hz, constraints))


def handle_simulate(request: SimulateRequest) -> SimulateResponse:
    setup = _selector_to_setup(request.chain)
    input_spectrum = (
        request.input.to_spectrum() if request.input is not None else _default_input()
    )
    if request.target_hz is not None:
        plan_ = setup.plan_for_target(request.target_hz)
    else:
        plan_ = setup.fixed_plan()
    chain = setup.build(plan_)
    outputs = propagate(chain, input_spectrum, request.max_order, request.power_floor_dbm)
    stages = [
        StageOutputModel(
            stage=i + 1, name=stage.name, spectrum=SpectrumModel.from_spectrum(out)
        )
        for i, (stage, out) in enumerate(zip(chain.stages, outputs))
    ]
    return SimulateResponse(plan=_plan_response(plan_), stages=stages)


def handle_sweep_dbc(request: SweepDbcRequest) -> SweepDbcResponse:
    setup = _selector_to_setup(request.chain)
    input_spectrum = (
        request.input.to_spectrum() if request.input is not None else _default_input()
    )
    result = sweep_dbc(setup, request.resolve_targets(), input_spectrum, request.max_order)
    return SweepDbcResponse(
        points=[
            SweepPointModel(
                target_hz=p.target_hz, dbc_db=optional_db(p.dbc_db), lo2_hz=p.lo2_hz
            )
            for p in result.points
        ],
        failures=[
            SweepFailureModel(target_hz=f.target_hz, reason=f.reason) for f in result.failures
        ],
    )


def handle_synth_filter(request: SynthFilterRequest) -> GeometryResponse:
    substrate = ms.Substrate(request.substrate.eps_r, request.substrate.h_m)
    geometry = ms.synthesize_parallel_coupled(
        request.family,
        request.order,
        request.f_low_hz,
        request.f_high_hz,
        request.z0_ohm,
        substrate,
        request.ripple_db,
    )
    return GeometryResponse(
        sections=[
            SectionModel(w_m=s.width_m, l_m=s.length_m, s_m=s.gap_m) for s in geometry.sections
        ],
        substrate=SubstrateModel(eps_r=substrate.eps_r, h_m=substrate.height_m),
        violations=ms.manufacturability_check(geometry),
    )


def handle_analyze_s2p(request: AnalyzeS2pRequest) -> PassbandMetricsResponse:
    response = parse_touchstone(request.content)
    metrics = passband_metrics(response, request.edge_drop_db)
    return PassbandMetricsResponse(
        f_low_hz=metrics.f_low_edge_hz,
        f_high_hz=metrics.f_high_edge_hz,
        mean_il_db=metrics.mean_insertion_loss_db,
        min_il_db=metrics.min_insertion_loss_db,
    )


def handle_rabi(request: RabiRequest) -> XYResponse:
    qubit = _qubit(request.qubit)
    amplitudes = np.linspace(request.amplitude_start, request.amplitude_stop, request.points)
    populations = rabi_sweep(qubit, amplitudes, request.duration_s)
    fit = _fit_model(fit_sinusoid(amplitudes, populations)) if request.fit else None
    return XYResponse(x=amplitudes.tolist(), population=populations.tolist(), fit=fit)


def handle_ramsey(request: RamseyRequest) -> XYResponse:
    qubit = _qubit(request.qubit)
    waits = np.linspace(request.wait_start_s, request.wait_stop_s, request.points)
    populations = ramsey_sweep(qubit, request.detuning_hz, waits)
    fit = _fit_model(fit_sinusoid(waits, populations)) if request.fit else None
    return XYResponse(x=waits.tolist(), population=populations.tolist(), fit=fit)


def handle_spectroscopy(request: SpectroscopyRequest) -> XYResponse:
    qubit = _qubit(request.qubit)
    setup = _selector_to_setup(request.chain)
    input_spectrum = (
        request.input.to_spectrum() if request.input is not None else _default_input()
    )
    targets = np.linspace(request.f_start_hz, request.f_stop_hz, request.points)
    populations = spectroscopy_sweep(
        qubit,
        setup,
        targets,
        input_spectrum,
        amplitude_scale=request.amplitude_scale,
        max_order=request.max_order,
    )
    fit = _fit_model(fit_lorentzian(targets, populations)) if request.fit else None
    return XYResponse(x=targets.tolist(), population=populations.tolist(), fit=fit)


def handle_image_rejection(request: ImageRejectionRequest) -> ImageRejectionResponse:
    value = iq_image_rejection(request.amplitude_imbalance_db, request.phase_error_deg)
    return ImageRejectionResponse(rejection_db=optional_db(value))
