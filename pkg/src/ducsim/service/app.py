"""HTTP front end: FastAPI routes over the handler functions.

Domain failures map to structured 4xx responses carrying the error kind, so
clients can tell an infeasible plan from malformed measurement data.
"""
from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..chain import PlanningError
from ..config import ConfigError
from ..microstrip import SynthesisError
from ..responses import NoPassbandError, TouchstoneError
from ..spectra import LoRangeError, ToneLookupError
from . import handlers
from .models import (
    AnalyzeS2pRequest,
    GeometryResponse,
    ImageRejectionRequest,
    ImageRejectionResponse,
    PassbandMetricsResponse,
    PlanRequest,
    PlanResponse,
    RabiRequest,
    RamseyRequest,
    SimulateRequest,
    SimulateResponse,
    SpectroscopyRequest,
    SweepDbcRequest,
    SweepDbcResponse,
    SynthFilterRequest,
    XYResponse,
)

_ERROR_KINDS: list[tuple[type[Exception], str]] = [
    (PlanningError, "planning"),
    (SynthesisError, "synthesis"),
    (TouchstoneError, "touchstone"),
    (NoPassbandError, "no-passband"),
    (ToneLookupError, "tone-lookup"),
    (LoRangeError, "lo-range"),
    (ConfigError, "config"),
]


def create_app() -> FastAPI:
    app = FastAPI(
        title="ducsim",
        version=__version__,
        description="Double-upconversion chain planning and simulation service",
    )

    for exc_type, kind in _ERROR_KINDS:
        def _handler(request: Request, exc: Exception, kind: str = kind) -> JSONResponse:
            return JSONResponse(status_code=422, content={"error": kind, "detail": str(exc)})

        app.add_exception_handler(exc_type, _handler)

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.post("/plan", response_model=PlanResponse)
    def plan(request: PlanRequest) -> PlanResponse:
        return handlers.handle_plan(request)

    @app.post("/simulate", response_model=SimulateResponse)
    def simulate(request: SimulateRequest) -> SimulateResponse:
        return handlers.handle_simulate(request)

    @app.post("/sweep-dbc", response_model=SweepDbcResponse)
    def sweep_dbc(request: SweepDbcRequest) -> SweepDbcResponse:
        return handlers.handle_sweep_dbc(request)

    @app.post("/synth-filter", response_model=GeometryResponse)
    def synth_filter(request: SynthFilterRequest) -> GeometryResponse:
        return handlers.handle_synth_filter(request)

    @app.post("/analyze-s2p", response_model=PassbandMetricsResponse)
    def analyze_s2p(request: AnalyzeS2pRequest) -> PassbandMetricsResponse:
        return handlers.handle_analyze_s2p(request)

    @app.post("/qubit/rabi", response_model=XYResponse)
    def qubit_rabi(request: RabiRequest) -> XYResponse:
        return handlers.handle_rabi(request)

    @app.post("/qubit/ramsey", response_model=XYResponse)
    def qubit_ramsey(request: RamseyRequest) -> XYResponse:
        return handlers.handle_ramsey(request)

    @app.post("/qubit/spectroscopy", response_model=XYResponse)
    def qubit_spectroscopy(request: SpectroscopyRequest) -> XYResponse:
        return handlers.handle_spectroscopy(request)

    @app.post("/image-rejection", response_model=ImageRejectionResponse)
    def image_rejection(request: ImageRejectionRequest) -> ImageRejectionResponse:
        return handlers.handle_image_rejection(request)

    return app
