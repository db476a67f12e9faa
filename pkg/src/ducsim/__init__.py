"""Double-upconversion RF chain simulator and planner.

Core layers:

- :mod:`ducsim.spectra` -- tone/spectrum algebra, mixing products, spur metrics
- :mod:`ducsim.responses` -- filter prototypes, tabulated S21 data, Touchstone I/O
- :mod:`ducsim.microstrip` -- line parameters, coupled-line synthesis/analysis
- :mod:`ducsim.chain` -- chain composition, propagation, LO planning, sweeps
- :mod:`ducsim.qubit` -- two-level-system experiments and curve fits
- :mod:`ducsim.service` -- FastAPI front end; :mod:`ducsim.cli` -- thin client
"""

__version__ = "0.1.0"

from .chain import (
    Chain,
    ChainSetup,
    MixerSpec,
    Plan,
    PlanConstraints,
    PlanningError,
    benchmark_setup,
    build_double_upconversion,
    iq_image_rejection,
    output_spectrum,
    plan,
    plan_lo1,
    plan_lo2,
    propagate,
    shielded_setup,
    sweep_dbc,
)
from .fitting import FitResult, fit_decaying_cosine, fit_lorentzian, fit_sinusoid
from .microstrip import (
    InterdigitalGeometry,
    ParallelCoupledGeometry,
    Substrate,
    SynthesisError,
    analyze_parallel_coupled,
    coupled_line_parameters,
    fr4_substrate,
    line_parameters,
    manufacturability_check,
    synthesize_parallel_coupled,
)
from .qubit import QubitSpec, drive_response, rabi_sweep, ramsey_sweep, spectroscopy_sweep
from .responses import (
    CascadeResponse,
    PassbandMetrics,
    PrototypeResponse,
    TabulatedResponse,
    TouchstoneError,
    evaluate_s21,
    parse_touchstone,
    passband_metrics,
    prototype_g_values,
    write_touchstone,
)
from .spectra import (
    Spectrum,
    Tone,
    ToneLookupError,
    apply_response,
    dbc_vs,
    merge,
    mix,
    sfdr,
    spectrum_to_csv,
)

__all__ = [
    "__version__",
    "Chain",
    "ChainSetup",
    "MixerSpec",
    "Plan",
    "PlanConstraints",
    "PlanningError",
    "benchmark_setup",
    "build_double_upconversion",
    "iq_image_rejection",
    "output_spectrum",
    "plan",
    "plan_lo1",
    "plan_lo2",
    "propagate",
    "shielded_setup",
    "sweep_dbc",
    "FitResult",
    "fit_decaying_cosine",
    "fit_lorentzian",
    "fit_sinusoid",
    "InterdigitalGeometry",
    "ParallelCoupledGeometry",
    "Substrate",
    "SynthesisError",
    "analyze_parallel_coupled",
    "coupled_line_parameters",
    "fr4_substrate",
    "line_parameters",
    "manufacturability_check",
    "synthesize_parallel_coupled",
    "QubitSpec",
    "drive_response",
    "rabi_sweep",
    "ramsey_sweep",
    "spectroscopy_sweep",
    "CascadeResponse",
    "PassbandMetrics",
    "PrototypeResponse",
    "TabulatedResponse",
    "TouchstoneError",
    "evaluate_s21",
    "parse_touchstone",
    "passband_metrics",
    "prototype_g_values",
    "write_touchstone",
    "Spectrum",
    "Tone",
    "ToneLookupError",
    "apply_response",
    "dbc_vs",
    "merge",
    "mix",
    "sfdr",
    "spectrum_to_csv",
]
