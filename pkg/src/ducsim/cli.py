"""Command-line front end.

Every command builds the same request model the HTTP service accepts and
dispatches it either in-process (default) or to a running service via
``--server URL``, then renders the response. Outputs are deterministic:
no timestamps, fixed field order.
"""
from __future__ import annotations

import csv
import io
import json
import sys
from pathlib import Path

import click
import numpy as np
from pydantic import BaseModel, ValidationError

from .chain import PlanningError
from .config import ChainConfigModel, ConfigError, parse_frequency
from .microstrip import SynthesisError
from .responses import TouchstoneError
from .service import handlers
from .service.models import (
    AnalyzeS2pRequest,
    ChainSelector,
    ImageRejectionRequest,
    PlanRequest,
    QubitModel,
    RabiRequest,
    RamseyRequest,
    SimulateRequest,
    SpectroscopyRequest,
    SpectrumModel,
    SweepDbcRequest,
    SynthFilterRequest,
    ToneModel,
)

EXIT_USAGE = 1
EXIT_PLANNING = 2
EXIT_DATA = 3
EXIT_SYNTHESIS = 4
EXIT_LOOKUP = 5

_ENDPOINT_BY_KIND = {
    "planning": EXIT_PLANNING,
    "config": EXIT_DATA,
    "touchstone": EXIT_DATA,
    "no-passband": EXIT_LOOKUP,
    "tone-lookup": EXIT_LOOKUP,
    "lo-range": EXIT_LOOKUP,
    "synthesis": EXIT_SYNTHESIS,
}


class RemoteError(Exception):
    def __init__(self, kind: str, detail: str):
        super().__init__(detail)
        self.kind = kind
        self.exit_code = _ENDPOINT_BY_KIND.get(kind, EXIT_DATA)


class FrequencyType(click.ParamType):
    name = "frequency"

    def convert(self, value, param, ctx):
        try:
            return parse_frequency(value)
        except ValueError as exc:
            self.fail(str(exc), param, ctx)


class FrequencyRangeType(click.ParamType):
    name = "freq:freq"

    def convert(self, value, param, ctx):
        parts = str(value).split(":")
        if len(parts) != 2:
            self.fail(f"expected LOW:HIGH, got {value!r}", param, ctx)
        try:
            low, high = (parse_frequency(p) for p in parts)
        except ValueError as exc:
            self.fail(str(exc), param, ctx)
        return (low, high)


FREQ = FrequencyType()
FREQ_RANGE = FrequencyRangeType()


def _make_client(server: str):
    import httpx

    return httpx.Client(base_url=server, timeout=120.0)


_PATHS = {
    "plan": "/plan",
    "simulate": "/simulate",
    "sweep-dbc": "/sweep-dbc",
    "synth-filter": "/synth-filter",
    "analyze-s2p": "/analyze-s2p",
    "qubit-rabi": "/qubit/rabi",
    "qubit-ramsey": "/qubit/ramsey",
    "qubit-spectroscopy": "/qubit/spectroscopy",
    "image-rejection": "/image-rejection",
}

_LOCAL = {
    "plan": handlers.handle_plan,
    "simulate": handlers.handle_simulate,
    "sweep-dbc": handlers.handle_sweep_dbc,
    "synth-filter": handlers.handle_synth_filter,
    "analyze-s2p": handlers.handle_analyze_s2p,
    "qubit-rabi": handlers.handle_rabi,
    "qubit-ramsey": handlers.handle_ramsey,
    "qubit-spectroscopy": handlers.handle_spectroscopy,
    "image-rejection": handlers.handle_image_rejection,
}


def _dispatch(operation: str, request: BaseModel, server: str | None):
    if server is None:
        return _LOCAL[operation](request)
    with _make_client(server) as client:
        response = client.post(_PATHS[operation], json=request.model_dump(mode="json"))
        if response.status_code >= 400:
            try:
                payload = response.json()
            except ValueError:
                raise RemoteError("http", response.text)
            raise RemoteError(payload.get("error", "http"), str(payload.get("detail", payload)))
        return response.json()


def _as_dict(result) -> dict:
    if isinstance(result, BaseModel):
        return result.model_dump(mode="json")
    return result


def _emit(text: str, output: str | None) -> None:
    if output is None or output == "-":
        click.echo(text, nl=not text.endswith("\n"))
    else:
        Path(output).write_text(text)


def _load_selector(config_path: str | None, preset: str) -> ChainSelector:
    if config_path is None:
        return ChainSelector(preset=preset)
    try:
        model = ChainConfigModel.model_validate_json(Path(config_path).read_text())
    except ValidationError as exc:
        raise ConfigError(f"{config_path}: {exc}") from None
    except OSError as exc:
        raise ConfigError(f"{config_path}: {exc}") from None
    return ChainSelector(config=model)


def _input_spectrum(if_hz: float, if_power_dbm: float) -> SpectrumModel:
    return SpectrumModel(tones=[ToneModel(frequency_hz=if_hz, power_dbm=if_power_dbm, label="IF")])


def _xy_csv(payload: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["x", "population"])
    for x, p in zip(payload["x"], payload["population"]):
        writer.writerow([f"{x:.9g}", f"{p:.9g}"])
    return buf.getvalue()


def _spectrum_csv(payload: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["frequency_hz", "power_dbm", "label"])
    for tone in payload["tones"]:
        writer.writerow(
            [f"{tone['frequency_hz']:.9g}", f"{tone['power_dbm']:.9g}", tone["label"]]
        )
    return buf.getvalue()


def _maybe_noise(payload: dict, sigma: float, seed: int) -> dict:
    if sigma <= 0:
        return payload
    rng = np.random.default_rng(seed)
    noisy = np.clip(
        np.asarray(payload["population"]) + rng.normal(0.0, sigma, len(payload["population"])),
        0.0,
        1.0,
    )
    payload = dict(payload)
    payload["population"] = noisy.tolist()
    return payload


server_option = click.option(
    "--server", default=None, metavar="URL", help="Send the request to a running service."
)
output_option = click.option("-o", "--output", default=None, help="Write to a file instead of stdout.")


@click.group()
def cli() -> None:
    """Double-upconversion chain planner and simulator."""


@cli.command("plan")
@click.option("--target-hz", "target", type=FREQ, required=True, help="Desired output frequency.")
@click.option("--if-hz", "if_hz", type=FREQ, default="450MHz", show_default=True)
@click.option("--stage1-passband", type=FREQ_RANGE, default="2.8GHz:3.0GHz", show_default=True)
@click.option("--stage2-passband", type=FREQ_RANGE, default="4.5GHz:7.0GHz", show_default=True)
@click.option("--mixer1-lo-range", type=FREQ_RANGE, default="1.6GHz:6GHz", show_default=True)
@click.option("--mixer2-lo-range", type=FREQ_RANGE, default="4GHz:10GHz", show_default=True)
@click.option("--stage1-sideband", type=click.Choice(["lower", "upper"]), default="lower")
@click.option("--stage2-sideband", type=click.Choice(["lower", "upper"]), default="lower")
@click.option("--batch", type=click.Path(exists=True), default=None,
              help="File with one target frequency per line; emits one plan per line.")
@server_option
@output_option
def cmd_plan(target, if_hz, stage1_passband, stage2_passband, mixer1_lo_range,
             mixer2_lo_range, stage1_sideband, stage2_sideband, batch, server, output):
    """Solve the two LO frequencies for a target output."""
    targets = [target]
    if batch is not None:
        targets = [parse_frequency(line) for line in Path(batch).read_text().split()]
    lines = []
    for one in targets:
        request = PlanRequest(
            target_hz=one,
            if_hz=if_hz,
            stage1_passband_hz=stage1_passband,
            stage2_passband_hz=stage2_passband,
            mixer1_lo_range_hz=mixer1_lo_range,
            mixer2_lo_range_hz=mixer2_lo_range,
            stage1_sideband=stage1_sideband,
            stage2_sideband=stage2_sideband,
        )
        lines.append(json.dumps(_as_dict(_dispatch("plan", request, server))))
    _emit("\n".join(lines) + "\n", output)


@cli.command("simulate")
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="Chain configuration JSON; defaults to the shipped preset.")
@click.option("--preset", type=click.Choice(["default", "shielded"]), default="default")
@click.option("--target-hz", "target", type=FREQ, default=None,
              help="Replan LO2 for this output; omit to use the configured LOs.")
@click.option("--if-hz", type=FREQ, default="450MHz", show_default=True)
@click.option("--if-power-dbm", type=float, default=10.0, show_default=True)
@click.option("--stage", type=int, default=None, help="Emit this stage's spectrum (1-based).")
@click.option("--out-dir", type=click.Path(), default=None, help="Write every stage CSV here.")
@click.option("--max-order", type=int, default=3, show_default=True)
@click.option("--floor-dbm", type=float, default=-120.0, show_default=True)
@server_option
@output_option
def cmd_simulate(config_path, preset, target, if_hz, if_power_dbm, stage, out_dir,
                 max_order, floor_dbm, server, output):
    """Propagate an IF drive through the chain, stage by stage."""
    request = SimulateRequest(
        chain=_load_selector(config_path, preset),
        input=_input_spectrum(if_hz, if_power_dbm),
        target_hz=target,
        max_order=max_order,
        power_floor_dbm=floor_dbm,
    )
    payload = _as_dict(_dispatch("simulate", request, server))
    stages = payload["stages"]
    if out_dir is not None:
        directory = Path(out_dir)
        directory.mkdir(parents=True, exist_ok=True)
        for entry in stages:
            name = f"stage{entry['stage']}_{entry['name']}.csv"
            (directory / name).write_text(_spectrum_csv(entry["spectrum"]))
        click.echo(json.dumps(payload["plan"]))
        return
    if stage is not None:
        if not 1 <= stage <= len(stages):
            raise click.UsageError(f"--stage must be in 1..{len(stages)}")
        _emit(_spectrum_csv(stages[stage - 1]["spectrum"]), output)
        return
    _emit(_spectrum_csv(stages[-1]["spectrum"]), output)


@cli.command("sweep-dbc")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--preset", type=click.Choice(["default", "shielded"]), default="default")
@click.option("--start", type=FREQ, default="4.5GHz", show_default=True)
@click.option("--stop", type=FREQ, default="7GHz", show_default=True)
@click.option("--step", type=FREQ, default="25MHz", show_default=True)
@click.option("--if-hz", type=FREQ, default="450MHz", show_default=True)
@click.option("--if-power-dbm", type=float, default=10.0, show_default=True)
@click.option("--max-order", type=int, default=3, show_default=True)
@server_option
@output_option
def cmd_sweep_dbc(config_path, preset, start, stop, step, if_hz, if_power_dbm,
                  max_order, server, output):
    """Carrier-suppression sweep across the output band (CSV)."""
    request = SweepDbcRequest(
        chain=_load_selector(config_path, preset),
        input=_input_spectrum(if_hz, if_power_dbm),
        start_hz=start,
        stop_hz=stop,
        step_hz=step,
        max_order=max_order,
    )
    payload = _as_dict(_dispatch("sweep-dbc", request, server))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["target_hz", "dbc_db", "lo2_hz"])
    for point in payload["points"]:
        dbc = "inf" if point["dbc_db"] is None else f"{point['dbc_db']:.9g}"
        writer.writerow([f"{point['target_hz']:.9g}", dbc, f"{point['lo2_hz']:.9g}"])
    _emit(buf.getvalue(), output)
    for failure in payload["failures"]:
        click.echo(f"skipped {failure['target_hz']:.9g} Hz: {failure['reason']}", err=True)


@cli.command("synth-filter")
@click.option("--family", type=click.Choice(["butterworth", "chebyshev"]), default="butterworth")
@click.option("--order", type=int, default=5, show_default=True)
@click.option("--f-low", type=FREQ, required=True)
@click.option("--f-high", type=FREQ, required=True)
@click.option("--z0", type=float, default=50.0, show_default=True)
@click.option("--ripple-db", type=float, default=None)
@click.option("--eps-r", type=float, default=4.35, show_default=True)
@click.option("--height-mm", type=float, default=1.6, show_default=True)
@server_option
@output_option
def cmd_synth_filter(family, order, f_low, f_high, z0, ripple_db, eps_r, height_mm,
                     server, output):
    """Synthesize an edge-coupled bandpass filter geometry (JSON)."""
    request = SynthFilterRequest(
        family=family,
        order=order,
        f_low_hz=f_low,
        f_high_hz=f_high,
        z0_ohm=z0,
        ripple_db=ripple_db,
        substrate={"eps_r": eps_r, "h_m": height_mm * 1e-3},
    )
    payload = _as_dict(_dispatch("synth-filter", request, server))
    violations = payload.pop("violations", [])
    _emit(json.dumps(payload, indent=2) + "\n", output)
    for violation in violations:
        click.echo(f"manufacturability: {violation}", err=True)


@cli.command("analyze-s2p")
@click.argument("path", type=click.Path(exists=True))
@click.option("--edge-drop-db", type=float, default=3.0, show_default=True)
@server_option
@output_option
def cmd_analyze_s2p(path, edge_drop_db, server, output):
    """Passband metrics of a measured two-port file (JSON)."""
    request = AnalyzeS2pRequest(content=Path(path).read_text(), edge_drop_db=edge_drop_db)
    payload = _as_dict(_dispatch("analyze-s2p", request, server))
    _emit(json.dumps(payload, indent=2) + "\n", output)


@cli.command("image-rejection")
@click.option("--imbalance-db", type=float, required=True)
@click.option("--phase-deg", type=float, required=True)
@server_option
def cmd_image_rejection(imbalance_db, phase_deg, server):
    """Sideband suppression of a quadrature modulator with the given errors."""
    request = ImageRejectionRequest(
        amplitude_imbalance_db=imbalance_db, phase_error_deg=phase_deg
    )
    payload = _as_dict(_dispatch("image-rejection", request, server))
    value = payload["rejection_db"]
    click.echo("unbounded" if value is None else f"{value:.4f}")


def qubit_options(command):
    decorators = [
        click.option("--f-qubit", type=FREQ, default="5.61GHz", show_default=True),
        click.option("--t1-ns", type=float, default=200.0, show_default=True),
        click.option("--t2-star-ns", type=float, default=300.0, show_default=True),
        click.option("--coupling", type=float, default=3e7, show_default=True,
                     help="Drive coupling, rad/s per unit amplitude."),
        click.option("--noise-sigma", type=float, default=0.0, show_default=True,
                     help="Gaussian readout noise added to the populations."),
        click.option("--seed", type=int, default=0, show_default=True),
        click.option("--no-fit", is_flag=True, default=False),
    ]
    for decorator in reversed(decorators):
        command = decorator(command)
    return command


def _qubit_model(f_qubit, t1_ns, t2_star_ns, coupling) -> QubitModel:
    return QubitModel(
        f_qubit_hz=f_qubit,
        t1_s=t1_ns * 1e-9,
        t2_star_s=t2_star_ns * 1e-9,
        drive_coupling_rad_per_s=coupling,
    )


@cli.group("qubit")
def qubit_group() -> None:
    """Simulated control experiments read out through curve fits."""


def _finish_experiment(payload: dict, noise_sigma, seed, no_fit, output):
    payload = _maybe_noise(payload, noise_sigma, seed)
    _emit(_xy_csv(payload), output)
    if not no_fit and payload.get("fit") is not None:
        click.echo(json.dumps(payload["fit"]), err=True)


@qubit_group.command("rabi")
@click.option("--duration-ns", type=float, default=50.0, show_default=True)
@click.option("--amp-start", type=float, default=0.0, show_default=True)
@click.option("--amp-stop", type=float, default=1.0, show_default=True)
@click.option("--points", type=int, default=101, show_default=True)
@qubit_options
@server_option
@output_option
def cmd_qubit_rabi(duration_ns, amp_start, amp_stop, points, f_qubit, t1_ns, t2_star_ns,
                   coupling, noise_sigma, seed, no_fit, server, output):
    """Population vs drive amplitude at fixed pulse length (CSV x,population)."""
    request = RabiRequest(
        qubit=_qubit_model(f_qubit, t1_ns, t2_star_ns, coupling),
        duration_s=duration_ns * 1e-9,
        amplitude_start=amp_start,
        amplitude_stop=amp_stop,
        points=points,
        fit=not no_fit,
    )
    _finish_experiment(_as_dict(_dispatch("qubit-rabi", request, server)),
                       noise_sigma, seed, no_fit, output)


@qubit_group.command("ramsey")
@click.option("--detuning-hz", type=float, required=True)
@click.option("--wait-start-ns", type=float, default=0.0, show_default=True)
@click.option("--wait-stop-ns", type=float, default=5000.0, show_default=True)
@click.option("--points", type=int, default=101, show_default=True)
@qubit_options
@server_option
@output_option
def cmd_qubit_ramsey(detuning_hz, wait_start_ns, wait_stop_ns, points, f_qubit, t1_ns,
                     t2_star_ns, coupling, noise_sigma, seed, no_fit, server, output):
    """Fringes vs free-evolution wait (CSV x,population)."""
    request = RamseyRequest(
        qubit=_qubit_model(f_qubit, t1_ns, t2_star_ns, coupling),
        detuning_hz=detuning_hz,
        wait_start_s=wait_start_ns * 1e-9,
        wait_stop_s=wait_stop_ns * 1e-9,
        points=points,
        fit=not no_fit,
    )
    _finish_experiment(_as_dict(_dispatch("qubit-ramsey", request, server)),
                       noise_sigma, seed, no_fit, output)


@qubit_group.command("spectroscopy")
@click.option("--f-start", type=FREQ, required=True)
@click.option("--f-stop", type=FREQ, required=True)
@click.option("--points", type=int, default=161, show_default=True)
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--preset", type=click.Choice(["default", "shielded"]), default="default")
@click.option("--if-hz", type=FREQ, default="450MHz", show_default=True)
@click.option("--if-power-dbm", type=float, default=10.0, show_default=True)
@click.option("--amplitude-scale", type=float, default=1.0, show_default=True)
@qubit_options
@server_option
@output_option
def cmd_qubit_spectroscopy(f_start, f_stop, points, config_path, preset, if_hz, if_power_dbm,
                           amplitude_scale, f_qubit, t1_ns, t2_star_ns, coupling, noise_sigma,
                           seed, no_fit, server, output):
    """Line scan: retune LO2 across candidate frequencies (CSV x,population)."""
    request = SpectroscopyRequest(
        qubit=_qubit_model(f_qubit, t1_ns, t2_star_ns, coupling),
        chain=_load_selector(config_path, preset),
        input=_input_spectrum(if_hz, if_power_dbm),
        f_start_hz=f_start,
        f_stop_hz=f_stop,
        points=points,
        amplitude_scale=amplitude_scale,
        fit=not no_fit,
    )
    _finish_experiment(_as_dict(_dispatch("qubit-spectroscopy", request, server)),
                       noise_sigma, seed, no_fit, output)


@cli.command("write-config")
@click.option("--preset", type=click.Choice(["default", "shielded"]), default="default")
@output_option
def cmd_write_config(preset, output):
    """Emit a preset chain configuration as editable JSON."""
    from .config import PRESETS

    model = PRESETS[preset]()
    _emit(json.dumps(model.model_dump(mode="json"), indent=2) + "\n", output)


@cli.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def cmd_serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except click.Abort:
        return 130
    except PlanningError as exc:
        click.echo(f"planning error: {exc}", err=True)
        return EXIT_PLANNING
    except (TouchstoneError, ConfigError, json.JSONDecodeError) as exc:
        click.echo(f"data error: {exc}", err=True)
        return EXIT_DATA
    except ValidationError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_USAGE
    except SynthesisError as exc:
        click.echo(f"synthesis error: {exc}", err=True)
        return EXIT_SYNTHESIS
    except RemoteError as exc:
        click.echo(f"{exc.kind} error: {exc}", err=True)
        return exc.exit_code
    except (LookupError, ValueError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_LOOKUP
    return 0


if __name__ == "__main__":
    sys.exit(main())
