"""Tone and spectrum algebra: mixing products, filter application, spur metrics.

Powers are scalar dBm magnitudes; coincident tones combine by linear power
summation (no phase tracking). Frequencies are positive hertz, negative
mixing products are folded onto the positive axis the way a spectrum
analyser would display them.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable

if TYPE_CHECKING:
    from .chain import MixerSpec

DEFAULT_MERGE_TOLERANCE_HZ = 1e3  # 1 kHz analyser resolution bandwidth
DEFAULT_POWER_FLOOR_DBM = -120.0


class ToneLookupError(LookupError):
    """No tone present within tolerance of a requested frequency."""


class LoRangeError(ValueError):
    """LO frequency outside the mixer's specified operating range."""


@dataclass(frozen=True)
class Tone:
    """A single spectral line: frequency in Hz, power in dBm, provenance label."""

    frequency_hz: float
    power_dbm: float
    label: str = ""

    def __post_init__(self) -> None:
        if not math.isfinite(self.frequency_hz) or self.frequency_hz <= 0.0:
            raise ValueError(
                f"tone frequency must be finite and positive, got {self.frequency_hz!r}"
            )
        if not math.isfinite(self.power_dbm):
            raise ValueError(f"tone power must be finite, got {self.power_dbm!r}")


def _combine_cluster(cluster: list[Tone]) -> Tone:
    if len(cluster) == 1:
        return cluster[0]
    total_mw = sum(10.0 ** (t.power_dbm / 10.0) for t in cluster)
    power = 10.0 * math.log10(total_mw)
    # representative frequency: strongest member, ties resolved to the lowest
    anchor = max(cluster, key=lambda t: t.power_dbm)
    labels: list[str] = []
    for t in cluster:
        if t.label and t.label not in labels:
            labels.append(t.label)
    return Tone(anchor.frequency_hz, power, "+".join(labels))


def _merge_tones(tones: Iterable[Tone], tolerance_hz: float) -> tuple[Tone, ...]:
    pool = sorted(tones, key=lambda t: (t.frequency_hz, t.power_dbm, t.label))
    if not pool:
        return ()
    merged: list[Tone] = []
    cluster = [pool[0]]
    for tone in pool[1:]:
        if tone.frequency_hz - cluster[-1].frequency_hz <= tolerance_hz:
            cluster.append(tone)
        else:
            merged.append(_combine_cluster(cluster))
            cluster = [tone]
    merged.append(_combine_cluster(cluster))
    return tuple(merged)


@dataclass(frozen=True)
class Spectrum:
    """Tones sorted by ascending frequency, coincidences pre-merged.

    Construction merges any tones within ``merge_tolerance_hz`` of each other
    (chained), so no two stored tones are closer than the tolerance.
    """

    tones: tuple[Tone, ...] = ()
    merge_tolerance_hz: float = DEFAULT_MERGE_TOLERANCE_HZ

    def __post_init__(self) -> None:
        if not (math.isfinite(self.merge_tolerance_hz) and self.merge_tolerance_hz >= 0.0):
            raise ValueError(f"merge tolerance must be >= 0, got {self.merge_tolerance_hz!r}")
        object.__setattr__(self, "tones", _merge_tones(self.tones, self.merge_tolerance_hz))

    def __len__(self) -> int:
        return len(self.tones)

    def __iter__(self):
        return iter(self.tones)

    def find(self, frequency_hz: float, tolerance_hz: float | None = None) -> Tone | None:
        """Nearest tone within tolerance of the frequency, or None."""
        tol = self.merge_tolerance_hz if tolerance_hz is None else tolerance_hz
        best: Tone | None = None
        best_dist = math.inf
        for tone in self.tones:
            dist = abs(tone.frequency_hz - frequency_hz)
            if dist <= tol and dist < best_dist:
                best = tone
                best_dist = dist
        return best

    def require(self, frequency_hz: float) -> Tone:
        tone = self.find(frequency_hz)
        if tone is None:
            raise ToneLookupError(
                f"no tone within {self.merge_tolerance_hz:g} Hz of {frequency_hz:g} Hz"
            )
        return tone


def merge(spectrum: Spectrum, tolerance_hz: float) -> Spectrum:
    """Re-merge a spectrum under a new tolerance."""
    return Spectrum(spectrum.tones, tolerance_hz)


def shift_power(spectrum: Spectrum, delta_db: float) -> Spectrum:
    """Uniformly offset every tone's power by delta_db (attenuator semantics)."""
    return Spectrum(
        tuple(Tone(t.frequency_hz, t.power_dbm + delta_db, t.label) for t in spectrum.tones),
        spectrum.merge_tolerance_hz,
    )


def prune(spectrum: Spectrum, floor_dbm: float = DEFAULT_POWER_FLOOR_DBM) -> Spectrum:
    """Drop tones below the power floor to bound spectrum growth."""
    return Spectrum(
        tuple(t for t in spectrum.tones if t.power_dbm >= floor_dbm),
        spectrum.merge_tolerance_hz,
    )


def mix(
    input_spectrum: Spectrum,
    lo: Tone,
    mixer: "MixerSpec",
    max_order: int,
) -> Spectrum:
    """Generate all mixing products of the input spectrum with an LO.

    For every input tone and every (m, n) with 1 <= m <= max_order and
    |n| <= max_order, a product appears at |m*f_lo + n*f_in| at the input
    power minus conversion loss minus the spur table suppression for
    (m, |n|). (m, n) and (-m, -n) describe the same physical tone, so only
    m >= 1 is enumerated. LO leakage and input feedthrough are added through
    the mixer's isolation figures; infinite isolation or suppression means
    the corresponding tone is simply absent. Zero-frequency products are
    dropped, negative ones folded by absolute value.
    """
    if max_order < 1:
        raise ValueError(f"max_order must be >= 1, got {max_order}")
    lo_low, lo_high = mixer.lo_range_hz
    if not (lo_low <= lo.frequency_hz <= lo_high):
        raise LoRangeError(
            f"LO '{lo.label or 'LO'}' at {lo.frequency_hz:g} Hz outside mixer LO range "
            f"[{lo_low:g}, {lo_high:g}] Hz"
        )

    out: list[Tone] = []
    for tone in input_spectrum.tones:
        for m in range(1, max_order + 1):
            for n in range(-max_order, max_order + 1):
                freq = abs(m * lo.frequency_hz + n * tone.frequency_hz)
                if freq == 0.0:
                    continue
                suppression = mixer.spur_suppression_db(m, abs(n))
                if not math.isfinite(suppression):
                    continue
                power = tone.power_dbm - mixer.conversion_loss_db - suppression
                out.append(Tone(freq, power, f"m={m:+d},n={n:+d}"))
        if math.isfinite(mixer.if_to_rf_isolation_db):
            out.append(
                Tone(
                    tone.frequency_hz,
                    tone.power_dbm - mixer.if_to_rf_isolation_db,
                    f"{tone.label} feedthrough".strip(),
                )
            )
    if math.isfinite(mixer.lo_to_rf_isolation_db):
        out.append(
            Tone(
                lo.frequency_hz,
                lo.power_dbm - mixer.lo_to_rf_isolation_db,
                f"{lo.label or 'LO'} leakage".strip(),
            )
        )
    return Spectrum(tuple(out), input_spectrum.merge_tolerance_hz)


def apply_response(spectrum: Spectrum, response) -> Spectrum:
    """Scale each tone by the filter's S21 (in dB) at the tone frequency.

    ``response`` is any object with an ``s21_db(frequency_hz)`` method.
    Tones driven to -inf dBm (hard floor extrapolation) are removed.
    """
    out: list[Tone] = []
    for tone in spectrum.tones:
        s21 = float(response.s21_db(tone.frequency_hz))
        power = tone.power_dbm + s21
        if math.isfinite(power):
            out.append(Tone(tone.frequency_hz, power, tone.label))
    return Spectrum(tuple(out), spectrum.merge_tolerance_hz)


def dbc_vs(spectrum: Spectrum, desired_hz: float, reference_hz: float) -> float:
    """Signed reference-minus-desired power difference in dB.

    Negative when the reference tone is weaker than the desired tone;
    callers wanting a positive suppression magnitude negate the result.
    """
    desired = spectrum.require(desired_hz)
    reference = spectrum.require(reference_hz)
    return reference.power_dbm - desired.power_dbm


def sfdr(spectrum: Spectrum, desired_hz: float, band_hz: tuple[float, float]) -> float:
    """Desired-tone power minus the strongest other tone inside the band.

    Returns math.inf when no other tone lies in the band (unbounded).
    """
    low, high = band_hz
    if not (low < high):
        raise ValueError(f"band must be non-empty, got ({low!r}, {high!r})")
    desired = spectrum.require(desired_hz)
    worst = -math.inf
    for tone in spectrum.tones:
        if tone is desired:
            continue
        if low <= tone.frequency_hz <= high:
            worst = max(worst, tone.power_dbm)
    if worst == -math.inf:
        return math.inf
    return desired.power_dbm - worst


def spectrum_to_csv(spectrum: Spectrum) -> str:
    """CSV export: header ``frequency_hz,power_dbm,label``, ascending, 9 sig digits."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["frequency_hz", "power_dbm", "label"])
    for tone in spectrum.tones:
        writer.writerow([f"{tone.frequency_hz:.9g}", f"{tone.power_dbm:.9g}", tone.label])
    return buf.getvalue()


def spectrum_from_csv(text: str) -> Spectrum:
    """Inverse of :func:`spectrum_to_csv` (tolerance defaults apply)."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header != ["frequency_hz", "power_dbm", "label"]:
        raise ValueError(f"unexpected spectrum CSV header: {header!r}")
    tones = tuple(Tone(float(f), float(p), label) for f, p, label in reader)
    return Spectrum(tones)
