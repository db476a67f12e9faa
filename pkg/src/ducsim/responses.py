"""Filter responses: analytic lowpass/bandpass prototypes and tabulated S21 data.

Analytic prototypes follow the classical insertion-loss method: Butterworth
and Chebyshev lowpass polynomials mapped to a bandpass through the standard
frequency transformation w = (f/f0 - f0/f)/delta with f0 the geometric band
centre. Tabulated responses interpolate linearly in dB over linear frequency.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

Family = Literal["butterworth", "chebyshev"]
FilterKind = Literal["bandpass", "lowpass"]
Extrapolation = Literal["hold-last", "floor"]


class NoPassbandError(ValueError):
    """Tabulated data has no resolvable passband for the requested edge drop."""


class TouchstoneError(ValueError):
    """Malformed Touchstone content."""

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


def prototype_g_values(
    family: Family, order: int, ripple_db: float | None = None
) -> tuple[float, ...]:
    """Lowpass prototype element values ``(g1, ..., gn, g_load)``.

    Butterworth: g_k = 2 sin((2k-1) pi / 2n), unity load. Chebyshev uses the
    standard recurrence; ``ripple_db`` is required (> 0) and must be omitted
    for Butterworth.
    """
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    if family == "butterworth":
        if ripple_db is not None:
            raise ValueError("ripple_db applies to Chebyshev prototypes only")
        g = [2.0 * math.sin((2 * k - 1) * math.pi / (2 * order)) for k in range(1, order + 1)]
        return tuple(g + [1.0])
    if family == "chebyshev":
        if ripple_db is None or ripple_db <= 0:
            raise ValueError("Chebyshev prototypes require ripple_db > 0")
        beta = math.log(1.0 / math.tanh(ripple_db / 17.37))
        gamma = math.sinh(beta / (2.0 * order))
        a = [math.sin((2 * k - 1) * math.pi / (2 * order)) for k in range(1, order + 1)]
        b = [gamma**2 + math.sin(k * math.pi / order) ** 2 for k in range(1, order + 1)]
        g = [2.0 * a[0] / gamma]
        for k in range(2, order + 1):
            g.append(4.0 * a[k - 2] * a[k - 1] / (b[k - 2] * g[-1]))
        load = 1.0 if order % 2 == 1 else 1.0 / math.tanh(beta / 4.0) ** 2
        return tuple(g + [load])
    raise ValueError(f"unknown prototype family {family!r}")


@dataclass(frozen=True)
class PrototypeResponse:
    """Analytic filter surrogate.

    ``stopband_floor_db`` caps the total attenuation, modelling the finite
    stopband rejection of a measured device (board leakage, radiative
    bypass); None leaves the polynomial roll-off unbounded. For lowpass
    kind ``f_high`` holds the cutoff and ``f_low`` must be None.
    """

    family: Family
    order: int
    kind: FilterKind = "bandpass"
    f_low_hz: float | None = None
    f_high_hz: float = 0.0
    ripple_db: float | None = None
    insertion_loss_db: float = 0.0
    stopband_floor_db: float | None = None

    def __post_init__(self) -> None:
        if self.order < 1:
            raise ValueError(f"order must be >= 1, got {self.order}")
        if self.family == "butterworth" and self.ripple_db is not None:
            raise ValueError("ripple_db applies to Chebyshev prototypes only")
        if self.family == "chebyshev" and (self.ripple_db is None or self.ripple_db <= 0):
            raise ValueError("Chebyshev prototypes require ripple_db > 0")
        if self.kind == "bandpass":
            if self.f_low_hz is None or not (0 < self.f_low_hz < self.f_high_hz):
                raise ValueError("bandpass prototype requires 0 < f_low < f_high")
        elif self.kind == "lowpass":
            if self.f_low_hz is not None:
                raise ValueError("lowpass prototype takes cutoff in f_high_hz only")
            if self.f_high_hz <= 0:
                raise ValueError("lowpass cutoff must be positive")
        else:
            raise ValueError(f"unknown filter kind {self.kind!r}")
        if self.insertion_loss_db < 0:
            raise ValueError("insertion loss must be >= 0 dB")
        if self.stopband_floor_db is not None and self.stopband_floor_db < self.insertion_loss_db:
            raise ValueError("stopband floor cannot be above the insertion loss")

    @property
    def f_center_hz(self) -> float:
        if self.kind != "bandpass":
            raise ValueError("centre frequency defined for bandpass prototypes only")
        return math.sqrt(self.f_low_hz * self.f_high_hz)

    def normalized_offset(self, frequency_hz):
        """Map physical frequency to the lowpass prototype variable w."""
        f = np.asarray(frequency_hz, dtype=float)
        if self.kind == "lowpass":
            return f / self.f_high_hz
        f0 = self.f_center_hz
        delta = (self.f_high_hz - self.f_low_hz) / f0
        return (f / f0 - f0 / f) / delta

    def s21_db(self, frequency_hz):
        w = self.normalized_offset(frequency_hz)
        n = self.order
        if self.family == "butterworth":
            attRatio = 1.0 + np.abs(w) ** (2 * n)
            rolloff = 10.0 * np.log10(attRatio)
        else:
            eps2 = 10.0 ** (self.ripple_db / 10.0) - 1.0
            aw = np.abs(w)
            # T_n(w): trigonometric inside the band, hyperbolic outside
            tn = np.where(
                aw <= 1.0,
                np.cos(n * np.arccos(np.clip(aw, 0.0, 1.0))),
                np.cosh(n * np.arccosh(np.maximum(aw, 1.0))),
            )
            rolloff = 10.0 * np.log10(1.0 + eps2 * tn**2)
        s21 = -self.insertion_loss_db - rolloff
        if self.stopband_floor_db is not None:
            s21 = np.maximum(s21, -self.stopband_floor_db)
        if np.ndim(frequency_hz) == 0:
            return float(s21)
        return s21


@dataclass(frozen=True)
class TabulatedResponse:
    """Measured S21 samples with a declared out-of-range rule.

    ``hold-last`` clamps to the endpoint values; ``floor`` treats anything
    outside the tabulated range as fully suppressed (-inf dB).
    """

    points: tuple[tuple[float, float], ...]
    extrapolation: Extrapolation = "hold-last"

    def __post_init__(self) -> None:
        if len(self.points) < 2:
            raise ValueError("tabulated response requires at least 2 points")
        freqs = [p[0] for p in self.points]
        if any(f2 <= f1 for f1, f2 in zip(freqs, freqs[1:])):
            raise ValueError("tabulated frequencies must be strictly increasing")
        if self.extrapolation not in ("hold-last", "floor"):
            raise ValueError(f"unknown extrapolation rule {self.extrapolation!r}")

    @property
    def frequencies_hz(self) -> np.ndarray:
        return np.array([p[0] for p in self.points])

    @property
    def s21_values_db(self) -> np.ndarray:
        return np.array([p[1] for p in self.points])

    def s21_db(self, frequency_hz):
        f = np.asarray(frequency_hz, dtype=float)
        xs = self.frequencies_hz
        ys = self.s21_values_db
        out = np.interp(f, xs, ys)
        if self.extrapolation == "floor":
            out = np.where((f < xs[0]) | (f > xs[-1]), -np.inf, out)
        if np.ndim(frequency_hz) == 0:
            return float(out)
        return out


@dataclass(frozen=True)
class CascadeResponse:
    """Series connection of responses; attenuations add in dB."""

    elements: tuple

    def __post_init__(self) -> None:
        if not self.elements:
            raise ValueError("cascade requires at least one element")

    def s21_db(self, frequency_hz):
        total = self.elements[0].s21_db(frequency_hz)
        for element in self.elements[1:]:
            total = total + element.s21_db(frequency_hz)
        return total


FilterResponse = PrototypeResponse | TabulatedResponse | CascadeResponse


def evaluate_s21(response, frequency_hz):
    """S21 in dB of any response object at the given frequency (scalar or array)."""
    if np.ndim(frequency_hz) == 0 and frequency_hz <= 0:
        raise ValueError(f"frequency must be positive, got {frequency_hz!r}")
    return response.s21_db(frequency_hz)


@dataclass(frozen=True)
class PassbandMetrics:
    f_low_edge_hz: float
    f_high_edge_hz: float
    mean_insertion_loss_db: float
    min_insertion_loss_db: float

    def __post_init__(self) -> None:
        if not self.f_low_edge_hz < self.f_high_edge_hz:
            raise ValueError("passband edges must satisfy low < high")

    def to_json_dict(self) -> dict:
        return {
            "f_low_hz": self.f_low_edge_hz,
            "f_high_hz": self.f_high_edge_hz,
            "mean_il_db": self.mean_insertion_loss_db,
            "min_il_db": self.min_insertion_loss_db,
        }


def _crossing(f1: float, y1: float, f2: float, y2: float, level: float) -> float:
    if y2 == y1:
        return f1
    return f1 + (level - y1) * (f2 - f1) / (y2 - y1)


def passband_metrics(response: TabulatedResponse, edge_drop_db: float = 3.0) -> PassbandMetrics:
    """Passband edges and loss figures around the global transmission peak.

    Edges are the outermost crossings of (peak - edge_drop_db) on either side
    of the peak, linearly interpolated between samples. Insertion losses are
    referenced to 0 dB.
    """
    if edge_drop_db <= 0:
        raise ValueError("edge_drop_db must be positive")
    freqs = response.frequencies_hz
    s21 = response.s21_values_db
    peak_idx = int(np.argmax(s21))
    threshold = s21[peak_idx] - edge_drop_db

    low_edge = None
    for i in range(peak_idx):
        if s21[i] < threshold <= s21[i + 1]:
            low_edge = _crossing(freqs[i], s21[i], freqs[i + 1], s21[i + 1], threshold)
            break
    high_edge = None
    for i in range(len(freqs) - 1, peak_idx, -1):
        if s21[i] < threshold <= s21[i - 1]:
            high_edge = _crossing(freqs[i - 1], s21[i - 1], freqs[i], s21[i], threshold)
            break
    if low_edge is None or high_edge is None:
        raise NoPassbandError(
            f"no {edge_drop_db:g} dB crossings on both sides of the peak at "
            f"{freqs[peak_idx]:g} Hz"
        )

    in_band = (freqs >= low_edge) & (freqs <= high_edge)
    mean_il = float(-np.mean(s21[in_band]))
    min_il = float(-s21[peak_idx])
    return PassbandMetrics(float(low_edge), float(high_edge), mean_il, min_il)


_FREQ_UNITS = {"HZ": 1.0, "KHZ": 1e3, "MHZ": 1e6, "GHZ": 1e9}


def parse_touchstone(text: str) -> TabulatedResponse:
    """Parse a Touchstone v1 two-port file; retains frequency and S21 in dB.

    The option line must read ``# <HZ|KHZ|MHZ|GHZ> S <DB|MA|RI> R <ohms>``.
    Data records carry 9 columns, frequency then S11 S21 S12 S22 pairs; the
    S21 pair occupies columns 4 and 5.
    """
    unit_scale: float | None = None
    fmt: str | None = None
    points: list[tuple[float, float]] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("!", 1)[0].strip()
        if not line:
            continue
        if line.startswith("#"):
            if unit_scale is not None:
                raise TouchstoneError("duplicate option line", line_no)
            parts = line[1:].upper().split()
            if (
                len(parts) != 5
                or parts[0] not in _FREQ_UNITS
                or parts[1] != "S"
                or parts[2] not in ("DB", "MA", "RI")
                or parts[3] != "R"
            ):
                raise TouchstoneError(f"malformed option line {line!r}", line_no)
            try:
                float(parts[4])
            except ValueError:
                raise TouchstoneError(f"bad reference impedance {parts[4]!r}", line_no) from None
            unit_scale = _FREQ_UNITS[parts[0]]
            fmt = parts[2]
            continue
        if unit_scale is None:
            raise TouchstoneError("data before option line", line_no)
        fields = line.split()
        if len(fields) != 9:
            raise TouchstoneError(
                f"expected 9 columns for a 2-port record, got {len(fields)}", line_no
            )
        try:
            values = [float(v) for v in fields]
        except ValueError:
            raise TouchstoneError(f"non-numeric field in {line!r}", line_no) from None
        freq = values[0] * unit_scale
        a, b = values[3], values[4]
        if fmt == "DB":
            s21 = a
        elif fmt == "MA":
            if a <= 0:
                raise TouchstoneError(f"non-positive magnitude {a!r}", line_no)
            s21 = 20.0 * math.log10(a)
        else:  # RI
            mag = math.hypot(a, b)
            if mag <= 0:
                raise TouchstoneError("zero-magnitude RI sample", line_no)
            s21 = 20.0 * math.log10(mag)
        if points and freq <= points[-1][0]:
            raise TouchstoneError(
                f"non-monotone frequency {freq:g} Hz after {points[-1][0]:g} Hz", line_no
            )
        points.append((freq, s21))
    if unit_scale is None:
        raise TouchstoneError("missing option line")
    if len(points) < 2:
        raise TouchstoneError("fewer than 2 data records")
    return TabulatedResponse(tuple(points))


def write_touchstone(response: TabulatedResponse) -> str:
    """Serialize as Touchstone v1 dB format; only S21 carries information."""
    buf = io.StringIO()
    buf.write("! 2-port transmission data, S21 in dB, other parameters zeroed\n")
    buf.write("# HZ S DB R 50\n")
    for freq, s21 in response.points:
        buf.write(f"{freq:.12g} 0 0 {s21:.12g} 0 0 0 0 0\n")
    return buf.getvalue()


def response_to_csv(response: TabulatedResponse) -> str:
    """CSV of a tabulated response, same conventions as the spectrum export:
    header row, ascending frequency, 9 significant digits."""
    lines = ["frequency_hz,s21_db"]
    for freq, s21 in response.points:
        lines.append(f"{freq:.9g},{s21:.9g}")
    return "\n".join(lines) + "\n"
