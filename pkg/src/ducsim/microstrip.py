"""Microstrip physical layer: line parameters, parallel-coupled filter
synthesis and analysis, manufacturability checks.

Single lines use the Hammerstad-Jensen closed forms; coupled pairs use the
static even/odd capacitance method (Garg-Bahl class), no dispersion
correction. Accuracy is desk-scale: FR4 permittivity tolerance dominates.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import ellipk

from .responses import Family, TabulatedResponse, prototype_g_values

C0 = 299792458.0  # m/s
ETA0 = 376.73031346177066  # ohm, free-space impedance
EPS0 = 8.8541878128e-12  # F/m

MIN_FEATURE_M = 0.2e-3  # smallest etchable width/gap of the board house

# root-finder search window in normalized coordinates u = w/h, g = s/h
_U_RANGE = (0.02, 25.0)
_G_RANGE = (0.005, 30.0)


class SynthesisError(ValueError):
    """Requested coupled-section impedances are not realizable on the substrate."""


@dataclass(frozen=True)
class Substrate:
    eps_r: float
    height_m: float
    loss_tangent: float = 0.0
    conductor_thickness_m: float = 0.0

    def __post_init__(self) -> None:
        if self.eps_r < 1.0:
            raise ValueError("relative permittivity must be >= 1")
        if self.height_m <= 0.0:
            raise ValueError("substrate height must be positive")


def fr4_substrate(height_m: float = 1.6e-3, eps_r: float = 4.35) -> Substrate:
    """Stock FR4 board: permittivity mid-way through the 4.2-4.5 batch range."""
    return Substrate(eps_r=eps_r, height_m=height_m)


def _hj_eps_eff(u: float, eps_r: float) -> float:
    # Hammerstad-Jensen accurate quasi-static fit
    a = (
        1.0
        + math.log((u**4 + (u / 52.0) ** 2) / (u**4 + 0.432)) / 49.0
        + math.log(1.0 + (u / 18.1) ** 3) / 18.7
    )
    b = 0.564 * ((eps_r - 0.9) / (eps_r + 3.0)) ** 0.053
    return (eps_r + 1.0) / 2.0 + (eps_r - 1.0) / 2.0 * (1.0 + 10.0 / u) ** (-a * b)


def _hj_z0_air(u: float) -> float:
    f = 6.0 + (2.0 * math.pi - 6.0) * math.exp(-((30.666 / u) ** 0.7528))
    return ETA0 / (2.0 * math.pi) * math.log(f / u + math.sqrt(1.0 + (2.0 / u) ** 2))


def line_parameters(width_m: float, substrate: Substrate) -> tuple[float, float]:
    """Quasi-static (Z0, eps_eff) of a single microstrip line."""
    if width_m <= 0.0:
        raise ValueError("width must be positive")
    u = width_m / substrate.height_m
    eps_eff = _hj_eps_eff(u, substrate.eps_r)
    z0 = _hj_z0_air(u) / math.sqrt(eps_eff)
    return z0, eps_eff


def _single_line_capacitances(u: float, eps_r: float) -> tuple[float, float]:
    """(parallel-plate, fringing) capacitance per unit length, F/m."""
    eps_eff = _hj_eps_eff(u, eps_r)
    z0 = _hj_z0_air(u) / math.sqrt(eps_eff)
    c_total = math.sqrt(eps_eff) / (C0 * z0)
    c_plate = EPS0 * eps_r * u
    c_fringe = 0.5 * (c_total - c_plate)
    return c_plate, c_fringe


def _even_odd_capacitances(u: float, g: float, eps_r: float) -> tuple[float, float]:
    """Even/odd per-unit-length capacitances of a coupled pair (Garg-Bahl)."""
    c_plate, c_fringe = _single_line_capacitances(u, eps_r)

    # even mode: the gap-side fringing is suppressed by the neighbour
    a_coef = math.exp(-0.1 * math.exp(2.33 - 2.53 * u))
    c_fringe_mod = c_fringe / (1.0 + a_coef * math.tanh(8.0 * g) / g)
    c_even = c_plate + c_fringe + c_fringe_mod

    # odd mode: gap capacitance through air (elliptic-integral map) plus dielectric
    k = g / (g + 2.0 * u)
    k2 = min(max(k * k, 1e-300), 1.0 - 1e-15)
    c_gap_air = EPS0 * ellipk(1.0 - k2) / ellipk(k2)
    c_gap_diel = (EPS0 * eps_r / math.pi) * math.log(
        1.0 / math.tanh(math.pi * g / 4.0)
    ) + 0.65 * c_fringe * (0.02 / g * math.sqrt(eps_r) + 1.0 - eps_r**-2)
    c_odd = c_plate + c_fringe + c_gap_air + c_gap_diel
    return c_even, c_odd


def coupled_line_parameters(
    width_m: float, gap_m: float, substrate: Substrate
) -> tuple[float, float, float, float]:
    """(Z0e, Z0o, eps_eff_even, eps_eff_odd) of a coupled microstrip pair."""
    if width_m <= 0.0 or gap_m <= 0.0:
        raise ValueError("width and gap must be positive")
    u = width_m / substrate.height_m
    g = gap_m / substrate.height_m
    ce, co = _even_odd_capacitances(u, g, substrate.eps_r)
    ce_air, co_air = _even_odd_capacitances(u, g, 1.0)
    eps_even = ce / ce_air
    eps_odd = co / co_air
    z0e = 1.0 / (C0 * math.sqrt(ce * ce_air))
    z0o = 1.0 / (C0 * math.sqrt(co * co_air))
    return z0e, z0o, eps_even, eps_odd


@dataclass(frozen=True)
class CoupledSection:
    width_m: float
    length_m: float
    gap_m: float

    def __post_init__(self) -> None:
        if min(self.width_m, self.length_m, self.gap_m) <= 0.0:
            raise ValueError("section dimensions must be positive")


def _mirrored(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=1e-9, abs_tol=0.0)


@dataclass(frozen=True)
class ParallelCoupledGeometry:
    """Edge-coupled half-wave resonator cascade; symmetric end to end."""

    sections: tuple[CoupledSection, ...]
    substrate: Substrate

    def __post_init__(self) -> None:
        if not self.sections:
            raise ValueError("geometry requires at least one coupled section")
        n = len(self.sections)
        for k in range(n // 2):
            a, b = self.sections[k], self.sections[n - 1 - k]
            if not (
                _mirrored(a.width_m, b.width_m)
                and _mirrored(a.length_m, b.length_m)
                and _mirrored(a.gap_m, b.gap_m)
            ):
                raise ValueError(f"sections {k + 1} and {n - k} break end-to-end symmetry")


@dataclass(frozen=True)
class InterdigitalGeometry:
    """Grounded quarter-wave resonator comb (dimensions of the fabricated board).

    ``gaps_m`` lists the first three resonator gaps from the feed side; the
    remaining gaps mirror them about the middle resonator, which forces the
    second and third entries equal for a five-resonator board.
    """

    feed_width_m: float
    resonator_width_m: float
    resonator_length_m: float
    tap_offset_m: float
    end_gap_m: float
    gaps_m: tuple[float, float, float]
    board_thickness_m: float

    def __post_init__(self) -> None:
        values = (
            self.feed_width_m,
            self.resonator_width_m,
            self.resonator_length_m,
            self.tap_offset_m,
            self.end_gap_m,
            *self.gaps_m,
            self.board_thickness_m,
        )
        if min(values) <= 0.0:
            raise ValueError("all interdigital dimensions must be positive")
        if not _mirrored(self.gaps_m[1], self.gaps_m[2]):
            raise ValueError("inner gaps must match: the comb is symmetric about its centre")


def reference_interdigital_geometry() -> InterdigitalGeometry:
    """Fabricated first-stage board (fifth order, 3-3.5 GHz design target)."""
    return InterdigitalGeometry(
        feed_width_m=1.9e-3,
        resonator_width_m=2.995e-3,
        resonator_length_m=11.07e-3,
        tap_offset_m=3.516e-3,
        end_gap_m=0.7986e-3,
        gaps_m=(1.752e-3, 3.019e-3, 3.019e-3),
        board_thickness_m=1.6e-3,
    )


def reference_parallel_coupled_geometry() -> ParallelCoupledGeometry:
    """Fabricated second-stage board (fifth order, 4.5-8 GHz design target)."""
    unique = [
        CoupledSection(1.321e-3, 6.702e-3, 0.2e-3),
        CoupledSection(1.359e-3, 6.691e-3, 0.2e-3),
        CoupledSection(1.667e-3, 6.611e-3, 0.2e-3),
    ]
    return ParallelCoupledGeometry(
        sections=tuple(unique + unique[::-1]),
        substrate=fr4_substrate(),
    )


def _solve_single_width(z0_target: float, substrate: Substrate) -> float:
    """Invert Z0(width) by bisection; Z0 is strictly decreasing in width."""
    lo_u, hi_u = _U_RANGE
    z_lo = line_parameters(lo_u * substrate.height_m, substrate)[0]
    z_hi = line_parameters(hi_u * substrate.height_m, substrate)[0]
    if not (z_hi <= z0_target <= z_lo):
        raise SynthesisError(
            f"single-line impedance {z0_target:.2f} ohm outside realizable "
            f"range [{z_hi:.2f}, {z_lo:.2f}] ohm"
        )
    for _ in range(200):
        mid = math.sqrt(lo_u * hi_u)
        if line_parameters(mid * substrate.height_m, substrate)[0] > z0_target:
            lo_u = mid
        else:
            hi_u = mid
    return math.sqrt(lo_u * hi_u) * substrate.height_m


def _invert_even_odd(
    z0e_target: float,
    z0o_target: float,
    substrate: Substrate,
    section_no: int,
    rel_tol: float = 1e-4,
) -> tuple[float, float]:
    """Find (width, gap) whose even/odd impedances match the targets.

    Damped 2-D Newton in log coordinates with a nested-bisection fallback;
    convergence requires both impedances within ``rel_tol`` relative.
    """
    h = substrate.height_m

    def residual(log_u: float, log_g: float) -> tuple[float, float]:
        z0e, z0o, _, _ = coupled_line_parameters(
            math.exp(log_u) * h, math.exp(log_g) * h, substrate
        )
        return math.log(z0e / z0e_target), math.log(z0o / z0o_target)

    lo_u, hi_u = (math.log(v) for v in _U_RANGE)
    lo_g, hi_g = (math.log(v) for v in _G_RANGE)

    def clamp(x, lo, hi):
        return min(max(x, lo), hi)

    try:
        w0 = _solve_single_width(math.sqrt(z0e_target * z0o_target), substrate)
        x = math.log(w0 / h)
    except SynthesisError:
        x = 0.0
    y = 0.0  # s = h starting gap

    def norm2(r):
        return r[0] ** 2 + r[1] ** 2

    r = residual(x, y)
    for _ in range(120):
        if norm2(r) < (rel_tol * 0.3) ** 2:
            break
        eps = 1e-6
        rux, ruy = residual(x + eps, y)
        rgx, rgy = residual(x, y + eps)
        j11 = (rux - r[0]) / eps
        j21 = (ruy - r[1]) / eps
        j12 = (rgx - r[0]) / eps
        j22 = (rgy - r[1]) / eps
        det = j11 * j22 - j12 * j21
        if abs(det) < 1e-14:
            break
        dx = -(j22 * r[0] - j12 * r[1]) / det
        dy = -(-j21 * r[0] + j11 * r[1]) / det
        step = 1.0
        improved = False
        while step > 1e-4:
            xn = clamp(x + step * dx, lo_u, hi_u)
            yn = clamp(y + step * dy, lo_g, hi_g)
            rn = residual(xn, yn)
            if norm2(rn) < norm2(r):
                x, y, r = xn, yn, rn
                improved = True
                break
            step /= 2.0
        if not improved:
            break

    if norm2(r) >= (rel_tol * 0.3) ** 2:
        solved = _bisection_fallback(z0e_target, z0o_target, substrate)
        if solved is None:
            raise SynthesisError(
                f"section {section_no}: cannot realize Z0e={z0e_target:.1f} ohm, "
                f"Z0o={z0o_target:.1f} ohm on eps_r={substrate.eps_r:g} "
                f"h={substrate.height_m * 1e3:g} mm"
            )
        x, y = solved
        r = residual(x, y)

    z0e, z0o, _, _ = coupled_line_parameters(math.exp(x) * h, math.exp(y) * h, substrate)
    if abs(z0e / z0e_target - 1.0) > rel_tol or abs(z0o / z0o_target - 1.0) > rel_tol:
        raise SynthesisError(
            f"section {section_no}: cannot realize Z0e={z0e_target:.1f} ohm, "
            f"Z0o={z0o_target:.1f} ohm on eps_r={substrate.eps_r:g} "
            f"h={substrate.height_m * 1e3:g} mm (best {z0e:.1f}/{z0o:.1f})"
        )
    return math.exp(x) * h, math.exp(y) * h


def _bisection_fallback(
    z0e_target: float, z0o_target: float, substrate: Substrate
) -> tuple[float, float] | None:
    """Nested bisection: outer loop on the gap matching the mode ratio,
    inner loop on the width matching the geometric-mean impedance."""
    h = substrate.height_m
    target_mean = math.sqrt(z0e_target * z0o_target)
    target_ratio = z0e_target / z0o_target

    def width_for_mean(g: float) -> float | None:
        lo_u, hi_u = _U_RANGE

        def mean(u: float) -> float:
            z0e, z0o, _, _ = coupled_line_parameters(u * h, g * h, substrate)
            return math.sqrt(z0e * z0o)

        if not (mean(hi_u) <= target_mean <= mean(lo_u)):
            return None
        for _ in range(120):
            mid = math.sqrt(lo_u * hi_u)
            if mean(mid) > target_mean:
                lo_u = mid
            else:
                hi_u = mid
        return math.sqrt(lo_u * hi_u)

    def ratio(g: float) -> float | None:
        u = width_for_mean(g)
        if u is None:
            return None
        z0e, z0o, _, _ = coupled_line_parameters(u * h, g * h, substrate)
        return z0e / z0o

    lo_g, hi_g = _G_RANGE
    r_lo, r_hi = ratio(lo_g), ratio(hi_g)
    if r_lo is None or r_hi is None or not (r_hi <= target_ratio <= r_lo):
        return None
    for _ in range(120):
        mid = math.sqrt(lo_g * hi_g)
        r_mid = ratio(mid)
        if r_mid is None:
            return None
        if r_mid > target_ratio:
            lo_g = mid
        else:
            hi_g = mid
    g = math.sqrt(lo_g * hi_g)
    u = width_for_mean(g)
    if u is None:
        return None
    return math.log(u), math.log(g)


def inverter_parameters(
    family: Family,
    order: int,
    f_low_hz: float,
    f_high_hz: float,
    ripple_db: float | None = None,
) -> list[float]:
    """Normalized admittance-inverter values J_k * Z0 for the order+1 sections."""
    g = (1.0,) + prototype_g_values(family, order, ripple_db)
    f0 = math.sqrt(f_low_hz * f_high_hz)
    delta = (f_high_hz - f_low_hz) / f0
    jz0 = [math.sqrt(math.pi * delta / (2.0 * g[0] * g[1]))]
    for k in range(2, order + 1):
        jz0.append(math.pi * delta / (2.0 * math.sqrt(g[k - 1] * g[k])))
    jz0.append(math.sqrt(math.pi * delta / (2.0 * g[order] * g[order + 1])))
    return jz0


def synthesize_parallel_coupled(
    family: Family,
    order: int,
    f_low_hz: float,
    f_high_hz: float,
    z0_ohm: float,
    substrate: Substrate,
    ripple_db: float | None = None,
) -> ParallelCoupledGeometry:
    """Classical J-inverter synthesis of an edge-coupled bandpass filter.

    Each inverter maps to section even/odd impedances
    Z0e = Z0 (1 + J Z0 + (J Z0)^2), Z0o = Z0 (1 - J Z0 + (J Z0)^2),
    inverted to (width, gap) on the substrate; section length is a quarter
    guided wavelength at the geometric band centre using the mean of the
    even/odd effective permittivities.
    """
    if order < 2:
        raise ValueError("parallel-coupled synthesis needs order >= 2")
    if not (0 < f_low_hz < f_high_hz):
        raise ValueError("need 0 < f_low < f_high")
    f0 = math.sqrt(f_low_hz * f_high_hz)
    jz0 = inverter_parameters(family, order, f_low_hz, f_high_hz, ripple_db)

    n_sections = order + 1
    unique_count = (n_sections + 1) // 2
    unique: list[CoupledSection] = []
    for k in range(unique_count):
        x = jz0[k]
        z0e = z0_ohm * (1.0 + x + x * x)
        z0o = z0_ohm * (1.0 - x + x * x)
        width, gap = _invert_even_odd(z0e, z0o, substrate, section_no=k + 1)
        _, _, eps_even, eps_odd = coupled_line_parameters(width, gap, substrate)
        eps_mean = 0.5 * (eps_even + eps_odd)
        length = C0 / (4.0 * f0 * math.sqrt(eps_mean))
        unique.append(CoupledSection(width, length, gap))

    sections = unique + unique[: n_sections - unique_count][::-1]
    return ParallelCoupledGeometry(tuple(sections), substrate)


def analyze_parallel_coupled(
    geometry: ParallelCoupledGeometry,
    f_grid_hz: Sequence[float],
    port_z0_ohm: float = 50.0,
) -> TabulatedResponse:
    """Cascade the coupled sections as ABCD two-ports and tabulate S21.

    Each section uses the open-circuited coupled-pair impedance matrix
    Z11 = -j (Z0e cot te + Z0o cot to)/2, Z12 = -j (Z0e csc te - Z0o csc to)/2
    with independent even/odd electrical lengths.
    """
    f = np.asarray(f_grid_hz, dtype=float)
    if f.ndim != 1 or len(f) < 2:
        raise ValueError("frequency grid must be a 1-D sequence of >= 2 points")
    if np.any(np.diff(f) <= 0):
        raise ValueError("frequency grid must be ascending")
    if np.any(f <= 0):
        raise ValueError("frequencies must be positive")

    abcd = None
    for section in geometry.sections:
        section_abcd = _section_abcd(section, geometry.substrate, f)
        abcd = section_abcd if abcd is None else _abcd_multiply(abcd, section_abcd)

    a, b, c, d = abcd
    s21 = 2.0 / (a + b / port_z0_ohm + c * port_z0_ohm + d)
    with np.errstate(divide="ignore"):
        s21_db = 20.0 * np.log10(np.abs(s21))
    s21_db = np.minimum(s21_db, 0.0)  # lossless model, passivity caps at 0 dB
    return TabulatedResponse(tuple(zip(f.tolist(), s21_db.tolist())))


def _section_abcd(section: CoupledSection, substrate: Substrate, f: np.ndarray):
    z0e, z0o, eps_even, eps_odd = coupled_line_parameters(
        section.width_m, section.gap_m, substrate
    )
    te = 2.0 * math.pi * f * math.sqrt(eps_even) * section.length_m / C0
    to = 2.0 * math.pi * f * math.sqrt(eps_odd) * section.length_m / C0
    with np.errstate(divide="ignore", invalid="ignore"):
        z11 = -0.5j * (z0e / np.tan(te) + z0o / np.tan(to))
        z12 = -0.5j * (z0e / np.sin(te) - z0o / np.sin(to))
        a = z11 / z12
        b = (z11 * z11 - z12 * z12) / z12
        c = 1.0 / z12
        d = z11 / z12
    return a, b, c, d


def _abcd_multiply(m1, m2):
    a1, b1, c1, d1 = m1
    a2, b2, c2, d2 = m2
    return (
        a1 * a2 + b1 * c2,
        a1 * b2 + b1 * d2,
        c1 * a2 + d1 * c2,
        c1 * b2 + d1 * d2,
    )


def manufacturability_check(
    geometry: ParallelCoupledGeometry | InterdigitalGeometry,
    min_feature_m: float = MIN_FEATURE_M,
) -> list[str]:
    """Widths or gaps below the etching floor, named; empty list means pass."""
    violations: list[str] = []

    def check(name: str, value: float) -> None:
        if value < min_feature_m:
            violations.append(
                f"{name} = {value * 1e3:.4g} mm below the {min_feature_m * 1e3:g} mm floor"
            )

    if isinstance(geometry, ParallelCoupledGeometry):
        for idx, section in enumerate(geometry.sections, start=1):
            check(f"section {idx} width", section.width_m)
            check(f"section {idx} gap", section.gap_m)
    elif isinstance(geometry, InterdigitalGeometry):
        check("feed width W0", geometry.feed_width_m)
        check("resonator width W", geometry.resonator_width_m)
        check("end gap e", geometry.end_gap_m)
        for idx, gap in enumerate(geometry.gaps_m, start=1):
            check(f"gap S{idx}", gap)
    else:
        raise TypeError(f"unsupported geometry type {type(geometry).__name__}")
    return violations


def geometry_to_json(geometry: ParallelCoupledGeometry) -> str:
    payload = {
        "sections": [
            {"w_m": s.width_m, "l_m": s.length_m, "s_m": s.gap_m} for s in geometry.sections
        ],
        "substrate": {"eps_r": geometry.substrate.eps_r, "h_m": geometry.substrate.height_m},
    }
    return json.dumps(payload, indent=2)


def geometry_from_json(text: str) -> ParallelCoupledGeometry:
    payload = json.loads(text)
    unknown = set(payload) - {"sections", "substrate"}
    if unknown:
        raise ValueError(f"unknown geometry keys: {sorted(unknown)}")
    substrate = Substrate(
        eps_r=payload["substrate"]["eps_r"], height_m=payload["substrate"]["h_m"]
    )
    sections = tuple(
        CoupledSection(s["w_m"], s["l_m"], s["s_m"]) for s in payload["sections"]
    )
    return ParallelCoupledGeometry(sections, substrate)
