"""Composite plano-concave resonator model.

The cavity is one flat and one concave mirror separated by
``physical_length_m`` with the crystal inside.  Mode spacing uses the
group optical length, individual mode positions the phase optical length;
the Gouy phase is omitted by default (single transverse mode) and can be
switched on per source.

Lengths in metres, frequencies in hertz, temperatures in kelvin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Literal

import numpy as np
from scipy.constants import c as C_LIGHT
from scipy.optimize import brentq

from . import dispersion
from .dispersion import CrystalSpec, EXPANSION_T_REF_K
from .errors import LosslessCavityError, UnstableCavityError


@dataclass(frozen=True)
class MirrorSpec:
    """Power reflectivity plus geometry.  Radius of curvature is twice the
    focal length for a concave mirror."""

    reflectivity: float
    geometry: Literal["flat", "concave"] = "flat"
    focal_length_m: float | None = None

    def __post_init__(self):
        if not 0 < self.reflectivity <= 1:
            raise ValueError(f"reflectivity must be in (0, 1], got {self.reflectivity}")
        if self.geometry not in ("flat", "concave"):
            raise ValueError(f"geometry must be 'flat' or 'concave', got {self.geometry!r}")
        if self.geometry == "concave":
            if self.focal_length_m is None or self.focal_length_m <= 0:
                raise ValueError("concave mirror needs focal_length_m > 0")
        elif self.focal_length_m is not None:
            raise ValueError("flat mirror must not carry a focal length")

    @property
    def radius_of_curvature_m(self) -> float:
        if self.geometry != "concave":
            raise ValueError("flat mirror has no radius of curvature")
        return 2.0 * self.focal_length_m


@dataclass(frozen=True)
class SourceSpec:
    """Full physical description of the source: crystal, mirrors, cavity
    length, pump and operating temperature."""

    crystal: CrystalSpec
    flat_mirror: MirrorSpec
    concave_mirror: MirrorSpec
    physical_length_m: float
    pump_wavelength_m: float
    pump_power_w: float
    temperature_k: float
    include_gouy_phase: bool = False
    spacer_expansion_per_k: float = 0.0

    def __post_init__(self):
        if self.flat_mirror.geometry != "flat":
            raise ValueError("flat_mirror must have flat geometry")
        if self.concave_mirror.geometry != "concave":
            raise ValueError("concave_mirror must have concave geometry")
        if self.physical_length_m <= self.crystal.length_m:
            raise ValueError(
                f"physical length {self.physical_length_m} must exceed crystal "
                f"length {self.crystal.length_m}")
        if self.pump_wavelength_m <= 0 or self.pump_power_w < 0:
            raise ValueError("pump wavelength must be positive and power nonnegative")
        if self.temperature_k <= 0:
            raise ValueError("temperature must be positive")
        # stability: 0 < 1 - L_eff/ROC < 1 at the down-converted wavelength
        g2 = 1.0 - self.reduced_length(2 * self.pump_wavelength_m) / \
            self.concave_mirror.radius_of_curvature_m
        if not 0.0 < g2 < 1.0:
            raise UnstableCavityError(
                f"stability parameter 1 - L_eff/ROC = {g2:.4f} outside (0, 1)")

    def expanded_physical_length(self) -> float:
        return self.physical_length_m * (
            1.0 + self.spacer_expansion_per_k * (self.temperature_k - EXPANSION_T_REF_K))

    def air_gap(self) -> float:
        """Free-space part of the cavity at operating temperature."""
        return self.expanded_physical_length() - self.crystal.expanded_length(self.temperature_k)

    def reduced_length(self, wavelength_m: float) -> float:
        """Gaussian-optics reduced length L_air + L_crystal/n."""
        n = dispersion.refractive_index(wavelength_m, self.temperature_k, self.crystal)
        return self.air_gap() + self.crystal.expanded_length(self.temperature_k) / n


def optical_length(src: SourceSpec, wavelength_m, kind: Literal["phase", "group"] = "phase"):
    """Optical path length L_air + n * L_crystal, with n the phase or group
    index and the crystal length thermally expanded."""
    if kind == "phase":
        n = dispersion.refractive_index(wavelength_m, src.temperature_k, src.crystal)
    elif kind == "group":
        n = dispersion.group_index(wavelength_m, src.temperature_k, src.crystal)
    else:
        raise ValueError(f"kind must be 'phase' or 'group', got {kind!r}")
    out = src.air_gap() + np.asarray(n) * src.crystal.expanded_length(src.temperature_k)
    if np.ndim(wavelength_m) == 0:
        return float(out)
    return out


def fsr(src: SourceSpec, wavelength_m):
    """Free spectral range c / (2 * group optical length) in Hz."""
    return C_LIGHT / (2.0 * optical_length(src, wavelength_m, "group"))


def finesse(src: SourceSpec) -> float:
    """Finesse from the round-trip power factor rho = R_flat * R_concave * t^2
    (the crystal is traversed twice per round trip):

        F = pi * rho^(1/4) / (1 - sqrt(rho))
    """
    rho = (src.flat_mirror.reflectivity * src.concave_mirror.reflectivity
           * src.crystal.single_pass_transmission**2)
    if rho >= 1.0:
        raise LosslessCavityError("round-trip power factor >= 1; finesse diverges")
    return math.pi * rho**0.25 / (1.0 - math.sqrt(rho))


def linewidth(src: SourceSpec, wavelength_m) -> float:
    """Cavity mode FWHM, FSR / finesse, in Hz."""
    return fsr(src, wavelength_m) / finesse(src)


def coherence_time(bandwidth_hz: float) -> float:
    """Photon coherence time 1/df for a Lorentzian mode of FWHM df."""
    if bandwidth_hz <= 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth_hz}")
    return 1.0 / bandwidth_hz


def _gouy_offset(src: SourceSpec, wavelength_m: float) -> float:
    """Round-trip Gouy phase in units of the 2*pi round-trip phase."""
    if not src.include_gouy_phase:
        return 0.0
    g2 = 1.0 - src.reduced_length(wavelength_m) / src.concave_mirror.radius_of_curvature_m
    return math.acos(math.sqrt(g2)) / math.pi


def mode_number(src: SourceSpec, frequency_hz):
    """Continuous longitudinal mode number 2 * nu * L_opt(nu) / c; resonances
    sit where this function is integer (plus the optional Gouy offset)."""
    lam = C_LIGHT / np.asarray(frequency_hz, dtype=float)
    lopt = src.air_gap() + np.asarray(
        dispersion.refractive_index(lam, src.temperature_k, src.crystal)
    ) * src.crystal.expanded_length(src.temperature_k)
    g = 2.0 * np.asarray(frequency_hz, dtype=float) * lopt / C_LIGHT
    if np.ndim(frequency_hz) == 0:
        return float(g)
    return g


@dataclass(frozen=True, eq=False)
class ModeComb:
    """Ordered cavity resonances over a band.

    mode_indices are the absolute longitudinal mode numbers m; frequencies
    and linewidths_fwhm_hz are parallel arrays.  local_fsr(nu) evaluates the
    group-index FSR at any frequency inside the band.
    """

    mode_indices: np.ndarray
    frequencies_hz: np.ndarray
    linewidths_fwhm_hz: np.ndarray
    band_hz: tuple[float, float]
    source: SourceSpec

    def __post_init__(self):
        if len(self.frequencies_hz) == 0:
            raise ValueError("empty mode comb")
        d = np.diff(self.frequencies_hz)
        if np.any(d <= 0):
            raise ValueError("comb frequencies must be strictly increasing")
        if np.any(self.linewidths_fwhm_hz <= 0):
            raise ValueError("mode linewidths must be positive")
        if len(d):
            mid = 0.5 * (self.frequencies_hz[1:] + self.frequencies_hz[:-1])
            ref = np.array([self.local_fsr(nu) for nu in mid])
            if np.any(np.abs(d - ref) > 0.2 * ref):
                raise ValueError("adjacent mode spacing deviates >20% from local FSR")

    def __len__(self) -> int:
        return len(self.frequencies_hz)

    def __iter__(self) -> Iterator[tuple[int, float, float]]:
        return iter(zip(self.mode_indices.tolist(),
                        self.frequencies_hz.tolist(),
                        self.linewidths_fwhm_hz.tolist()))

    def local_fsr(self, frequency_hz: float) -> float:
        return fsr(self.source, C_LIGHT / frequency_hz)

    @property
    def wavelengths_m(self) -> np.ndarray:
        return C_LIGHT / self.frequencies_hz

    def nearest(self, frequency_hz):
        """Positions and signed detunings (nu - nu_mode) of the comb modes
        nearest to the given frequencies."""
        nu = np.atleast_1d(np.asarray(frequency_hz, dtype=float))
        pos = np.searchsorted(self.frequencies_hz, nu)
        pos = np.clip(pos, 1, len(self.frequencies_hz) - 1) if len(self) > 1 \
            else np.zeros_like(pos)
        if len(self) > 1:
            left = self.frequencies_hz[pos - 1]
            right = self.frequencies_hz[pos]
            pos = np.where(np.abs(nu - left) <= np.abs(right - nu), pos - 1, pos)
        det = nu - self.frequencies_hz[pos]
        if np.ndim(frequency_hz) == 0:
            return int(pos[0]), float(det[0])
        return pos, det


def resonance_comb(src: SourceSpec, band_hz: tuple[float, float]) -> ModeComb:
    """All cavity resonances inside band_hz = (nu_lo, nu_hi).

    Each resonance solves mode_number(nu) = m for integer m by bracketed
    root finding; the residual is kept below 1e-9 relative.
    """
    nu_lo, nu_hi = band_hz
    if not 0 < nu_lo < nu_hi:
        raise ValueError(f"invalid band {band_hz}")
    gouy = _gouy_offset(src, 2.0 * C_LIGHT / (nu_lo + nu_hi))
    g_lo = mode_number(src, nu_lo) - gouy
    g_hi = mode_number(src, nu_hi) - gouy
    m_lo = math.ceil(g_lo)
    m_hi = math.floor(g_hi)
    if m_lo > m_hi:
        raise ValueError("no cavity modes inside the requested band")

    fsr_mid = fsr(src, 2.0 * C_LIGHT / (nu_lo + nu_hi))
    slope = (g_hi - g_lo) / (nu_hi - nu_lo)
    freqs = np.empty(m_hi - m_lo + 1)
    for i, m in enumerate(range(m_lo, m_hi + 1)):
        guess = nu_lo + (m - g_lo) / slope
        a = max(guess - 1.5 * fsr_mid, nu_lo * 0.5)
        b = guess + 1.5 * fsr_mid

        def resid(nu, m=m):
            return mode_number(src, nu) - gouy - m

        fa, fb = resid(a), resid(b)
        grow = 0
        while fa * fb > 0 and grow < 10:  # widen until the root is bracketed
            a -= fsr_mid
            b += fsr_mid
            fa, fb = resid(a), resid(b)
            grow += 1
        freqs[i] = brentq(resid, a, b, xtol=1.0, rtol=8.9e-16)

    lws = np.array([linewidth(src, C_LIGHT / nu) for nu in freqs])
    return ModeComb(
        mode_indices=np.arange(m_lo, m_hi + 1, dtype=np.int64),
        frequencies_hz=freqs,
        linewidths_fwhm_hz=lws,
        band_hz=(float(nu_lo), float(nu_hi)),
        source=src,
    )


@dataclass(frozen=True, eq=False)
class TransmissionScan:
    """Sampled Airy transmission curve."""

    frequencies_hz: np.ndarray
    transmission: np.ndarray
    sample_step_hz: float

    def peak_frequencies(self) -> np.ndarray:
        """Frequencies of local maxima of the sampled curve."""
        t = self.transmission
        idx = np.flatnonzero((t[1:-1] > t[:-2]) & (t[1:-1] >= t[2:])) + 1
        return self.frequencies_hz[idx]


def transmission_scan(src: SourceSpec, band_hz: tuple[float, float],
                      sample_step_hz: float, peak_transmission: float = 1.0
                      ) -> TransmissionScan:
    """Airy transmission T(nu) = T_max / (1 + (2F/pi)^2 sin^2(2 pi nu L_opt / c))
    sampled on a uniform frequency grid.  The sample step must resolve the
    mode linewidth (step < FWHM/4)."""
    nu_lo, nu_hi = band_hz
    if not 0 < nu_lo < nu_hi:
        raise ValueError(f"invalid band {band_hz}")
    df = linewidth(src, 2.0 * C_LIGHT / (nu_lo + nu_hi))
    if sample_step_hz >= df / 4.0:
        raise ValueError(
            f"sample step {sample_step_hz:.3e} Hz too coarse; need finer than "
            f"FWHM/4 = {df / 4.0:.3e} Hz")
    f_val = finesse(src)
    nu = np.arange(nu_lo, nu_hi + 0.5 * sample_step_hz, sample_step_hz)
    phase = np.pi * (mode_number(src, nu) - _gouy_offset(src, 2.0 * C_LIGHT / (nu_lo + nu_hi)))
    t = peak_transmission / (1.0 + (2.0 * f_val / np.pi) ** 2 * np.sin(phase) ** 2)
    return TransmissionScan(frequencies_hz=nu, transmission=t,
                            sample_step_hz=float(sample_step_hz))


def mode_waist(src: SourceSpec, wavelength_m: float) -> float:
    """Waist of the resonant Gaussian mode at the flat mirror:

        w0^2 = (lambda/pi) * sqrt(L_eff * (ROC - L_eff)),

    with the reduced length L_eff = L_air + L_crystal/n."""
    l_eff = src.reduced_length(wavelength_m)
    roc = src.concave_mirror.radius_of_curvature_m
    if l_eff >= roc:
        raise UnstableCavityError(
            f"reduced length {l_eff:.4e} m >= radius of curvature {roc:.4e} m")
    return math.sqrt((wavelength_m / math.pi) * math.sqrt(l_eff * (roc - l_eff)))


def escape_probability(src: SourceSpec) -> float:
    """Probability that an intracavity photon leaves through the flat
    (output) mirror rather than any other loss channel:

        (1 - R_flat) / [(1 - R_flat) + (1 - R_concave) + 2 (1 - t)]
    """
    t_flat = 1.0 - src.flat_mirror.reflectivity
    t_conc = 1.0 - src.concave_mirror.reflectivity
    t_crys = 2.0 * (1.0 - src.crystal.single_pass_transmission)
    total = t_flat + t_conc + t_crys
    if total <= 0:
        raise LosslessCavityError("cavity has zero total loss")
    return t_flat / total
