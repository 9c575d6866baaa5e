"""Type-0 quasi-phase-matched down-conversion.

Signal and idler are both extraordinary; energy conservation
nu_s + nu_i = nu_p is enforced by constructing every idler frequency
through :func:`idler_frequency`.  The grating vector uses the thermally
expanded poling period.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.constants import c as C_LIGHT
from scipy.optimize import brentq, minimize_scalar

from .dispersion import CrystalSpec, wavevector


@dataclass(frozen=True)
class PumpSpec:
    """Continuous-wave pump: frequency in Hz, power in watts."""

    frequency_hz: float
    power_w: float = 0.0

    def __post_init__(self):
        if self.frequency_hz <= 0:
            raise ValueError(f"pump frequency must be positive, got {self.frequency_hz}")
        if self.power_w < 0:
            raise ValueError(f"pump power must be nonnegative, got {self.power_w}")

    @classmethod
    def from_wavelength(cls, wavelength_m: float, power_w: float = 0.0) -> "PumpSpec":
        return cls(frequency_hz=C_LIGHT / wavelength_m, power_w=power_w)

    @property
    def wavelength_m(self) -> float:
        return C_LIGHT / self.frequency_hz


def idler_frequency(pump: PumpSpec, signal_frequency_hz):
    """Idler partner nu_p - nu_s.  Single construction point for energy
    conservation; exact in floating point for nu_s within a factor of two
    of nu_p/2."""
    return pump.frequency_hz - signal_frequency_hz


def degenerate_wavelength(pump: PumpSpec) -> float:
    """Degeneracy wavelength 2 * lambda_p (both photons at nu_p / 2)."""
    return C_LIGHT / (pump.frequency_hz / 2.0)


def qpm_mismatch(pump: PumpSpec, signal_frequency_hz, temperature_k: float,
                 crystal: CrystalSpec):
    """Quasi-phase-matching mismatch in rad/m:

        dk = k(nu_p) - k(nu_s) - k(nu_p - nu_s) - 2*pi/Lambda(T)
    """
    nu_s = np.asarray(signal_frequency_hz, dtype=float)
    if np.any(nu_s >= pump.frequency_hz):
        raise ValueError("signal frequency must be below the pump frequency")
    nu_i = pump.frequency_hz - nu_s
    k_p = wavevector(pump.frequency_hz, temperature_k, crystal)
    k_s = wavevector(nu_s, temperature_k, crystal)
    k_i = wavevector(nu_i, temperature_k, crystal)
    grating = 2.0 * np.pi / crystal.expanded_poling_period(temperature_k)
    dk = k_p - np.asarray(k_s) - np.asarray(k_i) - grating
    if np.ndim(signal_frequency_hz) == 0:
        return float(dk)
    return dk


def pm_envelope(pump: PumpSpec, signal_frequency_hz, temperature_k: float,
                crystal: CrystalSpec):
    """Phase-matching weight sinc^2(dk * L / 2) in [0, 1], sinc(0) = 1."""
    dk = qpm_mismatch(pump, signal_frequency_hz, temperature_k, crystal)
    x = np.asarray(dk) * crystal.expanded_length(temperature_k) / 2.0
    env = np.sinc(x / np.pi) ** 2
    if np.ndim(signal_frequency_hz) == 0:
        return float(env)
    return env


@dataclass(frozen=True)
class PhaseMatchResult:
    """Temperature at which the degenerate mismatch vanishes (or comes
    closest when no root exists inside the validity window)."""

    temperature_k: float
    residual_rad_per_m: float
    phase_matched: bool


def phasematch_temperature(pump: PumpSpec, crystal: CrystalSpec,
                           scan_points: int = 241) -> PhaseMatchResult:
    """Degeneracy phase-matching temperature by bracketed root finding of
    dk(nu_p/2, T) over the declared temperature window.  Without a sign
    change the nearest-approach temperature is reported with
    phase_matched=False."""
    nu_0 = pump.frequency_hz / 2.0
    t_lo, t_hi = crystal.sellmeier.temperature_window_k

    def dk_deg(t):
        return qpm_mismatch(pump, nu_0, t, crystal)

    grid = np.linspace(t_lo, t_hi, scan_points)
    vals = np.array([dk_deg(t) for t in grid])
    sign_flip = np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)
    grating = 2.0 * np.pi / crystal.poling_period_m
    if len(sign_flip):
        i = sign_flip[0]
        t_deg = brentq(dk_deg, grid[i], grid[i + 1], xtol=1e-9, rtol=8.9e-16)
        return PhaseMatchResult(temperature_k=float(t_deg),
                                residual_rad_per_m=float(dk_deg(t_deg)),
                                phase_matched=abs(dk_deg(t_deg)) < 1e-6 * grating)
    i = int(np.argmin(np.abs(vals)))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, scan_points - 1)]
    res = minimize_scalar(lambda t: abs(dk_deg(t)), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-6})
    return PhaseMatchResult(temperature_k=float(res.x),
                            residual_rad_per_m=float(dk_deg(res.x)),
                            phase_matched=False)


@dataclass(frozen=True)
class TuningPoint:
    """Envelope-peak signal frequencies on each side of degeneracy at one
    temperature.  high/low are mirror branches; both equal nu_p/2 when the
    phase matching is degenerate or past degeneracy."""

    temperature_k: float
    branch_high_hz: float
    branch_low_hz: float

    @property
    def separation_hz(self) -> float:
        return self.branch_high_hz - self.branch_low_hz


def _branch_peak(pump: PumpSpec, crystal: CrystalSpec, temperature_k: float,
                 lam_lo: float, lam_hi: float, grid_step_m: float) -> float:
    """Envelope maximiser over one wavelength interval: coarse grid then
    golden-section refinement.  Returns a frequency in Hz."""
    lam = np.arange(lam_lo, lam_hi, grid_step_m)
    nus = C_LIGHT / lam
    env = pm_envelope(pump, nus, temperature_k, crystal)
    i = int(np.argmax(env))
    if i == 0 or i == len(lam) - 1:
        return float(nus[i])
    # golden-section on -envelope needs a strict bracket; fall back to the
    # grid point on the numerically flat plateau near degeneracy
    a, b, m = nus[i + 1], nus[i - 1], nus[i]
    fa = -pm_envelope(pump, a, temperature_k, crystal)
    fb = -pm_envelope(pump, b, temperature_k, crystal)
    fm = -pm_envelope(pump, m, temperature_k, crystal)
    if not (fm < fa and fm < fb):
        return float(m)
    res = minimize_scalar(lambda nu: -pm_envelope(pump, nu, temperature_k, crystal),
                          bracket=(a, m, b), method="golden",
                          options={"xtol": 1e-12})
    return float(res.x)


def tuning_curve(pump: PumpSpec, crystal: CrystalSpec,
                 temperature_range_k: tuple[float, float], step_k: float,
                 search_halfwidth_m: float = 170e-9,
                 grid_step_m: float = 10e-12) -> list[TuningPoint]:
    """Envelope peak positions on each side of degeneracy per temperature.

    The two branches are searched independently on a coarse wavelength grid
    of ``grid_step_m`` within ``search_halfwidth_m`` of degeneracy and
    refined by golden section; they coincide at and below the degeneracy
    temperature and separate monotonically above it."""
    t_lo, t_hi = temperature_range_k
    if not t_lo <= t_hi or step_k <= 0:
        raise ValueError("invalid temperature range or step")
    lam_d = degenerate_wavelength(pump)
    points = []
    for t in np.arange(t_lo, t_hi + 0.5 * step_k, step_k):
        high = _branch_peak(pump, crystal, float(t),
                            lam_d - search_halfwidth_m, lam_d, grid_step_m)
        low = _branch_peak(pump, crystal, float(t),
                           lam_d, lam_d + search_halfwidth_m, grid_step_m)
        points.append(TuningPoint(temperature_k=float(t),
                                  branch_high_hz=high, branch_low_hz=low))
    return points
