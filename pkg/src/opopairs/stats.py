"""Closed-form counting statistics of the source.

Rates, pairs per mode, thermal second-order correlation, filter
transmission integrals, and the two-sided-exponential coincidence law
p(T) = pi*df * exp(-2*pi*df*|T|) for a Lorentzian mode of FWHM df.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad


@dataclass(frozen=True)
class RateReport:
    """Rate summary.  brightness is in pairs/(s mW MHz); the enhancement
    factor is an externally reported number echoed as-is, never computed."""

    brightness_pairs_per_s_mw_mhz: float
    pump_power_w: float
    bandwidth_hz: float
    pair_rate_hz: float
    coherence_time_s: float
    pairs_per_mode: float
    enhancement_factor_reported: float

    def __post_init__(self):
        for name in ("brightness_pairs_per_s_mw_mhz", "pump_power_w", "bandwidth_hz",
                     "pair_rate_hz", "coherence_time_s", "pairs_per_mode",
                     "enhancement_factor_reported"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")


def pair_rate(brightness_pairs_per_s_mw_mhz: float, pump_power_w: float,
              bandwidth_hz: float) -> float:
    """Pair rate R = brightness * power * bandwidth, with the brightness
    normalisation (per mW, per MHz) folded in.  SI inputs."""
    if brightness_pairs_per_s_mw_mhz < 0 or pump_power_w < 0 or bandwidth_hz < 0:
        raise ValueError("pair-rate inputs must be nonnegative")
    return brightness_pairs_per_s_mw_mhz * (pump_power_w * 1e3) * (bandwidth_hz * 1e-6)


def pairs_per_mode(pair_rate_hz: float, coherence_time_s: float) -> float:
    """Mean pair number per temporal mode, mu = R * tau."""
    if pair_rate_hz < 0 or coherence_time_s < 0:
        raise ValueError("inputs must be nonnegative")
    return pair_rate_hz * coherence_time_s


def rate_report(brightness_pairs_per_s_mw_mhz: float, pump_power_w: float,
                bandwidth_hz: float,
                enhancement_factor_reported: float = 0.0) -> RateReport:
    """Assemble the rate summary from brightness, pump power and mode
    bandwidth; mu = R * tau holds by construction."""
    r = pair_rate(brightness_pairs_per_s_mw_mhz, pump_power_w, bandwidth_hz)
    tau = 1.0 / bandwidth_hz
    return RateReport(
        brightness_pairs_per_s_mw_mhz=brightness_pairs_per_s_mw_mhz,
        pump_power_w=pump_power_w,
        bandwidth_hz=bandwidth_hz,
        pair_rate_hz=r,
        coherence_time_s=tau,
        pairs_per_mode=pairs_per_mode(r, tau),
        enhancement_factor_reported=enhancement_factor_reported,
    )


def thermal_g2(n_modes: float) -> float:
    """Zero-delay autocorrelation of N-mode thermal light, 1 + 1/N."""
    if n_modes < 1:
        raise ValueError(f"effective mode count must be >= 1, got {n_modes}")
    return 1.0 + 1.0 / n_modes


def modes_from_g2(g2_zero: float) -> float:
    """Effective mode number N = 1 / (g2(0) - 1) for thermal light."""
    if g2_zero <= 1.0:
        raise ValueError(
            f"g2(0) = {g2_zero} <= 1 is not thermal statistics; cannot infer a mode count")
    if g2_zero > 2.0:
        raise ValueError(f"g2(0) = {g2_zero} > 2 is super-thermal")
    return 1.0 / (g2_zero - 1.0)


def modes_from_g2_with_error(g2_zero: float, g2_err: float) -> tuple[float, float]:
    """Mode number with first-order (delta-method) error propagation:
    sigma_N = sigma_g2 / (g2 - 1)^2."""
    n = modes_from_g2(g2_zero)
    return n, g2_err / (g2_zero - 1.0) ** 2


@dataclass(frozen=True)
class GaussianLineshape:
    fwhm_hz: float
    peak: float = 1.0


@dataclass(frozen=True)
class LorentzianLineshape:
    fwhm_hz: float
    peak: float = 1.0


@dataclass(frozen=True)
class TopHatLineshape:
    fwhm_hz: float
    peak: float = 1.0


Lineshape = GaussianLineshape | LorentzianLineshape | TopHatLineshape


def _validate_line(line: Lineshape, role: str, allow_infinite: bool):
    if not 0 < line.peak <= 1:
        raise ValueError(f"{role} peak must be in (0, 1], got {line.peak}")
    if math.isinf(line.fwhm_hz):
        if not allow_infinite:
            raise ValueError(f"{role} lineshape is not normalizable (infinite width)")
    elif line.fwhm_hz <= 0:
        raise ValueError(f"{role} width must be positive, got {line.fwhm_hz}")


def _density(line: Lineshape):
    """Unit-normalised spectral density centred on zero detuning."""
    if isinstance(line, GaussianLineshape):
        sigma = line.fwhm_hz / (2.0 * math.sqrt(2.0 * math.log(2.0)))
        return lambda nu: math.exp(-nu * nu / (2.0 * sigma * sigma)) / (sigma * math.sqrt(2.0 * math.pi))
    if isinstance(line, LorentzianLineshape):
        hw = line.fwhm_hz / 2.0
        return lambda nu: (hw / math.pi) / (nu * nu + hw * hw)
    if isinstance(line, TopHatLineshape):
        w = line.fwhm_hz
        return lambda nu: (1.0 / w) if abs(nu) <= w / 2.0 else 0.0
    raise TypeError(f"unsupported lineshape {line!r}")


def _transmission(line: Lineshape):
    """Filter transmission function, peak value line.peak at zero detuning."""
    if isinstance(line, GaussianLineshape):
        sigma = line.fwhm_hz / (2.0 * math.sqrt(2.0 * math.log(2.0)))
        return lambda nu: line.peak * math.exp(-nu * nu / (2.0 * sigma * sigma))
    if isinstance(line, LorentzianLineshape):
        hw = line.fwhm_hz / 2.0
        return lambda nu: line.peak / (1.0 + (nu / hw) ** 2)
    if isinstance(line, TopHatLineshape):
        w = line.fwhm_hz
        return lambda nu: line.peak if abs(nu) <= w / 2.0 else 0.0
    raise TypeError(f"unsupported lineshape {line!r}")


def filter_transmission(filt: Lineshape, photon: Lineshape) -> float:
    """Total transmitted fraction of a photon through a spectral filter,
    integral of filter(nu) * photon_density(nu) over all detunings,
    evaluated to 1e-9 absolute by quadrature.  Both lineshapes are centred
    (bandwidth-matched alignment)."""
    _validate_line(filt, "filter", allow_infinite=True)
    _validate_line(photon, "photon", allow_infinite=False)
    density = _density(photon)
    if math.isinf(filt.fwhm_hz):
        return filt.peak  # flat filter passes the whole unit-normalised photon
    trans = _transmission(filt)
    if isinstance(filt, TopHatLineshape):
        val, err = quad(density, -filt.fwhm_hz / 2.0, filt.fwhm_hz / 2.0,
                        epsabs=1e-12, limit=200)
        return filt.peak * val
    val, err = quad(lambda nu: trans(nu) * density(nu), -np.inf, np.inf,
                    epsabs=1e-12, limit=200)
    return val


def coincidence_profile(bandwidth_hz: float, delay_s):
    """Normalised start-stop delay density for a Lorentzian pair of FWHM df:

        p(T) = pi * df * exp(-2 * pi * df * |T|)

    Two-sided, unit area, symmetric in T."""
    if bandwidth_hz <= 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth_hz}")
    t = np.asarray(delay_s, dtype=float)
    p = math.pi * bandwidth_hz * np.exp(-2.0 * math.pi * bandwidth_hz * np.abs(t))
    if np.ndim(delay_s) == 0:
        return float(p)
    return p
