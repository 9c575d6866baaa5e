"""Temperature-dependent dispersion of the nonlinear crystal.

Extraordinary index of 5% MgO-doped congruent lithium niobate, evaluated
from the temperature-dependent Sellmeier series of Gayer et al.,
Appl. Phys. B 91, 343 (2008):

    n^2 = a1 + b1*f + (a2 + b2*f) / (L^2 - (a3 + b3*f)^2)
        + (a4 + b4*f) / (L^2 - a5^2) - a6*L^2

with L the vacuum wavelength in micrometres and the temperature parameter
f = (T - T_ref) * (T + T_ref + 2*273.16), T in degrees Celsius.  The
coefficients live in :class:`SellmeierModel` so an alternative published
dataset can be swapped in through the run configuration.

All public functions take SI units (metres, kelvin, hertz) and accept
numpy arrays in the wavelength/frequency argument.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.constants import c as C_LIGHT

from .errors import OutOfWindowError

# Relative step used for every numeric wavelength derivative in the package.
FD_RELATIVE_STEP = 1e-5

# Reference temperature for thermal-expansion corrections (25 C).
EXPANSION_T_REF_K = 298.15


@dataclass(frozen=True)
class SellmeierModel:
    """Coefficients of a temperature-dependent Sellmeier series plus the
    wavelength/temperature windows inside which it is trusted."""

    a1: float
    a2: float
    a3: float
    a4: float
    a5: float
    a6: float
    b1: float
    b2: float
    b3: float
    b4: float
    reference_temperature_c: float = 24.5
    wavelength_window_m: tuple[float, float] = (0.5e-6, 4.0e-6)
    temperature_window_k: tuple[float, float] = (293.15, 473.15)
    label: str = "unnamed"


#: Gayer et al. (2008), 5% MgO-doped congruent LiNbO3, extraordinary axis.
MGO_CLN_GAYER_E = SellmeierModel(
    a1=5.756, a2=0.0983, a3=0.202, a4=189.32, a5=12.52, a6=1.32e-2,
    b1=2.86e-6, b2=4.7e-8, b3=6.113e-8, b4=1.516e-4,
    reference_temperature_c=24.5,
    label="MgO:CLN extraordinary, Gayer et al. 2008",
)


@dataclass(frozen=True)
class CrystalSpec:
    """Physical description of the poled crystal.

    length_m and poling_period_m are the values at 25 C; they expand
    linearly with ``thermal_expansion_per_k``.  ``single_pass_transmission``
    is a power fraction in (0, 1].
    """

    length_m: float
    poling_period_m: float
    single_pass_transmission: float
    thermal_expansion_per_k: float = 1.54e-5
    sellmeier: SellmeierModel = field(default=MGO_CLN_GAYER_E)

    def __post_init__(self):
        if self.length_m <= 0:
            raise ValueError(f"crystal length must be > 0, got {self.length_m}")
        if self.poling_period_m <= 0:
            raise ValueError(f"poling period must be > 0, got {self.poling_period_m}")
        if not 0 < self.single_pass_transmission <= 1:
            raise ValueError(
                "single-pass transmission must be in (0, 1], got "
                f"{self.single_pass_transmission}")

    def expanded_length(self, temperature_k: float) -> float:
        """Crystal length at temperature, linear expansion about 25 C."""
        return self.length_m * (
            1.0 + self.thermal_expansion_per_k * (temperature_k - EXPANSION_T_REF_K))

    def expanded_poling_period(self, temperature_k: float) -> float:
        """Poling period at temperature, linear expansion about 25 C."""
        return self.poling_period_m * (
            1.0 + self.thermal_expansion_per_k * (temperature_k - EXPANSION_T_REF_K))


def _check_window(wavelength_m, temperature_k: float, model: SellmeierModel):
    lo, hi = model.wavelength_window_m
    wmin = float(np.min(wavelength_m))
    wmax = float(np.max(wavelength_m))
    if wmin < lo:
        raise OutOfWindowError(
            f"wavelength {wmin * 1e6:.4f} um below lower validity bound {lo * 1e6:.2f} um")
    if wmax > hi:
        raise OutOfWindowError(
            f"wavelength {wmax * 1e6:.4f} um above upper validity bound {hi * 1e6:.2f} um")
    tlo, thi = model.temperature_window_k
    if temperature_k < tlo:
        raise OutOfWindowError(
            f"temperature {temperature_k:.2f} K below lower validity bound {tlo:.2f} K")
    if temperature_k > thi:
        raise OutOfWindowError(
            f"temperature {temperature_k:.2f} K above upper validity bound {thi:.2f} K")


def refractive_index(wavelength_m, temperature_k: float, crystal: CrystalSpec):
    """Extraordinary phase index n(lambda, T).

    wavelength_m may be a scalar or array (vacuum wavelength, metres);
    temperature_k is a scalar.  Raises OutOfWindowError outside the
    declared validity windows.
    """
    model = crystal.sellmeier
    _check_window(wavelength_m, temperature_k, model)
    lam = np.asarray(wavelength_m, dtype=float) * 1e6
    t_c = temperature_k - 273.15
    t_ref = model.reference_temperature_c
    f = (t_c - t_ref) * (t_c + t_ref + 2 * 273.16)
    n_sq = (model.a1 + model.b1 * f
            + (model.a2 + model.b2 * f) / (lam**2 - (model.a3 + model.b3 * f) ** 2)
            + (model.a4 + model.b4 * f) / (lam**2 - model.a5**2)
            - model.a6 * lam**2)
    n = np.sqrt(n_sq)
    if np.ndim(wavelength_m) == 0:
        return float(n)
    return n


def group_index(wavelength_m, temperature_k: float, crystal: CrystalSpec):
    """Group index n_g = n - lambda * dn/dlambda.

    The derivative is a central finite difference with relative step
    ``FD_RELATIVE_STEP``; both displaced wavelengths must stay inside the
    validity window.
    """
    lam = np.asarray(wavelength_m, dtype=float)
    h = FD_RELATIVE_STEP * lam
    n_plus = refractive_index(lam + h, temperature_k, crystal)
    n_minus = refractive_index(lam - h, temperature_k, crystal)
    n0 = refractive_index(lam, temperature_k, crystal)
    ng = n0 - lam * (np.asarray(n_plus) - np.asarray(n_minus)) / (2 * h)
    if np.ndim(wavelength_m) == 0:
        return float(ng)
    return ng


def wavevector(frequency_hz, temperature_k: float, crystal: CrystalSpec):
    """Wavevector magnitude k = 2*pi*n*nu/c in rad/m for frequency nu."""
    nu = np.asarray(frequency_hz, dtype=float)
    if np.any(nu <= 0):
        raise ValueError("frequency must be positive")
    lam = C_LIGHT / nu
    n = refractive_index(lam, temperature_k, crystal)
    k = 2.0 * np.pi * np.asarray(n) * nu / C_LIGHT
    if np.ndim(frequency_hz) == 0:
        return float(k)
    return k
