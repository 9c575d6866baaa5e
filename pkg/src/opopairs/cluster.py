"""Doubly-resonant cluster spectrum.

A signal mode contributes where three conditions meet: it is a cavity
resonance, its energy-conservation partner nu_p - nu_s falls on (or near)
another cavity resonance, and the pair is phase matched.  The default
acceptance is a weighted Lorentzian overlap of the idler partner with its
nearest comb mode; a hard detuning cut is available for oracle-style
comparisons.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from . import cavity, spdc
from .cavity import ModeComb, SourceSpec
from .spdc import PumpSpec


@dataclass(frozen=True)
class ModePair:
    """One signal/idler mode pair.  idler_frequency_hz is nu_p - nu_s by
    construction; idler_detuning_hz is its offset from the nearest comb
    mode (the idler_index one)."""

    signal_index: int
    idler_index: int
    signal_frequency_hz: float
    idler_frequency_hz: float
    idler_detuning_hz: float
    weight: float


@dataclass(frozen=True, eq=False)
class ClusterSpectrum:
    """Per-mode emission density over the signal band plus the contributing
    mode pairs."""

    frequencies_hz: np.ndarray
    densities: np.ndarray
    pairs: tuple[ModePair, ...]
    temperature_k: float
    pump: PumpSpec
    band_hz: tuple[float, float]

    def __post_init__(self):
        if np.any(self.densities < 0):
            raise ValueError("densities must be nonnegative")

    def __len__(self) -> int:
        return len(self.frequencies_hz)

    def pair_set(self) -> set[tuple[int, int]]:
        """(signal mode number, idler mode number) pairs present."""
        return {(p.signal_index, p.idler_index) for p in self.pairs}


def cluster_spectrum(src: SourceSpec, pump: PumpSpec,
                     band_hz: tuple[float, float],
                     acceptance: Literal["lorentzian", "hard"] = "lorentzian",
                     hard_cutoff_hz: float | None = None) -> ClusterSpectrum:
    """Cluster spectrum over the signal band.

    For every signal mode nu_m of the comb the idler partner is
    nu_p - nu_m.  With the default "lorentzian" acceptance each mode gets

        weight = pm_envelope(nu_m) / (1 + (2*delta/df)^2)

    where delta is the idler detuning from its nearest comb mode and df the
    mode linewidth.  With acceptance="hard" only pairs with
    |delta| < hard_cutoff_hz (default: half a linewidth) are kept, at
    weight pm_envelope(nu_m).

    The comb is built over the union of the band and its energy-conservation
    mirror so every idler partner is covered.
    """
    nu_lo, nu_hi = band_hz
    if not 0 < nu_lo < nu_hi < pump.frequency_hz:
        raise ValueError(f"invalid band {band_hz}")
    union = (min(nu_lo, pump.frequency_hz - nu_hi),
             max(nu_hi, pump.frequency_hz - nu_lo))
    comb = cavity.resonance_comb(src, union)

    in_band = (comb.frequencies_hz >= nu_lo) & (comb.frequencies_hz <= nu_hi)
    sig_pos = np.flatnonzero(in_band)
    if len(sig_pos) == 0:
        raise ValueError("no cavity modes inside the requested band")
    nu_s = comb.frequencies_hz[sig_pos]
    nu_i = spdc.idler_frequency(pump, nu_s)
    idl_pos, detuning = comb.nearest(nu_i)
    env = np.asarray(spdc.pm_envelope(pump, nu_s, src.temperature_k, src.crystal))
    df = comb.linewidths_fwhm_hz[sig_pos]

    if acceptance == "lorentzian":
        weight = env / (1.0 + (2.0 * detuning / df) ** 2)
        keep = np.ones(len(nu_s), dtype=bool)
    elif acceptance == "hard":
        cut = df / 2.0 if hard_cutoff_hz is None else hard_cutoff_hz
        keep = np.abs(detuning) < cut
        weight = np.where(keep, env, 0.0)
    else:
        raise ValueError(f"unknown acceptance mode {acceptance!r}")

    pairs = tuple(
        ModePair(
            signal_index=int(comb.mode_indices[sig_pos[j]]),
            idler_index=int(comb.mode_indices[idl_pos[j]]),
            signal_frequency_hz=float(nu_s[j]),
            idler_frequency_hz=float(nu_i[j]),
            idler_detuning_hz=float(detuning[j]),
            weight=float(weight[j]),
        )
        for j in range(len(nu_s)) if keep[j]
    )
    return ClusterSpectrum(
        frequencies_hz=nu_s,
        densities=np.asarray(weight, dtype=float),
        pairs=pairs,
        temperature_k=src.temperature_k,
        pump=pump,
        band_hz=(float(nu_lo), float(nu_hi)),
    )


@dataclass(frozen=True)
class ClusterEnvelope:
    """One contiguous above-threshold cluster."""

    center_hz: float
    fwhm_hz: float
    integrated_weight: float
    partner: int | None = None


def _run_fwhm(freqs: np.ndarray, dens: np.ndarray) -> float:
    """FWHM of one sampled cluster by linear interpolation about its peak."""
    i_pk = int(np.argmax(dens))
    half = dens[i_pk] / 2.0
    lo = freqs[0]
    for i in range(i_pk, 0, -1):
        if dens[i - 1] < half:
            frac = (dens[i] - half) / (dens[i] - dens[i - 1])
            lo = freqs[i] + frac * (freqs[i - 1] - freqs[i])
            break
    hi = freqs[-1]
    for i in range(i_pk, len(dens) - 1):
        if dens[i + 1] < half:
            frac = (dens[i] - half) / (dens[i] - dens[i + 1])
            hi = freqs[i] + frac * (freqs[i + 1] - freqs[i])
            break
    return float(hi - lo)


def cluster_envelopes(spectrum: ClusterSpectrum, threshold: float = 0.1
                      ) -> list[ClusterEnvelope]:
    """Group contiguous above-threshold runs of the sampled spectrum into
    clusters.  threshold is a fraction of the global maximum density.
    Clusters are ordered by frequency; mirror partners about nu_p/2 are
    cross-referenced by list index."""
    if len(spectrum) == 0:
        raise ValueError("empty spectrum")
    if not 0 < threshold <= 1:
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    level = threshold * float(np.max(spectrum.densities))
    above = spectrum.densities >= level
    if not np.any(above):
        return []

    runs = []
    start = None
    for i, flag in enumerate(above):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            runs.append((start, i))
            start = None
    if start is not None:
        runs.append((start, len(above)))

    envelopes = []
    for a, b in runs:
        f = spectrum.frequencies_hz[a:b]
        d = spectrum.densities[a:b]
        center = float(np.sum(f * d) / np.sum(d))
        fwhm = _run_fwhm(f, d) if b - a > 1 else 0.0
        envelopes.append(ClusterEnvelope(center_hz=center, fwhm_hz=fwhm,
                                         integrated_weight=float(np.sum(d))))

    # pair mirror clusters: centers adding up to nu_p within one mode spacing
    nu_p = spectrum.pump.frequency_hz
    tol = float(np.mean(np.diff(spectrum.frequencies_hz))) if len(spectrum) > 1 else 0.0
    paired = list(envelopes)
    for i, env_i in enumerate(envelopes):
        if paired[i].partner is not None:
            continue
        mirror = nu_p - env_i.center_hz
        best, best_d = None, np.inf
        for j, env_j in enumerate(envelopes):
            if j == i:
                continue
            d = abs(env_j.center_hz - mirror)
            if d < best_d:
                best, best_d = j, d
        if best is not None and best_d <= tol:
            paired[i] = ClusterEnvelope(env_i.center_hz, env_i.fwhm_hz,
                                        env_i.integrated_weight, partner=best)
            env_b = envelopes[best]
            paired[best] = ClusterEnvelope(env_b.center_hz, env_b.fwhm_hz,
                                           env_b.integrated_weight, partner=i)
    return paired


def modes_in_channel(spectrum: ClusterSpectrum,
                     passband_hz: tuple[float, float]) -> tuple[ModePair, ...]:
    """Contributing pairs whose signal mode lies inside the passband.  Each
    retains its idler partner frequency for locating the conjugate
    channel.  An empty selection is allowed."""
    lo, hi = passband_hz
    if not lo < hi:
        raise ValueError(f"invalid passband {passband_hz}")
    return tuple(p for p in spectrum.pairs if lo <= p.signal_frequency_hz <= hi)
