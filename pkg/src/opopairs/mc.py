"""Event-level Monte Carlo of the detection chain.

Pair streams, thermal-light click streams, detector response (gating,
efficiency, dark counts, jitter, dead time), start-stop correlation,
bandwidth fitting and g2 estimation.  Every generator is a pure function
of its inputs plus an integer seed; identical seeds reproduce streams
bit for bit.

Timestamps are seconds from the start of the run, stored sorted and
strictly increasing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.signal import lfilter

from .errors import FitError, ResourceCapError

#: Default ceiling on generated events per stream.
DEFAULT_EVENT_CAP = 50_000_000

#: Thermal-field update step is 1/(this * bandwidth); 20 steps per
#: coherence unit keep the discretisation bias of the Lorentzian
#: correlation below 1%.
THERMAL_STEPS_PER_COHERENCE = 20

_CHUNK_STEPS = 1 << 20


@dataclass(frozen=True)
class GateSpec:
    """Periodic detector gate; clicks outside the open window are dropped."""

    period_s: float
    width_s: float
    phase_s: float = 0.0

    def __post_init__(self):
        if self.period_s <= 0 or self.width_s <= 0:
            raise ValueError("gate period and width must be positive")
        if self.width_s > self.period_s:
            raise ValueError("gate width must not exceed the period")


@dataclass(frozen=True)
class DetectorModel:
    """Single-photon detector response parameters."""

    efficiency: float
    jitter_sigma_s: float = 0.0
    dead_time_s: float = 0.0
    dark_rate_hz: float = 0.0
    gate: GateSpec | None = None

    def __post_init__(self):
        if not 0 < self.efficiency <= 1:
            raise ValueError(f"efficiency must be in (0, 1], got {self.efficiency}")
        if self.jitter_sigma_s < 0 or self.dead_time_s < 0 or self.dark_rate_hz < 0:
            raise ValueError("jitter, dead time and dark rate must be nonnegative")


@dataclass(frozen=True, eq=False)
class TagStream:
    """Time-ordered detection timestamps on a named channel."""

    channel: str
    timestamps_s: np.ndarray
    duration_s: float
    seed: int | None = None
    note: str = ""

    def __post_init__(self):
        ts = np.asarray(self.timestamps_s, dtype=float)
        object.__setattr__(self, "timestamps_s", ts)
        if self.duration_s <= 0:
            raise ValueError("duration must be positive")
        if len(ts):
            if np.any(np.diff(ts) <= 0):
                raise ValueError("timestamps must be strictly increasing")
            if ts[0] < 0 or ts[-1] > self.duration_s:
                raise ValueError("timestamps must lie within [0, duration]")

    def __len__(self) -> int:
        return len(self.timestamps_s)

    @property
    def rate_hz(self) -> float:
        return len(self.timestamps_s) / self.duration_s


@dataclass(frozen=True, eq=False)
class CoincidenceHistogram:
    """Binned start-stop delay counts over [-t_max, +t_max]."""

    bin_width_s: float
    t_max_s: float
    counts: np.ndarray
    duration_s: float
    start_count: int
    stop_count: int

    def __post_init__(self):
        if np.any(self.counts < 0):
            raise ValueError("histogram counts must be nonnegative")
        n = 2.0 * self.t_max_s / self.bin_width_s
        if abs(n - round(n)) > 1e-9 or round(n) != len(self.counts):
            raise ValueError("bin count must equal range/bin_width exactly")

    @property
    def n_bins(self) -> int:
        return len(self.counts)

    def delays_s(self) -> np.ndarray:
        """Bin centres."""
        edges = np.linspace(-self.t_max_s, self.t_max_s, self.n_bins + 1)
        return 0.5 * (edges[:-1] + edges[1:])

    @property
    def start_rate_hz(self) -> float:
        return self.start_count / self.duration_s

    @property
    def stop_rate_hz(self) -> float:
        return self.stop_count / self.duration_s


def _check_cap(expected_events: float, event_cap: int):
    if expected_events > event_cap:
        raise ResourceCapError(
            f"expected {expected_events:.3g} events exceeds the cap {event_cap:.3g}")


def generate_pair_stream(rate_hz: float, bandwidth_hz: float, duration_s: float,
                         seed: int, event_cap: int = DEFAULT_EVENT_CAP
                         ) -> tuple[TagStream, TagStream]:
    """Correlated signal/idler emission times.

    Pair emissions form a homogeneous Poisson process at rate_hz; each
    idler is delayed from its signal by a two-sided exponential draw with
    decay constant 2*pi*bandwidth_hz (the coincidence-profile law).  Idler
    events pushed outside [0, duration] are dropped.
    """
    if rate_hz < 0 or bandwidth_hz <= 0 or duration_s <= 0:
        raise ValueError("rate must be >= 0, bandwidth and duration positive")
    _check_cap(rate_hz * duration_s, event_cap)
    rng = np.random.default_rng(seed)
    n = int(rng.poisson(rate_hz * duration_s))
    _check_cap(n, event_cap)
    emit = np.sort(rng.random(n)) * duration_s
    delays = rng.laplace(0.0, 1.0 / (2.0 * math.pi * bandwidth_hz), n)
    idler = emit + delays
    idler = idler[(idler >= 0.0) & (idler <= duration_s)]
    note = f"pair stream rate={rate_hz:g}Hz bandwidth={bandwidth_hz:g}Hz"
    return (
        TagStream("signal", np.unique(emit), duration_s, seed=seed, note=note),
        TagStream("idler", np.unique(idler), duration_s, seed=seed, note=note),
    )


def _thermal_intensity_chunks(n_modes: int, bandwidth_hz: float, n_steps: int,
                              time_step_s: float, rng: np.random.Generator):
    """Yield (first_step_index, intensity_chunk).

    Each of the n_modes amplitudes is a stationary complex AR(1) process
    with field correlation exp(-pi*bandwidth*|tau|) and unit mean power;
    the detected intensity is the beat-averaged sum of mode powers."""
    r = math.exp(-math.pi * bandwidth_hz * time_step_s)
    s = math.sqrt(1.0 - r * r)
    amp = (rng.standard_normal(n_modes) + 1j * rng.standard_normal(n_modes)) \
        * math.sqrt(0.5)
    state = (r * amp)[:, None]
    done = 0
    while done < n_steps:
        m = min(_CHUNK_STEPS, n_steps - done)
        noise = (rng.standard_normal((n_modes, m))
                 + 1j * rng.standard_normal((n_modes, m))) * math.sqrt(0.5)
        out, state = lfilter([s], [1.0, -r], noise, axis=-1, zi=state)
        yield done, np.sum(np.abs(out) ** 2, axis=0)
        done += m


def thermal_click_stream(n_modes: int, bandwidth_hz: float, mean_rate_hz: float,
                         duration_s: float, seed: int,
                         event_cap: int = DEFAULT_EVENT_CAP) -> TagStream:
    """Clicks from N-mode thermal light of Lorentzian FWHM bandwidth_hz.

    Clicks are an inhomogeneous Poisson process at
    mean_rate * I(t) / <I>, with I(t) the summed mode intensity simulated
    per coherence cell (step 1/(20*bandwidth))."""
    if not isinstance(n_modes, (int, np.integer)) or n_modes < 1:
        raise ValueError(f"n_modes must be an integer >= 1, got {n_modes!r}")
    if bandwidth_hz <= 0 or mean_rate_hz <= 0 or duration_s <= 0:
        raise ValueError("bandwidth, rate and duration must be positive")
    _check_cap(mean_rate_hz * duration_s, event_cap)
    rng = np.random.default_rng(seed)
    dt = 1.0 / (THERMAL_STEPS_PER_COHERENCE * bandwidth_hz)
    n_steps = int(math.ceil(duration_s / dt))
    parts = []
    for first, inten in _thermal_intensity_chunks(n_modes, bandwidth_hz, n_steps, dt, rng):
        lam = (mean_rate_hz / n_modes) * inten * dt
        counts = rng.poisson(lam)
        total = int(counts.sum())
        if total == 0:
            continue
        steps = np.repeat(np.arange(len(counts), dtype=np.int64) + first, counts)
        t = (steps + rng.random(total)) * dt
        parts.append(np.sort(t))
    times = np.unique(np.concatenate(parts)) if parts else np.empty(0)
    times = times[times <= duration_s]
    note = f"thermal stream n_modes={n_modes} bandwidth={bandwidth_hz:g}Hz"
    return TagStream("thermal", times, duration_s, seed=seed, note=note)


def thermal_intensity_trace(n_modes: int, bandwidth_hz: float, duration_s: float,
                            seed: int, max_steps: int = 20_000_000
                            ) -> tuple[np.ndarray, np.ndarray]:
    """Sampled intensity I(t) of the thermal model (for diagnostics and
    autocorrelation checks).  Memory-guarded; keep durations short."""
    dt = 1.0 / (THERMAL_STEPS_PER_COHERENCE * bandwidth_hz)
    n_steps = int(math.ceil(duration_s / dt))
    if n_steps > max_steps:
        raise ResourceCapError(f"trace of {n_steps} steps exceeds max_steps={max_steps}")
    rng = np.random.default_rng(seed)
    out = np.empty(n_steps)
    for first, inten in _thermal_intensity_chunks(n_modes, bandwidth_hz, n_steps, dt, rng):
        out[first:first + len(inten)] = inten
    return np.arange(n_steps) * dt, out


def _gate_mask(times: np.ndarray, gate: GateSpec) -> np.ndarray:
    rel = np.mod(times - gate.phase_s, gate.period_s)
    return rel < gate.width_s


def _prune_dead_time(times: np.ndarray, dead_time_s: float) -> np.ndarray:
    """Non-paralysable dead time: accept a click only if at least
    dead_time_s has elapsed since the last accepted click."""
    if dead_time_s <= 0 or len(times) == 0:
        return times
    kept = []
    last = -math.inf
    for t in times.tolist():
        if t - last >= dead_time_s:
            kept.append(t)
            last = t
    return np.asarray(kept)


def apply_detector(stream: TagStream, model: DetectorModel, seed: int) -> TagStream:
    """Detector response applied in order: gating, efficiency thinning,
    dark-count injection, Gaussian timestamp jitter, re-sort, dead-time
    pruning."""
    rng = np.random.default_rng(seed)
    t = stream.timestamps_s
    if model.gate is not None:
        t = t[_gate_mask(t, model.gate)]
    if model.efficiency < 1.0:
        t = t[rng.random(len(t)) < model.efficiency]
    if model.dark_rate_hz > 0:
        n_dark = int(rng.poisson(model.dark_rate_hz * stream.duration_s))
        dark = rng.random(n_dark) * stream.duration_s
        if model.gate is not None:
            dark = dark[_gate_mask(dark, model.gate)]
        t = np.concatenate([t, dark])
    if model.jitter_sigma_s > 0:
        t = t + rng.normal(0.0, model.jitter_sigma_s, len(t))
    t = np.unique(t)
    t = t[(t >= 0.0) & (t <= stream.duration_s)]
    t = _prune_dead_time(t, model.dead_time_s)
    return replace(stream, timestamps_s=t, note=stream.note + " | detected")


def beamsplit(stream: TagStream, seed: int, transmission: float = 0.5
              ) -> tuple[TagStream, TagStream]:
    """Random 50/50 (or asymmetric) routing of clicks onto two outputs."""
    if not 0 < transmission < 1:
        raise ValueError(f"transmission must be in (0, 1), got {transmission}")
    rng = np.random.default_rng(seed)
    to_a = rng.random(len(stream)) < transmission
    a = replace(stream, channel=stream.channel + "_a", timestamps_s=stream.timestamps_s[to_a])
    b = replace(stream, channel=stream.channel + "_b", timestamps_s=stream.timestamps_s[~to_a])
    return a, b


def correlate(starts: TagStream, stops: TagStream, bin_width_s: float,
              t_max_s: float) -> CoincidenceHistogram:
    """Multi-stop correlation: for every start, histogram all stop-start
    delays inside [-t_max, +t_max].  Linear in total window occupancy."""
    if bin_width_s <= 0:
        raise ValueError("bin width must be positive")
    ratio = 2.0 * t_max_s / bin_width_s
    if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
        raise ValueError("the delay range 2*t_max must be an exact multiple of bin_width")
    n_bins = int(round(ratio))
    s = starts.timestamps_s
    p = stops.timestamps_s
    if np.any(np.diff(s) <= 0) or np.any(np.diff(p) <= 0):
        raise ValueError("correlate requires sorted, strictly increasing streams")
    counts = np.zeros(n_bins, dtype=np.int64)
    chunk = 1_000_000
    for i in range(0, len(s), chunk):
        seg = s[i:i + chunk]
        lo = np.searchsorted(p, seg - t_max_s, side="left")
        hi = np.searchsorted(p, seg + t_max_s, side="right")
        occ = hi - lo
        total = int(occ.sum())
        if total == 0:
            continue
        rep = np.repeat(np.arange(len(seg)), occ)
        offsets = np.arange(total) - np.repeat(np.cumsum(occ) - occ, occ)
        d = p[np.repeat(lo, occ) + offsets] - seg[rep]
        c, _ = np.histogram(d, bins=n_bins, range=(-t_max_s, t_max_s))
        counts += c
    return CoincidenceHistogram(
        bin_width_s=float(bin_width_s), t_max_s=float(t_max_s), counts=counts,
        duration_s=starts.duration_s, start_count=len(s), stop_count=len(p))


def _floor_level(hist: CoincidenceHistogram, floor_fraction: float) -> float:
    """Accidental floor: median of the outer floor_fraction of the delay
    range on both sides."""
    centers = hist.delays_s()
    outer = np.abs(centers) >= (1.0 - floor_fraction) * hist.t_max_s
    if not np.any(outer):
        raise FitError("no bins available for the accidental-floor estimate")
    return float(np.median(hist.counts[outer]))


@dataclass(frozen=True)
class BandwidthFit:
    """Result of the log-linear decay fit of a coincidence peak."""

    bandwidth_hz: float
    stderr_hz: float
    bandwidth_pos_hz: float
    bandwidth_neg_hz: float
    side_asymmetry_hz: float
    floor_counts: float
    excluded_bins: int


def _fit_side(x: np.ndarray, net: np.ndarray, raw: np.ndarray) -> tuple[float, float, int]:
    """Weighted linear fit of ln(net) vs delay on one side.  Weights are the
    delta-method inverse sigmas of ln(net) under Poisson counting.  Returns
    (decay rate, stderr, excluded bin count)."""
    good = net > 0
    excluded = int(np.sum(~good))
    x, net, raw = x[good], net[good], raw[good]
    if len(x) < 3:
        raise FitError("fewer than 3 usable bins on one side of the peak")
    w = net / np.sqrt(raw)
    coeff, cov = np.polyfit(x, np.log(net), 1, w=w, cov="unscaled")
    return -coeff[0], math.sqrt(cov[0, 0]), excluded


def fit_bandwidth(hist: CoincidenceHistogram, min_abs_delay_s: float = 0.0,
                  floor_fraction: float = 0.2) -> BandwidthFit:
    """Photon-pair bandwidth from the exponential coincidence decay.

    The accidental floor (median of the outer floor_fraction of the range)
    is subtracted, then ln(counts) is fitted linearly against |delay|
    separately on each side; the decay rate 2*pi*df gives df per side and
    the two sides are averaged.  Bins closer to zero than min_abs_delay_s
    can be excluded to keep detector jitter out of the fit."""
    peak = int(np.max(hist.counts))
    if peak < 100:
        raise FitError(f"peak bin has {peak} counts; need >= 100 for a fit")
    floor = _floor_level(hist, floor_fraction)
    centers = hist.delays_s()
    net = hist.counts.astype(float) - floor
    fit_zone = np.abs(centers) < (1.0 - floor_fraction) * hist.t_max_s
    sel_pos = fit_zone & (centers > 0) & (np.abs(centers) >= min_abs_delay_s)
    sel_neg = fit_zone & (centers < 0) & (np.abs(centers) >= min_abs_delay_s)
    rate_p, se_p, ex_p = _fit_side(centers[sel_pos], net[sel_pos],
                                   hist.counts[sel_pos].astype(float))
    rate_n, se_n, ex_n = _fit_side(-centers[sel_neg], net[sel_neg],
                                   hist.counts[sel_neg].astype(float))
    df_p = rate_p / (2.0 * math.pi)
    df_n = rate_n / (2.0 * math.pi)
    return BandwidthFit(
        bandwidth_hz=0.5 * (df_p + df_n),
        stderr_hz=0.5 * math.hypot(se_p, se_n) / (2.0 * math.pi),
        bandwidth_pos_hz=df_p,
        bandwidth_neg_hz=df_n,
        side_asymmetry_hz=df_p - df_n,
        floor_counts=floor,
        excluded_bins=ex_p + ex_n,
    )


def noise_to_signal(hist: CoincidenceHistogram, floor_fraction: float = 0.2) -> float:
    """Accidental-floor level divided by the peak bin height."""
    peak = int(np.max(hist.counts))
    if peak <= 0:
        raise FitError("histogram has no counts")
    return _floor_level(hist, floor_fraction) / peak


@dataclass(frozen=True, eq=False)
class G2Result:
    """Normalised intensity correlation from split detection."""

    delays_s: np.ndarray
    g2: np.ndarray
    g2_zero: float
    g2_zero_stderr: float
    plateau_mean_counts: float
    histogram: CoincidenceHistogram


def estimate_g2(split_a: TagStream, split_b: TagStream, bin_width_s: float,
                t_max_s: float, plateau: tuple[float, float] = (0.8, 1.0)
                ) -> G2Result:
    """g2(tau) = C(tau) / <C> with the normalisation plateau taken over
    |tau| in plateau * t_max.  The zero bin is centred on tau = 0."""
    if len(split_a) == 0 or len(split_b) == 0:
        raise ValueError("both split streams must be nonempty")
    k = max(int(round(t_max_s / bin_width_s)), 1)
    t_max_eff = (k + 0.5) * bin_width_s  # odd bin count, centre bin straddles 0
    hist = correlate(split_a, split_b, bin_width_s, t_max_eff)
    centers = hist.delays_s()
    lo, hi = plateau
    sel = (np.abs(centers) >= lo * t_max_eff) & (np.abs(centers) <= hi * t_max_eff)
    if not np.any(sel):
        raise FitError("empty plateau region for g2 normalisation")
    plateau_counts = hist.counts[sel]
    plateau_mean = float(np.mean(plateau_counts))
    if plateau_mean <= 0:
        raise FitError("plateau region has no counts; cannot normalise g2")
    g2_curve = hist.counts / plateau_mean
    zero_counts = float(hist.counts[k])
    g2_zero = zero_counts / plateau_mean
    rel_var = (1.0 / zero_counts if zero_counts > 0 else 0.0) \
        + 1.0 / float(np.sum(plateau_counts))
    return G2Result(
        delays_s=centers,
        g2=g2_curve,
        g2_zero=g2_zero,
        g2_zero_stderr=g2_zero * math.sqrt(rel_var),
        plateau_mean_counts=plateau_mean,
        histogram=hist,
    )


def write_tagstream(stream: TagStream, path) -> None:
    """Plain-text export: # header lines (channel, duration, seed), then one
    timestamp per line at 12 significant digits."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# channel: {stream.channel}\n")
        fh.write(f"# duration_s: {stream.duration_s!r}\n")
        fh.write(f"# seed: {stream.seed if stream.seed is not None else ''}\n")
        if stream.note:
            fh.write(f"# note: {stream.note}\n")
        for t in stream.timestamps_s:
            fh.write(f"{t:.11e}\n")


def read_tagstream(path) -> TagStream:
    """Inverse of :func:`write_tagstream`.  Timestamps that collide after
    the 12-digit rounding are deduplicated."""
    channel, duration, seed, note = "unknown", None, None, ""
    times = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if ":" in body:
                    key, _, val = body.partition(":")
                    key, val = key.strip(), val.strip()
                    if key == "channel":
                        channel = val
                    elif key == "duration_s":
                        duration = float(val)
                    elif key == "seed" and val:
                        seed = int(val)
                    elif key == "note":
                        note = val
                continue
            times.append(float(line))
    ts = np.unique(np.asarray(times)) if times else np.empty(0)
    if duration is None:
        duration = float(ts[-1]) if len(ts) else 1.0
    return TagStream(channel=channel, timestamps_s=ts, duration_s=duration,
                     seed=seed, note=note)


def write_histogram_csv(hist: CoincidenceHistogram, path,
                        header_lines: tuple[str, ...] = ()) -> None:
    """CSV export: optional # provenance lines, then 'delay_s,counts' rows."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write("delay_s,counts\n")
        for d, n in zip(hist.delays_s(), hist.counts):
            fh.write(f"{d!r},{int(n)}\n")
