"""Doppler ego-motion estimation from the raw cube.

Pipeline per §workflow: pick energetic range gates, build
rotation-compensated slow-time spectrograms per gate, detect the
fixed-slope ridge of each static reflector with a constrained Hough
transform, then RANSAC-fit the ridge peaks (t_c*, f*) to the sinusoid
f = -2 v cos(heading - omega t_c) / lambda for platform speed and heading.

A subtlety worth naming: a range gate extracted by DFT carries, besides
the carrier phase 4 pi d / lambda, the window's linear phase
pi (N-1) (d/dr - k) / N from range-bin migration. Both terms are linear
in distance, so every slow-time frequency in gate data is scaled by
(1 + lambda (N-1) / (4 N dr)) relative to the carrier-only model; about
+2.5% at the default config. effective_wavelength() folds that into an
equivalent wavelength, used for the ridge slope and the speed conversion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import RadarConfig, TWO_PI
from .errors import EstimationError, FormatError, InvalidConfig
from .scene import RawCube

DEFAULT_WINDOW_SPAN_RAD = math.radians(30.0)
DEGENERATE_SPEED_M_S = 0.02


def effective_wavelength(cfg: RadarConfig) -> float:
    """Wavelength equivalent of the full gate phase slope (see module doc)."""
    n = cfg.samples_per_chirp
    migration = (n - 1) / (4.0 * n * cfg.range_bin_m)
    return 1.0 / (1.0 / cfg.wavelength_m + migration)


def ridge_slope_hz_per_s(cfg: RadarConfig) -> float:
    """Slope 2 omega^2 r / lambda of a static reflector's spectrogram ridge."""
    return (
        2.0
        * cfg.angular_speed_rad_s**2
        * cfg.rotation_radius_m
        / effective_wavelength(cfg)
    )


def default_window_len(cfg: RadarConfig) -> int:
    """Chirps spanning 30 degrees of rotation (100 at 1200 chirps/rev)."""
    return max(8, round(cfg.chirps_per_rotation * DEFAULT_WINDOW_SPAN_RAD / TWO_PI))


@dataclass
class Spectrogram:
    """Compensated slow-time spectrogram of one range gate.

    magnitudes has shape (window centers, frequency bins); frequencies are
    fftshifted so index 0 is the most negative frequency.
    """

    magnitudes: np.ndarray
    window_centers_s: np.ndarray
    freqs_hz: np.ndarray
    window_len: int
    hop: int
    range_bin: int

    def __post_init__(self):
        if self.magnitudes.shape != (len(self.window_centers_s), len(self.freqs_hz)):
            raise InvalidConfig(
                f"spectrogram shape {self.magnitudes.shape} inconsistent with axes"
            )


@dataclass(frozen=True)
class LineDetection:
    """One fixed-slope ridge found in a spectrogram.

    local_slope_hz_per_s is the slope actually fit through the per-column
    peaks; platform motion makes it deviate from the nominal rotational
    slope, and downstream refinement uses the local line directly.
    """

    intercept_hz: float
    support: float
    peak_tc_s: float
    peak_f_hz: float
    peak_power: float
    local_slope_hz_per_s: float = 0.0


@dataclass(frozen=True)
class RansacParams:
    iterations: int = 500
    inlier_threshold_hz: float | None = None  # None: 2 slow-time bins
    min_inlier_ratio: float = 0.5
    seed: int = 0


@dataclass(frozen=True)
class MotionEstimate:
    speed_m_s: float
    heading_rad: float
    inlier_count: int
    residual_rms_hz: float
    degenerate: bool = False
    low_confidence: bool = False

    def __post_init__(self):
        if self.speed_m_s < 0:
            raise InvalidConfig("speed_m_s must be >= 0")
        object.__setattr__(self, "heading_rad", self.heading_rad % TWO_PI)


def compensate_rotation(
    slow_time: np.ndarray,
    cfg: RadarConfig,
    t_c: float,
    times: np.ndarray | None = None,
) -> np.ndarray:
    """Cancel the arm-rotation phase of a slow-time sequence.

    Multiplies sample at time t by exp{j 4 pi r cos(omega (t_c - t)) / lambda},
    which de-chirps a static reflector near boresight at t_c. ``times`` are
    the absolute chirp times of the samples (defaults to 0, 1/prf, ...).
    """
    slow_time = np.asarray(slow_time)
    if times is None:
        times = np.arange(len(slow_time)) / cfg.prf_hz
    phase = (
        2.0
        * TWO_PI
        * cfg.rotation_radius_m
        / cfg.wavelength_m
        * np.cos(cfg.angular_speed_rad_s * (t_c - times))
    )
    return slow_time * np.exp(1j * phase)


def range_gate_series(
    cube: RawCube, range_bin: int, antenna: int = 0, window: str = "hann"
) -> np.ndarray:
    """Per-chirp windowed range-FFT value at one bin, shape (chirps,)."""
    cfg = cube.cfg
    if not 0 <= range_bin < cfg.samples_per_chirp:
        raise InvalidConfig(f"range_bin {range_bin} out of [0, {cfg.samples_per_chirp})")
    if not 0 <= antenna < cfg.num_antennas:
        raise InvalidConfig(f"antenna {antenna} out of [0, {cfg.num_antennas})")
    from .imaging import _fast_time_window

    taper = _fast_time_window(cfg.samples_per_chirp, window)
    data = cube.samples[antenna] * taper[None, :]
    n = cfg.samples_per_chirp
    # Goertzel-style single-bin DFT; cheaper than a full FFT per chirp.
    basis = np.exp(-1j * TWO_PI * range_bin * np.arange(n) / n)
    return data @ basis


def build_spectrogram(
    cube: RawCube,
    range_bin: int,
    window_len: int | None = None,
    hop: int | None = None,
    antenna: int = 0,
    pad_factor: int = 4,
) -> Spectrogram:
    """Rotation-compensated slow-time spectrogram of one range gate."""
    cfg = cube.cfg
    total = cfg.chirps_per_rotation
    if window_len is None:
        window_len = default_window_len(cfg)
    if hop is None:
        hop = max(1, window_len // 4)
    if window_len > total:
        raise InvalidConfig(f"window_len {window_len} exceeds cube length {total}")
    if window_len < 8:
        raise InvalidConfig(f"window_len {window_len} too short")

    gate = range_gate_series(cube, range_bin, antenna=antenna)
    times = cfg.chirp_times()
    taper = np.hanning(window_len)
    nfft = window_len * max(1, pad_factor)
    starts = np.arange(0, total - window_len + 1, hop)
    centers = times[starts] + (window_len - 1) / (2.0 * cfg.prf_hz)

    mags = np.empty((len(starts), nfft))
    for i, s in enumerate(starts):
        chunk = gate[s : s + window_len]
        comp = compensate_rotation(chunk, cfg, centers[i], times=times[s : s + window_len])
        mags[i] = np.abs(np.fft.fftshift(np.fft.fft(comp * taper, n=nfft)))
    freqs = np.fft.fftshift(np.fft.fftfreq(nfft, d=1.0 / cfg.prf_hz))
    return Spectrogram(
        magnitudes=mags,
        window_centers_s=centers,
        freqs_hz=freqs,
        window_len=window_len,
        hop=hop,
        range_bin=range_bin,
    )


def _parabolic_offset(y0: float, y1: float, y2: float) -> float:
    """Sub-sample offset of the vertex through three equidistant samples."""
    denom = y0 - 2.0 * y1 + y2
    if denom >= -1e-300:
        return 0.0
    return float(np.clip(0.5 * (y0 - y2) / denom, -0.5, 0.5))


def _line_column_peaks(spec: Spectrogram, slope: float, intercept: float, half_width: int):
    """Per-column local peak magnitude and refined frequency near the line.

    Among the local maxima inside the search window, each column keeps the
    one with the best magnitude-over-distance score rather than the raw
    argmax: a stronger parallel ridge just outside the window can push its
    spectral shoulder inside, and plain argmax would lock onto it.
    """
    n_cols, n_freq = spec.magnitudes.shape
    df = spec.freqs_hz[1] - spec.freqs_hz[0]
    sigma = 10.0 * df
    f_line = slope * spec.window_centers_s + intercept
    idx = np.round((f_line - spec.freqs_hz[0]) / df).astype(int)
    peak_mag = np.zeros(n_cols)
    peak_f = np.full(n_cols, np.nan)
    for c in range(n_cols):
        lo = max(1, idx[c] - half_width)
        hi = min(n_freq - 1, idx[c] + half_width + 1)
        if hi - lo < 1:
            continue
        m = spec.magnitudes[c]
        seg = m[lo:hi]
        is_max = (seg >= m[lo - 1 : hi - 1]) & (seg > m[lo + 1 : hi + 1])
        cand = np.flatnonzero(is_max) + lo
        if cand.size == 0:
            continue
        score = m[cand] / (1.0 + ((spec.freqs_hz[cand] - f_line[c]) / sigma) ** 2)
        k = int(cand[score.argmax()])
        delta = _parabolic_offset(m[k - 1], m[k], m[k + 1])
        peak_f[c] = spec.freqs_hz[k] + delta * df
        # vertex value, not the integer-bin sample: the crest slides ~2.4
        # padded bins per column and raw sampling aliases into a few-percent
        # magnitude ripple along the ridge
        peak_mag[c] = m[k] + 0.25 * (m[k + 1] - m[k - 1]) * delta
    return peak_mag, peak_f


def _crest_interior(values, c0: int, lo: int, hi: int, frac: float = 0.8):
    """True when the region >= frac * peak around c0 sits strictly inside."""
    top = frac * values[c0]
    t_lo = c0
    while t_lo > lo and values[t_lo - 1] >= top:
        t_lo -= 1
    t_hi = c0
    while t_hi < hi and values[t_hi + 1] >= top:
        t_hi += 1
    return t_lo > 0 and t_hi < len(values) - 1


def _refine_ridge(spec: Spectrogram, cfg: RadarConfig, slope: float, intercept: float):
    """Local ridge readout around a Hough candidate.

    Platform motion adds its own frequency slope on top of the fixed
    rotational one, so the candidate line is only used to seed the search:
    per-column peaks are re-fit with a free local slope, the boresight
    crossing t_c* comes from the amplitude centroid of the strong columns
    (the radiation pattern is symmetric about boresight), and f* is the
    local line evaluated there. Returns (t_c*, f*, weight) or None.
    """
    df = spec.freqs_hz[1] - spec.freqs_hz[0]
    # Platform motion tilts the ridge by up to ~2 v_max omega / lambda
    # relative to the rotational slope, which moves the outer-column peaks
    # well away from the seed line; search wide first, then narrow around
    # the refit line. The slope clamp keeps noise captures from producing
    # unphysical lines.
    max_tilt = 1.5 * cfg.angular_speed_rad_s / effective_wavelength(cfg)
    lobe_s = 0.45 / cfg.angular_speed_rad_s
    wide = max(4, int(math.ceil(max_tilt * lobe_s / df)))
    local_slope, local_b = slope, intercept
    peak_mag = peak_f = None
    for half in (wide, max(3, wide // 2), max(3, wide // 4)):
        peak_mag, peak_f = _line_column_peaks(spec, local_slope, local_b, half)
        good = (peak_mag >= 0.35 * peak_mag.max()) & np.isfinite(peak_f)
        if good.sum() < 3:
            return None
        t = spec.window_centers_s[good]
        w = peak_mag[good]
        fit = np.polyfit(t, peak_f[good], 1, w=w)
        local_slope = min(max(float(fit[0]), slope - max_tilt), slope + max_tilt)
        t_mid = float(np.average(t, weights=w))
        local_b = float(np.polyval(fit, t_mid)) - local_slope * t_mid

    # The gain lobe is symmetric about the crossing, so centroid over an
    # index window symmetric about the argmax; equal clipping on both sides
    # keeps the estimate unbiased when the lobe is cut off at a spectrogram
    # edge.
    c0 = int(peak_mag.argmax())
    lobe = 0.35 * peak_mag[c0]
    lo = c0
    while lo > 0 and peak_mag[lo - 1] >= lobe:
        lo -= 1
    hi = c0
    while hi < len(peak_mag) - 1 and peak_mag[hi + 1] >= lobe:
        hi += 1
    if not _crest_interior(peak_mag, c0, lo, hi):
        # Lobe crest cut off at a spectrogram edge (reflector azimuth near
        # the rotation start): the crossing time cannot be read reliably,
        # and a misplaced t* leaks rotational Doppler. A clipped outer
        # skirt with the crest in full view is fine.
        return None
    half = min(c0 - lo, hi - c0)
    if half == 0:
        if not 0 < c0 < len(peak_mag) - 1:
            return None
        dt = _parabolic_offset(peak_mag[c0 - 1], peak_mag[c0], peak_mag[c0 + 1])
        hop_s = spec.window_centers_s[1] - spec.window_centers_s[0]
        t_star = float(spec.window_centers_s[c0] + dt * hop_s)
    else:
        sel = slice(c0 - half, c0 + half + 1)
        w = peak_mag[sel] ** 2
        t_star = float(np.average(spec.window_centers_s[sel], weights=w))
    f_star = local_slope * t_star + local_b
    return t_star, f_star, float(peak_mag[c0]), local_slope


def detect_lines(
    spec: Spectrogram,
    cfg: RadarConfig,
    threshold: float = 0.4,
    max_lines: int = 4,
    noise_sigmas: float = 6.0,
) -> list[LineDetection]:
    """Constrained Hough: accumulate along lines of the fixed ridge slope.

    Shears each spectrogram column by slope * t_c so a ridge becomes a
    vertical line, sums magnitudes over columns per intercept, and keeps
    local maxima above threshold * (global max). An absolute gate at
    noise_sigmas robust deviations above the accumulator median rejects
    noise-only spectrograms.
    """
    if spec.magnitudes.size == 0:
        raise InvalidConfig("empty spectrogram")
    slope = ridge_slope_hz_per_s(cfg)
    mags = spec.magnitudes
    n_cols, n_freq = mags.shape
    df = spec.freqs_hz[1] - spec.freqs_hz[0]

    # Intercepts run from freqs[0] - slope*t_max up to freqs[-1] - slope*t_min,
    # well beyond the frequency axis itself, so accumulate on an extended axis.
    t_min = float(spec.window_centers_s[0])
    t_max = float(spec.window_centers_s[-1])
    n_ext = n_freq + int(math.ceil(slope * (t_max - t_min) / df))
    b_axis = (spec.freqs_hz[0] - slope * t_max) + np.arange(n_ext) * df
    acc = np.zeros(n_ext)
    for c in range(n_cols):
        # Column value at intercept b is the magnitude at f = slope*t_c + b.
        acc += np.interp(
            b_axis + slope * spec.window_centers_s[c],
            spec.freqs_hz,
            mags[c],
            left=0.0,
            right=0.0,
        )
    if not np.any(acc > 0):
        return []

    median = float(np.median(acc))
    mad = float(np.median(np.abs(acc - median)))
    floor = median + noise_sigmas * 1.4826 * max(mad, 1e-300)
    peak_gate = max(threshold * float(acc.max()), floor)

    is_peak = np.zeros(n_ext, dtype=bool)
    is_peak[1:-1] = (acc[1:-1] >= acc[:-2]) & (acc[1:-1] > acc[2:]) & (acc[1:-1] >= peak_gate)
    order = np.argsort(acc[is_peak])[::-1]
    candidates = np.flatnonzero(is_peak)[order]

    # Peak spacing: the unpadded slow-time mainlobe width, in padded bins.
    min_sep = max(2, int(round(2.0 * cfg.prf_hz / spec.window_len / df)))
    claimed: list[int] = []
    detections: list[LineDetection] = []
    for i in candidates:
        if len(detections) >= max_lines:
            break
        if any(abs(i - j) < min_sep for j in claimed):
            continue
        claimed.append(int(i))
        delta = _parabolic_offset(acc[i - 1], acc[i], acc[i + 1]) if 0 < i < n_ext - 1 else 0.0
        coarse = float(b_axis[i] + delta * df)

        refined = _refine_ridge(spec, cfg, slope, coarse)
        if refined is None:
            continue
        peak_tc, peak_f, peak_mag, local_slope = refined
        # Distinct accumulator candidates can refine onto the same ridge.
        if any(
            abs(peak_tc - d.peak_tc_s) < 0.005 and abs(peak_f - d.peak_f_hz) < 30.0
            for d in detections
        ):
            continue
        detections.append(
            LineDetection(
                intercept_hz=float(peak_f - slope * peak_tc),
                support=float(acc[i]),
                peak_tc_s=float(peak_tc),
                peak_f_hz=float(peak_f),
                peak_power=float(peak_mag**2),
                local_slope_hz_per_s=float(local_slope),
            )
        )
    return detections


def estimate_motion(
    peaks,
    cfg: RadarConfig,
    params: RansacParams | None = None,
    prev_heading: float = 0.0,
) -> MotionEstimate:
    """RANSAC sinusoid fit of ridge peaks to platform (speed, heading).

    peaks: sequence of (t_c*, f*) pairs pooled over range gates. The model
    is f = alpha cos(omega t_c) + beta sin(omega t_c) with
    alpha = -(2 v / lambda) cos(heading), beta = -(2 v / lambda) sin(heading).
    """
    if params is None:
        params = RansacParams()
    pts = np.atleast_2d(np.asarray(peaks, dtype=float))
    if pts.size == 0 or pts.shape[0] < 2 or pts.shape[1] != 2:
        raise EstimationError(f"need at least 2 ridge peaks, got {0 if pts.size == 0 else pts.shape[0]}")
    tc, f = pts[:, 0], pts[:, 1]
    n = len(tc)
    thr = params.inlier_threshold_hz
    if thr is None:
        thr = 2.0 * cfg.prf_hz / default_window_len(cfg)

    design = np.column_stack(
        [np.cos(cfg.angular_speed_rad_s * tc), np.sin(cfg.angular_speed_rad_s * tc)]
    )

    def score(model):
        residual = f - design @ model
        inliers = np.abs(residual) <= thr
        count = int(inliers.sum())
        rms = float(np.sqrt(np.mean(residual[inliers] ** 2))) if count else math.inf
        # Tie-break on all-point rms: a minimal sample always fits its own
        # two points exactly, so inlier rms alone cannot rank candidates.
        rms_all = float(np.sqrt(np.mean(residual**2)))
        return inliers, count, rms, rms_all

    best = None  # (count, -rms, model, inliers)
    if n * (n - 1) // 2 <= params.iterations:
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    else:
        rng = np.random.default_rng(params.seed)
        draws = rng.integers(0, n, size=(params.iterations, 2))
        pairs = [(int(i), int(j)) for i, j in draws if i != j]
    for i, j in pairs:
        a = design[[i, j]]
        det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
        if abs(det) < 1e-9:
            continue
        model = np.linalg.solve(a, f[[i, j]])
        inliers, count, _, rms_all = score(model)
        key = (count, -rms_all)
        if best is None or key > best[0]:
            best = (key, model, inliers)
    if best is None:
        raise EstimationError("RANSAC found no valid minimal sample")

    _, model, inliers = best
    if inliers.sum() >= 2:
        model, *_ = np.linalg.lstsq(design[inliers], f[inliers], rcond=None)
        inliers, count, rms, _ = score(model)
    else:
        count, rms = int(inliers.sum()), 0.0

    alpha, beta = float(model[0]), float(model[1])
    lam = effective_wavelength(cfg)
    speed = lam * math.hypot(alpha, beta) / 2.0
    low_confidence = count < params.min_inlier_ratio * n
    if speed < DEGENERATE_SPEED_M_S:
        return MotionEstimate(
            speed_m_s=speed,
            heading_rad=prev_heading,
            inlier_count=count,
            residual_rms_hz=rms if math.isfinite(rms) else 0.0,
            degenerate=True,
            low_confidence=low_confidence,
        )
    heading = math.atan2(-beta, -alpha) % TWO_PI
    return MotionEstimate(
        speed_m_s=speed,
        heading_rad=heading,
        inlier_count=count,
        residual_rms_hz=rms,
        degenerate=False,
        low_confidence=low_confidence,
    )


def select_range_gates(
    cube: RawCube,
    num_gates: int = 8,
    min_range_m: float = 0.5,
    antenna: int = 0,
    exclusion_bins: int = 2,
    min_rel_energy: float = 1e-3,
) -> list[int]:
    """Top-energy range bins beyond min_range, greedily non-adjacent.

    Bins far below the strongest gate carry no usable ridge (noise, range
    sidelobes, or pattern-cutoff ghosts) and are skipped.
    """
    cfg = cube.cfg
    from .imaging import _fast_time_window

    taper = _fast_time_window(cfg.samples_per_chirp, "hann")
    spectra = np.fft.fft(cube.samples[antenna] * taper[None, :], axis=1)
    energy = np.mean(np.abs(spectra) ** 2, axis=0)
    first = max(1, int(math.ceil(min_range_m / cfg.range_bin_m)))
    order = np.argsort(energy[first:])[::-1] + first
    floor = min_rel_energy * float(energy[order[0]]) if order.size else 0.0
    chosen: list[int] = []
    for b in order:
        if len(chosen) >= num_gates or energy[b] < floor:
            break
        if all(abs(int(b) - c) > exclusion_bins for c in chosen):
            chosen.append(int(b))
    return chosen


def _crossing_from_gates(spec_for, gate: int, line: LineDetection, cfg: RadarConfig):
    """Crossing time from ridge power summed over adjacent range gates.

    A single gate sees the gain lobe through its Hann range response while
    the beat migrates, which skews the lobe; summing power over adjacent
    gates flattens it again. The callback supplies fine-hop spectrograms and
    the vertex comes from a quadratic fit across the whole lobe top, which
    averages out residual along-ridge ripple that a 3-point parabola would
    follow. Returns (t_c*, f*) or None when the lobe is cut off at an edge;
    f* is read from the detection's local line at the refined time.
    """
    center = spec_for(gate)
    if center is None:
        return None
    a = line.local_slope_hz_per_s
    b = line.peak_f_hz - a * line.peak_tc_s
    df = center.freqs_hz[1] - center.freqs_hz[0]
    half = max(3, int(round(25.0 / df)))
    power = np.zeros(center.magnitudes.shape[0])
    for g in range(gate - 2, gate + 3):
        sp = spec_for(g)
        if sp is None:
            continue
        mag, _ = _line_column_peaks(sp, a, b, half)
        power += mag**2
    if not np.any(power > 0):
        return None

    c0 = int(power.argmax())
    lobe = 0.35**2 * power[c0]
    lo = c0
    while lo > 0 and power[lo - 1] >= lobe:
        lo -= 1
    hi = c0
    while hi < len(power) - 1 and power[hi + 1] >= lobe:
        hi += 1
    if not _crest_interior(power, c0, lo, hi, frac=0.8**2):
        return None
    if not 0 < c0 < len(power) - 1:
        return None
    top = 0.8 * power[c0]
    t_lo = c0
    while t_lo > lo and power[t_lo - 1] >= top:
        t_lo -= 1
    t_hi = c0
    while t_hi < hi and power[t_hi + 1] >= top:
        t_hi += 1
    t_cols = center.window_centers_s[t_lo : t_hi + 1]
    t_star = float(center.window_centers_s[c0])
    if t_hi - t_lo >= 2:
        coef = np.polyfit(t_cols - t_star, np.log(power[t_lo : t_hi + 1]), 2)
        if coef[0] < 0:
            vert = -coef[1] / (2.0 * coef[0])
            span = float(t_cols[-1] - t_cols[0])
            t_star += min(max(vert, -span), span)
    else:
        tri = power[c0 - 1 : c0 + 2]
        dt = _parabolic_offset(*np.log(tri)) if np.all(tri > 0) else _parabolic_offset(*tri)
        hop_s = center.window_centers_s[1] - center.window_centers_s[0]
        t_star += dt * hop_s
    return t_star, float(a * t_star + b)


def estimate_motion_from_cube(
    cube: RawCube,
    num_gates: int = 8,
    min_range_m: float = 0.5,
    window_len: int | None = None,
    hop: int | None = None,
    threshold: float = 0.4,
    params: RansacParams | None = None,
    prev_heading: float = 0.0,
    antenna: int = 0,
) -> MotionEstimate:
    """End-to-end ego-motion estimate from a raw cube (gate -> ridge -> fit).

    The crossing time is read from the amplitude lobe of ridge power summed
    over adjacent gates on a fine-hop spectrogram (see
    _crossing_from_gates), and the frequency from the local ridge line at
    that time. The cosine model is then refit a few times with the
    closed-form bearing-drift correction: the gain lobe is centered on the
    reflector's t=0 azimuth while the bearing itself drifts under platform
    motion, which leaks df = (2/lambda)(v sin(psi)/D) t (v sin(psi) +
    r omega) into each measured peak.
    """
    cfg = cube.cfg
    coarse: dict[int, Spectrogram] = {}
    fine: dict[int, Spectrogram] = {}
    fine_hop = max(1, (hop or default_window_len(cfg) // 4) // 5)

    def spec_cached(cache, gate, use_hop):
        if not 1 <= gate <= cfg.samples_per_chirp - 1:
            return None
        if gate not in cache:
            cache[gate] = build_spectrogram(
                cube, gate, window_len=window_len, hop=use_hop, antenna=antenna
            )
        return cache[gate]

    def spec_fine(gate: int) -> Spectrogram | None:
        return spec_cached(fine, gate, fine_hop)

    raw: list[tuple[float, float, float, float]] = []
    for gate in select_range_gates(cube, num_gates, min_range_m, antenna=antenna):
        spec = spec_cached(coarse, gate, hop)
        if spec is None:
            continue
        for line in detect_lines(spec, cfg, threshold=threshold):
            refined = _crossing_from_gates(spec_fine, gate, line, cfg)
            if refined is None:
                continue
            dist = max(gate * cfg.range_bin_m, min_range_m)
            raw.append(refined + (line.peak_power, 1.0 / dist))

    # The same reflector straddles adjacent gates; merge peaks that share a
    # crossing time so one reflector contributes one equation to the fit.
    # The gap must stay below the angular spacing of distinct reflectors a
    # gate can resolve, or close pairs collapse into one blended equation.
    raw.sort()
    merged: list[tuple[float, float, float]] = []
    group: list[tuple[float, float, float, float]] = []
    for entry in raw + [(math.inf, 0.0, 0.0, 0.0)]:
        if group and entry[0] - group[-1][0] > 0.005:
            arr = np.array(group)
            w = arr[:, 2]
            merged.append((float(np.average(arr[:, 0], weights=w)),
                           float(np.average(arr[:, 1], weights=w)),
                           float(np.average(arr[:, 3], weights=w))))
            group = []
        group.append(entry)
    if len(merged) < 2:
        raise EstimationError(
            f"only {len(merged)} ridge peaks detected; need at least 2"
        )

    peaks = [(t_c, f_hz) for t_c, f_hz, _ in merged]
    est = estimate_motion(peaks, cfg, params=params, prev_heading=prev_heading)
    lam_e = effective_wavelength(cfg)
    omega = cfg.angular_speed_rad_s
    r_omega = cfg.rotation_radius_m * omega
    for _ in range(3):
        if est.degenerate or est.speed_m_s > 1.5:
            break
        corrected = []
        for t_c, f_hz, inv_d in merged:
            sin_psi = math.sin(est.heading_rad - omega * t_c)
            bias = (2.0 / lam_e) * (est.speed_m_s * t_c * inv_d) * sin_psi * (
                est.speed_m_s * sin_psi + r_omega
            )
            corrected.append((t_c, f_hz - bias))
        est = estimate_motion(corrected, cfg, params=params, prev_heading=prev_heading)
    return est


# -- exports ---------------------------------------------------------------


def save_spectrogram_csv(spec: Spectrogram, path: str | Path) -> None:
    """CSV with window-center times on the first row, freqs on first column."""
    with open(path, "w") as fh:
        fh.write("f_hz/t_c_s," + ",".join(f"{t:.9g}" for t in spec.window_centers_s) + "\n")
        for row, freq in enumerate(spec.freqs_hz):
            vals = ",".join(f"{v:.9g}" for v in spec.magnitudes[:, row])
            fh.write(f"{freq:.9g},{vals}\n")


def format_motion_record(est: MotionEstimate) -> str:
    """Single-line structured record of an estimate."""
    return (
        f"v_m_s={est.speed_m_s:.6f} heading_rad={est.heading_rad:.6f} "
        f"inliers={est.inlier_count} residual_hz={est.residual_rms_hz:.3f} "
        f"degenerate={int(est.degenerate)} low_confidence={int(est.low_confidence)}"
    )


def parse_motion_record(line: str) -> MotionEstimate:
    try:
        fields = dict(part.split("=", 1) for part in line.split())
        return MotionEstimate(
            speed_m_s=float(fields["v_m_s"]),
            heading_rad=float(fields["heading_rad"]),
            inlier_count=int(fields["inliers"]),
            residual_rms_hz=float(fields["residual_hz"]),
            degenerate=bool(int(fields.get("degenerate", "0"))),
            low_confidence=bool(int(fields.get("low_confidence", "0"))),
        )
    except (ValueError, KeyError) as exc:
        raise FormatError(f"malformed motion record {line!r}") from exc
