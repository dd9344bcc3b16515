"""
EMG processing: envelope extraction, torque calibration, reciprocal /
cocontraction decomposition, trial averaging, normalisation and spectra.
"""
import logging

import numpy as np
from scipy import signal
from scipy.fft import rfft, rfftfreq
from scipy.integrate import trapezoid
from scipy.ndimage import uniform_filter1d
from scipy.stats import pearsonr

from oie.errors import DomainError, FitError
from oie.models import ActivationDecomposition, Calibration, CorrelationReport, EmgSeries, Spectrum

logger = logging.getLogger(__name__)

HIGHPASS_HZ = 20.0
LOWPASS_HZ = 15.0
FILTER_ORDER = 2
MIN_SPECTRUM_SAMPLES = 256


# --- Envelope ---
def _butter(cutoff: float, btype: str, rate: float) -> np.ndarray:
    # scipy designs through the bilinear transform with pre-warped cutoff
    return signal.butter(FILTER_ORDER, cutoff, btype=btype, fs=rate, output="sos")


def filter_stages(rate: float) -> tuple[np.ndarray, np.ndarray]:
    """(high-pass, low-pass) second-order sections of the envelope at `rate`."""
    return _butter(HIGHPASS_HZ, "highpass", rate), _butter(LOWPASS_HZ, "lowpass", rate)


def _apply(sos: np.ndarray, x: np.ndarray, zero_phase: bool) -> np.ndarray:
    if zero_phase:
        return signal.sosfiltfilt(sos, x)
    # initial state at steady state for the first sample
    zi = signal.sosfilt_zi(sos) * x[0]
    y, _ = signal.sosfilt(sos, x, zi=zi)
    return y


def envelope(raw: EmgSeries, zero_phase: bool = False) -> EmgSeries:
    """High-pass 20 Hz, rectify, low-pass 15 Hz (second-order Butterworth stages)."""
    if raw.rate <= 2 * HIGHPASS_HZ:
        raise DomainError(f"Sampling rate {raw.rate:g} Hz is too low for the {HIGHPASS_HZ:g} Hz high-pass stage")
    x = raw.samples
    if x.size == 0:
        return EmgSeries(samples=x.copy(), rate=raw.rate)
    high_sos, low_sos = filter_stages(raw.rate)
    high = _apply(high_sos, x, zero_phase)
    env = _apply(low_sos, np.abs(high), zero_phase)
    return EmgSeries(samples=env, rate=raw.rate)


def highpass_gain(freq_hz: float, rate: float) -> float:
    """|H(f)| of the digital high-pass stage."""
    _, h = signal.sosfreqz(filter_stages(rate)[0], worN=[freq_hz], fs=rate)
    return float(np.abs(h[0]))


# --- Calibration ---
def calibrate(points) -> Calibration:
    """Least-squares line torque = alpha0 * envelope + alpha1 over (envelope, torque) pairs."""
    arr = np.asarray(list(points), dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise DomainError("Calibration points must be (envelope, torque) pairs")
    env, torque = arr[:, 0], arr[:, 1]
    if np.unique(torque).size < 2:
        raise FitError("Calibration needs at least two distinct torque levels")
    if np.ptp(env) == 0.0:
        raise FitError("Calibration design is degenerate: all envelope values are identical")

    design = np.column_stack([env, np.ones_like(env)])
    (alpha0, alpha1), _, _, _ = np.linalg.lstsq(design, torque, rcond=None)
    cal = Calibration(alpha0=float(alpha0), alpha1=float(alpha1))
    for problem in cal.violations:
        logger.warning(f"Calibration: {problem}")
    return cal


def apply_calibration(env, cal: Calibration) -> np.ndarray:
    return cal.alpha0 * np.asarray(env, dtype=float) + cal.alpha1


# --- Decomposition ---
def decompose(tau_f, tau_e) -> ActivationDecomposition:
    """Reciprocal activation tau_f - tau_e and cocontraction min(tau_f, tau_e)."""
    tau_f = np.asarray(tau_f, dtype=float)
    tau_e = np.asarray(tau_e, dtype=float)
    if tau_f.shape != tau_e.shape:
        raise DomainError("Flexor and extensor series differ in length", detail=f"{tau_f.shape} vs {tau_e.shape}")
    return ActivationDecomposition(reciprocal=tau_f - tau_e, cocontraction=np.minimum(tau_f, tau_e))


def trial_mean(u, rate: float = 100.0, skip_s: float = 0.0) -> float:
    """Time average by the trapezoidal rule, optionally ignoring the first skip_s seconds."""
    u = np.asarray(u, dtype=float)
    start = int(round(skip_s * rate))
    u = u[start:]
    if u.size < 2:
        raise DomainError("Trial mean needs at least two samples after the skipped transient")
    span = (u.size - 1) / rate
    return float(trapezoid(u, dx=1.0 / rate) / span)


def normalize(trial_means) -> np.ndarray:
    """(u - min) / (max - min) over one participant's trials."""
    values = np.asarray(trial_means, dtype=float)
    if values.size < 2:
        raise DomainError("Normalisation needs at least two trial means")
    span = float(np.ptp(values))
    if span == 0.0:
        raise DomainError("Normalisation range is zero: all trial means are equal")
    return (values - values.min()) / span


# --- Spectra ---
def spectrum(series, rate: float = 100.0, threshold: float = 3.0, smooth_bins: int = 5,
             min_relative: float = 0.01) -> Spectrum:
    """
    One-sided Hann-windowed amplitude spectrum. Amplitudes are scaled so their
    squares sum to the energy of the windowed signal. A peak is a local maximum
    of the smoothed amplitude above `threshold` times its median (and above
    `min_relative` of its maximum), located at the largest raw bin within
    two bins of it.
    """
    x = np.asarray(series, dtype=float)
    n = x.size
    if n < MIN_SPECTRUM_SAMPLES:
        raise DomainError(f"Spectrum needs at least {MIN_SPECTRUM_SAMPLES} samples", detail=f"got {n}")

    windowed = signal.detrend(x, type="constant") * signal.windows.hann(n, sym=False)
    coeffs = np.abs(rfft(windowed)) / np.sqrt(n)
    amplitude = coeffs * np.sqrt(2.0)
    amplitude[0] = coeffs[0]
    if n % 2 == 0:
        amplitude[-1] = coeffs[-1]
    freq = rfftfreq(n, d=1.0 / rate)

    smooth = uniform_filter1d(amplitude, size=smooth_bins, mode="nearest")
    floor = max(threshold * float(np.median(smooth)), min_relative * float(smooth.max()))
    candidates, _ = signal.find_peaks(smooth, height=floor if floor > 0 else None, distance=3)

    peaks = []
    for idx in candidates:
        lo, hi = max(idx - 2, 0), min(idx + 3, amplitude.size)
        best = lo + int(np.argmax(amplitude[lo:hi]))
        if not peaks or best != peaks[-1]:
            peaks.append(best)
    return Spectrum(freq=freq, amplitude=amplitude, peaks=freq[np.asarray(sorted(set(peaks)), dtype=int)])


def activation_correlation(reciprocal, target, rate: float = 100.0, max_lag_s: float = 1.0) -> CorrelationReport:
    """Pearson r between reciprocal activation and target motion, at zero lag and at the best lag."""
    a = np.asarray(reciprocal, dtype=float)
    b = np.asarray(target, dtype=float)
    if a.shape != b.shape or a.size < 3:
        raise DomainError("Correlation needs two equally long series of at least 3 samples")
    zero = float(pearsonr(a, b)[0])

    best_r, best_lag = zero, 0
    max_lag = int(round(max_lag_s * rate))
    for lag in range(-max_lag, max_lag + 1):
        if lag == 0 or abs(lag) >= a.size - 2:
            continue
        if lag > 0:
            r = float(pearsonr(a[lag:], b[:-lag])[0])
        else:
            r = float(pearsonr(a[:lag], b[-lag:])[0])
        if abs(r) > abs(best_r):
            best_r, best_lag = r, lag
    return CorrelationReport(zero_lag_r=zero, best_lag_r=best_r, best_lag_s=best_lag / rate)
