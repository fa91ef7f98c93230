"""Simulated planar vibrotactile actuator.

Models the actuator as a linear band-pass (Butterworth, 50-500 Hz by
default) driven by the PWM duty envelope modulating a normalized carrier
waveform, with additive Gaussian noise at a configurable floor. Also
provides the input-vs-render similarity metrics used for physical
characterization.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import signal as sps

from .errors import DataError, ParameterError
from .pipeline import PwmStream, moving_average
from .seeds import derive_rng
from .textures import AccelTrace, scalar_trace

# Coherence is averaged over the actuator's tactile band [Hz].
COHERENCE_BAND = (50.0, 500.0)
ENVELOPE_WINDOW_S = 0.020
WELCH_SEGMENT = 256


@dataclass(frozen=True)
class ActuatorModel:
    """Linear band-pass response model of one actuator.

    ``gain`` is output acceleration [m/s^2] per unit duty at full carrier;
    ``order`` is the total band-pass order (even); ``noise_floor_rms`` is
    the RMS of the additive output noise [m/s^2].
    """

    band_lo_hz: float = 50.0
    band_hi_hz: float = 500.0
    gain: float = 20.0
    order: int = 4
    noise_floor_rms: float = 0.01

    def __post_init__(self):
        if not (0 < self.band_lo_hz < self.band_hi_hz):
            raise ParameterError("need 0 < band_lo < band_hi")
        if self.gain <= 0:
            raise ParameterError(f"gain must be positive, got {self.gain:g}")
        if self.order < 2 or self.order % 2:
            raise ParameterError(f"order must be even and >= 2, got {self.order}")
        if self.noise_floor_rms < 0:
            raise ParameterError("noise_floor_rms must be >= 0")

    def band_sos(self, rate_hz: float) -> np.ndarray:
        if self.band_hi_hz >= rate_hz / 2:
            raise ParameterError(
                f"band_hi {self.band_hi_hz:g} Hz needs a sample rate above "
                f"{2 * self.band_hi_hz:g} Hz, got {rate_hz:g}"
            )
        return sps.butter(
            self.order // 2,
            [self.band_lo_hz, self.band_hi_hz],
            btype="bandpass",
            fs=rate_hz,
            output="sos",
        )

    def gain_at(self, freq_hz: float, rate_hz: float) -> float:
        """Magnitude response of the band model at one frequency."""
        _, h = sps.sosfreqz(self.band_sos(rate_hz), worN=[freq_hz], fs=rate_hz)
        return float(np.abs(h[0]))


@dataclass(frozen=True)
class RenderComparison:
    """Similarity of a rendered signal r to its reference input s."""

    rms_error: float
    spectral_coherence_mean: float
    envelope_correlation: float

    def __post_init__(self):
        if not (0 <= self.spectral_coherence_mean <= 1):
            raise DataError("coherence mean out of [0, 1]")
        if not (-1 <= self.envelope_correlation <= 1):
            raise DataError("envelope correlation out of [-1, 1]")
        if self.rms_error < 0:
            raise DataError("rms_error must be >= 0")

    def to_dict(self) -> dict:
        return {
            "rms_error": self.rms_error,
            "spectral_coherence_mean": self.spectral_coherence_mean,
            "envelope_correlation": self.envelope_correlation,
        }


def render(
    drive: PwmStream,
    model: ActuatorModel,
    carrier: np.ndarray,
    carrier_rate_hz: float | None = None,
    seed: int = 0,
) -> AccelTrace:
    """Render a PWM drive into output acceleration (single axis).

    The duty envelope is upsampled onto the carrier timeline and
    multiplies the peak-normalized carrier, so the spectral content of the
    pre-encoding signal survives duty modulation. The product passes
    through the actuator band model; Gaussian noise at the model's floor
    is added on top. Deterministic given ``seed``.
    """
    if carrier_rate_hz is None:
        carrier_rate_hz = drive.frame_rate_hz
    if drive.frame_rate_hz < 2 * model.band_hi_hz:
        raise ParameterError(
            f"drive frame rate {drive.frame_rate_hz:g} Hz is below twice the "
            f"actuator band ({2 * model.band_hi_hz:g} Hz)"
        )
    carrier = np.asarray(carrier, dtype=float)
    if carrier.ndim != 1 or carrier.size == 0:
        raise ParameterError("carrier must be a non-empty 1-D array")

    window = carrier_rate_hz / drive.frame_rate_hz
    if abs(window - round(window)) > 1e-9 or window < 1:
        raise ParameterError(
            f"carrier rate {carrier_rate_hz:g} Hz must be an integer multiple "
            f"of the drive frame rate {drive.frame_rate_hz:g} Hz"
        )
    duty = np.repeat(drive.duty, int(round(window)))
    n = min(duty.size, carrier.size)
    duty, carrier = duty[:n], carrier[:n]

    peak = np.max(np.abs(carrier))
    shape = carrier / peak if peak > 0 else np.zeros_like(carrier)
    driven = sps.sosfilt(model.band_sos(carrier_rate_hz), model.gain * duty * shape)
    if model.noise_floor_rms > 0:
        rng = derive_rng(seed, "actuator-noise")
        driven = driven + model.noise_floor_rms * rng.standard_normal(n)
    return scalar_trace(driven, carrier_rate_hz)


def _as_scalar(x, rate_hz: float | None) -> tuple[np.ndarray, float]:
    if isinstance(x, AccelTrace):
        nonzero = [i for i in range(3) if np.any(x.xyz[:, i])]
        if len(nonzero) == 1:
            return x.xyz[:, nonzero[0]], x.rate_hz
        return x.magnitude(), x.rate_hz
    if rate_hz is None:
        raise ParameterError("rate_hz required when passing a bare array")
    return np.asarray(x, dtype=float), rate_hz


def compare_render(s, r, rate_hz: float | None = None) -> RenderComparison:
    """Quantify how well a rendering r tracks its reference input s.

    Inputs are scalar series (arrays with ``rate_hz``, or traces; a trace
    with a single active axis contributes that axis signed, otherwise its
    magnitude). The rendering is resampled onto the reference rate if
    needed; durations must agree within 10%.

    Measures: RMS error after optimal scalar gain alignment of r to s;
    mean magnitude-squared coherence over the tactile band (Welch, 256
    samples, 50% overlap); Pearson correlation of moving-RMS envelopes
    (20 ms window).
    """
    s_sig, s_rate = _as_scalar(s, rate_hz)
    r_sig, r_rate = _as_scalar(r, rate_hz)
    if s_sig.size < 2 or r_sig.size < 2:
        raise DataError("signals must hold at least 2 samples")

    dur_s, dur_r = s_sig.size / s_rate, r_sig.size / r_rate
    if abs(dur_s - dur_r) > 0.1 * max(dur_s, dur_r):
        raise DataError(
            f"duration mismatch beyond 10%: {dur_s:g} s vs {dur_r:g} s"
        )
    if r_rate != s_rate:
        frac = Fraction(s_rate / r_rate).limit_denominator(1000)
        r_sig = sps.resample_poly(r_sig, frac.numerator, frac.denominator)
    n = min(s_sig.size, r_sig.size)
    s_sig, r_sig = s_sig[:n], r_sig[:n]
    fs = s_rate

    rr = float(np.dot(r_sig, r_sig))
    gain = float(np.dot(s_sig, r_sig)) / rr if rr > 0 else 0.0
    rms_error = float(np.sqrt(np.mean((s_sig - gain * r_sig) ** 2)))

    nperseg = min(WELCH_SEGMENT, n)
    freqs, coh = sps.coherence(s_sig, r_sig, fs=fs, nperseg=nperseg,
                               noverlap=nperseg // 2)
    band = (freqs >= COHERENCE_BAND[0]) & (freqs <= COHERENCE_BAND[1])
    coh_mean = float(np.clip(np.mean(coh[band]) if band.any() else np.mean(coh), 0, 1))

    win = int(round(ENVELOPE_WINDOW_S * fs))
    win = max(1, win + 1 if win % 2 == 0 else win)
    env_s = np.sqrt(moving_average(s_sig**2, win))
    env_r = np.sqrt(moving_average(r_sig**2, win))
    vs, vr = np.std(env_s), np.std(env_r)
    if vs == 0 or vr == 0:
        env_corr = 1.0 if np.allclose(env_s, env_r) else 0.0
    else:
        env_corr = float(np.clip(np.corrcoef(env_s, env_r)[0, 1], -1, 1))

    return RenderComparison(
        rms_error=rms_error,
        spectral_coherence_mean=coh_mean,
        envelope_correlation=env_corr,
    )
