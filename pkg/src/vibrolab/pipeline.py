"""Acceleration-to-PWM control pipeline.

Implements the per-channel chain: band-pass filtering, 3-to-1 dimensional
reduction, amplitude limiting, and scaling into PWM duty frames, plus the
somatotopic channel routing (index -> left actuator, thumb -> right).

The streaming entry point (``StreamingPipeline``) carries filter state and
partial-frame buffers across chunk boundaries, so feeding a trace in
chunks of any size yields a bit-identical PwmStream to one-shot
processing. The spectral ``dft321`` reduction needs the whole trace and is
only available on the batch path.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import signal as sps

from .errors import DataError, ParameterError
from .textures import AccelTrace

REDUCTIONS = ("magnitude", "dft321")


@dataclass(frozen=True)
class PipelineConfig:
    """Per-channel processing parameters.

    ``scale_k`` maps limited acceleration [m/s^2] to duty; its default is
    calibrated so the default P60 texture peaks near 0.9 * duty_max.
    """

    hp_cutoff_hz: float = 50.0
    lp_cutoff_hz: float = 500.0
    reduction: str = "magnitude"
    limiter_ceiling: float = 10.0
    scale_k: float = 0.13
    duty_max: float = 1.0
    frame_rate_hz: float = 1000.0

    def validate(self, rate_hz: float) -> None:
        if self.reduction not in REDUCTIONS:
            raise ParameterError(
                f"reduction must be one of {REDUCTIONS}, got {self.reduction!r}"
            )
        if not (0 < self.hp_cutoff_hz < self.lp_cutoff_hz < rate_hz / 2):
            raise ParameterError(
                f"need 0 < hp_cutoff < lp_cutoff < rate/2; got "
                f"[{self.hp_cutoff_hz:g}, {self.lp_cutoff_hz:g}] at {rate_hz:g} Hz"
            )
        if self.scale_k <= 0:
            raise ParameterError(f"scale_k must be positive, got {self.scale_k:g}")
        if not (0 < self.duty_max <= 1):
            raise ParameterError(f"duty_max must be in (0, 1], got {self.duty_max:g}")
        if self.limiter_ceiling <= 0:
            raise ParameterError("limiter_ceiling must be positive")
        window = rate_hz / self.frame_rate_hz
        if self.frame_rate_hz <= 0 or abs(window - round(window)) > 1e-9 or window < 1:
            raise ParameterError(
                f"frame_rate_hz must divide the sample rate; got {self.frame_rate_hz:g} "
                f"against {rate_hz:g} Hz"
            )

    def pool_window(self, rate_hz: float) -> int:
        return int(round(rate_hz / self.frame_rate_hz))


class PwmFrame(NamedTuple):
    t: float
    duty: float


@dataclass
class PwmStream:
    """Uniform sequence of actuator duty commands for one channel."""

    t: np.ndarray
    duty: np.ndarray
    frame_rate_hz: float

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.duty = np.asarray(self.duty, dtype=float)
        if self.t.shape != self.duty.shape or self.t.ndim != 1:
            raise DataError("t and duty must be equal-length 1-D arrays")
        if self.duty.size and (
            not np.all(np.isfinite(self.duty))
            or self.duty.min() < 0
            or self.duty.max() > 1
        ):
            raise DataError("duty values must be finite and within [0, 1]")

    def __len__(self) -> int:
        return self.t.size

    def __getitem__(self, i: int) -> PwmFrame:
        return PwmFrame(self.t[i], self.duty[i])


def save_pwm(stream: PwmStream, path) -> None:
    """Write a PwmStream as CSV (`t,duty`), round-trip exact."""
    with open(path, "w", newline="\n") as fh:
        fh.write("t,duty\n")
        for ti, di in zip(stream.t, stream.duty):
            fh.write(f"{ti!r},{di!r}\n")


def load_pwm(path) -> PwmStream:
    with open(path, "r") as fh:
        header = fh.readline().strip()
        if header.replace(" ", "") != "t,duty":
            raise DataError(f"{path}: line 1: expected header 't,duty'")
        rows = []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise DataError(f"{path}: line {lineno}: expected 2 columns")
            try:
                rows.append((float(parts[0]), float(parts[1])))
            except ValueError as exc:
                raise DataError(f"{path}: line {lineno}: {exc}") from exc
    if len(rows) < 2:
        raise DataError(f"{path}: need at least 2 frames")
    data = np.array(rows)
    rate = 1.0 / np.median(np.diff(data[:, 0]))
    return PwmStream(t=data[:, 0], duty=data[:, 1], frame_rate_hz=rate)


def design_bandpass(hp_cutoff_hz: float, lp_cutoff_hz: float, rate_hz: float) -> np.ndarray:
    """4th-order Butterworth band-pass as two second-order sections."""
    if not (0 < hp_cutoff_hz < lp_cutoff_hz < rate_hz / 2):
        raise ParameterError(
            f"cutoffs [{hp_cutoff_hz:g}, {lp_cutoff_hz:g}] invalid at {rate_hz:g} Hz"
        )
    return sps.butter(
        2, [hp_cutoff_hz, lp_cutoff_hz], btype="bandpass", fs=rate_hz, output="sos"
    )


def bandpass_filter(trace: AccelTrace, cfg: PipelineConfig) -> AccelTrace:
    """Causal per-axis band-pass (state starts at rest)."""
    sos = design_bandpass(cfg.hp_cutoff_hz, cfg.lp_cutoff_hz, trace.rate_hz)
    filtered = sps.sosfilt(sos, trace.xyz, axis=0)
    return AccelTrace(t=trace.t, xyz=filtered, rate_hz=trace.rate_hz)


def reduce_3to1(trace: AccelTrace, method: str = "magnitude") -> np.ndarray:
    """Collapse three axes to one scalar series of the same length.

    ``magnitude`` takes the pointwise Euclidean norm. ``dft321`` builds a
    single-axis signal whose magnitude spectrum is the root-sum-square of
    the three axis spectra, with phase taken from the axis sum so the
    output is real and temporally aligned; total signal power equals the
    sum of the three axis powers.
    """
    if method == "magnitude":
        return trace.magnitude()
    if method == "dft321":
        return _dft321(trace.xyz)
    raise ParameterError(f"unknown reduction {method!r}")


def _dft321(xyz: np.ndarray) -> np.ndarray:
    n = xyz.shape[0]
    spectra = np.fft.rfft(xyz, axis=0)
    mag = np.sqrt(np.sum(np.abs(spectra) ** 2, axis=1))
    axis_sum = np.sum(spectra, axis=1)
    out = mag * np.exp(1j * np.angle(axis_sum))
    # DC (and Nyquist for even n) must stay real to preserve Parseval exactly
    out[0] = np.copysign(mag[0], axis_sum[0].real if axis_sum[0].real != 0 else 1.0)
    if n % 2 == 0:
        out[-1] = np.copysign(mag[-1], axis_sum[-1].real if axis_sum[-1].real != 0 else 1.0)
    return np.fft.irfft(out, n)


def limit(signal: np.ndarray, ceiling: float) -> np.ndarray:
    """Clamp magnitude at ``ceiling``, preserving sign; idempotent.

    Non-finite input never passes: +/-Inf clamps to +/-ceiling, NaN to 0.
    """
    if ceiling <= 0:
        raise ParameterError(f"ceiling must be positive, got {ceiling:g}")
    x = np.asarray(signal, dtype=float)
    clamped = np.sign(x) * np.minimum(np.abs(x), ceiling)
    return np.where(np.isnan(x), 0.0, clamped)


def moving_average(signal: np.ndarray, window: int) -> np.ndarray:
    """Centered moving mean with edge truncation (window odd, >= 1)."""
    if window < 1 or window % 2 == 0:
        raise ParameterError(f"window must be odd and >= 1, got {window}")
    x = np.asarray(signal, dtype=float)
    if window == 1:
        return x.copy()
    kernel = np.ones(window)
    sums = np.convolve(x, kernel, mode="same")
    counts = np.convolve(np.ones_like(x), kernel, mode="same")
    return sums / counts


class _FramePooler:
    """Mean-pools duty samples into frames of ``window`` samples.

    Accumulation is strictly left-to-right within each frame, so emitted
    frames are bit-identical no matter how the input is chunked.
    """

    def __init__(self, window: int):
        self.window = window
        self._pending = np.empty(0)

    def push(self, duties: np.ndarray) -> np.ndarray:
        data = np.concatenate([self._pending, duties])
        n_full = data.size // self.window
        self._pending = data[n_full * self.window :]
        if n_full == 0:
            return np.empty(0)
        block = data[: n_full * self.window].reshape(n_full, self.window)
        acc = block[:, 0].copy()
        for j in range(1, self.window):
            acc += block[:, j]
        return acc / self.window

    def flush(self) -> np.ndarray:
        if self._pending.size == 0:
            return np.empty(0)
        acc = self._pending[0]
        for v in self._pending[1:]:
            acc = acc + v
        frame = np.array([acc / self._pending.size])
        self._pending = np.empty(0)
        return frame


def encode_pwm(signal: np.ndarray, cfg: PipelineConfig, rate_hz: float) -> PwmStream:
    """Scale a limited scalar series into duty frames.

    duty = min(scale_k * |y|, duty_max), mean-pooled over each frame
    window of ``rate_hz / frame_rate_hz`` samples.
    """
    cfg.validate(rate_hz)
    duties = np.minimum(cfg.scale_k * np.abs(np.asarray(signal, dtype=float)), cfg.duty_max)
    pooler = _FramePooler(cfg.pool_window(rate_hz))
    frames = np.concatenate([pooler.push(duties), pooler.flush()])
    t = np.arange(frames.size) / cfg.frame_rate_hz
    return PwmStream(t=t, duty=frames, frame_rate_hz=cfg.frame_rate_hz)


def route_channels(
    index_stream: PwmStream, thumb_stream: PwmStream | None = None
) -> tuple[PwmStream, PwmStream]:
    """Somatotopic mapping: index -> left actuator, thumb -> right.

    Streams pass through unmodified; a missing thumb channel yields an
    all-zero right stream of matching shape.
    """
    if thumb_stream is None:
        thumb_stream = PwmStream(
            t=index_stream.t.copy(),
            duty=np.zeros_like(index_stream.duty),
            frame_rate_hz=index_stream.frame_rate_hz,
        )
    if thumb_stream.frame_rate_hz != index_stream.frame_rate_hz:
        raise ParameterError("channel streams must share a frame rate")
    return index_stream, thumb_stream


@dataclass
class PipelineResult:
    """All intermediate stages of one batch pipeline run."""

    filtered: AccelTrace
    reduced: np.ndarray
    limited: np.ndarray
    pwm: PwmStream

    @property
    def carrier(self) -> np.ndarray:
        """Pre-encoding scalar signal, used as the actuator render carrier."""
        return self.limited


class StreamingPipeline:
    """Stateful single-channel pipeline fed in arbitrary chunks.

    Not safe for concurrent mutation; one instance per channel. Only the
    ``magnitude`` reduction is streamable (``dft321`` needs the full
    trace; use :func:`run_pipeline`).
    """

    def __init__(self, cfg: PipelineConfig, rate_hz: float):
        cfg.validate(rate_hz)
        if cfg.reduction != "magnitude":
            raise ParameterError(
                f"streaming supports only the magnitude reduction, not {cfg.reduction!r}"
            )
        self.cfg = cfg
        self.rate_hz = rate_hz
        self._sos = design_bandpass(cfg.hp_cutoff_hz, cfg.lp_cutoff_hz, rate_hz)
        self._zi = np.zeros((self._sos.shape[0], 2, 3))
        self._pooler = _FramePooler(cfg.pool_window(rate_hz))
        self._frames: list[np.ndarray] = []
        self._limited: list[np.ndarray] = []
        self._closed = False

    def push(self, chunk: np.ndarray) -> np.ndarray:
        """Process (n, 3) acceleration samples; return duty frames emitted."""
        if self._closed:
            raise ParameterError("pipeline already flushed")
        chunk = np.asarray(chunk, dtype=float)
        if chunk.ndim != 2 or chunk.shape[1] != 3:
            raise ParameterError(f"chunk must have shape (n, 3), got {chunk.shape}")
        if chunk.shape[0] == 0:
            return np.empty(0)
        filtered, self._zi = sps.sosfilt(self._sos, chunk, axis=0, zi=self._zi)
        reduced = np.sqrt(np.sum(filtered**2, axis=1))
        limited = limit(reduced, self.cfg.limiter_ceiling)
        self._limited.append(limited)
        duties = np.minimum(self.cfg.scale_k * np.abs(limited), self.cfg.duty_max)
        frames = self._pooler.push(duties)
        self._frames.append(frames)
        return frames

    def flush(self) -> PwmStream:
        """Close the stream, emitting any final partial frame."""
        if not self._closed:
            self._frames.append(self._pooler.flush())
            self._closed = True
        duty = np.concatenate(self._frames) if self._frames else np.empty(0)
        t = np.arange(duty.size) / self.cfg.frame_rate_hz
        return PwmStream(t=t, duty=duty, frame_rate_hz=self.cfg.frame_rate_hz)

    def limited_signal(self) -> np.ndarray:
        """Concatenated pre-encoding (limited) samples seen so far."""
        return np.concatenate(self._limited) if self._limited else np.empty(0)


def run_pipeline(trace: AccelTrace, cfg: PipelineConfig) -> PipelineResult:
    """Whole-trace processing through filter, reduction, limiter, and PWM."""
    cfg.validate(trace.rate_hz)
    if cfg.reduction == "magnitude":
        stream = StreamingPipeline(cfg, trace.rate_hz)
        stream.push(trace.xyz)
        pwm = stream.flush()
        limited = stream.limited_signal()
        filtered = bandpass_filter(trace, cfg)
        return PipelineResult(filtered=filtered, reduced=filtered.magnitude(),
                              limited=limited, pwm=pwm)
    filtered = bandpass_filter(trace, cfg)
    reduced = reduce_3to1(filtered, cfg.reduction)
    limited = limit(reduced, cfg.limiter_ceiling)
    pwm = encode_pwm(limited, cfg, trace.rate_hz)
    return PipelineResult(filtered=filtered, reduced=reduced, limited=limited, pwm=pwm)
