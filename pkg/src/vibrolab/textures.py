"""Texture-sliding acceleration traces.

Generates parametric 3-axis acceleration signals that stand in for a
recorded sandpaper-sliding session, and reads/writes traces as CSV.
Signals are band-limited Gaussian noise, post-normalized so the RMS of the
acceleration magnitude follows the roughness power law
``rms = gain_k * grit_um ** exponent_gamma``.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .errors import DataError, ParameterError
from .seeds import derive_rng, derive_seed

# Canonical five-grade ladder: FEPA grade -> average grit size [um],
# ordered rough to smooth. Overridable through the config file.
DEFAULT_LADDER = {
    "P60": 264.0,
    "P80": 195.0,
    "P120": 127.0,
    "P220": 65.0,
    "P1000": 18.0,
}
REFERENCE_GRADE = "P120"

# Uniform-sampling tolerance on consecutive timestamp deltas [s].
DT_TOL = 1e-9
MIN_RATE_HZ = 1000.0


@dataclass(frozen=True)
class SandpaperSpec:
    """One stimulus identity: FEPA grade label and average grit size."""

    fepa_grade: str
    grit_um: float

    def __post_init__(self):
        if not self.fepa_grade:
            raise ParameterError("fepa_grade must be a non-empty label")
        if not np.isfinite(self.grit_um) or self.grit_um <= 0:
            raise ParameterError(f"grit_um must be positive, got {self.grit_um}")


def ladder_specs(ladder: dict[str, float] | None = None) -> list[SandpaperSpec]:
    """Ladder as SandpaperSpec objects, ordered rough to smooth."""
    table = DEFAULT_LADDER if ladder is None else ladder
    items = sorted(table.items(), key=lambda kv: -kv[1])
    return [SandpaperSpec(grade, float(um)) for grade, um in items]


class AccelSample(NamedTuple):
    t: float
    ax: float
    ay: float
    az: float


@dataclass
class AccelTrace:
    """Uniformly sampled 3-axis acceleration time series.

    ``xyz`` has shape (n, 3) in m/s^2; ``t`` holds the matching timestamps
    in seconds. Sampling must be uniform at ``rate_hz`` within 1 ns.
    """

    t: np.ndarray
    xyz: np.ndarray
    rate_hz: float

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.xyz = np.asarray(self.xyz, dtype=float)
        if self.xyz.ndim != 2 or self.xyz.shape[1] != 3:
            raise DataError(f"xyz must have shape (n, 3), got {self.xyz.shape}")
        if self.t.shape != (self.xyz.shape[0],):
            raise DataError("t and xyz lengths disagree")
        if self.t.size == 0:
            raise DataError("trace is empty")
        if not np.all(np.isfinite(self.t)) or not np.all(np.isfinite(self.xyz)):
            raise DataError("trace contains non-finite values")
        if self.rate_hz < MIN_RATE_HZ:
            raise DataError(
                f"rate_hz must be >= {MIN_RATE_HZ:g} Hz, got {self.rate_hz:g}"
            )
        if self.t.size > 1:
            dt = np.diff(self.t)
            if np.any(dt <= 0):
                raise DataError("timestamps must be strictly increasing")
            if np.any(np.abs(dt - 1.0 / self.rate_hz) > DT_TOL):
                raise DataError(
                    f"sampling is not uniform at {self.rate_hz:g} Hz within {DT_TOL:g} s"
                )

    def __len__(self) -> int:
        return self.t.size

    def __getitem__(self, i: int) -> AccelSample:
        return AccelSample(self.t[i], *self.xyz[i])

    @property
    def duration_s(self) -> float:
        return len(self) / self.rate_hz

    def magnitude(self) -> np.ndarray:
        """Pointwise Euclidean magnitude |a(t)|."""
        return np.sqrt(np.sum(self.xyz**2, axis=1))

    def rms_magnitude(self) -> float:
        return float(np.sqrt(np.mean(np.sum(self.xyz**2, axis=1))))


def scalar_trace(signal: np.ndarray, rate_hz: float) -> AccelTrace:
    """Wrap a 1-D signal as a single-axis trace (ax carries the signal)."""
    signal = np.asarray(signal, dtype=float)
    xyz = np.zeros((signal.size, 3))
    xyz[:, 0] = signal
    return AccelTrace(t=np.arange(signal.size) / rate_hz, xyz=xyz, rate_hz=rate_hz)


@dataclass(frozen=True)
class SynthParams:
    """Knobs for the parametric texture generator.

    ``scan_speed_mps`` is carried for provenance only: scan speed is not
    modeled as a perceptual variable. ``gain_k`` is in m/s^2 per um^gamma.
    """

    scan_speed_mps: float = 0.1
    gain_k: float = 0.01
    exponent_gamma: float = 1.0
    band_lo_hz: float = 80.0
    band_hi_hz: float = 400.0
    duration_s: float = 1.0
    rate_hz: float = 2000.0
    seed: int = 0

    def validate(self) -> None:
        if not (0 < self.band_lo_hz < self.band_hi_hz < self.rate_hz / 2):
            raise ParameterError(
                f"need 0 < band_lo < band_hi < rate/2, got "
                f"[{self.band_lo_hz:g}, {self.band_hi_hz:g}] at {self.rate_hz:g} Hz"
            )
        if self.duration_s <= 0:
            raise ParameterError(f"duration_s must be positive, got {self.duration_s:g}")
        if self.gain_k < 0:
            raise ParameterError(f"gain_k must be >= 0, got {self.gain_k:g}")
        if self.rate_hz < MIN_RATE_HZ:
            raise ParameterError(f"rate_hz must be >= {MIN_RATE_HZ:g} Hz")


def synth_texture(spec: SandpaperSpec, params: SynthParams) -> AccelTrace:
    """Synthesize one texture trace for ``spec``.

    Per-axis content is Gaussian noise shaped in the frequency domain to
    [band_lo, band_hi], then all three axes are rescaled together so that
    RMS(|a|) equals ``gain_k * grit_um ** exponent_gamma`` exactly.
    Deterministic given ``params.seed``.
    """
    params.validate()
    n = int(round(params.duration_s * params.rate_hz))
    if n < 8:
        raise ParameterError("duration too short for the requested rate")
    rng = derive_rng(params.seed, "texture", spec.fepa_grade)

    freqs = np.fft.rfftfreq(n, d=1.0 / params.rate_hz)
    band = (freqs >= params.band_lo_hz) & (freqs <= params.band_hi_hz)
    xyz = np.empty((n, 3))
    for axis in range(3):
        spectrum = np.fft.rfft(rng.standard_normal(n))
        spectrum[~band] = 0.0
        xyz[:, axis] = np.fft.irfft(spectrum, n)

    target_rms = params.gain_k * spec.grit_um**params.exponent_gamma
    current = np.sqrt(np.mean(np.sum(xyz**2, axis=1)))
    xyz = xyz * (target_rms / current) if current > 0 else np.zeros_like(xyz)

    return AccelTrace(t=np.arange(n) / params.rate_hz, xyz=xyz, rate_hz=params.rate_hz)


def build_bank(
    ladder: dict[str, float] | None = None,
    params: SynthParams | None = None,
    root_seed: int = 0,
    variants: int = 2,
) -> dict[tuple[str, int], AccelTrace]:
    """Synthesize ``variants`` traces per grade, keyed by (grade, variant).

    Variant indices are 1-based; each (grade, variant) pair gets its own
    derived seed, mirroring a session where several signals per sandpaper
    are recorded and saved.
    """
    specs = ladder_specs(ladder)
    params = params or SynthParams()
    bank: dict[tuple[str, int], AccelTrace] = {}
    for spec in specs:
        for variant in range(1, variants + 1):
            seed = derive_seed(root_seed, "bank", spec.fepa_grade, variant)
            bank[(spec.fepa_grade, variant)] = synth_texture(
                spec, replace(params, seed=seed)
            )
    return bank


CSV_HEADER = "t,ax,ay,az"


def save_trace(trace: AccelTrace, path) -> None:
    """Write a trace as CSV (`t,ax,ay,az`, SI units, LF line endings).

    Floats are written with shortest round-trip precision, so
    load_trace(save_trace(x)) reproduces x bit-for-bit.
    """
    with open(path, "w", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for ti, (x, y, z) in zip(trace.t, trace.xyz):
            fh.write(f"{ti!r},{x!r},{y!r},{z!r}\n")


def load_trace(path) -> AccelTrace:
    """Read a CSV trace written by save_trace (or any `t,ax,ay,az` file).

    Raises DataError naming the offending line on parse failures,
    non-monotone timestamps, or non-uniform sampling.
    """
    rows: list[tuple[float, float, float, float]] = []
    with open(path, "r") as fh:
        header = fh.readline().strip()
        if header.replace(" ", "") != CSV_HEADER:
            raise DataError(f"{path}: line 1: expected header '{CSV_HEADER}', got '{header}'")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise DataError(f"{path}: line {lineno}: expected 4 columns, got {len(parts)}")
            try:
                values = tuple(float(p) for p in parts)
            except ValueError as exc:
                raise DataError(f"{path}: line {lineno}: {exc}") from exc
            if not all(np.isfinite(v) for v in values):
                raise DataError(f"{path}: line {lineno}: non-finite value")
            if rows and values[0] <= rows[-1][0]:
                raise DataError(
                    f"{path}: line {lineno}: timestamp {values[0]!r} does not increase"
                )
            rows.append(values)
    if len(rows) < 2:
        raise DataError(f"{path}: need at least 2 samples")
    data = np.array(rows)
    t = data[:, 0]
    dt = np.diff(t)
    rate = 1.0 / np.median(dt)
    bad = np.nonzero(np.abs(dt - 1.0 / rate) > DT_TOL)[0]
    if bad.size:
        raise DataError(
            f"{path}: line {bad[0] + 3}: non-uniform sampling "
            f"(dt={dt[bad[0]]!r}, expected {1.0 / rate!r})"
        )
    return AccelTrace(t=t, xyz=data[:, 1:], rate_hz=rate)
