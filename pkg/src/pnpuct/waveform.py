"""Excitation waveforms and matched filters built from a pseudo-noise code.

A code plus a bit duration and a frame rate yields three sampled objects:
the bipolar coded waveform (one period, each bit held for K frames), the
unipolar heat-source modulation (several periods, shifted into [0, A]),
and the zero-padded matched filter used by the compression stage. Sample
n represents time n/FPS; bit b occupies samples [b*K, (b+1)*K).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .codes import PnCode
from .errors import NonPositiveAmplitude, TimingMismatch, UnmodifiedCode
from .stack import ThermogramStack


@dataclass(frozen=True)
class Timing:
    """Bit duration, frame rate and period count of a measurement.

    The product t_bit * fps must be a positive integer K: each bit of
    the sequence spans exactly K frames.
    """

    t_bit: float
    fps: float
    n_per: int = 2

    def __post_init__(self):
        if self.t_bit <= 0 or self.fps <= 0:
            raise TimingMismatch("t_bit and fps must be positive")
        product = self.t_bit * self.fps
        k = int(round(product))
        if k < 1 or abs(product - k) > 1e-9 * max(1.0, product):
            raise TimingMismatch(
                f"t_bit * fps = {product!r} is not a positive integer")
        if int(self.n_per) < 2:
            raise TimingMismatch("n_per must be at least 2")
        object.__setattr__(self, "n_per", int(self.n_per))

    @property
    def k(self) -> int:
        """Oversampling factor: frames per bit."""
        return int(round(self.t_bit * self.fps))

    @property
    def dt(self) -> float:
        return 1.0 / self.fps

    def t_meas(self, n_bit) -> float:
        """Duration of one excitation period."""
        return n_bit * self.t_bit

    def frames_per_period(self, n_bit) -> int:
        return self.k * n_bit

    def total_frames(self, n_bit) -> int:
        return self.n_per * self.k * n_bit


@dataclass(frozen=True)
class RectPulse:
    """Rectangular heat pulse of a given duration and flux amplitude."""

    duration: float
    amplitude: float

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if self.amplitude <= 0:
            raise NonPositiveAmplitude("amplitude must be positive")


class WaveformKind(Enum):
    BIPOLAR_XPN = "BIPOLAR_XPN"
    UNIPOLAR_XTH = "UNIPOLAR_XTH"


@dataclass(frozen=True, eq=False)
class ExcitationWaveform:
    samples: np.ndarray
    kind: WaveformKind
    timing: Timing
    source_code: PnCode = None
    amplitude: float = None

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)
        if self.source_code is not None:
            per = self.timing.frames_per_period(self.source_code.n_bit)
            if self.kind is WaveformKind.BIPOLAR_XPN and len(samples) != per:
                raise ValueError("bipolar waveform must span one period")
            if (self.kind is WaveformKind.UNIPOLAR_XTH
                    and len(samples) != self.timing.n_per * per):
                raise ValueError("unipolar waveform must span n_per periods")
        if self.kind is WaveformKind.UNIPOLAR_XTH and self.amplitude is not None:
            if samples.min() < -1e-12 or samples.max() > self.amplitude + 1e-12:
                raise ValueError("unipolar samples must lie in [0, amplitude]")

    @property
    def duration(self) -> float:
        return len(self.samples) * self.timing.dt


@dataclass(frozen=True, eq=False)
class MatchedFilter:
    """Zero-padded, time-reversed copy of a modified code."""

    taps: np.ndarray
    gain: float

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=float)
        taps.flags.writeable = False
        object.__setattr__(self, "taps", taps)


def build_bipolar(code, timing) -> ExcitationWaveform:
    """One period of the coded waveform: bit b held for K frames.

    The physically drivable base sequence is used, i.e. any perfect-PACF
    bias is stripped first; for a binarized Legendre code the result is
    fully bipolar, for a standard LS the single zero bit is kept.
    """
    samples = np.repeat(code.base_values, timing.k)
    return ExcitationWaveform(samples=samples, kind=WaveformKind.BIPOLAR_XPN,
                              timing=timing, source_code=code)


def build_unipolar(bipolar, amplitude, n_per=None) -> ExcitationWaveform:
    """Heat-source modulation: n_per periods of (A/2) * (x + 1).

    The output decomposes exactly into a constant A/2 step plus the
    scaled bipolar ripple; see :func:`unipolar_components`.
    """
    if bipolar.kind is not WaveformKind.BIPOLAR_XPN:
        raise ValueError("input must be a bipolar coded waveform")
    if amplitude <= 0:
        raise NonPositiveAmplitude(f"amplitude must be positive, got {amplitude}")
    timing = bipolar.timing
    if n_per is None:
        n_per = timing.n_per
    else:
        timing = replace(timing, n_per=int(n_per))
    samples = 0.5 * amplitude * (np.tile(bipolar.samples, timing.n_per) + 1.0)
    return ExcitationWaveform(samples=samples, kind=WaveformKind.UNIPOLAR_XTH,
                              timing=timing, source_code=bipolar.source_code,
                              amplitude=float(amplitude))


def unipolar_components(wave):
    """(DC, AC) split of a unipolar waveform; their sum is the waveform."""
    if wave.kind is not WaveformKind.UNIPOLAR_XTH or wave.amplitude is None:
        raise ValueError("expected a unipolar waveform with known amplitude")
    dc = np.full(len(wave.samples), 0.5 * wave.amplitude)
    return dc, wave.samples - dc


def build_matched_filter(code, timing) -> MatchedFilter:
    """K*N_bit filter taps: the time-reversed modified code on a zero grid.

    Tap n equals code value (-n/K) mod N_bit when n is a multiple of K
    and zero elsewhere. Compression must use the perfect-PACF sequence
    even when the physical excitation used the standard or binary one.
    """
    if not code.is_modified:
        raise UnmodifiedCode(
            f"{code.kind.value} has sidelobes; modify the code first")
    k, n = timing.k, code.n_bit
    taps = np.zeros(k * n)
    idx = np.arange(n)
    taps[idx * k] = code.values[(-idx) % n]
    return MatchedFilter(taps=taps, gain=code.gain)


def cyclic_convolve(a, b) -> np.ndarray:
    """Cyclic convolution of two equal-length sequences via the DFT."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) != len(b):
        raise ValueError("cyclic convolution needs equal lengths")
    return np.fft.irfft(np.fft.rfft(a) * np.fft.rfft(b), n=len(a))


def verify_resolution(code, timing) -> np.ndarray:
    """Resolution function: oversampled code cyclically convolved with its filter.

    For a perfect-PACF code the result is the code gain on the first K
    samples and zero elsewhere, i.e. the compression output is the
    response to a virtual rectangular pulse of one bit duration.
    """
    filt = build_matched_filter(code, timing)
    upsampled = np.repeat(code.values, timing.k)
    return cyclic_convolve(upsampled, filt.taps)


def waveform_to_csv(wave, path):
    """Two-column CSV (time_s, value) for driving external generators."""
    dt = wave.timing.dt
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time_s", "value"])
        for n, v in enumerate(wave.samples):
            writer.writerow([repr(n * dt), repr(float(v))])


def waveform_to_stack(wave):
    """Pack a waveform as a 1 x 1 trace in the binary stack container."""
    metadata = {
        "stage": "waveform",
        "waveform_kind": wave.kind.value,
        "t_bit": repr(wave.timing.t_bit),
        "n_per": str(wave.timing.n_per),
        "k": str(wave.timing.k),
    }
    if wave.amplitude is not None:
        metadata["amplitude"] = repr(wave.amplitude)
    if wave.source_code is not None:
        metadata["code_kind"] = wave.source_code.kind.value
        metadata["code_n_bit"] = str(wave.source_code.n_bit)
    data = np.asarray(wave.samples, dtype=np.float32).reshape(-1, 1, 1)
    return ThermogramStack(data=data, fps=wave.timing.fps, metadata=metadata)


def filter_to_csv(filt, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tap_index", "value"])
        for n, v in enumerate(filt.taps):
            writer.writerow([n, repr(float(v))])
