"""Synthetic per-pixel thermal responses from 1-D heat diffusion.

Stand-in for the physical experiment: each pixel is a semi-infinite
medium, optionally with a single reflecting interface at depth d whose
thermal mismatch is summarized by a reflection coefficient R. The
surface response to an impulsive heat flux is

    h(t) = a / sqrt(pi t) * [1 + 2 * sum_{m>=1} R^m exp(-(m d)^2 / (alpha t))]

with a an arbitrary intensity scale folding in effusivity, emissivity
and camera gain. Discrete responses are frame averaged, which tames the
t^(-1/2) singularity and makes the step response exact by telescoping.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc

from .errors import RateMismatch
from .stack import ThermogramStack
from .waveform import ExcitationWaveform, WaveformKind

_SQRT_PI = np.sqrt(np.pi)


@dataclass(frozen=True)
class PixelModel:
    """1-D thermal description of a pixel.

    A sound pixel leaves ``defect_depth`` unset. ``reflection_coeff``
    lies in (-1, 1]: positive for a less effusive backing (air gap,
    void), negative for a more effusive one, 1 for a perfectly
    insulated back face.
    """

    diffusivity: float
    defect_depth: float = None
    reflection_coeff: float = 0.0
    amplitude_scale: float = 1.0

    def __post_init__(self):
        if self.diffusivity <= 0:
            raise ValueError("diffusivity must be positive")
        if self.defect_depth is not None and self.defect_depth <= 0:
            raise ValueError("defect_depth must be positive when present")
        if not (-1.0 < self.reflection_coeff <= 1.0):
            raise ValueError("reflection_coeff must lie in (-1, 1]")


@dataclass(frozen=True)
class Region:
    """Rectangle of pixels: x0 <= jx < x0 + width, y0 <= jy < y0 + height."""

    x0: int
    y0: int
    width: int
    height: int

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("region must span at least one pixel")
        if self.x0 < 0 or self.y0 < 0:
            raise ValueError("region origin must be non-negative")

    def contains(self, jx, jy):
        return (self.x0 <= jx < self.x0 + self.width
                and self.y0 <= jy < self.y0 + self.height)

    def pixels(self):
        for jy in range(self.y0, self.y0 + self.height):
            for jx in range(self.x0, self.x0 + self.width):
                yield jx, jy


@dataclass(frozen=True)
class SceneConfig:
    """Pixel grid with a background model and rectangular defect patches.

    Later defect entries take precedence where regions overlap. Noise is
    additive white Gaussian per pixel per frame; the stream for pixel
    (jx, jy) derives from (rng_seed, jx, jy), so evaluation order cannot
    change the result.
    """

    nx: int
    ny: int
    background: PixelModel
    defects: tuple = field(default_factory=tuple)
    noise_sigma: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError("grid must be at least 1 x 1")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")
        defects = tuple(self.defects)
        for region, model in defects:
            if (region.x0 + region.width > self.nx
                    or region.y0 + region.height > self.ny):
                raise ValueError(f"defect region {region} outside the grid")
            if not isinstance(model, PixelModel):
                raise TypeError("defect entries are (Region, PixelModel)")
        object.__setattr__(self, "defects", defects)

    def model_at(self, jx, jy) -> PixelModel:
        model = self.background
        for region, defect_model in self.defects:
            if region.contains(jx, jy):
                model = defect_model
        return model


def _series_integral(t, c):
    """Integral of exp(-c/tau)/sqrt(pi*tau) dtau from 0 to t, elementwise."""
    out = np.zeros_like(t)
    pos = t > 0
    tp = t[pos]
    out[pos] = (2.0 / _SQRT_PI) * (
        np.sqrt(tp) * np.exp(-c / tp)
        - np.sqrt(np.pi * c) * erfc(np.sqrt(c / tp)))
    return out


def impulse_response(model, timing, duration, max_terms=100000) -> np.ndarray:
    """Frame-averaged discrete impulse response h[n] over ``duration`` seconds.

    h[n] averages the continuous kernel over [n*dt, (n+1)*dt); both the
    1/sqrt(pi*t) part and the image-source series integrate in closed
    form (the latter via erfc). The series is truncated adaptively once
    the next term falls below 1e-13 of the leading part, which keeps the
    tail under 1e-12 of it.
    """
    dt = timing.dt
    n_frames = int(round(duration * timing.fps))
    if n_frames < 1:
        raise ValueError("duration shorter than one frame")
    n = np.arange(n_frames, dtype=float)
    t0 = n * dt
    t1 = t0 + dt
    a = model.amplitude_scale
    h = 2.0 * a * (np.sqrt(t1) - np.sqrt(t0)) / (_SQRT_PI * dt)
    d, r = model.defect_depth, model.reflection_coeff
    if d is None or r == 0.0:
        return h
    t_last = t1[-1]
    for m in range(1, max_terms + 1):
        c = (m * d) ** 2 / model.diffusivity
        h = h + 2.0 * (r ** m) * a * (
            _series_integral(t1, c) - _series_integral(t0, c)) / dt
        if (abs(r) ** (m + 1)) * np.exp(-((m + 1) * d) ** 2
                                        / (model.diffusivity * t_last)) < 1e-13:
            break
    return h


def respond(h, excitation, h_fps=None) -> np.ndarray:
    """Linear response of a pixel to an excitation waveform.

    Discrete convolution truncated to the excitation length and scaled
    by the frame interval. ``h_fps``, when given, must match the
    excitation frame rate.
    """
    fps = excitation.timing.fps
    if h_fps is not None and abs(h_fps - fps) > 1e-9 * fps:
        raise RateMismatch(f"h sampled at {h_fps} fps, excitation at {fps} fps")
    x = excitation.samples
    return np.convolve(x, np.asarray(h, dtype=float))[: len(x)] / fps


def lpt_reference(model, pulse, timing, duration) -> np.ndarray:
    """Direct (non-compressed) response to a rectangular heat pulse.

    This is the ground truth that the compression pipeline is expected
    to reproduce, up to its gain factor.
    """
    n_frames = int(round(duration * timing.fps))
    n_on = int(round(pulse.duration * timing.fps))
    samples = np.zeros(n_frames)
    samples[:n_on] = pulse.amplitude
    wave = ExcitationWaveform(samples=samples, kind=WaveformKind.BIPOLAR_XPN,
                              timing=timing)
    h = impulse_response(model, timing, duration)
    return respond(h, wave)


def simulate_stack(scene, excitation) -> ThermogramStack:
    """Per-pixel responses plus seeded Gaussian noise, as a thermogram stack.

    Pixels sharing a model share one convolution; the per-pixel noise
    stream is seeded by (rng_seed, jx, jy), so serial and parallel
    evaluations are bit-identical.
    """
    timing = excitation.timing
    duration = len(excitation.samples) * timing.dt
    traces = {}

    def trace_for(model):
        if model not in traces:
            h = impulse_response(model, timing, duration)
            traces[model] = respond(h, excitation)
        return traces[model]

    n_frames = len(excitation.samples)
    data = np.empty((n_frames, scene.ny, scene.nx), dtype=np.float64)
    for jy in range(scene.ny):
        for jx in range(scene.nx):
            data[:, jy, jx] = trace_for(scene.model_at(jx, jy))
    if scene.noise_sigma > 0:
        for jy in range(scene.ny):
            for jx in range(scene.nx):
                rng = np.random.default_rng([scene.rng_seed, jx, jy])
                data[:, jy, jx] += rng.normal(0.0, scene.noise_sigma, n_frames)
    metadata = {
        "stage": "simulated",
        "rng_seed": str(scene.rng_seed),
        "noise_sigma": repr(scene.noise_sigma),
        "t_bit": repr(timing.t_bit),
        "n_per": str(timing.n_per),
        "k": str(timing.k),
    }
    if excitation.source_code is not None:
        code = excitation.source_code
        metadata["code_kind"] = code.kind.value
        metadata["code_n_bit"] = str(code.n_bit)
    if excitation.amplitude is not None:
        metadata["amplitude"] = repr(excitation.amplitude)
    return ThermogramStack(data=data.astype(np.float32), fps=timing.fps,
                           metadata=metadata)


# --- scene configuration files ---


def _model_from_section(section, fallback=None):
    def get(key, default):
        if key in section:
            return float(section[key])
        return default

    base = fallback or PixelModel(diffusivity=1e-6)
    depth = section.get("depth", None)
    return PixelModel(
        diffusivity=get("diffusivity", base.diffusivity),
        defect_depth=float(depth) if depth is not None else base.defect_depth,
        reflection_coeff=get("reflection", base.reflection_coeff),
        amplitude_scale=get("amplitude_scale", base.amplitude_scale),
    )


def scene_from_parser(parser) -> SceneConfig:
    scene = parser["scene"]
    background = _model_from_section(parser["background"])
    defects = []
    for name in parser.sections():
        if not name.startswith("defect"):
            continue
        sec = parser[name]
        region = Region(x0=int(sec["x0"]), y0=int(sec["y0"]),
                        width=int(sec["width"]), height=int(sec["height"]))
        defects.append((region, _model_from_section(sec, fallback=background)))
    return SceneConfig(
        nx=int(scene["nx"]),
        ny=int(scene["ny"]),
        background=background,
        defects=tuple(defects),
        noise_sigma=float(scene.get("noise_sigma", "0")),
        rng_seed=int(scene.get("rng_seed", "0")),
    )


def load_scene_config(path) -> SceneConfig:
    """Read a scene description from an INI-style text file.

    Sections: ``[scene]`` with nx, ny, noise_sigma, rng_seed;
    ``[background]`` with diffusivity, amplitude_scale and optionally
    depth/reflection; any number of ``[defect.<name>]`` sections with
    x0, y0, width, height plus model fields (unset fields inherit from
    the background).
    """
    parser = configparser.ConfigParser()
    with open(path, "r", encoding="utf-8") as fh:
        parser.read_file(fh)
    return scene_from_parser(parser)
