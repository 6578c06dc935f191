"""Spectral amplitudes on a symmetric detuning grid.

Detunings are ordinary frequencies in Hz. The biphoton amplitude ``f(omega)``
describes a red photon at ``+omega`` and a telecom partner at ``-omega``
(CW pump, perfect anticorrelation), so a single 1-D grid carries everything.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigurationError, MeasurementError

# sinc^2(x) = 1/2, with sinc(x) = sin(x)/x
SINC2_HALF_X = brentq(lambda x: (np.sin(x) / x) ** 2 - 0.5, 1.0, 2.0, xtol=1e-15)

KINDS = ("sinc", "gaussian", "flat")


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform detuning grid centred on zero.

    ``n_points`` is reported as configured; an even count is padded by one
    sample internally so that 0 and every +/- pair are sampled exactly.
    """

    n_points: int = 4096
    span: float = 2e12

    def __post_init__(self):
        if self.n_points < 3:
            raise ConfigurationError("grid needs at least 3 points")
        if not self.span > 0:
            raise ConfigurationError("grid span must be positive")

    @property
    def size(self) -> int:
        return self.n_points + 1 if self.n_points % 2 == 0 else self.n_points

    @property
    def step(self) -> float:
        return self.span / (self.size - 1)

    @cached_property
    def values(self) -> np.ndarray:
        half = (self.size - 1) // 2
        v = np.arange(-half, half + 1) * self.step
        v.setflags(write=False)
        return v


@dataclass(frozen=True)
class SpectralModel:
    kind: str = "flat"
    fwhm: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown spectral kind {self.kind!r}; expected one of {KINDS}")
        if self.kind != "flat" and not (self.fwhm is not None and self.fwhm > 0):
            raise ConfigurationError(f"{self.kind} model needs a positive fwhm")


@dataclass(frozen=True)
class SpectralAmplitude:
    grid: FrequencyGrid
    amp: np.ndarray = field(repr=False)

    def __post_init__(self):
        a = np.array(self.amp, dtype=complex)
        if a.shape != (self.grid.size,):
            raise ValueError(f"amplitude length {a.shape} does not match grid size {self.grid.size}")
        a.setflags(write=False)
        object.__setattr__(self, "amp", a)

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.amp) ** 2

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.intensity) * self.grid.step))

    def mirrored(self) -> "SpectralAmplitude":
        """The amplitude evaluated at -omega."""
        return SpectralAmplitude(self.grid, self.amp[::-1])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["detuning_hz", "re", "im"])
            for x, a in zip(self.grid.values, self.amp):
                w.writerow([repr(float(x)), repr(float(a.real)), repr(float(a.imag))])

    @classmethod
    def from_csv(cls, path) -> "SpectralAmplitude":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        x = data[:, 0]
        n = len(x)
        grid = FrequencyGrid(n_points=n - 1 if n % 2 else n, span=float(x[-1] - x[0]))
        return cls(grid, data[:, 1] + 1j * data[:, 2])


def unit_profile(kind: str, fwhm: float | None, x) -> np.ndarray:
    """Real amplitude with unit peak whose intensity has the given FWHM."""
    x = np.asarray(x, dtype=float)
    if kind == "flat":
        return np.ones_like(x)
    if kind == "gaussian":
        # |amp|^2 = exp(-4 ln2 x^2 / fwhm^2)
        return np.exp(-2.0 * np.log(2.0) * (x / fwhm) ** 2)
    if kind == "sinc":
        a = 2.0 * SINC2_HALF_X / fwhm
        return np.sinc(a * x / np.pi)
    raise ConfigurationError(f"unknown spectral kind {kind!r}")


def sample_model(model: SpectralModel, grid: FrequencyGrid) -> SpectralAmplitude:
    if model.kind != "flat" and grid.span < 8.0 * model.fwhm:
        raise ConfigurationError(
            f"grid span {grid.span:.4g} Hz is narrower than 8x the {model.kind} FWHM {model.fwhm:.4g} Hz"
        )
    return SpectralAmplitude(grid, unit_profile(model.kind, model.fwhm, grid.values))


def measure_fwhm(s: SpectralAmplitude) -> float:
    """Intensity FWHM with linear interpolation at the half-maximum crossings."""
    return width_at_half(s.grid.values, s.intensity)


def width_at_half(x, y) -> float:
    """Full width at half maximum of ``y`` around its global maximum."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    i0 = int(np.argmax(y))
    half = 0.5 * y[i0]

    below = np.flatnonzero(y[:i0] < half)
    above = np.flatnonzero(y[i0 + 1:] < half)
    if below.size == 0 or above.size == 0:
        raise MeasurementError("no half-maximum crossing inside the grid")
    il = below[-1]
    ir = i0 + 1 + above[0]

    def cross(i, j):
        return x[i] + (half - y[i]) * (x[j] - x[i]) / (y[j] - y[i])

    return float(cross(ir - 1, ir) - cross(il, il + 1))


def multiply(a: SpectralAmplitude, b: SpectralAmplitude) -> SpectralAmplitude:
    if a.grid != b.grid:
        raise ValueError("cannot multiply amplitudes sampled on different grids")
    return SpectralAmplitude(a.grid, a.amp * b.amp)


def normalize(s: SpectralAmplitude) -> SpectralAmplitude:
    n = s.norm()
    if not n > 0:
        raise ValueError("cannot normalize a zero amplitude")
    return SpectralAmplitude(s.grid, s.amp / n)
