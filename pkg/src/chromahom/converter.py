"""The frequency converter as an active beam splitter.

Covers the frequency-dependent transition probability, the pump-power
calibration curve ``eta = sin^2(pi/2 * sqrt(P / P_max))`` and the splitting
ratio estimate from the two large-delay coincidence peaks.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, EstimationError
from .spectra import FrequencyGrid, unit_profile

PROFILE_KINDS = ("sinc2", "gaussian", "flat")


@dataclass(frozen=True)
class ConverterModel:
    """Peak transition probability plus the shape of its frequency response.

    ``bandwidth`` is the FWHM of eta(omega) itself, i.e. of the conversion
    efficiency, not of an amplitude.
    """

    eta0: float
    bandwidth: float = 110e9
    profile_kind: str = "sinc2"
    pump_detuning: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.eta0 <= 1.0:
            raise ConfigurationError(f"eta0 must lie in [0, 1], got {self.eta0}")
        if self.profile_kind not in PROFILE_KINDS:
            raise ConfigurationError(f"unknown converter profile {self.profile_kind!r}")
        if self.profile_kind != "flat" and not self.bandwidth > 0:
            raise ConfigurationError("converter bandwidth must be positive")


@dataclass(frozen=True)
class PumpCalibration:
    p_max: float = 149.0
    enhancement: float = 50.0  # cavity power enhancement, informational

    def __post_init__(self):
        if not self.p_max > 0:
            raise ConfigurationError("p_max must be positive")


def transition_probability(p_circulating: float, cal: PumpCalibration = PumpCalibration()) -> float:
    if p_circulating < 0 or p_circulating > cal.p_max:
        raise ValueError(f"pump power {p_circulating} W outside [0, {cal.p_max}] W")
    return math.sin(0.5 * math.pi * math.sqrt(p_circulating / cal.p_max)) ** 2


def balance_pump_power(target_eta: float, cal: PumpCalibration = PumpCalibration()) -> float:
    """Circulating pump power giving ``target_eta`` on the first branch."""
    if not 0.0 <= target_eta <= 1.0:
        raise ValueError(f"target transition probability must lie in [0, 1], got {target_eta}")
    return cal.p_max * (2.0 / math.pi * math.asin(math.sqrt(target_eta))) ** 2


def calibration_curve(cal: PumpCalibration = PumpCalibration(), n: int = 301):
    p = np.linspace(0.0, cal.p_max, n)
    eta = np.sin(0.5 * np.pi * np.sqrt(p / cal.p_max)) ** 2
    return p, eta


def write_calibration_csv(path, cal: PumpCalibration = PumpCalibration(), n: int = 301, header: str | None = None):
    p, eta = calibration_curve(cal, n)
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(header + "\n")
        w = csv.writer(fh)
        w.writerow(["p_watts", "eta"])
        for a, b in zip(p, eta):
            w.writerow([repr(float(a)), repr(float(b))])


def efficiency_profile(model: ConverterModel, grid: FrequencyGrid) -> np.ndarray:
    """eta(omega) = eta0 * S(omega - delta) on the grid."""
    if model.profile_kind != "flat" and model.bandwidth < 4.0 * grid.step:
        raise ConfigurationError(
            f"conversion FWHM {model.bandwidth:.4g} Hz is not resolved by grid step {grid.step:.4g} Hz"
        )
    x = grid.values - model.pump_detuning
    if model.profile_kind == "flat":
        s = np.ones_like(x)
    elif model.profile_kind == "sinc2":
        s = unit_profile("sinc", model.bandwidth, x) ** 2
    else:
        s = unit_profile("gaussian", model.bandwidth, x) ** 2
    return model.eta0 * s


def conversion_profile(model: ConverterModel, grid: FrequencyGrid) -> tuple[np.ndarray, np.ndarray]:
    """Per-detuning (t, r) amplitude arrays of the active beam splitter."""
    eta = efficiency_profile(model, grid)
    return np.sqrt(1.0 - eta), np.sqrt(eta)


def eta_from_peak_ratio(p2: float, p1: float) -> float:
    """Splitting ratio from swap (p2) and no-swap (p1) peak areas.

    Inverts ``p2/p1 = eta^2 / (1 - eta)^2``.
    """
    if not p1 > 0:
        raise EstimationError("no-swap peak area must be positive")
    if p2 < 0:
        raise EstimationError("swap peak area must be non-negative")
    s = math.sqrt(p2 / p1)
    return s / (1.0 + s)


def eta_from_peak_ratio_sigma(p2: float, p1: float, sigma_p2: float, sigma_p1: float) -> float:
    """1-sigma uncertainty of :func:`eta_from_peak_ratio` by linear propagation."""
    if not (p1 > 0 and p2 > 0):
        raise EstimationError("uncertainty needs both peak areas positive")
    s = math.sqrt(p2 / p1)
    rel = 0.5 * math.hypot(sigma_p2 / p2, sigma_p1 / p1)
    return s * rel / (1.0 + s) ** 2
