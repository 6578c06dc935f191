"""JSON scenario configuration.

Canonical units are Hz for frequencies and ps for times; strings with a unit
suffix ("75GHz", "7.78ps", "1ns", "35W") are accepted everywhere a number is.
Run durations are in seconds. Unknown keys are rejected.
"""

from __future__ import annotations

import copy
import hashlib
import json
import re
from dataclasses import dataclass, field

import numpy as np

from .converter import ConverterModel, PumpCalibration, transition_probability
from .errors import ConfigurationError
from .interference import ExperimentModel
from .spectra import FrequencyGrid, SpectralModel
from .tagsim import DetectionConfig

_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_UNIT_RE = re.compile(rf"^\s*({_NUM})\s*([a-zA-Z]*)\s*$")

FREQ_UNITS = {"": 1.0, "hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9, "thz": 1e12}
TIME_PS_UNITS = {"": 1.0, "fs": 1e-3, "ps": 1.0, "ns": 1e3, "us": 1e6, "ms": 1e9, "s": 1e12}
SECONDS_UNITS = {"": 1.0, "s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9, "ps": 1e-12}
POWER_UNITS = {"": 1.0, "w": 1.0, "mw": 1e-3, "kw": 1e3}


def _parse(value, units: dict, what: str) -> float:
    if isinstance(value, bool):
        raise ConfigurationError(f"{what}: expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        m = _UNIT_RE.match(value)
        if m:
            unit = m.group(2).lower()
            if unit in units:
                return float(m.group(1)) * units[unit]
    raise ConfigurationError(f"{what}: cannot parse {value!r}")


def parse_frequency(value, what="frequency") -> float:
    """Frequency in Hz."""
    return _parse(value, FREQ_UNITS, what)


def parse_time_ps(value, what="time") -> float:
    """Time in picoseconds."""
    return _parse(value, TIME_PS_UNITS, what)


def parse_seconds(value, what="duration") -> float:
    return _parse(value, SECONDS_UNITS, what)


def parse_power(value, what="power") -> float:
    return _parse(value, POWER_UNITS, what)


DEFAULTS = {
    "experiment": {
        "source": {"kind": "sinc", "fwhm": "75GHz"},
        "converter": {"eta0": 0.476, "pump_power": None, "bandwidth": "110GHz",
                      "profile": "sinc2", "pump_detuning": "0Hz"},
        "telecom_filter": {"kind": "gaussian", "fwhm": "105GHz", "placement": "post_converter"},
        "red_filter": {"kind": "flat", "fwhm": None},
        "grid": {"n_points": 4096, "span": "2THz"},
    },
    "calibration": {"p_max": "149W", "enhancement": 50.0, "n_points": 301},
    "scan": {"start": "-40ps", "stop": "40ps", "step": "0.25ps"},
    "montecarlo": {
        "pair_rate": 1e6,
        "duration": "1s",
        "seed": 1,
        "n_delays": 41,
        "scan_half_range": "30ps",
        "calibration_delay": "500ps",
        "calibration_eta": None,
        "window": "2000ps",
        "bin_width": "10ps",
        "peak_half_width": "150ps",
        "accidental_gap": None,
        "detection": {
            "eff_snspd": 0.90, "eff_apd": 0.35, "collection_red": 0.57, "collection_telecom": 0.33,
            "converter_transmission": 0.46, "dark_rate": 0.0, "jitter_fwhm": [30, 30, 50, 50],
            "splitter_ratio": 0.5,
        },
    },
    "fit": {"weights": "poisson", "subtract_accidentals": True},
    "output_dir": "out",
}


def _merge(defaults: dict, user: dict, path: str = "") -> dict:
    out = copy.deepcopy(defaults)
    for key, val in user.items():
        where = f"{path}{key}"
        if key not in defaults:
            raise ConfigurationError(f"unknown config key {where!r}")
        if isinstance(defaults[key], dict):
            if not isinstance(val, dict):
                raise ConfigurationError(f"{where} must be an object")
            out[key] = _merge(defaults[key], val, where + ".")
        else:
            out[key] = val
    return out


@dataclass(frozen=True)
class ScanConfig:
    start_ps: float
    stop_ps: float
    step_ps: float

    def delays(self) -> np.ndarray:
        """Delay samples in seconds, endpoints included."""
        n = int(round((self.stop_ps - self.start_ps) / self.step_ps)) + 1
        return np.linspace(self.start_ps, self.stop_ps, n) * 1e-12


@dataclass(frozen=True)
class MonteCarloConfig:
    pair_rate: float
    duration: float  # s
    seed: int
    n_delays: int
    scan_half_range_ps: float
    calibration_delay_ps: float
    calibration_eta: float | None
    window_ps: int
    bin_width_ps: int
    peak_half_width_ps: int
    accidental_gap: tuple[float, float] | None
    detection: DetectionConfig

    def delays(self) -> np.ndarray:
        return np.linspace(-self.scan_half_range_ps, self.scan_half_range_ps, self.n_delays) * 1e-12


@dataclass(frozen=True)
class FitOptions:
    weights: str = "poisson"
    subtract_accidentals: bool = True


@dataclass(frozen=True)
class ScenarioConfig:
    experiment: ExperimentModel
    calibration: PumpCalibration
    calibration_points: int
    scan: ScanConfig
    montecarlo: MonteCarloConfig
    fit: FitOptions
    output_dir: str
    raw: dict = field(repr=False, compare=False)

    @property
    def config_hash(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()

    @property
    def header(self) -> str:
        return f"# config_sha256={self.config_hash}"


def _spectral(d: dict, what: str) -> SpectralModel:
    fwhm = None if d.get("fwhm") is None else parse_frequency(d["fwhm"], f"{what}.fwhm")
    return SpectralModel(d["kind"], fwhm)


def build_config(user: dict | None = None) -> ScenarioConfig:
    """Validate a raw config dict (merged over defaults) into typed settings."""
    if user is None:
        user = {}
    if not isinstance(user, dict):
        raise ConfigurationError("config must be a JSON object")
    raw = _merge(DEFAULTS, user)
    ex = raw["experiment"]
    try:
        cal = PumpCalibration(parse_power(raw["calibration"]["p_max"], "calibration.p_max"),
                              float(raw["calibration"]["enhancement"]))
        conv = ex["converter"]
        if conv["pump_power"] is not None:
            p = parse_power(conv["pump_power"], "experiment.converter.pump_power")
            try:
                eta0 = transition_probability(p, cal)
            except ValueError as exc:
                raise ConfigurationError(str(exc)) from exc
        else:
            eta0 = float(conv["eta0"])
        grid = FrequencyGrid(int(ex["grid"]["n_points"]), parse_frequency(ex["grid"]["span"], "grid.span"))
        model = ExperimentModel(
            source=_spectral(ex["source"], "experiment.source"),
            converter=ConverterModel(
                eta0,
                bandwidth=parse_frequency(conv["bandwidth"], "converter.bandwidth"),
                profile_kind=conv["profile"],
                pump_detuning=parse_frequency(conv["pump_detuning"], "converter.pump_detuning"),
            ),
            telecom_filter=_spectral(ex["telecom_filter"], "experiment.telecom_filter"),
            filter_placement=ex["telecom_filter"]["placement"],
            red_filter=_spectral(ex["red_filter"], "experiment.red_filter"),
            grid=grid,
        )
        sc = raw["scan"]
        scan = ScanConfig(parse_time_ps(sc["start"]), parse_time_ps(sc["stop"]), parse_time_ps(sc["step"]))
        if not (scan.step_ps > 0 and scan.stop_ps > scan.start_ps):
            raise ConfigurationError("scan needs start < stop and a positive step")

        mc = raw["montecarlo"]
        det = DetectionConfig(**{k: (tuple(v) if isinstance(v, list) else v) for k, v in mc["detection"].items()})
        gap = mc["accidental_gap"]
        if gap is not None:
            if set(gap) != {"raw", "corrected"}:
                raise ConfigurationError("montecarlo.accidental_gap needs exactly 'raw' and 'corrected'")
            gap = (float(gap["raw"]), float(gap["corrected"]))
            if not 0 < gap[0] <= gap[1]:
                raise ConfigurationError("accidental_gap requires 0 < raw <= corrected")
        cal_eta = mc["calibration_eta"]
        if cal_eta is not None and not 0 <= float(cal_eta) < 1:
            raise ConfigurationError("montecarlo.calibration_eta must lie in [0, 1)")
        mcc = MonteCarloConfig(
            pair_rate=float(mc["pair_rate"]),
            duration=parse_seconds(mc["duration"]),
            seed=int(mc["seed"]),
            n_delays=int(mc["n_delays"]),
            scan_half_range_ps=parse_time_ps(mc["scan_half_range"]),
            calibration_delay_ps=parse_time_ps(mc["calibration_delay"]),
            calibration_eta=None if cal_eta is None else float(cal_eta),
            window_ps=int(round(parse_time_ps(mc["window"]))),
            bin_width_ps=int(round(parse_time_ps(mc["bin_width"]))),
            peak_half_width_ps=int(round(parse_time_ps(mc["peak_half_width"]))),
            accidental_gap=gap,
            detection=det,
        )
        if mcc.pair_rate * mcc.duration < 100:
            raise ConfigurationError("montecarlo needs at least 100 expected pairs per run")
        if mcc.n_delays < 10:
            raise ConfigurationError("montecarlo.n_delays must be >= 10")
        if not 0 < mcc.bin_width_ps <= mcc.window_ps:
            raise ConfigurationError("need 0 < bin_width <= window")
        if 2 * mcc.peak_half_width_ps >= mcc.window_ps or mcc.calibration_delay_ps + mcc.peak_half_width_ps >= mcc.window_ps:
            raise ConfigurationError("correlation window too small for the peak windows")
        if mcc.calibration_delay_ps <= mcc.peak_half_width_ps:
            raise ConfigurationError("calibration peaks at +/- delay would overlap")

        ft = raw["fit"]
        if ft["weights"] not in ("poisson", "uniform"):
            raise ConfigurationError("fit.weights must be 'poisson' or 'uniform'")
        fit = FitOptions(ft["weights"], bool(ft["subtract_accidentals"]))
    except ConfigurationError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"invalid configuration: {exc}") from exc

    return ScenarioConfig(model, cal, int(raw["calibration"]["n_points"]), scan, mcc, fit,
                          str(raw["output_dir"]), raw)


def load_config(path=None, overrides: dict | None = None) -> ScenarioConfig:
    user = {}
    if path is not None:
        try:
            with open(path) as fh:
                user = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: invalid JSON: {exc}") from exc
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    if overrides:
        user = _merge(_merge(DEFAULTS, user), overrides)
    return build_config(user)
