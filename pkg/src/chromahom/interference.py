"""Two-color HOM dip and same-color anti-dips versus delay.

A red photon at detuning ``+w`` and its telecom partner at ``-w`` enter the
converter. Each detuning ``x`` has its own beam splitter coupling red(x) and
telecom(x) with transition probability eta(x). The telecom input is delayed
by ``tau``, which puts the phase ``exp(+2 pi i x tau)`` on a telecom photon at
detuning ``x``.

For the final state (red at +w, telecom at -w) two paths contribute:
neither photon converts, or both convert (from the mirrored pair). The two
``i`` factors of the double swap give the relative minus sign.
"""

from __future__ import annotations

import csv
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import fockcore
from .converter import ConverterModel, conversion_profile
from .errors import AnalysisError, ConfigurationError, MeasurementError
from .spectra import FrequencyGrid, SpectralModel, normalize, sample_model, width_at_half

PLACEMENTS = ("pre_converter", "post_converter")
CHANNELS = ("cross", "tt", "rr")
ORACLE_MAX_POINTS = 512


@dataclass(frozen=True)
class ExperimentModel:
    source: SpectralModel = SpectralModel("sinc", 75e9)
    converter: ConverterModel = ConverterModel(0.476)
    telecom_filter: SpectralModel = SpectralModel("gaussian", 105e9)
    filter_placement: str = "post_converter"
    red_filter: SpectralModel = SpectralModel("flat")
    grid: FrequencyGrid = FrequencyGrid()

    def __post_init__(self):
        if self.filter_placement not in PLACEMENTS:
            raise ConfigurationError(f"filter placement must be one of {PLACEMENTS}")

    def replace(self, **changes) -> "ExperimentModel":
        return replace(self, **changes)


def ideal_model(eta0: float = 0.5, grid: FrequencyGrid = FrequencyGrid()) -> ExperimentModel:
    """Flat converter, no filtering: isolates the splitting ratio."""
    return ExperimentModel(
        converter=ConverterModel(eta0, profile_kind="flat"),
        telecom_filter=SpectralModel("flat"),
        grid=grid,
    )


@dataclass
class DelayScan:
    delays: np.ndarray
    p_cross: np.ndarray | None = None
    p_tt: np.ndarray | None = None
    p_rr: np.ndarray | None = None

    def channel(self, name: str) -> np.ndarray:
        if name not in CHANNELS:
            raise ValueError(f"unknown channel {name!r}")
        y = getattr(self, "p_" + name)
        if y is None:
            raise ValueError(f"scan has no {name} data")
        return y

    def to_csv(self, path, header: str | None = None) -> None:
        cols = [np.asarray(self.delays)] + [
            np.full(len(self.delays), np.nan) if y is None else np.asarray(y)
            for y in (self.p_cross, self.p_tt, self.p_rr)
        ]
        with open(path, "w", newline="") as fh:
            if header:
                fh.write(header + "\n")
            w = csv.writer(fh)
            w.writerow(["delay_s", "p_cross", "p_tt", "p_rr"])
            for row in zip(*cols):
                w.writerow([repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path) -> "DelayScan":
        with open(path) as fh:
            lines = [ln for ln in fh if not ln.startswith("#")]
        data = np.genfromtxt(lines, delimiter=",", names=True)
        cols = {}
        for name in ("p_cross", "p_tt", "p_rr"):
            y = np.atleast_1d(data[name])
            cols[name] = None if np.all(np.isnan(y)) else y
        return cls(np.atleast_1d(data["delay_s"]), **cols)


@dataclass(frozen=True)
class _Sampled:
    """Model ingredients on the grid; arrays indexed by detuning."""

    omega: np.ndarray
    step: float
    g: np.ndarray  # biphoton amplitude, pre-converter filtering included
    t: np.ndarray
    r: np.ndarray
    h_red: np.ndarray  # output filters at the detected detuning
    h_tel: np.ndarray = field(repr=False)


def _sample(model: ExperimentModel) -> _Sampled:
    grid = model.grid
    f = normalize(sample_model(model.source, grid)).amp
    h_tel = sample_model(model.telecom_filter, grid).amp
    h_red = sample_model(model.red_filter, grid).amp
    if model.filter_placement == "pre_converter":
        # telecom input sits at -omega
        f = f * h_tel[::-1]
        h_tel = np.ones_like(h_tel)
    t, r = conversion_profile(model.converter, grid)
    return _Sampled(grid.values, grid.step, f, t, r, h_red, h_tel)


def _expected_width(model: ExperimentModel) -> float:
    widths = [m.fwhm for m in (model.source, model.telecom_filter, model.red_filter) if m.kind != "flat"]
    if model.converter.profile_kind != "flat":
        widths.append(model.converter.bandwidth)
    if not widths:
        return 0.0
    return 0.44 / min(widths)


def _check_delays(model: ExperimentModel, delays: np.ndarray) -> None:
    w = _expected_width(model)
    if w == 0.0 or delays.size < 2:
        return
    d = np.diff(np.sort(delays))
    if d.max() > w / 3 or (delays.max() - delays.min()) < 5 * w:
        warnings.warn(
            f"delay grid may not resolve a dip of width ~{w * 1e12:.3g} ps", RuntimeWarning, stacklevel=3
        )


def _scan_chunk(s: _Sampled, taus: np.ndarray, which: tuple[str, ...]) -> dict[str, np.ndarray]:
    ph = np.exp(-2j * np.pi * np.outer(taus, s.omega))
    phc = ph.conj()
    g, gm = s.g, s.g[::-1]
    t, tm, r, rm = s.t, s.t[::-1], s.r, s.r[::-1]
    out = {}
    if "cross" in which:
        amp = (t * tm * g) * ph - (r * rm * gm) * phc
        amp *= s.h_red * s.h_tel[::-1]
        out["cross"] = np.sum(np.abs(amp) ** 2, axis=1) * s.step
    if "tt" in which:
        amp = 1j * ((r * tm * g) * ph + (rm * t * gm) * phc)
        amp *= s.h_tel * s.h_tel[::-1]
        # each unordered pair {+w, -w} appears twice in the sum
        out["tt"] = 0.5 * np.sum(np.abs(amp) ** 2, axis=1) * s.step
    if "rr" in which:
        amp = 1j * ((t * rm * g) * ph + (tm * r * gm) * phc)
        amp *= s.h_red * s.h_red[::-1]
        out["rr"] = 0.5 * np.sum(np.abs(amp) ** 2, axis=1) * s.step
    return out


def _scan(model, delays, which, threads=1, chunk=128) -> DelayScan:
    delays = np.atleast_1d(np.asarray(delays, dtype=float))
    _check_delays(model, delays)
    s = _sample(model)
    pieces = [delays[i:i + chunk] for i in range(0, delays.size, chunk)]
    if threads > 1 and len(pieces) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(lambda taus: _scan_chunk(s, taus, which), pieces))
    else:
        results = [_scan_chunk(s, taus, which) for taus in pieces]
    cols = {f"p_{k}": np.clip(np.concatenate([res[k] for res in results]), 0.0, 1.0) for k in which}
    return DelayScan(delays, **cols)


def cross_color_dip(model: ExperimentModel, delays, threads: int = 1) -> DelayScan:
    """Probability of one red and one telecom detection versus delay."""
    return _scan(model, delays, ("cross",), threads)


def same_color_antidips(model: ExperimentModel, delays, threads: int = 1) -> DelayScan:
    """Probabilities of both photons leaving in telecom (tt) or in red (rr)."""
    return _scan(model, delays, ("tt", "rr"), threads)


def delay_scan(model: ExperimentModel, delays, threads: int = 1, channels=CHANNELS) -> DelayScan:
    unknown = set(channels) - set(CHANNELS)
    if unknown:
        raise ValueError(f"unknown channels {sorted(unknown)}")
    return _scan(model, delays, tuple(channels), threads)


def large_delay_outcomes(model: ExperimentModel) -> dict[str, float]:
    """Outcome probabilities for fully distinguishable arrival times.

    ``no_swap`` and ``swap`` split the cross-color probability into the two
    calibration peaks.
    """
    s = _sample(model)
    g2, gm2 = np.abs(s.g) ** 2, np.abs(s.g[::-1]) ** 2
    t, tm, r, rm = s.t, s.t[::-1], s.r, s.r[::-1]
    hc = np.abs(s.h_red * s.h_tel[::-1]) ** 2
    htt = np.abs(s.h_tel * s.h_tel[::-1]) ** 2
    hrr = np.abs(s.h_red * s.h_red[::-1]) ** 2
    return {
        "no_swap": float(np.sum((t * tm) ** 2 * g2 * hc) * s.step),
        "swap": float(np.sum((r * rm) ** 2 * gm2 * hc) * s.step),
        "tt": float(0.5 * np.sum(((r * tm) ** 2 * g2 + (rm * t) ** 2 * gm2) * htt) * s.step),
        "rr": float(0.5 * np.sum(((t * rm) ** 2 * g2 + (tm * r) ** 2 * gm2) * hrr) * s.step),
    }


@dataclass(frozen=True)
class Visibility:
    visibility: float
    location: float
    baseline: float
    extremum: float
    fwhm: float | None


def _baseline(y: np.ndarray) -> float:
    k = max(1, int(round(0.1 * y.size)))
    return float(np.mean(np.concatenate([y[:k], y[-k:]])))


def feature_width(delays, values, dip: bool) -> float:
    """FWHM of a dip or peak measured against the outer-sample baseline."""
    y = np.asarray(values, dtype=float)
    base = _baseline(y)
    return width_at_half(delays, base - y if dip else y - base)


def visibility(scan: DelayScan, channel: str = "cross") -> Visibility:
    """Baseline-relative depth of the cross-color dip or a same-color peak.

    The baseline is the mean of the outer 20% of delay samples (10% per
    side); these must lie at least two feature widths away from the feature.
    """
    x = np.asarray(scan.delays, dtype=float)
    y = np.asarray(scan.channel(channel), dtype=float)
    if x.size < 10:
        raise AnalysisError("need at least 10 delay samples to estimate a baseline")
    order = np.argsort(x)
    x, y = x[order], y[order]
    dip = channel == "cross"
    base = _baseline(y)
    if not base > 0:
        raise AnalysisError("baseline coincidence probability is zero")
    i = int(np.argmin(y) if dip else np.argmax(y))
    depth = (base - y[i]) if dip else (y[i] - base)
    if abs(depth) <= 1e-12 * base:
        return Visibility(0.0, float(x[i]), base, float(y[i]), None)
    try:
        w = feature_width(x, y, dip)
    except MeasurementError as exc:
        raise AnalysisError(f"feature does not return to baseline inside the scan: {exc}") from exc
    k = max(1, int(round(0.1 * y.size)))
    inner = min(x[i] - x[k - 1], x[-k] - x[i])
    if inner < 2.0 * w:
        raise AnalysisError(
            f"baseline region starts {inner:.3g} s from the feature, less than 2x its width {w:.3g} s"
        )
    return Visibility(float(depth / base), float(x[i]), base, float(y[i]), w)


def classical_cross_scan(model: ExperimentModel, delays, n_phase: int = 16) -> np.ndarray:
    """Normalised coincidence rate for phase-randomised classical fields.

    Both inputs are classical pulses with the photons' marginal spectra and
    a uniformly random relative phase. The result is divided by the product
    of mean output energies (the distinguishable baseline), so
    ``1 - min(result)`` is the classical dip visibility, never above 1/2.
    """
    s = _sample(model)
    a = np.abs(s.g)  # red field at red detuning x
    b0 = np.abs(s.g[::-1])  # telecom field at telecom detuning x
    phis = 2 * np.pi * np.arange(n_phase) / n_phase
    hr2, ht2 = np.abs(s.h_red) ** 2, np.abs(s.h_tel) ** 2
    base_r = np.sum((s.t**2 * a**2 + s.r**2 * b0**2) * hr2) * s.step
    base_t = np.sum((s.r**2 * a**2 + s.t**2 * b0**2) * ht2) * s.step
    out = []
    for tau in np.atleast_1d(delays):
        b = b0 * np.exp(2j * np.pi * s.omega * tau)
        prod = 0.0
        for phi in phis:
            e = np.exp(1j * phi)
            w_r = np.sum(np.abs(s.t * a + 1j * s.r * b * e) ** 2 * hr2) * s.step
            w_t = np.sum(np.abs(1j * s.r * a + s.t * b * e) ** 2 * ht2) * s.step
            prod += w_r * w_t
        out.append(prod / n_phase / (base_r * base_t))
    return np.array(out)


def classical_visibility(model: ExperimentModel) -> float:
    return float(1.0 - classical_cross_scan(model, [0.0])[0])


def oracle_delay_scan(model: ExperimentModel, delays) -> DelayScan:
    """Independent check of :func:`delay_scan` by explicit Fock evolution.

    Every mirrored detuning pair (x, -x) spans four modes: red and telecom at
    +x (one beam splitter) and at -x (another). The two-photon input in that
    subspace is propagated through both splitters term by term with
    :mod:`fockcore`, then output projector weights are summed.
    """
    grid = model.grid
    if grid.size > ORACLE_MAX_POINTS:
        raise ConfigurationError(f"oracle grid limited to {ORACLE_MAX_POINTS} points, got {grid.size}")
    omega = grid.values
    dw = grid.step
    src = sample_model(model.source, grid).amp.real
    src = src / math.sqrt(float(np.sum(src**2)) * dw)
    h_tel = sample_model(model.telecom_filter, grid).amp.real
    h_red = sample_model(model.red_filter, grid).amp.real
    pre = model.filter_placement == "pre_converter"
    t_arr, r_arr = conversion_profile(model.converter, grid)
    zero = grid.size // 2

    def idx(k):
        return zero + k

    def out_filter(color, k):
        if color == "red":
            return h_red[idx(k)]
        return 1.0 if pre else h_tel[idx(k)]

    def single(k, color):
        # one photon entering the splitter at detuning k (mode 0 red, 1 telecom)
        bs = fockcore.BeamSplitterMatrix(float(t_arr[idx(k)]), float(r_arr[idx(k)]))
        n = (1, 0) if color == "red" else (0, 1)
        st = fockcore.apply_beam_splitter(fockcore.TwoModeFockState.basis(*n, n_max=2), bs)
        return {"red": st.amplitude(1, 0), "tel": st.amplitude(0, 1)}

    half = zero
    singles = {k: {c: single(k, c) for c in ("red", "tel")} for k in range(-half, half + 1) if k != 0}
    bs0 = fockcore.BeamSplitterMatrix(float(t_arr[zero]), float(r_arr[zero]))
    hom0 = fockcore.apply_beam_splitter(fockcore.TwoModeFockState.basis(1, 1, n_max=2), bs0)

    taus = np.atleast_1d(np.asarray(delays, dtype=float))
    res = {c: np.zeros(taus.size) for c in CHANNELS}
    for j, tau in enumerate(taus):
        acc = dict.fromkeys(CHANNELS, 0.0)

        # x = 0: both photons share one splitter
        a0 = src[zero] * (h_tel[zero] if pre else 1.0) * math.sqrt(dw)
        acc["cross"] += abs(a0 * hom0.amplitude(1, 1) * h_red[zero] * out_filter("tel", 0)) ** 2
        acc["rr"] += abs(a0 * hom0.amplitude(2, 0) * h_red[zero] ** 2) ** 2
        acc["tt"] += abs(a0 * hom0.amplitude(0, 2) * out_filter("tel", 0) ** 2) ** 2

        for k in range(1, half + 1):
            x = omega[idx(k)]
            # term 1: red at +x, telecom at -x; term 2: red at -x, telecom at +x
            c1 = src[idx(k)] * _delay_phase(-x * tau) * math.sqrt(dw)
            c2 = src[idx(-k)] * _delay_phase(x * tau) * math.sqrt(dw)
            if pre:
                c1 *= h_tel[idx(-k)]
                c2 *= h_tel[idx(k)]
            # four-mode outcome amplitudes keyed by (color at +x, color at -x)
            outcome: dict[tuple[str, str], complex] = {}
            for cp, ap in singles[k]["red"].items():
                for cm, am in singles[-k]["tel"].items():
                    outcome[(cp, cm)] = outcome.get((cp, cm), 0j) + c1 * ap * am
            for cp, ap in singles[k]["tel"].items():
                for cm, am in singles[-k]["red"].items():
                    outcome[(cp, cm)] = outcome.get((cp, cm), 0j) + c2 * ap * am
            for (cp, cm), amp in outcome.items():
                p = abs(amp * out_filter(cp, k) * out_filter(cm, -k)) ** 2
                if cp != cm:
                    acc["cross"] += p
                elif cp == "red":
                    acc["rr"] += p
                else:
                    acc["tt"] += p
        for c in CHANNELS:
            res[c][j] = acc[c]
    return DelayScan(taus, res["cross"], res["tt"], res["rr"])


def _delay_phase(x_tau: float) -> complex:
    """Delay phase exp(2 pi i * detuning * tau) for the telecom photon."""
    return complex(math.cos(2 * math.pi * x_tau), math.sin(2 * math.pi * x_tau))


def beat_note_resolution(delta_nu: float) -> float:
    """Detector timing needed to resolve the beat between two colors."""
    if not delta_nu > 0:
        raise ValueError("frequency difference must be positive")
    return 1.0 / delta_nu
