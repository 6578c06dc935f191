"""Synthetic four-detector time tags and their coincidence analysis.

Times are integer picoseconds. Telecom light (both output colors can carry
telecom photons after the converter) goes through a 50:50 fiber splitter
onto two SNSPDs, red light onto two APDs.
"""

from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .errors import AnalysisError, ConfigurationError

FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))


class Channel(IntEnum):
    SNSPD_A = 0
    SNSPD_B = 1
    APD_A = 2
    APD_B = 3


SNSPDS = frozenset({Channel.SNSPD_A, Channel.SNSPD_B})
APDS = frozenset({Channel.APD_A, Channel.APD_B})


def _per_channel(value, name):
    arr = np.broadcast_to(np.asarray(value, dtype=float), (4,)).copy()
    if np.any(arr < 0):
        raise ConfigurationError(f"{name} must be non-negative")
    return tuple(float(v) for v in arr)


@dataclass(frozen=True)
class DetectionConfig:
    """Efficiencies of the detection chain.

    Dark rates are counts/s and jitter FWHMs are ps, one value per channel in
    ``Channel`` order (a scalar applies to all four). The default jitters
    (30 ps SNSPD, 50 ps APD) are plausible placeholders, not measured values.
    """

    eff_snspd: float = 0.90
    eff_apd: float = 0.35
    collection_red: float = 0.57
    collection_telecom: float = 0.33
    converter_transmission: float = 0.46
    dark_rate: tuple = (0.0, 0.0, 0.0, 0.0)
    jitter_fwhm: tuple = (30.0, 30.0, 50.0, 50.0)
    splitter_ratio: float = 0.5

    def __post_init__(self):
        for name in ("eff_snspd", "eff_apd", "collection_red", "collection_telecom",
                     "converter_transmission", "splitter_ratio"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigurationError(f"{name} must lie in [0, 1], got {v}")
        object.__setattr__(self, "dark_rate", _per_channel(self.dark_rate, "dark_rate"))
        object.__setattr__(self, "jitter_fwhm", _per_channel(self.jitter_fwhm, "jitter_fwhm"))

    def photon_efficiency(self, origin: str, color: str) -> float:
        """Detection probability of a photon born ``origin`` and detected as ``color``."""
        coll = self.collection_red if origin == "red" else self.collection_telecom
        det = self.eff_apd if color == "red" else self.eff_snspd
        return coll * self.converter_transmission * det


@dataclass(frozen=True)
class Outcomes:
    """Per-pair outcome probabilities; the remainder is a lost pair.

    ``swap_fraction`` is the share of cross-color outcomes in which both
    photons changed color.
    """

    cross: float
    tt: float
    rr: float
    swap_fraction: float = 0.0

    def __post_init__(self):
        probs = (self.cross, self.tt, self.rr)
        if any(p < 0 or p > 1 for p in probs) or sum(probs) > 1 + 1e-12:
            raise ConfigurationError(f"invalid outcome distribution {probs}")
        if not 0.0 <= self.swap_fraction <= 1.0:
            raise ConfigurationError("swap_fraction must lie in [0, 1]")

    @classmethod
    def from_far_delay(cls, far: dict) -> "Outcomes":
        cross = far["no_swap"] + far["swap"]
        return cls(cross, far["tt"], far["rr"], far["swap"] / cross if cross > 0 else 0.0)

    @classmethod
    def calibration(cls, eta: float) -> "Outcomes":
        """Distinguishable photons through a flat converter of ratio ``eta``."""
        return cls(
            cross=(1 - eta) ** 2 + eta**2, tt=eta * (1 - eta), rr=eta * (1 - eta),
            swap_fraction=eta**2 / ((1 - eta) ** 2 + eta**2),
        )


@dataclass(frozen=True)
class TagStream:
    channels: np.ndarray = field(repr=False)
    times: np.ndarray = field(repr=False)

    def __post_init__(self):
        ch = np.ascontiguousarray(self.channels, dtype=np.uint8)
        t = np.ascontiguousarray(self.times, dtype=np.int64)
        if ch.shape != t.shape or ch.ndim != 1:
            raise ValueError("channels and times must be 1-D and equally long")
        if ch.size and ch.max() > max(Channel):
            raise ValueError("unknown channel id in tag stream")
        ch.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "channels", ch)
        object.__setattr__(self, "times", t)

    def __len__(self):
        return int(self.times.size)

    def is_ordered(self) -> bool:
        return bool(np.all(np.diff(self.times) >= 0))

    def count(self, channels) -> int:
        return int(np.isin(self.channels, [int(c) for c in channels]).sum())

    def chunks(self, n_chunks: int):
        for idx in np.array_split(np.arange(len(self)), n_chunks):
            yield TagStream(self.channels[idx], self.times[idx])

    def same_as(self, other: "TagStream") -> bool:
        return np.array_equal(self.channels, other.channels) and np.array_equal(self.times, other.times)


def _merge(channels, times) -> TagStream:
    ch = np.concatenate(channels)
    # jitter can push the earliest tags below zero
    t = np.clip(np.concatenate(times), 0, None).astype(np.int64)
    order = np.lexsort((ch, t))
    return TagStream(ch[order], t[order])


def generate_run(outcomes: Outcomes, pair_rate: float, duration: float, config: DetectionConfig,
                 seed, delay_ps: float = 0.0) -> TagStream:
    """Monte Carlo tag stream for ``pair_rate * duration`` expected pairs.

    The red-born photon leaves the source at the emission time, its telecom
    partner ``delay_ps`` later. Each pair is assigned one outcome, photons are
    thinned by collection, converter transmission and detector efficiency,
    routed by the output splitter, jittered, and merged with dark counts.
    """
    mean_pairs = pair_rate * duration
    if mean_pairs < 100:
        raise ConfigurationError(f"run too short: {mean_pairs:.3g} expected pairs (< 100)")
    rng = np.random.default_rng(seed)
    dur_ps = duration * 1e12

    n = int(rng.poisson(mean_pairs))
    t0 = np.sort(rng.uniform(0.0, dur_ps, n))
    cum = np.cumsum([outcomes.cross, outcomes.tt, outcomes.rr])
    kind = np.searchsorted(cum, rng.random(n), side="right")  # 0 cross, 1 tt, 2 rr, 3 lost
    swapped = (kind == 0) & (rng.random(n) < outcomes.swap_fraction)

    # color on exit: True = telecom
    red_born_tel = ((kind == 0) & swapped) | (kind == 1)
    tel_born_tel = ((kind == 0) & ~swapped) | (kind == 1)
    alive = kind < 3

    chans, times = [], []
    for born, exits_tel, t_emit in (
        ("red", red_born_tel, t0),
        ("telecom", tel_born_tel, t0 + delay_ps),
    ):
        eff = np.where(exits_tel, config.photon_efficiency(born, "telecom"), config.photon_efficiency(born, "red"))
        hit = alive & (rng.random(n) < eff)
        port_a = rng.random(n) < config.splitter_ratio
        ch = np.where(exits_tel, np.where(port_a, Channel.SNSPD_A, Channel.SNSPD_B),
                      np.where(port_a, Channel.APD_A, Channel.APD_B)).astype(np.uint8)
        sig = np.array(config.jitter_fwhm)[ch] / FWHM_PER_SIGMA
        jit = rng.normal(0.0, 1.0, n) * sig
        chans.append(ch[hit])
        times.append(np.rint(t_emit + jit)[hit])

    for c in Channel:
        k = int(rng.poisson(config.dark_rate[c] * duration))
        chans.append(np.full(k, c, dtype=np.uint8))
        times.append(np.floor(rng.uniform(0.0, dur_ps, k)))

    return _merge(chans, times)


@dataclass
class CoincidenceHistogram:
    bin_width: int
    offsets: np.ndarray
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __add__(self, other: "CoincidenceHistogram") -> "CoincidenceHistogram":
        if self.bin_width != other.bin_width or not np.array_equal(self.offsets, other.offsets):
            raise ValueError("histograms have different binning")
        return CoincidenceHistogram(self.bin_width, self.offsets.copy(), self.counts + other.counts)

    def to_csv(self, path, header: str | None = None) -> None:
        with open(path, "w", newline="") as fh:
            if header:
                fh.write(header + "\n")
            w = csv.writer(fh)
            w.writerow(["offset_ps", "counts"])
            w.writerows(zip(self.offsets.tolist(), self.counts.tolist()))

    @classmethod
    def from_csv(cls, path) -> "CoincidenceHistogram":
        rows = []
        with open(path) as fh:
            for line in fh:
                if line.startswith("#") or line.startswith("offset_ps"):
                    continue
                a, b = line.strip().split(",")
                rows.append((int(a), int(b)))
        arr = np.array(rows, dtype=np.int64)
        bw = int(arr[1, 0] - arr[0, 0]) if len(arr) > 1 else 1
        return cls(bw, arr[:, 0], arr[:, 1])


class Correlator:
    """Streaming start-stop correlator between two channel groups.

    Tags are fed in time-ordered chunks. A pair is counted when its later
    member arrives, so the last ``window`` ps of each chunk are carried over.
    The histogram holds ``t_b - t_a`` for every pair with ``|t_b - t_a| <= window``.
    """

    def __init__(self, group_a, group_b, window: int, bin_width: int):
        self.group_a = np.array(sorted(int(c) for c in group_a), dtype=np.uint8)
        self.group_b = np.array(sorted(int(c) for c in group_b), dtype=np.uint8)
        if np.intersect1d(self.group_a, self.group_b).size:
            raise ValueError("channel groups must be disjoint")
        window, bin_width = int(window), int(bin_width)
        if bin_width <= 0 or window < bin_width:
            raise ValueError("need 0 < bin_width <= window")
        self.window = window
        self.bin_width = bin_width
        self._half = bin_width // 2
        self._k = (window + self._half) // bin_width
        self.counts = np.zeros(2 * self._k + 1, dtype=np.int64)
        self._carry_ch = np.zeros(0, dtype=np.uint8)
        self._carry_t = np.zeros(0, dtype=np.int64)
        self._last = None

    def feed(self, tags: TagStream) -> None:
        if len(tags) == 0:
            return
        if not tags.is_ordered() or (self._last is not None and tags.times[0] < self._last):
            raise ValueError("tags must be fed in non-decreasing time order")
        ch = np.concatenate([self._carry_ch, tags.channels])
        t = np.concatenate([self._carry_t, tags.times])
        start = self._carry_t.size

        ia = np.flatnonzero(np.isin(ch, self.group_a))
        ib = np.flatnonzero(np.isin(ch, self.group_b))
        ta, tb = t[ia], t[ib]
        diffs = []
        nb = ib[ib >= start]
        if nb.size:
            diffs.append(self._pairs(t[nb], nb, ia, ta, sign=1))
        na = ia[ia >= start]
        if na.size:
            diffs.append(self._pairs(t[na], na, ib, tb, sign=-1))
        if diffs:
            d = np.concatenate(diffs)
            idx = np.floor_divide(d + self._half, self.bin_width) + self._k
            self.counts += np.bincount(idx, minlength=self.counts.size)

        self._last = int(t[-1])
        keep = t >= self._last - self.window
        self._carry_ch, self._carry_t = ch[keep], t[keep]

    def _pairs(self, t_new, i_new, i_other, t_other, sign):
        # partners precede the new tag in stream order and lie within the window
        hi = np.searchsorted(i_other, i_new)
        lo = np.searchsorted(t_other, t_new - self.window, side="left")
        n = np.maximum(hi - lo, 0)
        if n.sum() == 0:
            return np.zeros(0, dtype=np.int64)
        rep_t = np.repeat(t_new, n)
        offs = np.arange(n.sum()) - np.repeat(np.cumsum(n) - n, n)
        partner = t_other[np.repeat(lo, n) + offs]
        return sign * (rep_t - partner)

    def histogram(self) -> CoincidenceHistogram:
        offsets = np.arange(-self._k, self._k + 1, dtype=np.int64) * self.bin_width
        return CoincidenceHistogram(self.bin_width, offsets, self.counts.copy())


def correlate(tags: TagStream, group_a, group_b, window: int, bin_width: int) -> CoincidenceHistogram:
    """Histogram of ``t_b - t_a`` over all tag pairs within ``+/- window`` ps."""
    if not tags.is_ordered():
        raise ValueError("tags must be time-ordered")
    c = Correlator(group_a, group_b, window, bin_width)
    c.feed(tags)
    return c.histogram()


@dataclass(frozen=True)
class PeakAreas:
    p1: float
    p2: float
    background: float  # mean counts per bin outside the peaks
    sigma_p1: float
    sigma_p2: float


def _peak_mask(h, center, half_width):
    return np.abs(h.offsets - center) <= half_width


def integrate_peaks(h: CoincidenceHistogram, peak_centers, half_width) -> PeakAreas:
    """Background-subtracted areas of two coincidence peaks.

    ``peak_centers`` is (no-swap peak, swap peak). The background per bin is
    the mean over all bins outside both peak windows.
    """
    c1, c2 = peak_centers
    if abs(c1 - c2) <= 2 * half_width:
        raise AnalysisError("peak windows overlap")
    m1, m2 = _peak_mask(h, c1, half_width), _peak_mask(h, c2, half_width)
    side = ~(m1 | m2)
    if not side.any():
        raise AnalysisError("no sideband bins for the background estimate")
    bg = float(h.counts[side].mean())
    var_bg = bg / side.sum()
    out = []
    for m in (m1, m2):
        raw = float(h.counts[m].sum())
        k = int(m.sum())
        out.append((raw - k * bg, math.sqrt(raw + k * k * var_bg)))
    return PeakAreas(out[0][0], out[1][0], bg, out[0][1], out[1][1])


@dataclass
class DipCounts:
    delays: np.ndarray
    raw: np.ndarray
    accidentals: np.ndarray
    sigma: np.ndarray
    raw_visibility: float
    corrected_visibility: float

    @property
    def corrected(self) -> np.ndarray:
        return self.raw - self.accidentals

    def to_csv(self, path, header: str | None = None) -> None:
        with open(path, "w", newline="") as fh:
            if header:
                fh.write(header + "\n")
            w = csv.writer(fh)
            w.writerow(["delay_s", "raw", "accidentals", "corrected", "sigma"])
            for row in zip(self.delays, self.raw, self.accidentals, self.corrected, self.sigma):
                w.writerow([repr(float(v)) for v in row])


def _dip_visibility(y):
    k = max(1, int(round(0.1 * y.size)))
    far = float(np.mean(np.concatenate([y[:k], y[-k:]])))
    if not far > 0:
        raise AnalysisError("far-delay coincidence level is not positive")
    return (far - float(np.min(y))) / far


def accidental_corrected_visibility(histograms, delays, half_width, center: int = 0,
                                    pooled: bool = True) -> DipCounts:
    """Raw and accidental-subtracted dip visibility from one histogram per delay.

    The accidental level is the mean sideband bin count times the number of
    bins in the coincidence window. Singles rates do not depend on the delay,
    so by default the sideband mean is pooled over all histograms; a single
    non-negative floor can only deepen the dip. ``pooled=False`` estimates
    it per histogram instead.
    """
    delays = np.asarray(delays, dtype=float)
    if len(histograms) != delays.size or delays.size < 10:
        raise AnalysisError("need one histogram per delay and at least 10 delays")
    masks = [_peak_mask(h, center, half_width) for h in histograms]
    if any(not (~m).any() for m in masks):
        raise AnalysisError("histogram has no sideband bins outside the coincidence window")
    side_sum = np.array([float(h.counts[~m].sum()) for h, m in zip(histograms, masks)])
    side_n = np.array([int((~m).sum()) for m in masks])
    if pooled:
        bg = np.full(delays.size, side_sum.sum() / side_n.sum())
        n_bg = np.full(delays.size, side_n.sum())
    else:
        bg, n_bg = side_sum / side_n, side_n
    k = np.array([int(m.sum()) for m in masks])
    raw = np.array([float(h.counts[m].sum()) for h, m in zip(histograms, masks)])
    acc = k * bg
    sig = np.sqrt(raw + k * k * bg / n_bg)
    order = np.argsort(delays)
    return DipCounts(
        delays, raw, acc, sig,
        raw_visibility=_dip_visibility(raw[order]),
        corrected_visibility=_dip_visibility((raw - acc)[order]),
    )


def expected_singles(outcomes: Outcomes, pair_rate: float, config: DetectionConfig) -> dict[str, float]:
    """Mean signal count rate (1/s) on the SNSPD and APD groups, darks excluded."""
    f = outcomes.swap_fraction
    red_tel = outcomes.cross * f + outcomes.tt  # red-born photon exits telecom
    tel_tel = outcomes.cross * (1 - f) + outcomes.tt
    red_red = outcomes.cross * (1 - f) + outcomes.rr
    tel_red = outcomes.cross * f + outcomes.rr
    eff = config.photon_efficiency
    return {
        "snspd": pair_rate * (red_tel * eff("red", "telecom") + tel_tel * eff("telecom", "telecom")),
        "apd": pair_rate * (red_red * eff("red", "red") + tel_red * eff("telecom", "red")),
    }


def dark_rate_for_accidentals(target: float, singles_a: float, singles_b: float, duration: float,
                              window_ps: float) -> float:
    """Per-channel dark rate that raises accidentals in a window to ``target``.

    Accidentals in a window of width ``window_ps`` follow
    ``(R_a + 2d)(R_b + 2d) * duration * window``; each group has two channels.
    """
    tw = duration * window_ps * 1e-12
    existing = singles_a * singles_b * tw
    if target <= existing:
        return 0.0
    # 4 d^2 + 2 (R_a + R_b) d + R_a R_b - target / tw = 0
    a, b, c = 4.0, 2.0 * (singles_a + singles_b), singles_a * singles_b - target / tw
    return (-b + math.sqrt(b * b - 4 * a * c)) / (2 * a)


# -- tag files -------------------------------------------------------------

MAGIC = b"CHTG"
VERSION = 1
_HEADER = struct.Struct("<4sH10x")
RECORD = np.dtype([("channel", "u1"), ("time_ps", "<u8")])


def write_tags(path, tags: TagStream) -> None:
    """Binary tag file: 16-byte header then packed (u8 channel, u64 time) records."""
    rec = np.empty(len(tags), dtype=RECORD)
    rec["channel"] = tags.channels
    rec["time_ps"] = tags.times.astype(np.uint64)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION))
        fh.write(rec.tobytes())


def read_tags(path) -> TagStream:
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise ValueError(f"{path}: truncated header")
        magic, version = _HEADER.unpack(head)
        if magic != MAGIC:
            raise ValueError(f"{path}: not a tag file (magic {magic!r})")
        if version != VERSION:
            raise ValueError(f"{path}: unsupported tag file version {version}")
        body = fh.read()
    if len(body) % RECORD.itemsize:
        raise ValueError(f"{path}: truncated record")
    rec = np.frombuffer(body, dtype=RECORD)
    return TagStream(rec["channel"].copy(), rec["time_ps"].astype(np.int64))


def write_tags_csv(path, tags: TagStream) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["channel", "time_ps"])
        for c, t in zip(tags.channels.tolist(), tags.times.tolist()):
            w.writerow([Channel(c).name, t])


def read_tags_csv(path) -> TagStream:
    ch, t = [], []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            name = row["channel"]
            ch.append(int(name) if name.isdigit() else Channel[name].value)
            t.append(int(row["time_ps"]))
    return TagStream(np.array(ch, dtype=np.uint8), np.array(t, dtype=np.int64))
