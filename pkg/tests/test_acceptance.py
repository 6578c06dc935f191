"""End-to-end acceptance checks, one test per criterion.

Each test appends a PASS/FAIL line that is printed in the terminal summary.
"""

import time

import numpy as np
import pytest

from chromahom import fockcore, pipeline
from chromahom.config import build_config
from chromahom.converter import ConverterModel, conversion_profile, transition_probability
from chromahom.fitkit import fit_gaussian_feature, gaussian_feature, model_jacobian
from chromahom.interference import (ExperimentModel, delay_scan, ideal_model, large_delay_outcomes,
                                    oracle_delay_scan, visibility)
from chromahom.spectra import FrequencyGrid, SpectralModel
from chromahom.tagsim import DetectionConfig, Outcomes, generate_run, read_tags, write_tags

from conftest import ACCEPTANCE_LINES

PS = 1e-12
MC_SEED = 20241017


class Criterion:
    """Collects named checks for one criterion and reports a single line."""

    def __init__(self, number, title, budget_s):
        self.number, self.title, self.budget = number, title, budget_s
        self.checks = []
        self.start = time.perf_counter()

    def check(self, label, ok, detail=""):
        self.checks.append((label, bool(ok), detail))

    def finish(self):
        elapsed = time.perf_counter() - self.start
        self.check("runtime", elapsed < self.budget, f"{elapsed:.2f} s < {self.budget} s")
        ok = all(c[1] for c in self.checks)
        details = "; ".join(f"{lbl}: {d}" if d else lbl for lbl, good, d in self.checks if d or not good)
        line = f"criterion {self.number} {'PASS' if ok else 'FAIL'}  {self.title}  [{details}]"
        ACCEPTANCE_LINES.append(line)
        print(line)
        failed = [f"{lbl} ({d})" for lbl, good, d in self.checks if not good]
        assert ok, f"criterion {self.number} failed: {failed}"


def test_criterion_1_ideal_case():
    c = Criterion(1, "ideal balanced converter", 1.0)
    model = ideal_model(0.5)
    at_zero = delay_scan(model, [0.0], channels=("cross",)).p_cross[0]
    c.check("p_cross(0) = 0", abs(at_zero) <= 1e-9, f"{at_zero:.2e}")
    v = visibility(delay_scan(model, np.arange(-40, 40.001, 0.25) * PS, channels=("cross",))).visibility
    c.check("visibility = 1", abs(v - 1.0) <= 1e-9, f"V = {v:.12f}")
    c.finish()


def test_criterion_2_visibility_bound():
    c = Criterion(2, "visibility bound at eta0 = 0.476", 5.0)
    eta = 0.476
    closed = fockcore.max_visibility_bound(eta)
    c.check("closed form in 99.4 +/- 0.2 %", 0.992 <= closed <= 0.996, f"{closed:.6f}")

    delays = np.arange(-40, 40.001, 0.5) * PS
    full = visibility(delay_scan(ideal_model(eta), delays, channels=("cross",))).visibility
    # the discrete overlap aliases at 1/(2 * step); keep that well beyond the scan
    small = ideal_model(eta, grid=FrequencyGrid(255, 2e12))
    oracle = visibility(oracle_delay_scan(small, delays), "cross").visibility

    out = fockcore.apply_beam_splitter(fockcore.TwoModeFockState.basis(1, 1), fockcore.make_beam_splitter(eta))
    fock = 1 - fockcore.coincidence_probability(out) / ((1 - eta) ** 2 + eta**2)

    spread = max(closed, full, oracle, fock) - min(closed, full, oracle, fock)
    c.check("closed form, scan, oracles agree", spread <= 1e-6,
            f"scan {full:.8f}, oracle {oracle:.8f}, fock {fock:.8f}, spread {spread:.1e}")
    c.finish()


def test_criterion_3_calibration_curve():
    c = Criterion(3, "pump calibration curve, P_max = 149 W", 1.0)
    e35, e372 = transition_probability(35.0), transition_probability(37.2)
    c.check("eta(35 W) = 0.476 +/- 0.007", abs(e35 - 0.476) <= 0.007, f"{e35:.5f}")
    c.check("eta(37.2 W) = 0.500 +/- 0.005", abs(e372 - 0.5) <= 0.005, f"{e372:.5f}")
    c.finish()


def test_criterion_4_reference_model():
    c = Criterion(4, "reference model reproduction", 30.0)
    scan = delay_scan(ExperimentModel(), np.arange(-40, 40.001, 0.25) * PS)
    dip, tt, rr = visibility(scan, "cross"), visibility(scan, "tt"), visibility(scan, "rr")
    c.check("dip V in [0.90, 0.995]", 0.90 <= dip.visibility <= 0.995, f"{dip.visibility:.4f}")
    w = dip.fwhm / PS
    c.check("dip FWHM 7.78 ps +/- 20 %", abs(w - 7.78) <= 0.2 * 7.78, f"{w:.3f} ps")
    wt, wr = tt.fwhm / PS, rr.fwhm / PS
    c.check("telecom anti-dip 8.99 ps +/- 25 %", abs(wt - 8.99) <= 0.25 * 8.99, f"{wt:.3f} ps")
    c.check("red anti-dip 5.99 ps +/- 25 %", abs(wr - 5.99) <= 0.25 * 5.99, f"{wr:.3f} ps")
    c.check("telecom wider than red", wt > wr)
    c.finish()


def random_model(rng):
    grid = FrequencyGrid(64, 1.2e12)
    src = SpectralModel(str(rng.choice(["sinc", "gaussian"])), float(rng.uniform(50e9, 140e9)))
    kind = str(rng.choice(["sinc2", "gaussian", "flat"]))
    conv = ConverterModel(float(rng.uniform(0.05, 0.95)), float(rng.uniform(90e9, 300e9)), kind,
                          pump_detuning=float(rng.uniform(-30e9, 30e9)))

    def filt():
        if rng.random() < 0.3:
            return SpectralModel("flat")
        return SpectralModel("gaussian", float(rng.uniform(60e9, 150e9)))

    return ExperimentModel(src, conv, filt(), str(rng.choice(["pre_converter", "post_converter"])), filt(), grid)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_criterion_5_oracle_equivalence():
    c = Criterion(5, "analytic scan vs Fock-evolution oracle, 5 random models", 60.0)
    rng = np.random.default_rng(5)
    delays = np.linspace(-30, 30, 61) * PS
    worst = 0.0
    for _ in range(5):
        m = random_model(rng)
        a, b = delay_scan(m, delays), oracle_delay_scan(m, delays)
        for ch in ("cross", "tt", "rr"):
            worst = max(worst, float(np.max(np.abs(a.channel(ch) - b.channel(ch)))))
    c.check("max |difference| <= 1e-6", worst <= 1e-6, f"{worst:.1e} on a {m.grid.size}-point grid")
    c.finish()


@pytest.mark.slow
def test_criterion_6_monte_carlo():
    c = Criterion(6, "Monte Carlo pipeline at 1e6 pairs per run", 120.0)
    cfg = build_config({"montecarlo": {"seed": MC_SEED, "calibration_eta": 0.476}})
    det = cfg.montecarlo.detection
    c.check("reported efficiencies",
            (det.eff_snspd, det.eff_apd, det.collection_red, det.collection_telecom, det.converter_transmission)
            == (0.90, 0.35, 0.57, 0.33, 0.46))
    c.check("1e6 pairs", cfg.montecarlo.pair_rate * cfg.montecarlo.duration == 1e6)
    summary, _, _, dip_counts = pipeline.simulate(cfg)

    cal = summary["calibration"]
    pull = (cal["eta_c"] - 0.476) / cal["eta_c_sigma"]
    c.check("(a) eta_c within 2 sigma of 0.476", abs(pull) <= 2,
            f"{cal['eta_c']:.4f} +/- {cal['eta_c_sigma']:.4f} ({pull:+.2f} sigma)")

    dip = summary["dip"]
    fit, ref = dip["fit"], dip["model_fit_visibility"]
    vpull = (fit["visibility"] - ref) / fit["sigma"]["visibility"]
    c.check("(b) fitted V within 2 sigma of model", abs(vpull) <= 2,
            f"{fit['visibility']:.4f} +/- {fit['sigma']['visibility']:.4f} vs {ref:.4f} ({vpull:+.2f} sigma)")

    gap_cfg = build_config({"montecarlo": {"seed": MC_SEED + 1, "accidental_gap": {"raw": 0.914, "corrected": 0.928}}})
    gap_summary, _, _, gap_counts = pipeline.simulate(gap_cfg)
    for label, s, counts in (("no darks", summary, dip_counts), ("with darks", gap_summary, gap_counts)):
        d = s["dip"]
        floor = float(np.mean(counts.accidentals))
        c.check(f"(c) corrected >= raw, {label}", floor > 0 and d["corrected_visibility"] >= d["raw_visibility"],
                f"floor {floor:.1f}/window, {d['raw_visibility']:.4f} -> {d['corrected_visibility']:.4f}")
    c.finish()


def test_criterion_7_property_suites():
    c = Criterion(7, "property suites", 30.0)
    rng = np.random.default_rng(7)

    etas = np.concatenate([[0.0, 1.0], rng.uniform(0, 1, 998)])
    err = max(float(np.max(np.abs(b.conj().T @ b - np.eye(2))))
              for b in (fockcore.make_beam_splitter(e).matrix for e in etas))
    c.check("unitarity, 1000 eta", err <= 1e-12, f"{err:.1e}")

    grid = FrequencyGrid()
    worst = 0.0
    for eta0 in rng.uniform(0, 1, 20):
        t, r = conversion_profile(ConverterModel(float(eta0)), grid)
        worst = max(worst, float(np.max(np.abs(t**2 + r**2 - 1))))
        m = ExperimentModel(converter=ConverterModel(float(eta0)), telecom_filter=SpectralModel("flat"))
        s = delay_scan(m, rng.uniform(-30e-12, 30e-12, 5))
        worst = max(worst, float(np.max(np.abs(s.p_cross + s.p_tt + s.p_rr - 1))))
        worst = max(worst, abs(sum(large_delay_outcomes(m).values()) - 1))
    c.check("probability conservation", worst <= 1e-9, f"{worst:.1e}")

    xs = np.arange(-40, 40.001, 0.5) * PS
    rt = 0.0
    for v in (0.1, 0.3, 0.5, 0.7, 0.9, 1.0):
        for w in (2.0, 4.0, 6.0, 8.0, 12.0):
            f = fit_gaussian_feature(xs, gaussian_feature(xs, 0.5, -0.5 * v, 0.0, w * PS))
            rt = max(rt, abs(f.visibility / v - 1), abs(f.fwhm / (w * PS) - 1))
    c.check("fit round trip", rt <= 1e-6, f"{rt:.1e}")

    x = np.linspace(-30, 30, 121)
    jerr = 0.0
    for _ in range(50):
        p = np.array([rng.uniform(0.1, 10), rng.uniform(-2, 2), rng.uniform(-5, 5), rng.uniform(1, 20)])
        jac = model_jacobian(x, *p)
        for k in range(4):
            h = 1e-6 * max(abs(p[k]), 1.0)
            up, dn = p.copy(), p.copy()
            up[k] += h
            dn[k] -= h
            fd = (gaussian_feature(x, *up) - gaussian_feature(x, *dn)) / (2 * h)
            jerr = max(jerr, float(np.max(np.abs(jac[:, k] - fd)) / (np.max(np.abs(jac[:, k])) + 1e-12)))
    c.check("Jacobian vs finite differences", jerr <= 1e-6, f"{jerr:.1e}")

    o = Outcomes(0.5, 0.25, 0.25, 0.4)
    runs = [generate_run(o, 2e5, 0.5, DetectionConfig(dark_rate=50.0), seed=99, delay_ps=3.0) for _ in range(2)]
    same = runs[0].same_as(runs[1])
    delays = np.linspace(-30, 30, 241) * PS
    same &= all(np.array_equal(a, b) for a, b in zip(
        (delay_scan(ExperimentModel(), delays, threads=1).p_cross,),
        (delay_scan(ExperimentModel(), delays, threads=4).p_cross,)))
    c.check("determinism", same)
    c.finish()


def test_criterion_7_determinism_through_files(tmp_path):
    tags = generate_run(Outcomes(0.5, 0.25, 0.25, 0.4), 1e5, 0.5, DetectionConfig(), seed=3)
    write_tags(tmp_path / "a.chtg", tags)
    write_tags(tmp_path / "b.chtg", generate_run(Outcomes(0.5, 0.25, 0.25, 0.4), 1e5, 0.5, DetectionConfig(), seed=3))
    assert (tmp_path / "a.chtg").read_bytes() == (tmp_path / "b.chtg").read_bytes()
    assert read_tags(tmp_path / "a.chtg").same_as(tags)


def test_criterion_8_beat_note():
    c = Criterion(8, "beat-note resolution", 0.5)
    from chromahom.interference import beat_note_resolution

    fs = beat_note_resolution(282e12) * 1e15
    c.check("1/282 THz = 3.546 fs", abs(fs - 3.546) < 5e-4, f"{fs:.4f} fs")
    c.check("rounds to 3.5 fs", round(fs, 1) == 3.5)
    c.finish()
