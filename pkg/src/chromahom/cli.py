"""Command line front end.

    chromahom dip|antidip|calibrate|timetags|correlate|report --config PATH --out DIR [--seed N] [--threads N]

Exit codes: 0 success, 2 configuration error, 3 runtime or fit error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import converter, pipeline
from .config import load_config
from .errors import ConfigurationError
from .pipeline import TagRuns
from .tagsim import read_tags, write_tags

log = logging.getLogger("chromahom")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def _atomic_write(path: Path, write) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix="." + path.name, suffix=".tmp")
    os.close(fd)
    try:
        write(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_json(path: Path, data: dict, cfg) -> None:
    payload = {"config_sha256": cfg.config_hash, **data}

    def w(tmp):
        with open(tmp, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True, default=_jsonable)
            fh.write("\n")

    _atomic_write(path, w)


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serialisable: {type(obj)}")


def _fmt_fwhm(f):
    return "n/a" if f is None else f"{f:.3f} ps"


def cmd_dip(cfg, out: Path, threads: int, channels=("cross", "tt", "rr"), name="dip") -> int:
    scan, summary = pipeline.analytic_dip(cfg, threads, channels)
    _atomic_write(out / f"{name}_scan.csv", lambda p: scan.to_csv(p, header=cfg.header))
    _write_json(out / f"{name}_summary.json", summary, cfg)
    for ch, f in summary["features"].items():
        log.info("%-5s visibility %.4f  fwhm %s", ch, f["visibility"], _fmt_fwhm(f["fwhm_ps"]))
    return EXIT_OK


def cmd_antidip(cfg, out: Path, threads: int) -> int:
    return cmd_dip(cfg, out, threads, channels=("tt", "rr"), name="antidip")


def cmd_calibrate(cfg, out: Path, threads: int) -> int:
    n = cfg.calibration_points
    _atomic_write(out / "calibration_curve.csv",
                  lambda p: converter.write_calibration_csv(p, cfg.calibration, n, header=cfg.header))
    summary = pipeline.calibration_summary(cfg)

    def table(p):
        with open(p, "w") as fh:
            fh.write(cfg.header + "\n")
            fh.write("p2_over_p1,eta_c\n")
            for row in summary["peak_ratio_table"]:
                fh.write(f"{row['p2_over_p1']!r},{row['eta_c']!r}\n")

    _atomic_write(out / "peak_ratio_table.csv", table)
    _write_json(out / "calibration_summary.json", summary, cfg)
    log.info("balanced pump power %.3f W", summary["balanced_power_w"])
    return EXIT_OK


def _tag_name(i: int) -> str:
    return f"scan_{i:03d}.chtg"


def cmd_timetags(cfg, out: Path, threads: int) -> int:
    runs = pipeline.generate_tag_runs(cfg)
    out.mkdir(parents=True, exist_ok=True)
    _atomic_write(out / "calibration.chtg", lambda p: write_tags(p, runs.calibration))
    for i, s in enumerate(runs.scan):
        _atomic_write(out / _tag_name(i), lambda p, s=s: write_tags(p, s))
    manifest = {
        "delays_s": runs.delays.tolist(),
        "scan_files": [_tag_name(i) for i in range(len(runs.scan))],
        "calibration_file": "calibration.chtg",
        "dark_rate_per_channel": runs.dark_rate,
        "calibration_eta": runs.calibration_eta,
    }
    _write_json(out / "tags_manifest.json", manifest, cfg)
    log.info("wrote %d tag files to %s", len(runs.scan) + 1, out)
    return EXIT_OK


def _load_runs(tag_dir: Path) -> TagRuns:
    try:
        with open(tag_dir / "tags_manifest.json") as fh:
            man = json.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"no tag manifest in {tag_dir}: {exc}") from exc
    return TagRuns(
        calibration=read_tags(tag_dir / man["calibration_file"]),
        delays=np.array(man["delays_s"], dtype=float),
        scan=[read_tags(tag_dir / f) for f in man["scan_files"]],
        dark_rate=man["dark_rate_per_channel"],
        calibration_eta=man["calibration_eta"],
    )


def _write_correlation(cfg, out: Path, result) -> None:
    summary, cal_h, hists, dip = result
    _atomic_write(out / "calibration_histogram.csv", lambda p: cal_h.to_csv(p, header=cfg.header))
    for i, h in enumerate(hists):
        _atomic_write(out / f"histogram_{i:03d}.csv", lambda p, h=h: h.to_csv(p, header=cfg.header))
    _atomic_write(out / "mc_dip_scan.csv", lambda p: dip.to_csv(p, header=cfg.header))
    _write_json(out / "correlate_summary.json", summary, cfg)
    c = summary["calibration"]
    log.info("eta_c = %.4f +/- %.4f", c["eta_c"], c["eta_c_sigma"])
    log.info("dip visibility raw %.4f, corrected %.4f",
             summary["dip"]["raw_visibility"], summary["dip"]["corrected_visibility"])


def cmd_correlate(cfg, out: Path, threads: int, tag_dir: Path | None = None) -> int:
    runs = _load_runs(tag_dir or out)
    _write_correlation(cfg, out, pipeline.analyse_tag_runs(cfg, runs))
    return EXIT_OK


def cmd_report(cfg, out: Path, threads: int) -> int:
    report = pipeline.reference_report(cfg, threads)
    _write_json(out / "report.json", report, cfg)
    for row in report["rows"]:
        log.info("%-28s %-6s %s", row["quantity"], "PASS" if row["pass"] else "FAIL", row["simulated"])
    return EXIT_OK


COMMANDS = {
    "dip": cmd_dip,
    "antidip": cmd_antidip,
    "calibrate": cmd_calibrate,
    "timetags": cmd_timetags,
    "correlate": cmd_correlate,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="chromahom", description="Two-color HOM interference simulator")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="scenario JSON (defaults reproduce the reference experiment)")
    ap.add_argument("--out", help="output directory (overrides output_dir in the config)")
    ap.add_argument("--seed", type=int, help="Monte Carlo seed override")
    ap.add_argument("--threads", type=int, help="worker threads (fallback: CHROMAHOM_THREADS)")
    ap.add_argument("--tags", help="directory holding tag files for 'correlate' (default: --out)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(message)s")
    logging.captureWarnings(True)
    threads = args.threads or int(os.environ.get("CHROMAHOM_THREADS", "1") or 1)
    try:
        overrides = {"montecarlo": {"seed": args.seed}} if args.seed is not None else None
        cfg = load_config(args.config, overrides)
        out = Path(args.out or cfg.output_dir)
        if args.command == "correlate":
            return cmd_correlate(cfg, out, threads, Path(args.tags) if args.tags else None)
        return COMMANDS[args.command](cfg, out, threads)
    except ConfigurationError as exc:
        print(f"chromahom: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - mapped to the runtime exit code
        print(f"chromahom: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
