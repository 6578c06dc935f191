"""Pump-power calibration curve and the peak-ratio inversion table.

    python scripts/calibration_curve.py [--p-max 149] [--out out/calibration]
"""

import argparse
from pathlib import Path

from chromahom.converter import (PumpCalibration, balance_pump_power, eta_from_peak_ratio,
                                 transition_probability, write_calibration_csv)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p-max", type=float, default=149.0, help="circulating pump power for full conversion (W)")
    ap.add_argument("--points", type=int, default=301)
    ap.add_argument("--out", default="out/calibration")
    args = ap.parse_args()

    cal = PumpCalibration(args.p_max)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_calibration_csv(out / "calibration_curve.csv", cal, args.points)

    print(f"P_max = {cal.p_max:g} W, balanced at {balance_pump_power(0.5, cal):.2f} W")
    for p in (10.0, 20.0, 35.0, 37.2, 50.0, 100.0):
        if p <= cal.p_max:
            print(f"  eta({p:5.1f} W) = {transition_probability(p, cal):.4f}")
    print("peak ratio p2/p1 -> eta_c")
    for ratio in (0.25, 0.5, 0.8, 0.9, 1.0):
        print(f"  {ratio:4.2f} -> {eta_from_peak_ratio(ratio, 1.0):.4f}")


if __name__ == "__main__":
    main()
