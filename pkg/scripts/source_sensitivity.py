"""How the dip depends on modelling choices the measurement leaves open.

Varies the source line shape, the telecom filter and its placement, the
converter profile and the pump detuning, one at a time around the default
model, and prints the direct dip visibility and FWHM for each.

    python scripts/source_sensitivity.py
"""

import argparse

import numpy as np

from chromahom.converter import ConverterModel
from chromahom.interference import ExperimentModel, cross_color_dip, visibility
from chromahom.spectra import SpectralModel


def variants(base: ExperimentModel):
    conv = base.converter
    yield "default", base
    yield "gaussian source", base.replace(source=SpectralModel("gaussian", base.source.fwhm))
    yield "sinc source 60 GHz", base.replace(source=SpectralModel("sinc", 60e9))
    yield "sinc source 90 GHz", base.replace(source=SpectralModel("sinc", 90e9))
    yield "no telecom filter", base.replace(telecom_filter=SpectralModel("flat"))
    yield "filter before converter", base.replace(filter_placement="pre_converter")
    yield "gaussian converter", base.replace(converter=ConverterModel(conv.eta0, conv.bandwidth, "gaussian"))
    yield "flat converter", base.replace(converter=ConverterModel(conv.eta0, profile_kind="flat"))
    for d in (10e9, 20e9, 40e9):
        yield f"pump detuned {d / 1e9:.0f} GHz", base.replace(
            converter=ConverterModel(conv.eta0, conv.bandwidth, conv.profile_kind, pump_detuning=d))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--range-ps", type=float, default=40.0)
    ap.add_argument("--step-ps", type=float, default=0.25)
    args = ap.parse_args()

    delays = np.arange(-args.range_ps, args.range_ps + 1e-9, args.step_ps) * 1e-12
    print(f"{'variant':26s} {'V':>8s} {'FWHM (ps)':>10s}")
    for name, model in variants(ExperimentModel()):
        v = visibility(cross_color_dip(model, delays))
        print(f"{name:26s} {v.visibility:8.4f} {v.fwhm * 1e12:10.3f}")


if __name__ == "__main__":
    main()
