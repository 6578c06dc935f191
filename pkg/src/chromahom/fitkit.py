"""Gaussian dip / anti-dip fitting.

Model: ``y = baseline + depth * exp(-4 ln2 (x - center)^2 / fwhm^2)``,
fitted by a Levenberg-Marquardt iteration with an analytic Jacobian.
A negative depth is a dip, a positive depth an anti-dip.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import FitError

FOUR_LN2 = 4.0 * math.log(2.0)
PARAM_NAMES = ("baseline", "depth", "center", "fwhm")


def gaussian_feature(x, baseline, depth, center, fwhm):
    x = np.asarray(x, dtype=float)
    return baseline + depth * np.exp(-FOUR_LN2 * (x - center) ** 2 / fwhm**2)


def model_jacobian(x, baseline, depth, center, fwhm) -> np.ndarray:
    """Partial derivatives of :func:`gaussian_feature`, shape (n, 4)."""
    x = np.asarray(x, dtype=float)
    u = x - center
    g = np.exp(-FOUR_LN2 * u**2 / fwhm**2)
    jac = np.empty((x.size, 4))
    jac[:, 0] = 1.0
    jac[:, 1] = g
    jac[:, 2] = depth * g * 2.0 * FOUR_LN2 * u / fwhm**2
    jac[:, 3] = depth * g * 2.0 * FOUR_LN2 * u**2 / fwhm**3
    return jac


@dataclass(frozen=True)
class ParamSeed:
    baseline: float
    depth: float
    center: float
    fwhm: float
    degenerate: bool = False

    def as_array(self) -> np.ndarray:
        return np.array([self.baseline, self.depth, self.center, self.fwhm])


def initial_guess(xs, ys) -> ParamSeed:
    """Starting point read directly off the data.

    Baseline is the median of the outer 20% of samples, the extremum is the
    sample furthest from it. ``degenerate`` marks flat data or an extremum
    sitting on the scan edge (monotone data).
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    order = np.argsort(x)
    x, y = x[order], y[order]
    k = max(1, int(round(0.1 * y.size)))
    base = float(np.median(np.concatenate([y[:k], y[-k:]])))
    i = int(np.argmax(np.abs(y - base)))
    depth = float(y[i] - base)
    center = float(x[i])
    span = float(x[-1] - x[0])
    degenerate = depth == 0.0 or i in (0, y.size - 1)

    fwhm = span / 4
    if not degenerate:
        prof = (y - base) / depth
        left = np.flatnonzero(prof[:i] < 0.5)
        right = np.flatnonzero(prof[i + 1:] < 0.5)
        if left.size and right.size:
            il, ir = left[-1], i + 1 + right[0]
            xl = x[il] + (0.5 - prof[il]) * (x[il + 1] - x[il]) / (prof[il + 1] - prof[il])
            xr = x[ir - 1] + (0.5 - prof[ir - 1]) * (x[ir] - x[ir - 1]) / (prof[ir] - prof[ir - 1])
            if xr > xl:
                fwhm = float(xr - xl)
    return ParamSeed(base, depth, center, fwhm, degenerate)


@dataclass
class GaussianDipFit:
    baseline: float
    depth: float
    center: float
    fwhm: float
    visibility: float
    sigma: dict
    converged: bool
    iterations: int
    residual: float
    overshoot: bool = False

    def to_dict(self) -> dict:
        return {
            "baseline": self.baseline,
            "depth": self.depth,
            "center_s": self.center,
            "fwhm_s": self.fwhm,
            "visibility": self.visibility,
            "sigma": dict(self.sigma),
            "converged": self.converged,
            "iterations": self.iterations,
            "residual": self.residual,
            "overshoot": self.overshoot,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "GaussianDipFit":
        return cls(
            baseline=d["baseline"], depth=d["depth"], center=d["center_s"], fwhm=d["fwhm_s"],
            visibility=d["visibility"], sigma=dict(d["sigma"]), converged=d["converged"],
            iterations=d["iterations"], residual=d["residual"], overshoot=d.get("overshoot", False),
        )


def _resolve_weights(y, weights):
    if weights is None or (isinstance(weights, str) and weights == "uniform"):
        return np.ones_like(y), False
    if isinstance(weights, str):
        if weights != "poisson":
            raise ValueError(f"unknown weighting {weights!r}")
        return 1.0 / np.maximum(y, 1.0), True
    w = np.asarray(weights, dtype=float)
    if w.shape != y.shape or np.any(w < 0):
        raise ValueError("weights must be non-negative and match ys")
    return w, True


def fit_gaussian_feature(xs, ys, weights=None, max_iter: int = 200, rtol: float = 1e-10,
                         absolute_sigma: bool | None = None) -> GaussianDipFit:
    """Weighted least-squares Gaussian fit.

    ``weights`` is ``None``/"uniform", "poisson" (1/max(y, 1), for counts) or
    an explicit array of inverse variances. Parameter uncertainties come
    from the inverse normal matrix; for uniform weights it is rescaled by
    the reduced chi-square unless ``absolute_sigma`` says otherwise.
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("xs and ys must be 1-D arrays of equal length")
    if x.size < 8:
        raise FitError(f"need at least 8 points, got {x.size}")
    w, is_absolute = _resolve_weights(y, weights)
    if absolute_sigma is None:
        absolute_sigma = is_absolute

    seed = initial_guess(x, y)
    if seed.degenerate:
        raise FitError("degenerate data: no interior dip or peak to fit")

    # work in a centred, unit-scale frame; translation and y-scaling drop out
    x0 = 0.5 * (x.min() + x.max())
    xs_ = 0.5 * (x.max() - x.min())
    ys_ = float(np.max(np.abs(y)))
    u = (x - x0) / xs_
    v = y / ys_
    sw = np.sqrt(w / np.max(w))
    p = np.array([seed.baseline / ys_, seed.depth / ys_, (seed.center - x0) / xs_, seed.fwhm / xs_])

    def residuals(q):
        return sw * (v - gaussian_feature(u, *q))

    res = residuals(p)
    cost = float(res @ res)
    lam = 1e-3
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        jac = sw[:, None] * model_jacobian(u, *p)
        a = jac.T @ jac
        g = jac.T @ res
        diag = np.diag(np.diag(a))
        while True:
            try:
                step = np.linalg.solve(a + lam * diag, g)
            except np.linalg.LinAlgError:
                step = None
            if step is not None:
                trial = p + step
                if trial[3] > 0:
                    r_trial = residuals(trial)
                    c_trial = float(r_trial @ r_trial)
                    if c_trial <= cost:
                        break
            lam *= 10.0
            if lam > 1e16:
                # no descent direction left: at the minimum to working precision
                converged = True
                break
        if converged:
            break
        change = (cost - c_trial) / cost if cost > 0 else 0.0
        p, res, cost = trial, r_trial, c_trial
        lam = max(lam / 10.0, 1e-12)
        if change < rtol or cost < 1e-30:
            converged = True
            break

    if not converged:
        raise FitError(f"fit did not converge in {max_iter} iterations (cost {cost:.3g})",
                       residual=cost * ys_**2 * np.max(w), iterations=it)

    baseline, depth, center, fwhm = p[0] * ys_, p[1] * ys_, x0 + p[2] * xs_, abs(p[3]) * xs_
    if not baseline > 0:
        raise FitError("fitted baseline is not positive", residual=cost, iterations=it)

    # covariance in physical units
    jac = model_jacobian(x, baseline, depth, center, fwhm)
    normal = jac.T @ (w[:, None] * jac)
    resid = y - gaussian_feature(x, baseline, depth, center, fwhm)
    chi2 = float(np.sum(w * resid**2))
    try:
        cov = np.linalg.inv(normal)
    except np.linalg.LinAlgError:
        cov = np.full((4, 4), np.nan)
    if not absolute_sigma:
        dof = max(x.size - 4, 1)
        cov = cov * chi2 / dof
    sig = np.sqrt(np.abs(np.diag(cov)))

    vis = abs(depth) / baseline
    # d|d|/b: gradient with respect to (baseline, depth)
    grad = np.array([-vis / baseline, math.copysign(1.0, depth) / baseline])
    var_v = float(grad @ cov[:2, :2] @ grad)
    sigma = {name: float(s) for name, s in zip(("baseline", "depth", "center_s", "fwhm_s"), sig)}
    sigma["visibility"] = math.sqrt(max(var_v, 0.0))
    return GaussianDipFit(
        baseline=float(baseline), depth=float(depth), center=float(center), fwhm=float(fwhm),
        visibility=float(vis), sigma=sigma, converged=True, iterations=it, residual=chi2,
        overshoot=bool(vis > 1.0),
    )

