"""Attributable-risk upper-bound curves with bias-corrected bootstrap limits.

The estimand is the aggregated upper bound on the causal attributable risk
as a function of the unknown true case probability p.  Under case-control
sampling the point estimate at p is

    UB(p) = (1-p) * mean_{Y=0}[ r(X,p) * G_AR(X,p) ]
          +    p  * mean_{Y=1}[ r(X,p) * G_AR(X,p) ],

built from fitted retrospective probabilities Pi(t|y,x) and a fitted
prospective model Pr(Y=1|x).  Under case-population sampling the bound is
exactly linear, p * xi_cp.  Confidence limits come from Efron's one-sided
bias-corrected percentile bootstrap: pointwise per p in the case-control
design, and a single corrected limit scaled by p (hence uniform) in the
case-population design.

r(x, p) and G_AR(x, p) are evaluated with convex-combination denominators,
so UB(0) = 0 and (case-control) UB(1) = 0 hold exactly in floating point,
matching the estimand, which vanishes at both ends.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .basis import BasisSpec, build_basis
from .errors import (
    BootstrapDegenerate,
    CaseboundError,
    NuisanceProbabilityOutOfRange,
    ValidationError,
    ZeroDenominator,
)
from .logit import fit_logit
from .model import Design, ObservedDataset
from .rng import RngSpec, resample_indices

__all__ = [
    "ARNuisances",
    "ARCurve",
    "BootstrapDiagnostics",
    "fit_ar_nuisances",
    "estimate_beta_ar",
    "estimate_xi_cp",
    "upper_bound_curve_values",
    "ar_curve",
    "bc_level",
]

CLIP = 1e-6


@dataclass(frozen=True)
class ARNuisances:
    """Fitted probabilities entering the attributable-risk formulas.

    pi1/pi0: Pr(T=1|Y=1,x), Pr(T=1|Y=0,x) at every observation; py:
    Pr(Y=1|x); h_hat: the sample mean of Y (the estimator's normalization
    always uses the sample mean, whatever h0 the dataset carries).
    """

    pi1: np.ndarray
    pi0: np.ndarray
    py: np.ndarray
    h_hat: float
    n_clipped: int


def _clip_count(p: np.ndarray) -> tuple[np.ndarray, int]:
    if not np.all(np.isfinite(p)) or np.any(p < 0) or np.any(p > 1):
        raise NuisanceProbabilityOutOfRange("fitted probabilities leave [0, 1]")
    clipped = np.clip(p, CLIP, 1.0 - CLIP)
    return clipped, int(np.sum(clipped != p))


def fit_ar_nuisances(data: ObservedDataset, prospective_spec: BasisSpec,
                     retrospective_spec: BasisSpec) -> ARNuisances:
    """Fit T on the retrospective basis within each stratum and Y on the
    prospective basis, evaluating everything at every observation."""
    rcols = build_basis(data.x, retrospective_spec)[:, retrospective_spec.intercept_safe_mask()]
    mask0 = data.stratum(0)
    mask1 = data.stratum(1)
    fit0 = fit_logit(data.t[mask0], rcols[mask0])
    fit1 = fit_logit(data.t[mask1], rcols[mask1])
    pcols = build_basis(data.x, prospective_spec)[:, prospective_spec.intercept_safe_mask()]
    pfit = fit_logit(data.y, pcols)
    pi1, c1 = _clip_count(fit1.predict(rcols))
    pi0, c0 = _clip_count(fit0.predict(rcols))
    py, c2 = _clip_count(pfit.predict(pcols))
    return ARNuisances(pi1=pi1, pi0=pi0, py=py, h_hat=float(data.y.mean()),
                       n_clipped=c1 + c0 + c2)


def _r_hat(py: np.ndarray, h0: float, p: float) -> np.ndarray:
    # case-control form; exact 0 at p=0 and exact 1 at p=1
    num = p * (1.0 - h0) * py
    den = num + h0 * (1.0 - p) * (1.0 - py)
    return num / den


def _gamma_ar_hat(pi1: np.ndarray, pi0: np.ndarray, r: np.ndarray) -> np.ndarray:
    den1 = (1.0 - r) * pi0 + r * pi1
    den0 = (1.0 - r) * (1.0 - pi0) + r * (1.0 - pi1)
    if np.any(den1 == 0.0) or np.any(den0 == 0.0):
        raise ZeroDenominator("a fitted Gamma_AR denominator vanished")
    return pi1 / den1 - (1.0 - pi1) / den0


def estimate_beta_ar(data: ObservedDataset, prospective_spec: BasisSpec,
                     retrospective_spec: BasisSpec, p: float, y_stratum: int,
                     nuisances: ARNuisances | None = None) -> float:
    """Stratum mean of r(X, p) * G_AR(X, p) under case-control sampling."""
    if data.design is not Design.CASE_CONTROL:
        raise ValidationError("beta_AR(p, y) is a case-control estimand")
    if y_stratum not in (0, 1):
        raise ValidationError("y_stratum must be 0 or 1")
    if not 0.0 <= p <= 1.0:
        raise ValidationError("p must lie in [0, 1]")
    nuis = nuisances or fit_ar_nuisances(data, prospective_spec, retrospective_spec)
    r = _r_hat(nuis.py, data.h0, p)
    vals = r * _gamma_ar_hat(nuis.pi1, nuis.pi0, r)
    return float(vals[data.stratum(y_stratum)].mean())


def estimate_xi_cp(data: ObservedDataset, prospective_spec: BasisSpec,
                   retrospective_spec: BasisSpec,
                   nuisances: ARNuisances | None = None) -> float:
    """Case-population slope estimate.

    (sum Y_i)^{-1} sum (1-Y_i) * [py/(1-py)] * [pi1/pi0 - (1-pi1)/(1-pi0)],
    the sample analog with the stratum share replaced by the mean of Y.
    """
    if data.design is not Design.CASE_POPULATION:
        raise ValidationError("xi_CP is a case-population estimand")
    nuis = nuisances or fit_ar_nuisances(data, prospective_spec, retrospective_spec)
    bracket = (nuis.py / (1.0 - nuis.py)
               * (nuis.pi1 / nuis.pi0 - (1.0 - nuis.pi1) / (1.0 - nuis.pi0)))
    y = data.y.astype(float)
    return float(np.sum((1.0 - y) * bracket) / np.sum(y))


def upper_bound_curve_values(data: ObservedDataset, prospective_spec: BasisSpec,
                             retrospective_spec: BasisSpec, grid: np.ndarray,
                             nuisances: ARNuisances | None = None) -> np.ndarray:
    """Untruncated UB estimates on a p-grid (case-control: per-p aggregate;
    case-population: p times the slope estimate)."""
    nuis = nuisances or fit_ar_nuisances(data, prospective_spec, retrospective_spec)
    if data.design is Design.CASE_POPULATION:
        return grid * estimate_xi_cp(data, prospective_spec, retrospective_spec, nuis)
    mask1 = data.stratum(1)
    out = np.empty(grid.shape[0])
    for i, p in enumerate(grid):
        r = _r_hat(nuis.py, data.h0, float(p))
        vals = r * _gamma_ar_hat(nuis.pi1, nuis.pi0, r)
        out[i] = (1.0 - p) * vals[~mask1].mean() + p * vals[mask1].mean()
    return out


@dataclass(frozen=True)
class ARCurve:
    """Point estimates and one-sided confidence limits over the p-grid."""

    p: np.ndarray
    point: np.ndarray
    upper: np.ndarray
    mode: str       # "pointwise-bc" (case-control) | "uniform-bc" (case-population)
    B: int
    alpha: float

    def rows(self):
        for i in range(self.p.shape[0]):
            yield (float(self.p[i]), float(self.point[i]), float(self.upper[i]))


@dataclass(frozen=True)
class BootstrapDiagnostics:
    """Bias-correction internals plus bookkeeping for dropped replicates."""

    mu_star: np.ndarray
    nu_star: np.ndarray
    resample_mode: str   # "iid" | "stratified"
    n_requested: int
    n_kept: int
    n_dropped: int
    n_clipped_point: int
    n_clipped_boot: int


def bc_level(mu_star: np.ndarray, alpha: float, n_boot: int) -> np.ndarray:
    """Efron's bias-corrected one-sided quantile level.

    nu = Phi[Phi^{-1}(1-alpha) + 2*Phi^{-1}(mu)], with mu clamped into
    [1/(B+1), B/(B+1)] so the inverse CDF stays finite.
    """
    lo = 1.0 / (n_boot + 1.0)
    mu = np.clip(np.asarray(mu_star, dtype=float), lo, 1.0 - lo)
    return norm.cdf(norm.ppf(1.0 - alpha) + 2.0 * norm.ppf(mu))


def _quantile_higher(sorted_vals: np.ndarray, level: float) -> float:
    # smallest order statistic whose empirical cdf reaches the level
    b = sorted_vals.shape[0]
    k = int(np.ceil(level * b))
    return float(sorted_vals[min(max(k, 1), b) - 1])


def _resample(data: ObservedDataset, gen, mode: str) -> ObservedDataset:
    n = data.n
    if mode == "iid":
        idx = resample_indices(gen, n)
    elif mode == "stratified":
        idx = np.arange(n)
        for s in (0, 1):
            rows = np.flatnonzero(data.y == s)
            idx[rows] = rows[resample_indices(gen, rows.size)]
    else:
        raise ValidationError(f"unknown resample mode {mode!r}")
    return ObservedDataset(y=data.y[idx], t=data.t[idx], x=data.x[idx],
                           design=data.design,
                           h0=None if data.h0_estimated else data.h0)


def ar_curve(data: ObservedDataset, prospective_spec: BasisSpec,
             retrospective_spec: BasisSpec, pbar: float, alpha: float = 0.05,
             B: int = 1000, seed: int | RngSpec = 0, step: float = 0.01,
             resample_mode: str = "iid") -> tuple[ARCurve, BootstrapDiagnostics]:
    """Attributable-risk upper-bound curve with BC bootstrap limits.

    Replicates whose refit fails (separation, an empty stratum, ...) are
    dropped and counted.  Point estimates and limits are truncated into
    [0, 1].  Identical (data, specs, B, seed) give identical output.
    """
    if B < 200:
        raise ValidationError("use at least 200 bootstrap replications")
    if not 0.0 < pbar <= 1.0:
        raise ValidationError("pbar must lie in (0, 1]")
    if not 0.0 < alpha <= 0.5:
        raise ValidationError("alpha must lie in (0, 0.5]")
    rng = seed if isinstance(seed, RngSpec) else RngSpec(int(seed))
    m = max(int(round(pbar / step)), 1)
    grid = np.linspace(0.0, pbar, m + 1)

    nuis = fit_ar_nuisances(data, prospective_spec, retrospective_spec)
    point_raw = upper_bound_curve_values(data, prospective_spec,
                                         retrospective_spec, grid, nuis)

    cp = data.design is Design.CASE_POPULATION
    xi_hat = estimate_xi_cp(data, prospective_spec, retrospective_spec, nuis) if cp else None

    boot_rows = []
    n_dropped = 0
    n_clipped_boot = 0
    for b in range(B):
        gen = rng.derive("ar-bootstrap", b)
        try:
            bdata = _resample(data, gen, resample_mode)
            bnuis = fit_ar_nuisances(bdata, prospective_spec, retrospective_spec)
            if cp:
                boot_rows.append(estimate_xi_cp(bdata, prospective_spec,
                                                retrospective_spec, bnuis))
            else:
                boot_rows.append(upper_bound_curve_values(
                    bdata, prospective_spec, retrospective_spec, grid, bnuis))
            n_clipped_boot += bnuis.n_clipped
        except CaseboundError:
            n_dropped += 1
    n_kept = len(boot_rows)
    if n_kept < 2:
        raise BootstrapDegenerate(f"only {n_kept} of {B} bootstrap replicates survived")

    if cp:
        xis = np.asarray(boot_rows)
        if np.all(xis == xis[0]):
            raise BootstrapDegenerate("all bootstrap estimates are identical")
        mu = float(np.mean(xis <= xi_hat))
        nu = float(bc_level(mu, alpha, n_kept))
        u = _quantile_higher(np.sort(xis), nu)
        upper_raw = grid * u
        mu_star = np.full_like(grid, mu)
        nu_star = np.full_like(grid, nu)
        mode = "uniform-bc"
    else:
        mat = np.asarray(boot_rows)  # (n_kept, n_grid)
        interior = grid > 0.0
        if grid[-1] >= 1.0:
            interior &= grid < 1.0
        if np.all(mat[:, interior] == mat[0, interior]):
            raise BootstrapDegenerate("all bootstrap curves are identical")
        mu_star = (mat <= point_raw[None, :]).mean(axis=0)
        nu_star = bc_level(mu_star, alpha, n_kept)
        srt = np.sort(mat, axis=0)
        upper_raw = np.array([_quantile_higher(srt[:, j], nu_star[j])
                              for j in range(grid.shape[0])])
        mode = "pointwise-bc"

    point = np.clip(point_raw, 0.0, 1.0)
    upper = np.clip(np.maximum(upper_raw, point_raw), 0.0, 1.0)
    curve = ARCurve(p=grid, point=point, upper=upper, mode=mode, B=B, alpha=alpha)
    diag = BootstrapDiagnostics(mu_star=mu_star, nu_star=nu_star,
                                resample_mode=resample_mode, n_requested=B,
                                n_kept=n_kept, n_dropped=n_dropped,
                                n_clipped_point=nuis.n_clipped,
                                n_clipped_boot=n_clipped_boot)
    return curve, diag
