"""Aggregated log-odds-ratio estimation and relative-risk bands.

Two algebraically equivalent routes estimate the stratum-aggregated log
odds ratio beta(y):

* combined: one logistic regression of T on an intercept, Y, the basis
  columns demeaned by their stratum-y sample means, and the interactions
  of Y with those demeaned columns.  The coefficient on Y *is* the
  estimate and its usual standard error can be read off the fit.
* plugin: two stratum logistic fits of T on the basis; the estimate is
  the intercept gap plus the stratum-y basis means times the slope gaps.
  Its standard error comes from the efficient influence function.

Both equal the exact interacted MLE, so they agree up to solver tolerance.

The relative-risk band is indexed by the unknown true case probability p:
exp{p*b1 + (1-p)*b0} plus a conservative uniform critical value under
case-control sampling, or a constant one-sided interval on exp{b0} under
case-population sampling.  Lower limits sit at 1, the monotonicity lower
bound.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .basis import BasisSpec, build_basis
from .errors import NuisanceProbabilityOutOfRange, ValidationError
from .logit import LogitFit, fit_logit
from .model import Design, ObservedDataset

__all__ = [
    "BetaEstimate",
    "FittedNuisances",
    "EIFRecord",
    "RRBand",
    "estimate_beta_combined",
    "estimate_beta_plugin",
    "estimate_kappa",
    "fit_nuisances",
    "eif_record",
    "eif_variance",
    "rr_band",
]

CLIP = 1e-6


@dataclass(frozen=True)
class BetaEstimate:
    """A stratum aggregate with its standard error.

    scale "log" is the aggregated log odds ratio beta(y); scale "level"
    is the aggregated odds ratio kappa(y).
    """

    y_stratum: int
    value: float
    se: float
    method: str  # "combined" | "plugin"
    scale: str   # "log" | "level"

    def __post_init__(self):
        if self.y_stratum not in (0, 1):
            raise ValidationError("y_stratum must be 0 or 1")
        if not (np.isfinite(self.value) and np.isfinite(self.se) and self.se >= 0):
            raise ValidationError("estimate and se must be finite, se nonnegative")


@dataclass(frozen=True)
class FittedNuisances:
    """Per-observation fitted probabilities feeding the influence function.

    pi1, pi0: fitted Pr(T=1 | Y=y, X_i) for y=1, 0, evaluated at every row;
    py: fitted Pr(Y=1 | X_i); lor: fitted log odds ratio at every row.
    """

    pi1: np.ndarray
    pi0: np.ndarray
    py: np.ndarray
    h0: float

    @property
    def lor(self) -> np.ndarray:
        return np.log(self.pi1 / (1.0 - self.pi1)) - np.log(self.pi0 / (1.0 - self.pi0))


@dataclass(frozen=True)
class EIFRecord:
    """Evaluated influence function: values and the three additive terms.

    components columns: centered aggregate term, the (minus) Delta_0
    adjustment, the Delta_1 adjustment.  The first column has exact sample
    mean zero by construction of the stratum mean.
    """

    values: np.ndarray
    components: np.ndarray
    scale: str
    n_clipped: int

    @property
    def variance_of_mean(self) -> float:
        """Plug-in variance of the estimator: mean(F^2)/n."""
        n = self.values.shape[0]
        return float(np.mean(self.values ** 2) / n)


def _design_columns(data: ObservedDataset, spec: BasisSpec) -> np.ndarray:
    if spec.n_covariates != data.n_covariates:
        raise ValidationError("basis spec does not match the dataset's covariates")
    cols = build_basis(data.x, spec)
    mask = spec.intercept_safe_mask()
    return cols[:, mask]


def estimate_beta_combined(data: ObservedDataset, spec: BasisSpec,
                           y_stratum: int) -> BetaEstimate:
    """Combined-regression estimator of beta(y) with read-off standard error.

    Basis columns are demeaned with the stratum-`y_stratum` sample means, so
    the coefficient on Y in the fully interacted logistic fit of T equals
    the stratum aggregate of the fitted log odds ratio.
    """
    if y_stratum not in (0, 1):
        raise ValidationError("y_stratum must be 0 or 1")
    cols = _design_columns(data, spec)
    y = data.y.astype(float)
    if cols.shape[1]:
        m = cols[data.stratum(y_stratum)].mean(axis=0)
        phi = cols - m
        design = np.column_stack([y, phi, phi * y[:, None]])
    else:
        design = y[:, None]
    fit = fit_logit(data.t, design)
    return BetaEstimate(y_stratum=y_stratum, value=float(fit.coef[1]),
                        se=float(np.sqrt(fit.cov[1, 1])), method="combined",
                        scale="log")


def _stratum_fits(data: ObservedDataset, cols: np.ndarray) -> tuple[LogitFit, LogitFit]:
    mask0 = data.stratum(0)
    fit0 = fit_logit(data.t[mask0], cols[mask0])
    mask1 = data.stratum(1)
    fit1 = fit_logit(data.t[mask1], cols[mask1])
    return fit0, fit1


def fit_nuisances(data: ObservedDataset, spec: BasisSpec,
                  prospective_spec: BasisSpec | None = None) -> FittedNuisances:
    """Fit the two retrospective logits and the prospective logit.

    The prospective model Pr(Y=1|X) defaults to the same basis family as
    the retrospective one.
    """
    cols = _design_columns(data, spec)
    fit0, fit1 = _stratum_fits(data, cols)
    pspec = spec if prospective_spec is None else prospective_spec
    pcols = _design_columns(data, pspec)
    pfit = fit_logit(data.y, pcols)
    return FittedNuisances(pi1=fit1.predict(cols), pi0=fit0.predict(cols),
                           py=pfit.predict(pcols), h0=data.h0)


def _plugin_value(data: ObservedDataset, cols: np.ndarray,
                  fit0: LogitFit, fit1: LogitFit, y_stratum: int) -> float:
    value = fit1.coef[0] - fit0.coef[0]
    if cols.shape[1]:
        m = cols[data.stratum(y_stratum)].mean(axis=0)
        value = value + m @ (fit1.coef[1:] - fit0.coef[1:])
    return float(value)


def estimate_beta_plugin(data: ObservedDataset, spec: BasisSpec, y_stratum: int,
                         prospective_spec: BasisSpec | None = None) -> BetaEstimate:
    """Plug-in sieve estimator of beta(y) with influence-function standard error."""
    if y_stratum not in (0, 1):
        raise ValidationError("y_stratum must be 0 or 1")
    cols = _design_columns(data, spec)
    fit0, fit1 = _stratum_fits(data, cols)
    value = _plugin_value(data, cols, fit0, fit1, y_stratum)
    nuis = FittedNuisances(pi1=fit1.predict(cols), pi0=fit0.predict(cols),
                           py=_prospective_probs(data, spec, prospective_spec),
                           h0=data.h0)
    var = eif_variance(data, nuis, y_stratum, scale="log")
    return BetaEstimate(y_stratum=y_stratum, value=value, se=float(np.sqrt(var)),
                        method="plugin", scale="log")


def _prospective_probs(data: ObservedDataset, spec: BasisSpec,
                       prospective_spec: BasisSpec | None) -> np.ndarray:
    pspec = spec if prospective_spec is None else prospective_spec
    pcols = _design_columns(data, pspec)
    return fit_logit(data.y, pcols).predict(pcols)


def estimate_kappa(data: ObservedDataset, spec: BasisSpec, y_stratum: int,
                   prospective_spec: BasisSpec | None = None) -> BetaEstimate:
    """Level-scale aggregate kappa(y): stratum mean of the fitted odds ratio."""
    if y_stratum not in (0, 1):
        raise ValidationError("y_stratum must be 0 or 1")
    cols = _design_columns(data, spec)
    fit0, fit1 = _stratum_fits(data, cols)
    nuis = FittedNuisances(pi1=fit1.predict(cols), pi0=fit0.predict(cols),
                           py=_prospective_probs(data, spec, prospective_spec),
                           h0=data.h0)
    value = float(np.mean(np.exp(nuis.lor[data.stratum(y_stratum)])))
    var = eif_variance(data, nuis, y_stratum, scale="level")
    return BetaEstimate(y_stratum=y_stratum, value=value, se=float(np.sqrt(var)),
                        method="plugin", scale="level")


def _checked_probs(name: str, p: np.ndarray) -> tuple[np.ndarray, int]:
    if not np.all(np.isfinite(p)) or np.any(p < 0) or np.any(p > 1):
        raise NuisanceProbabilityOutOfRange(
            f"fitted {name} probabilities leave [0, 1] or are not finite")
    clipped = np.clip(p, CLIP, 1.0 - CLIP)
    return clipped, int(np.sum(clipped != p))


def eif_record(data: ObservedDataset, nuisances: FittedNuisances,
               y_stratum: int, scale: str = "log") -> EIFRecord:
    """Evaluate the influence function of beta(y) (log) or kappa(y) (level).

    Fitted probabilities are clipped to [1e-6, 1 - 1e-6] before entering
    the adjustment-term ratios; the number of values touched is reported.
    """
    if scale not in ("log", "level"):
        raise ValidationError("scale must be 'log' or 'level'")
    pi1, c1 = _checked_probs("Pi(1|1,x)", nuisances.pi1)
    pi0, c0 = _checked_probs("Pi(1|0,x)", nuisances.pi0)
    py, c2 = _checked_probs("Pr(Y=1|x)", nuisances.py)
    n_clipped = c1 + c0 + c2
    h0 = nuisances.h0
    y = data.y.astype(float)
    t = data.t.astype(float)

    lor = np.log(pi1 / (1.0 - pi1)) - np.log(pi0 / (1.0 - pi0))
    w = h0 / (1.0 - h0) * (1.0 - py) / py
    ind = y if y_stratum == 1 else 1.0 - y
    denom_h = h0 if y_stratum == 1 else 1.0 - h0
    delta0 = (1.0 - y) * (t - pi0) / (pi0 * (1.0 - pi0))
    delta1 = y * (t - pi1) / (pi1 * (1.0 - pi1))
    w_pow_y = w if y_stratum == 1 else 1.0
    w_pow_1my = 1.0 if y_stratum == 1 else w

    if scale == "log":
        center = float(lor[data.stratum(y_stratum)].mean())
        term1 = ind / denom_h * (lor - center)
        term2 = -delta0 / ((1.0 - h0) * w_pow_y)
        term3 = w_pow_1my * delta1 / h0
    else:
        orx = np.exp(lor)
        center = float(orx[data.stratum(y_stratum)].mean())
        term1 = ind / denom_h * (orx - center)
        term2 = -orx * delta0 / ((1.0 - h0) * w_pow_y)
        term3 = orx * w_pow_1my * delta1 / h0

    components = np.column_stack([term1, term2, term3])
    return EIFRecord(values=components.sum(axis=1), components=components,
                     scale=scale, n_clipped=n_clipped)


def eif_variance(data: ObservedDataset, nuisances: FittedNuisances,
                 y_stratum: int, scale: str = "log") -> float:
    """Influence-function variance of the stratum aggregate estimator."""
    return eif_record(data, nuisances, y_stratum, scale).variance_of_mean


@dataclass(frozen=True)
class RRBand:
    """Relative-risk upper-bound curve indexed by the true case probability."""

    p: np.ndarray
    point: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    alpha: float
    design: Design
    halfwidth: float  # log-scale critical value actually used

    def rows(self):
        """(p, point, lower, upper) tuples for tabular output."""
        for i in range(self.p.shape[0]):
            yield (float(self.p[i]), float(self.point[i]),
                   float(self.lower[i]), float(self.upper[i]))


def _p_grid(pbar: float, step: float) -> np.ndarray:
    if not 0.0 < pbar <= 1.0:
        raise ValidationError("pbar must lie in (0, 1]")
    m = max(int(round(pbar / step)), 1)
    return np.linspace(0.0, pbar, m + 1)


def rr_band(beta0: BetaEstimate, beta1: BetaEstimate | None, alpha: float,
            design: Design, pbar: float = 1.0, step: float = 0.01) -> RRBand:
    """One-sided confidence band for the relative-risk upper bound.

    Case-control: exp{p*b1 + (1-p)*b0 + u} with the conservative uniform
    critical value u = z(1-alpha/2) * max(se1, se0).  Case-population:
    the constant interval [1, exp{b0 + z(1-alpha)*se0}].  Points and upper
    limits are truncated below at 1.
    """
    if not 0.0 < alpha <= 0.5:
        raise ValidationError("alpha must lie in (0, 0.5]")
    if beta0.scale != "log" or beta0.y_stratum != 0:
        raise ValidationError("beta0 must be a log-scale stratum-0 estimate")
    grid = _p_grid(pbar, step)
    if design is Design.CASE_CONTROL:
        if beta1 is None or beta1.scale != "log" or beta1.y_stratum != 1:
            raise ValidationError("case-control bands need a log-scale stratum-1 estimate")
        u = float(norm.ppf(1.0 - alpha / 2.0) * max(beta1.se, beta0.se))
        log_point = grid * beta1.value + (1.0 - grid) * beta0.value
    else:
        u = float(norm.ppf(1.0 - alpha) * beta0.se)
        log_point = np.full_like(grid, beta0.value)
    point = np.maximum(np.exp(log_point), 1.0)
    upper = np.maximum(np.exp(log_point + u), 1.0)
    return RRBand(p=grid, point=point, lower=np.ones_like(grid), upper=upper,
                  alpha=alpha, design=design, halfwidth=u)
