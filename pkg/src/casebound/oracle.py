"""Exact computation on finite populations.

A DiscretePopulation stores the full joint distribution of
(X*, T*, Y*(0), Y*(1)) on a finite covariate support.  Everything of
interest — causal relative risk, causal attributable risk, the observed
law induced by case-control or case-population sampling, the functions
r(x, p), Gamma(x, p), Gamma_AR(x, p), odds ratios, and all the bound
formulas — can then be evaluated by plain enumeration, with no estimation
error.  This module is the reference against which the estimators and the
identification formulas are verified.

Index conventions
-----------------
pmf has shape (n_cells, 2, 2, 2) indexed [cell, t, y0, y1].
ObservedLaw.pi has shape (2, 2, n_cells) indexed [t, y, cell]; fxy has
shape (2, n_cells) indexed [y, cell].
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import (
    OverlapViolation,
    ValidationError,
    ZeroDenominator,
    ZeroRetroProb,
)
from .model import Design

__all__ = [
    "DiscretePopulation",
    "ObservedLaw",
    "AssumptionReport",
    "AssumptionSet",
    "project",
    "r_case_prob",
    "gamma",
    "gamma_ar",
    "rare_disease_slope",
    "bounds_rr",
    "bounds_ar",
    "beta_aggregate",
    "kappa_aggregate",
    "beta_ar_aggregate",
    "xi_cp",
    "upper_bound_ar",
    "random_population",
    "population_from_margins",
    "save_population",
    "load_population",
]

_PMF_TOL = 1e-12


class AssumptionSet(enum.Enum):
    """Identifying assumptions under which bounds are reported."""

    IGNORABILITY = "ignorability"   # overlap + unconfoundedness
    MONOTONE = "monotone"           # monotone response + monotone selection


@dataclass(frozen=True)
class AssumptionReport:
    overlap: bool
    unconfounded: bool
    mtr: bool
    mts: bool


@dataclass(frozen=True)
class DiscretePopulation:
    """Finite joint distribution of (X*, T*, Y*(0), Y*(1))."""

    support_x: np.ndarray  # (n_cells, K)
    pmf: np.ndarray        # (n_cells, 2, 2, 2) indexed [cell, t, y0, y1]

    def __post_init__(self):
        support = np.asarray(self.support_x, dtype=float)
        if support.ndim == 1:
            support = support[:, None]
        pmf = np.asarray(self.pmf, dtype=float)
        if pmf.shape != (support.shape[0], 2, 2, 2):
            raise ValidationError(f"pmf must have shape (n_cells, 2, 2, 2), got {pmf.shape}")
        if np.any(pmf < 0):
            raise ValidationError("pmf entries must be nonnegative")
        if abs(pmf.sum() - 1.0) > _PMF_TOL:
            raise ValidationError(f"pmf sums to {pmf.sum()!r}, not 1")
        object.__setattr__(self, "support_x", support)
        object.__setattr__(self, "pmf", pmf)
        self.support_x.setflags(write=False)
        self.pmf.setflags(write=False)

    # --- marginal building blocks -----------------------------------------

    @property
    def n_cells(self) -> int:
        return self.support_x.shape[0]

    @property
    def cell_mass(self) -> np.ndarray:
        """f_{X*}(x), per cell."""
        return self.pmf.sum(axis=(1, 2, 3))

    @property
    def p_treat_given_x(self) -> np.ndarray:
        """Pr(T*=1 | X*=x), per cell."""
        return self.pmf[:, 1].sum(axis=(1, 2)) / self.cell_mass

    def potential_prob(self, t: int) -> np.ndarray:
        """Pr{Y*(t)=1 | X*=x}, per cell."""
        if t == 1:
            num = self.pmf[:, :, :, 1].sum(axis=(1, 2))
        else:
            num = self.pmf[:, :, 1, :].sum(axis=(1, 2))
        return num / self.cell_mass

    def potential_prob_by_arm(self, t: int, arm: int) -> np.ndarray:
        """Pr{Y*(t)=1 | T*=arm, X*=x}, per cell."""
        slab = self.pmf[:, arm]  # (n_cells, y0, y1)
        denom = slab.sum(axis=(1, 2))
        num = slab[:, :, 1].sum(axis=1) if t == 1 else slab[:, 1, :].sum(axis=1)
        with np.errstate(invalid="ignore"):
            return np.where(denom > 0, num / np.where(denom > 0, denom, 1.0), np.nan)

    @property
    def joint_xty(self) -> np.ndarray:
        """Pr(X*=x, T*=t, Y*=y) with Y* = T*Y*(1) + (1-T*)Y*(0); shape (n_cells, 2, 2)."""
        out = np.empty((self.n_cells, 2, 2))
        out[:, 0, 0] = self.pmf[:, 0, 0, :].sum(axis=1)   # t=0, y0=0
        out[:, 0, 1] = self.pmf[:, 0, 1, :].sum(axis=1)   # t=0, y0=1
        out[:, 1, 0] = self.pmf[:, 1, :, 0].sum(axis=1)   # t=1, y1=0
        out[:, 1, 1] = self.pmf[:, 1, :, 1].sum(axis=1)   # t=1, y1=1
        return out

    @property
    def p0(self) -> float:
        """True case probability Pr(Y*=1)."""
        j = self.joint_xty
        return float(j[:, :, 1].sum())

    def py_given_x(self) -> np.ndarray:
        """Pr(Y*=1 | X*=x), per cell."""
        return self.joint_xty[:, :, 1].sum(axis=1) / self.cell_mass

    # --- causal estimands ---------------------------------------------------

    def theta(self, cell: int) -> float:
        """Causal relative risk Pr{Y*(1)=1|x} / Pr{Y*(0)=1|x}."""
        p1 = self.potential_prob(1)[cell]
        p0 = self.potential_prob(0)[cell]
        if p0 <= 0:
            raise ZeroDenominator(f"Pr{{Y*(0)=1 | cell {cell}}} is zero")
        return float(p1 / p0)

    def theta_ar(self, cell: int) -> float:
        """Causal attributable risk Pr{Y*(1)=1|x} - Pr{Y*(0)=1|x}."""
        if not 0 <= cell < self.n_cells:
            raise ValidationError(f"cell {cell} outside support")
        return float(self.potential_prob(1)[cell] - self.potential_prob(0)[cell])

    def prospective_rr(self, cell: int) -> float:
        """Pr(Y*=1|T*=1,x) / Pr(Y*=1|T*=0,x) from the factual joint."""
        j = self.joint_xty[cell]
        p1 = j[1, 1] / j[1].sum()
        p0 = j[0, 1] / j[0].sum()
        if p0 <= 0:
            raise ZeroDenominator("Pr(Y*=1|T*=0,x) is zero")
        return float(p1 / p0)

    def prospective_or(self, cell: int) -> float:
        """Odds ratio of (Y*, T*) given X*=x."""
        j = self.joint_xty[cell]
        if np.any(j <= 0):
            raise ZeroDenominator("a factual (t, y) cell has zero mass")
        return float((j[1, 1] * j[0, 0]) / (j[0, 1] * j[1, 0]))

    # --- assumption checks ----------------------------------------------------

    def check_assumptions(self, tol: float = 1e-12) -> AssumptionReport:
        """Exact enumeration of overlap, unconfoundedness, MTR and MTS."""
        pt = self.p_treat_given_x
        overlap = bool(np.all((pt > 0) & (pt < 1)))
        if overlap:
            for t in (0, 1):
                q = self.potential_prob(t)
                overlap &= bool(np.all((q > 0) & (q < 1)))
        mtr = bool(self.pmf[:, :, 1, 0].sum() <= tol)
        unconf = True
        mts = True
        for t in (0, 1):
            by1 = self.potential_prob_by_arm(t, 1)
            by0 = self.potential_prob_by_arm(t, 0)
            if np.any(np.isnan(by1)) or np.any(np.isnan(by0)):
                unconf = False
                mts = False
                break
            unconf &= bool(np.all(np.abs(by1 - by0) <= tol))
            mts &= bool(np.all(by1 >= by0 - tol))
        return AssumptionReport(overlap=overlap, unconfounded=unconf, mtr=mtr, mts=mts)


@dataclass(frozen=True)
class ObservedLaw:
    """The distribution of (Y, T, X) induced by a sampling design.

    pi[t, y, cell] is the retrospective probability Pi(t|y, x); fxy[y, cell]
    is the covariate pmf within stratum y.  Laws with a zero retrospective
    cell are rejected outright: every downstream formula divides by them.
    """

    design: Design
    h0: float
    pi: np.ndarray
    fxy: np.ndarray

    def __post_init__(self):
        pi = np.asarray(self.pi, dtype=float)
        fxy = np.asarray(self.fxy, dtype=float)
        if pi.ndim != 3 or pi.shape[:2] != (2, 2) or fxy.shape != (2, pi.shape[2]):
            raise ValidationError("pi must be (2, 2, n_cells) and fxy (2, n_cells)")
        if not 0.0 < self.h0 < 1.0:
            raise ValidationError("h0 must lie in (0, 1)")
        if np.any(np.abs(pi.sum(axis=0) - 1.0) > 1e-9):
            raise ValidationError("Pi(0|y,x) + Pi(1|y,x) must equal 1")
        if np.any(np.abs(fxy.sum(axis=1) - 1.0) > 1e-9):
            raise ValidationError("each f_{X|Y}(.|y) must sum to 1")
        if np.any(pi <= 0):
            raise ZeroRetroProb("Pi(t|y,x) hits zero on a support cell")
        if np.any(fxy < 0):
            raise ValidationError("fxy entries must be nonnegative")
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "fxy", fxy)
        self.pi.setflags(write=False)
        self.fxy.setflags(write=False)

    @property
    def n_cells(self) -> int:
        return self.pi.shape[2]

    @property
    def pyx(self) -> np.ndarray:
        """Pr(Y=1 | X=x) by the Bayes rule from fxy and h0."""
        num = self.h0 * self.fxy[1]
        den = num + (1.0 - self.h0) * self.fxy[0]
        return num / den


def project(pop: DiscretePopulation, design: Design, h0: float) -> ObservedLaw:
    """Push a population through a sampling design.

    Case-control: both strata are the conditional laws of (T*, X*) given
    Y*=y.  Case-population: the y=0 stratum is the unconditional law of
    (T*, X*).  Requires an overlap-valid population.
    """
    report = pop.check_assumptions()
    if not report.overlap:
        raise OverlapViolation("population violates overlap on some support cell")
    j = pop.joint_xty  # (cell, t, ystar)
    p_y1 = j[:, :, 1].sum()
    p_y0 = j[:, :, 0].sum()
    pi = np.empty((2, 2, pop.n_cells))
    fxy = np.empty((2, pop.n_cells))
    # case stratum: (T*, X*) | Y*=1 under both designs
    fxy[1] = j[:, :, 1].sum(axis=1) / p_y1
    pi[1, 1] = j[:, 1, 1] / j[:, :, 1].sum(axis=1)
    pi[0, 1] = 1.0 - pi[1, 1]
    if design is Design.CASE_CONTROL:
        fxy[0] = j[:, :, 0].sum(axis=1) / p_y0
        pi[1, 0] = j[:, 1, 0] / j[:, :, 0].sum(axis=1)
    else:
        fxy[0] = pop.cell_mass
        pi[1, 0] = pop.p_treat_given_x
    pi[0, 0] = 1.0 - pi[1, 0]
    return ObservedLaw(design=design, h0=h0, pi=pi, fxy=fxy)


def r_case_prob(law: ObservedLaw, cell: int, p: float) -> float:
    """The case-probability map r(x, p).

    Evaluated at the (unidentified) true case share p0 it returns
    Pr(Y*=1 | X*=x) under both designs; at p=0 it returns 0.
    """
    if not 0.0 <= p <= 1.0:
        raise ValidationError("p must lie in [0, 1]")
    q = law.pyx[cell]
    h0 = law.h0
    if law.design is Design.CASE_CONTROL:
        num = p * (1.0 - h0) * q
        den = num + h0 * (1.0 - p) * (1.0 - q)
        return float(num / den)
    return float(p * (1.0 - h0) / h0 * q / (1.0 - q))


def _blend(a: float, b: float, r: float) -> float:
    # a + r*(b - a), written as a convex combination so the endpoints are exact
    return (1.0 - r) * a + r * b


def gamma(law: ObservedLaw, cell: int, p: float) -> float:
    """The identified bound function Gamma(x, p); Gamma(x, 0) is the odds ratio."""
    r = r_case_prob(law, cell, p)
    pi = law.pi
    num = _blend(pi[0, 0, cell], pi[0, 1, cell], r)
    den = _blend(pi[1, 0, cell], pi[1, 1, cell], r)
    if den == 0.0:
        raise ZeroDenominator("Gamma denominator vanished")
    return float(pi[1, 1, cell] / pi[0, 1, cell] * (num / den))


def gamma_ar(law: ObservedLaw, cell: int, p: float) -> float:
    """The attributable-risk analogue of Gamma: a difference of probability ratios."""
    r = r_case_prob(law, cell, p)
    pi = law.pi
    den1 = _blend(pi[1, 0, cell], pi[1, 1, cell], r)
    den0 = _blend(pi[0, 0, cell], pi[0, 1, cell], r)
    if den1 == 0.0 or den0 == 0.0:
        raise ZeroDenominator("Gamma_AR denominator vanished")
    return float(pi[1, 1, cell] / den1 - pi[0, 1, cell] / den0)


def rare_disease_slope(law: ObservedLaw, cell: int) -> float:
    """Right-side slope of Gamma(x, p) at p=0 under case-control sampling.

    Its sign equals the sign of Pi(1|0,x) - Pi(1|1,x): shrinking the case
    share restricts neither the sign nor the size of the approximation error
    of the odds ratio.
    """
    if law.design is not Design.CASE_CONTROL:
        raise ValidationError("the p=0 slope formula applies to case-control laws")
    pi = law.pi
    lead = pi[1, 1, cell] * (pi[1, 0, cell] - pi[1, 1, cell]) / (
        pi[0, 1, cell] * pi[1, 0, cell] ** 2)
    return float(lead * law.fxy[1, cell] / law.fxy[0, cell])


def _as_law(source, design: Design | None, h0: float) -> ObservedLaw:
    if isinstance(source, ObservedLaw):
        return source
    if isinstance(source, DiscretePopulation):
        if design is None:
            raise ValidationError("projecting a population requires a design")
        return project(source, design, h0)
    raise ValidationError(f"expected a population or an observed law, got {type(source)!r}")


def bounds_rr(source, cell: int, pbar: float,
              assumptions: AssumptionSet,
              design: Design | None = None, h0: float = 0.5) -> tuple[float, float]:
    """Identified interval for the causal relative risk at one cell.

    Under monotone response + selection the interval is [1, Gamma(x, 0)]
    for both designs.  Under ignorability it is the segment between
    Gamma(x, 0) and Gamma(x, pbar) for case-control sampling, and the
    single point Gamma(x, 0) for case-population sampling.
    """
    if not 0.0 <= pbar <= 1.0:
        raise ValidationError("pbar must lie in [0, 1]")
    law = _as_law(source, design, h0)
    g0 = gamma(law, cell, 0.0)
    if assumptions is AssumptionSet.MONOTONE:
        return (1.0, g0)
    if law.design is Design.CASE_POPULATION:
        return (g0, g0)
    gbar = gamma(law, cell, pbar)
    return (min(g0, gbar), max(g0, gbar))


def _scan_max(f, pbar: float, step: float, extra: tuple[float, ...],
              sign: float) -> float:
    """max (sign=+1) or min (sign=-1) of f over [0, pbar], grid + local refinement."""
    grid = np.arange(0.0, pbar, step)
    grid = np.concatenate([grid, [pbar], np.asarray(extra, dtype=float)])
    grid = np.unique(np.clip(grid, 0.0, pbar))
    vals = np.array([sign * f(p) for p in grid])
    k = int(np.argmax(vals))
    best = vals[k]
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, len(grid) - 1)]
    if hi > lo:
        res = minimize_scalar(lambda p: -sign * f(p), bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-10})
        best = max(best, sign * f(float(res.x)))
    return sign * best


def bounds_ar(source, cell: int, pbar: float,
              assumptions: AssumptionSet,
              design: Design | None = None, h0: float = 0.5,
              step: float = 0.001, extra_p: tuple[float, ...] = ()) -> tuple[float, float]:
    """Identified interval for the causal attributable risk at one cell.

    The envelope of r(x, p) * Gamma_AR(x, p) (case-control) or of
    r(x, p) * Gamma_AR(x, 0) (case-population) over p in [0, pbar] is
    found by a grid scan with local refinement; `extra_p` forces known
    candidate points (for example the true case share) into the scan.
    """
    if not 0.0 <= pbar <= 1.0:
        raise ValidationError("pbar must lie in [0, 1]")
    law = _as_law(source, design, h0)
    if law.design is Design.CASE_CONTROL:
        f = lambda p: r_case_prob(law, cell, p) * gamma_ar(law, cell, p)
    else:
        g0 = gamma_ar(law, cell, 0.0)
        f = lambda p: r_case_prob(law, cell, p) * g0
    hi = _scan_max(f, pbar, step, extra_p, +1.0)
    if assumptions is AssumptionSet.MONOTONE:
        return (0.0, hi)
    lo = _scan_max(f, pbar, step, extra_p, -1.0)
    return (lo, hi)


# --- aggregated identification objects ------------------------------------------


def beta_aggregate(law: ObservedLaw, y: int) -> float:
    """beta(y): stratum-weighted mean of the log odds ratio."""
    lor = np.log([gamma(law, c, 0.0) for c in range(law.n_cells)])
    return float(law.fxy[y] @ lor)


def kappa_aggregate(law: ObservedLaw, y: int) -> float:
    """kappa(y): stratum-weighted mean of the odds ratio itself."""
    orx = np.array([gamma(law, c, 0.0) for c in range(law.n_cells)])
    return float(law.fxy[y] @ orx)


def beta_ar_aggregate(law: ObservedLaw, p: float, y: int) -> float:
    """Stratum-weighted mean of r(X, p) * Gamma_AR(X, p)."""
    vals = np.array([r_case_prob(law, c, p) * gamma_ar(law, c, p)
                     for c in range(law.n_cells)])
    return float(law.fxy[y] @ vals)


def xi_cp(law: ObservedLaw) -> float:
    """Slope of the case-population attributable-risk upper bound in p."""
    if law.design is not Design.CASE_POPULATION:
        raise ValidationError("xi_cp applies to case-population laws")
    q = law.pyx
    pi = law.pi
    ratio = q / (1.0 - q)
    diff = pi[1, 1] / pi[1, 0] - pi[0, 1] / pi[0, 0]
    return float((1.0 - law.h0) / law.h0 * (law.fxy[0] @ (ratio * diff)))


def upper_bound_ar(law: ObservedLaw, p: float) -> float:
    """Aggregated attributable-risk upper bound at case share p."""
    if law.design is Design.CASE_CONTROL:
        return (1.0 - p) * beta_ar_aggregate(law, p, 0) + p * beta_ar_aggregate(law, p, 1)
    return p * xi_cp(law)


# --- random populations for property tests ----------------------------------------


def _floored_dirichlet(rng: np.random.Generator, shape: tuple[int, ...],
                       floor: float = 0.02) -> np.ndarray:
    raw = rng.dirichlet(np.full(int(np.prod(shape)), 1.5)).reshape(shape)
    out = raw + floor
    return out / out.sum()


def population_from_margins(pt: np.ndarray, q1: np.ndarray, q0: np.ndarray,
                            mass: np.ndarray | None = None,
                            support: np.ndarray | None = None) -> DiscretePopulation:
    """Unconfounded population with given per-cell treatment and outcome margins.

    pt[c] = Pr(T*=1|x), q1[c] = Pr{Y*(1)=1|x}, q0[c] = Pr{Y*(0)=1|x} with
    q1 >= q0; the potential outcomes are coupled comonotonically, so the
    population satisfies monotone response by construction and monotone
    selection with equality.
    """
    pt = np.asarray(pt, dtype=float)
    q1 = np.asarray(q1, dtype=float)
    q0 = np.asarray(q0, dtype=float)
    n_cells = pt.shape[0]
    if np.any(q1 < q0):
        raise ValidationError("comonotone coupling needs q1 >= q0 at every cell")
    if mass is None:
        mass = np.full(n_cells, 1.0 / n_cells)
    mass = np.asarray(mass, dtype=float)
    if support is None:
        support = np.arange(n_cells, dtype=float)[:, None]
    pmf = np.zeros((n_cells, 2, 2, 2))
    # joint of (y0, y1): (1,1) -> q0, (0,1) -> q1 - q0, (0,0) -> 1 - q1
    for c in range(n_cells):
        joint = np.array([[1.0 - q1[c], q1[c] - q0[c]], [0.0, q0[c]]])
        pmf[c, 0] = mass[c] * (1.0 - pt[c]) * joint
        pmf[c, 1] = mass[c] * pt[c] * joint
    return DiscretePopulation(support_x=support, pmf=pmf)


def random_population(rng: np.random.Generator, n_cells: int = 2, *,
                      mtr: bool = False, mts: bool = False,
                      unconfounded: bool = False,
                      support: np.ndarray | None = None,
                      max_tries: int = 2000) -> DiscretePopulation:
    """Draw a population with probabilities bounded away from 0 and 1.

    Monotone response is enforced by construction (no mass on y0 > y1),
    unconfoundedness by a product construction, and monotone selection by
    rejection when it does not already hold by construction.
    """
    if support is None:
        support = np.arange(n_cells, dtype=float)[:, None]
    if unconfounded:
        lo, hi = 0.12, 0.88
        pt = lo + (hi - lo) * rng.random(n_cells)
        if mtr or mts:
            q1 = lo + (hi - lo) * rng.random(n_cells)
            q0 = lo + (q1 - lo) * rng.random(n_cells)
            mass = _floored_dirichlet(rng, (n_cells,), floor=0.1)
            return population_from_margins(pt, q1, q0, mass=mass, support=support)
        mass = _floored_dirichlet(rng, (n_cells,), floor=0.1)
        pmf = np.zeros((n_cells, 2, 2, 2))
        for c in range(n_cells):
            joint = _floored_dirichlet(rng, (2, 2), floor=0.08)
            pmf[c, 0] = mass[c] * (1.0 - pt[c]) * joint
            pmf[c, 1] = mass[c] * pt[c] * joint
        return DiscretePopulation(support_x=support, pmf=pmf)

    for _ in range(max_tries):
        pmf = _floored_dirichlet(rng, (n_cells, 2, 2, 2), floor=0.02)
        if mtr:
            pmf = pmf.copy()
            pmf[:, :, 1, 0] = 0.0
            pmf /= pmf.sum()
        pop = DiscretePopulation(support_x=support, pmf=pmf)
        if mts and not pop.check_assumptions().mts:
            continue
        return pop
    raise ValidationError(f"no admissible population found in {max_tries} draws")


# --- fixture files -------------------------------------------------------------------


def save_population(pop: DiscretePopulation, path) -> None:
    """Write the population in the tabular cell format (one row per pmf entry)."""
    k = pop.support_x.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cell", "t", "y0", "y1", "mass",
                         *(f"x{i + 1}" for i in range(k))])
        for c in range(pop.n_cells):
            coords = [repr(float(v)) for v in pop.support_x[c]]
            for t in (0, 1):
                for y0 in (0, 1):
                    for y1 in (0, 1):
                        writer.writerow([c, t, y0, y1,
                                         repr(float(pop.pmf[c, t, y0, y1])), *coords])


def load_population(path) -> DiscretePopulation:
    """Read a population written by save_population."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        xcols = [name for name in header if name.startswith("x")]
        rows = list(reader)
    if not rows:
        raise ValidationError(f"{path}: no population rows")
    cells = sorted({int(r[0]) for r in rows})
    if cells != list(range(len(cells))):
        raise ValidationError("cell ids must be 0..n_cells-1")
    n_cells = len(cells)
    pmf = np.zeros((n_cells, 2, 2, 2))
    support = np.zeros((n_cells, len(xcols)))
    for r in rows:
        c, t, y0, y1 = (int(v) for v in r[:4])
        pmf[c, t, y0, y1] = float(r[4])
        support[c] = [float(v) for v in r[5:5 + len(xcols)]]
    return DiscretePopulation(support_x=support, pmf=pmf)
