"""Sieve basis construction for the logistic fits.

A basis spec assigns each covariate a term family (linear, polynomial, or
cubic B-spline with inner knots at empirical quantiles) and can add all
pairwise products of the raw covariates.  The intercept is never part of
the basis; fitting code adds it separately.

Cubic spline blocks are full B-spline bases (order 4, so #inner knots + 4
functions) and therefore sum to one pointwise.  Alongside an intercept that
makes one column per block redundant, so specs also expose a mask selecting
the columns to use in intercept-carrying fits; dropping the first column of
each spline block is an exact reparameterization (the dropped function is an
affine combination of the intercept and the retained ones), leaving fitted
probabilities and the treatment coefficient unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import BSpline

from .errors import DegenerateColumn, ValidationError

__all__ = ["Linear", "Polynomial", "CubicSplineTerm", "BasisSpec", "build_basis"]

_SPLINE_ORDER = 4  # cubic


@dataclass(frozen=True)
class Linear:
    """Use the covariate itself as a single term."""

    def n_terms(self) -> int:
        return 1


@dataclass(frozen=True)
class Polynomial:
    """Powers x, x^2, ..., x^degree."""

    degree: int

    def __post_init__(self):
        if self.degree < 1:
            raise ValidationError("polynomial degree must be >= 1")

    def n_terms(self) -> int:
        return self.degree


@dataclass(frozen=True)
class CubicSplineTerm:
    """Full cubic B-spline basis with `inner_knots` knots at empirical quantiles."""

    inner_knots: int

    def __post_init__(self):
        if self.inner_knots < 1:
            raise ValidationError("cubic spline needs at least one inner knot")

    def n_terms(self) -> int:
        return self.inner_knots + _SPLINE_ORDER


Term = Linear | Polynomial | CubicSplineTerm


@dataclass(frozen=True)
class BasisSpec:
    """Term family per covariate plus an optional pairwise-interaction flag."""

    terms: tuple[Term, ...]
    interactions: bool = False

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        for term in self.terms:
            if not isinstance(term, (Linear, Polynomial, CubicSplineTerm)):
                raise ValidationError(f"unknown basis term {term!r}")
        if self.interactions and len(self.terms) < 2:
            raise ValidationError("pairwise interactions need at least two covariates")

    @classmethod
    def linear(cls, k: int) -> "BasisSpec":
        return cls(terms=(Linear(),) * k)

    @classmethod
    def polynomial(cls, k: int, degree: int, interactions: bool = False) -> "BasisSpec":
        return cls(terms=(Polynomial(degree),) * k, interactions=interactions)

    @classmethod
    def empty(cls) -> "BasisSpec":
        """Intercept-only model: no basis terms at all."""
        return cls(terms=())

    @property
    def n_covariates(self) -> int:
        return len(self.terms)

    @property
    def n_columns(self) -> int:
        j = sum(t.n_terms() for t in self.terms)
        if self.interactions:
            k = len(self.terms)
            j += k * (k - 1) // 2
        return j

    def intercept_safe_mask(self) -> np.ndarray:
        """Columns that stay linearly independent next to an intercept.

        Drops the leading column of every spline block (spline bases sum
        to one); all other columns are kept.
        """
        mask = []
        for term in self.terms:
            if isinstance(term, CubicSplineTerm):
                mask.extend([False] + [True] * (term.n_terms() - 1))
            else:
                mask.extend([True] * term.n_terms())
        if self.interactions:
            k = len(self.terms)
            mask.extend([True] * (k * (k - 1) // 2))
        return np.asarray(mask, dtype=bool)

    def column_names(self) -> list[str]:
        names = []
        for i, term in enumerate(self.terms, start=1):
            if isinstance(term, Linear):
                names.append(f"x{i}")
            elif isinstance(term, Polynomial):
                names.extend(f"x{i}^{d}" for d in range(1, term.degree + 1))
            else:
                names.extend(f"x{i}.bs{j}" for j in range(1, term.n_terms() + 1))
        if self.interactions:
            k = len(self.terms)
            names.extend(f"x{i}*x{j}" for i in range(1, k + 1) for j in range(i + 1, k + 1))
        return names


def _quantile_knots(col: np.ndarray, m: int) -> np.ndarray:
    probs = np.arange(1, m + 1) / (m + 1)
    knots = np.quantile(col, probs)
    lo, hi = col.min(), col.max()
    full = np.concatenate([[lo], knots, [hi]])
    if np.any(np.diff(full) <= 0):
        raise ValidationError(
            "spline knot sequence is not strictly increasing; the covariate "
            "has too few distinct values for the requested number of knots")
    return knots


def _spline_columns(col: np.ndarray, term: CubicSplineTerm) -> np.ndarray:
    inner = _quantile_knots(col, term.inner_knots)
    lo, hi = col.min(), col.max()
    knots = np.concatenate([[lo] * _SPLINE_ORDER, inner, [hi] * _SPLINE_ORDER])
    nbasis = term.n_terms()
    spline = BSpline(knots, np.eye(nbasis), _SPLINE_ORDER - 1, extrapolate=False)
    out = spline(col)
    # the rightmost point sits on the closing knot; clamp it into the basis
    out = np.nan_to_num(out, nan=0.0)
    at_hi = col == hi
    out[at_hi] = 0.0
    out[at_hi, -1] = 1.0
    return out


def build_basis(x: np.ndarray, spec: BasisSpec) -> np.ndarray:
    """Evaluate the basis at the rows of x, returning an (n, J) matrix.

    Columns are ordered by (covariate index, term index), then interaction
    pairs in lexicographic order.  Raises DegenerateColumn if any column is
    constant.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[1] != spec.n_covariates:
        raise ValidationError(
            f"spec covers {spec.n_covariates} covariates but x has {x.shape[1]} columns")
    n = x.shape[0]
    blocks = []
    for i, term in enumerate(spec.terms):
        col = x[:, i]
        if isinstance(term, Linear):
            blocks.append(col[:, None])
        elif isinstance(term, Polynomial):
            blocks.append(np.column_stack([col ** d for d in range(1, term.degree + 1)]))
        else:
            blocks.append(_spline_columns(col, term))
    if spec.interactions:
        k = spec.n_covariates
        inter = [x[:, i] * x[:, j] for i in range(k) for j in range(i + 1, k)]
        if inter:
            blocks.append(np.column_stack(inter))
    out = np.column_stack(blocks) if blocks else np.empty((n, 0))
    if out.shape[1] != spec.n_columns:
        raise AssertionError("basis column count mismatch")
    if out.shape[1]:
        ptp = out.max(axis=0) - out.min(axis=0)
        if np.any(ptp == 0):
            j = int(np.argmax(ptp == 0))
            raise DegenerateColumn(
                f"basis column {spec.column_names()[j]!r} is constant")
    return out
