"""Limit extrapolation and integral growth classification.

Two services shared across the package:

* estimate_limit: Richardson-style extrapolation of a sequence sampled
  on a geometric parameter grid, with an empirical convergence order
  and a monotone/Cauchy certificate. No limit is ever claimed without
  a certificate.
* classify_growth: least-squares competition between named growth and
  saturation models for partial integrals F(delta) = int_delta^c, used
  by the integral regularity tests and the Dini checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class LimitEstimate:
    value: float
    uncertainty: float
    order: float | None
    certificate: str          # "monotone", "cauchy" or "none"
    sequence: tuple

    @property
    def certified(self):
        return self.certificate in ("monotone", "cauchy")


def estimate_limit(values, ratio=2.0):
    """Extrapolate a sequence f(h), f(h/ratio), ... toward h -> 0.

    The convergence order is estimated from successive difference
    ratios; one Richardson stage is applied with that order. The
    certificate is "monotone" when the sequence approaches its limit
    from one side with shrinking steps, "cauchy" when the steps decay
    geometrically, "none" otherwise.
    """
    seq = [float(v) for v in values]
    if len(seq) < 3:
        raise ValueError("need at least three sequence values")
    d = np.diff(seq)
    nonzero = np.abs(d) > 0
    certificate = "none"
    if np.all(np.abs(d[1:]) <= np.abs(d[:-1]) + 1e-300):
        if np.all(d >= 0) or np.all(d <= 0):
            certificate = "monotone"
        else:
            certificate = "cauchy"
    elif np.all(nonzero) and np.all(np.abs(d[1:]) / np.abs(d[:-1]) <= 0.9):
        certificate = "cauchy"

    # empirical order from the last difference ratios
    orders = []
    for k in range(len(d) - 1):
        if abs(d[k + 1]) > 0 and abs(d[k]) > abs(d[k + 1]):
            orders.append(math.log(abs(d[k]) / abs(d[k + 1])) / math.log(ratio))
    order = float(np.median(orders[-3:])) if orders else None

    if order is not None and order > 0.05:
        f = ratio ** order - 1.0
        rich = [seq[k + 1] + (seq[k + 1] - seq[k]) / f for k in range(len(seq) - 1)]
        value = rich[-1]
        unc = abs(rich[-1] - rich[-2]) if len(rich) >= 2 else abs(d[-1])
        unc = max(unc, abs(d[-1]) / max(f, 1.0) * 0.5)
    else:
        value = seq[-1]
        unc = abs(d[-1]) * 2.0 if len(d) else math.inf
    return LimitEstimate(value, unc, order, certificate, tuple(seq))


# --------------------------------------------------------------------
# growth model competition
# --------------------------------------------------------------------

_EXPONENT_GRID = np.exp(np.linspace(math.log(5e-3), math.log(6.0), 48))


@dataclass(frozen=True)
class ModelFit:
    name: str
    params: dict
    rss: float
    diverges: bool


@dataclass(frozen=True)
class GrowthFit:
    """Outcome of the model competition for partial integrals."""
    verdict: str                     # "divergent", "convergent", "inconclusive"
    best: ModelFit | None
    rival: ModelFit | None           # best model of the opposite class
    margin: float                    # rival.rss / best.rss (inf if no rival)
    fits: tuple = field(repr=False, default=())

    def describe(self):
        if self.best is None:
            return "no admissible model"
        p = ", ".join(f"{k}={v:.6g}" for k, v in self.best.params.items())
        return f"{self.best.name}({p}); margin {self.margin:.3g}"


def _linfit(F, basis):
    """Least squares F ~ A + B*basis; returns (A, B, rss)."""
    M = np.column_stack([np.ones_like(basis), basis])
    coef, *_ = np.linalg.lstsq(M, F, rcond=None)
    resid = F - M @ coef
    return float(coef[0]), float(coef[1]), float(resid @ resid)


def _fit_fixed_basis(name, diverges, basis_fn, L, F):
    basis = basis_fn(L)
    ok = np.isfinite(basis)
    if ok.sum() < 5:
        return None
    A, B, rss = _linfit(F[ok], basis[ok])
    if B <= 0:
        return None
    if diverges:
        # a "divergent" fit whose implied growth over the probe range is
        # buried in the residual noise is no evidence of divergence
        span = B * (np.max(basis[ok]) - np.min(basis[ok]))
        noise = math.sqrt(rss / max(ok.sum() - 2, 1))
        if span < 10.0 * noise:
            return None
    return ModelFit(name, {"A": A, "B": B}, rss, diverges)


def _fit_exponent_family(name, diverges, basis_of_p, L, F):
    best = None
    for p in _EXPONENT_GRID:
        basis = basis_of_p(L, p)
        ok = np.isfinite(basis)
        if ok.sum() < 5:
            continue
        A, B, rss = _linfit(F[ok], basis[ok])
        if B <= 0:
            continue
        if diverges:
            span = B * (np.max(basis[ok]) - np.min(basis[ok]))
            noise = math.sqrt(rss / max(ok.sum() - 2, 1))
            if span < 10.0 * noise:
                continue
        if best is None or rss < best.rss:
            best = ModelFit(name, {"A": A, "B": B, "p": float(p)}, rss, diverges)
    return best


def classify_growth(deltas, values, margin=10.0, tail_fraction=0.75):
    """Classify partial integrals F(delta) as divergent or convergent.

    deltas must be positive and decreasing; values are F(delta). The
    fit runs on the asymptotic tail (smallest deltas). Candidate
    models: A + B ln(1/d), A + B lnln(1/d), A + B lnlnln(1/d),
    A + B ln(1/d)^p, A + B d^-p (divergent) and A - B d^p,
    A - B ln(1/d)^-p (convergent). The verdict requires the winning
    model to beat the best model of the opposite class by `margin` in
    residual sum of squares, else "inconclusive".
    """
    d = np.asarray(deltas, dtype=float)
    F = np.asarray(values, dtype=float)
    if d.ndim != 1 or d.shape != F.shape or len(d) < 6:
        raise ValueError("need >= 6 (delta, value) pairs")
    if np.any(d <= 0) or np.any(np.diff(d) >= 0):
        raise ValueError("deltas must be positive and strictly decreasing")

    k0 = int(math.floor(len(d) * (1.0 - tail_fraction)))
    d, F = d[k0:], F[k0:]
    L = np.log(1.0 / d)

    def safe_log(x):
        return np.where(x > 1.0, np.log(np.maximum(x, 1.0 + 1e-15)), np.nan)

    fits = []
    fits.append(_fit_fixed_basis("log", True, lambda L: L, L, F))
    fits.append(_fit_fixed_basis("loglog", True, safe_log, L, F))
    fits.append(_fit_fixed_basis(
        "logloglog", True, lambda L: safe_log(safe_log(L)), L, F))
    fits.append(_fit_exponent_family(
        "logpower_divergent", True,
        lambda L, p: np.where(L > 0, L ** p, np.nan), L, F))
    fits.append(_fit_exponent_family(
        "power_divergent", True,
        lambda L, p: np.exp(np.minimum(p * L, 600.0)), L, F))
    fits.append(_fit_exponent_family(
        "power_convergent", False,
        lambda L, p: -np.exp(np.maximum(-p * L, -600.0)), L, F))
    fits.append(_fit_exponent_family(
        "logpower_convergent", False,
        lambda L, p: np.where(L > 0, -(L ** -p), np.nan), L, F))
    fits = tuple(f for f in fits if f is not None)

    divergent = [f for f in fits if f.diverges]
    convergent = [f for f in fits if not f.diverges]
    if not fits:
        return GrowthFit("inconclusive", None, None, math.inf, fits)
    if not divergent or not convergent:
        best = min(fits, key=lambda f: f.rss)
        verdict = "divergent" if best.diverges else "convergent"
        return GrowthFit(verdict, best, None, math.inf, fits)

    best_div = min(divergent, key=lambda f: f.rss)
    best_con = min(convergent, key=lambda f: f.rss)
    if best_div.rss <= best_con.rss:
        best, rival = best_div, best_con
    else:
        best, rival = best_con, best_div
    ratio = rival.rss / best.rss if best.rss > 0 else math.inf
    if ratio >= margin:
        verdict = "divergent" if best.diverges else "convergent"
    else:
        verdict = "inconclusive"
    return GrowthFit(verdict, best, rival, ratio, fits)
