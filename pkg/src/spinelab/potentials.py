"""Variable-exponent integral potentials and their calculus.

The central object is

    u(x, r) = int_b^c |t|^mu(t) h(t) / [(t-x)^2 + r^2]^(mu(t)/2) dt,

together with the kernels k1, k2 whose quotient omega(x, r) governs the
radial PDE  u_xx + u_rr + (omega/r) u_r = 0  off the segment
[b, c] x {0}, the split u = u1 + u2 around the peak, the derivative of
u2 along a spine curve, and the classical d = 3 cusp potential
asymptotics.

All integrands are assembled in log space from v = ln(1/|t|), so both
logarithmic weights near t = 0 and kernel peaks of width r (down to
subnormal r) evaluate stably: near the peak the paper's own change of
variables t = x + r*s is used, near t = 0 the substitution t = e^{-v}.

Note: two-sided specs (b = -c) are assumed even in t; the catalog
presets all are, and one-sided specs (b = 0) never evaluate t < 0.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import (DivisionInstability, DomainError, EvaluationError,
                     SingularPointError)
from .limits import classify_growth
from .quadrature import (QuadratureConfig, QuadResult, adaptive_quad,
                         log_endpoint_quad)

_PEAK_WINDOW = 10.0        # kernel-peak half-width in units of r
_E = math.e


# --------------------------------------------------------------------
# spec
# --------------------------------------------------------------------

@dataclass(frozen=True)
class PotentialSpec:
    """Data (b, c, mu, h) of a generalized potential.

    mu and h are parametrized by v = ln(1/|t|) through `mu_v` and
    `log_h_v` (vectorized, valid for v in [ln(1/max(|b|,c)), inf]);
    this is the stable form every integrand is built from.
    """

    name: str
    b: float
    c: float
    params: dict
    mu_v: Callable = field(repr=False, compare=False)
    log_h_v: Callable = field(repr=False, compare=False)
    has_log_weight: bool = False
    integrable_at_origin: bool = True

    def __post_init__(self):
        if self.b > 0 or self.c <= 0:
            raise DomainError("need b <= 0 < c")

    # t-space views -------------------------------------------------
    def _v_of(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            return -np.log(np.abs(t))

    def mu(self, t):
        """mu(t), vectorized; mu(0) is the v -> inf limit."""
        out = self.mu_v(self._v_of(t))
        return float(out) if np.ndim(out) == 0 else out

    def h(self, t):
        """h(t), vectorized (may be +inf at t = 0 for singular weights)."""
        out = np.exp(self.log_h_v(self._v_of(t)))
        return float(out) if np.ndim(out) == 0 else out

    def weight(self, t):
        """|t|^mu(t) h(t), stable near t = 0 (0 at t = 0)."""
        v = self._v_of(self._check_range(t))
        with np.errstate(invalid="ignore"):
            out = np.exp(-self.mu_v(v) * v + self.log_h_v(v))
        out = np.where(np.isinf(v), 0.0, out)
        return float(out) if np.ndim(out) == 0 else out

    def beta(self, t):
        """Quotient-kernel weight mu(t) |t|^mu(t) h(t)."""
        w = self.weight(t)
        return self.mu(t) * w

    def nu(self, t):
        """Quotient-kernel exponent mu(t) + 2."""
        return self.mu(t) + 2.0

    def _check_range(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(np.abs(t) > max(self.c, -self.b) * (1 + 4e-16)):
            raise DomainError("t outside [b, c]")
        return t

    def to_dict(self):
        return {"name": self.name, "params": dict(self.params)}

    @staticmethod
    def from_dict(doc):
        return preset(doc["name"], **doc.get("params", {}))


def _const_mu(value):
    def mu_v(v):
        return np.full_like(np.asarray(v, dtype=float), value)
    return mu_v


def _zero_log_h(v):
    return np.zeros_like(np.asarray(v, dtype=float))


def lebesgue():
    """d = 3 cusp potential on [0, 1]: mu = 1, h = 1."""
    return PotentialSpec("lebesgue", 0.0, 1.0, {}, _const_mu(1.0),
                         _zero_log_h)


def mu2_pilot():
    """Constant-exponent pilot on [0, 1]: mu = 2, h = 1."""
    return PotentialSpec("mu2_pilot", 0.0, 1.0, {}, _const_mu(2.0),
                         _zero_log_h)


def t21_d3(eps):
    """Constant mu = 1/eps on [-1, 1], h = 1 (anisotropy eps in (0,1))."""
    if not 0 < eps < 1:
        raise DomainError("eps must be in (0, 1)")
    return PotentialSpec("t21_d3", -1.0, 1.0, {"eps": float(eps)},
                         _const_mu(1.0 / eps), _zero_log_h)


def t21_dge4(eps, alpha, d, c=None):
    """mu = (d-2)/eps, h(2t) = |t|^-1 |ln|t||^-alpha on [-c, c], d >= 4."""
    if d < 4:
        raise DomainError("this preset needs d >= 4")
    if not 0 < eps < 1:
        raise DomainError("eps must be in (0, 1)")
    hi_alpha = ((d - 2) / eps - 1.0) / (d - 3)
    if not 1.0 < alpha < hi_alpha:
        raise DomainError(f"alpha must lie in (1, {hi_alpha!r})")
    if c is None:
        c = min(0.25, 1.8 * math.exp(-alpha))
    if not 0 < c < 2 * math.exp(-alpha):
        raise DomainError("c too large for h to be decreasing on (0, c]")

    ln2 = math.log(2.0)

    def log_h_v(v):
        # h(t) = (2/|t|) |ln(|t|/2)|^-alpha ; v = ln(1/|t|)
        v = np.asarray(v, dtype=float)
        return ln2 + v - alpha * np.log(v + ln2)

    return PotentialSpec("t21_dge4", -c, c,
                         {"eps": float(eps), "alpha": float(alpha),
                          "d": int(d), "c": float(c)},
                         _const_mu((d - 2) / eps), log_h_v,
                         has_log_weight=True)


def t23_d3(c=math.exp(-2.0)):
    """mu(t) = 1 + 1/ln|ln|t||, h = 1 on [-c, c]; needs c < 1/e."""
    if not 0 < c < math.exp(-1.0):
        raise DomainError("c must be in (0, 1/e)")

    def mu_v(v):
        v = np.asarray(v, dtype=float)
        with np.errstate(divide="ignore"):
            out = 1.0 + 1.0 / np.log(v)
        return np.where(np.isinf(v), 1.0, out)

    return PotentialSpec("t23_d3", -c, c, {"c": float(c)}, mu_v,
                         _zero_log_h, has_log_weight=True)


_T23_DGE4_C_MAX = math.exp(-math.exp(math.e))   # mu monotone window


def t23_dge4(gamma, d, c=1e-7):
    """mu = d-2 + gamma(d-3) lnlnln/lnln, iterated-log h, tiny c."""
    if d < 4:
        raise DomainError("this preset needs d >= 4")
    if gamma <= 1:
        raise DomainError("gamma must exceed 1")
    if not 0 < c <= _T23_DGE4_C_MAX:
        raise DomainError(
            f"c must be in (0, {_T23_DGE4_C_MAX:.3e}] for mu to be "
            "nondecreasing on (0, c]")
    ln2 = math.log(2.0)

    def mu_v(v):
        v = np.asarray(v, dtype=float)
        lv = np.log(v)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (d - 2.0) + gamma * (d - 3.0) * np.log(lv) / lv
        return np.where(np.isinf(v), float(d - 2), out)

    def log_h_v(v):
        # h(t) = (2/|t|) |ln(|t|/2)|^-1 (ln|ln(|t|/2)|)^-2
        v = np.asarray(v, dtype=float)
        u = v + ln2
        return ln2 + v - np.log(u) - 2.0 * np.log(np.log(u))

    return PotentialSpec("t23_dge4", -c, c,
                         {"gamma": float(gamma), "d": int(d), "c": float(c)},
                         mu_v, log_h_v, has_log_weight=True)


def l71(mu0, gamma, c=0.25):
    """Constant mu, h(t) = |t|^-1 |ln|t||^-gamma on [-c, c]."""
    if mu0 < 1:
        raise DomainError("mu0 must be >= 1")
    if gamma <= 1:
        raise DomainError("gamma must exceed 1")
    if not 0 < c < 1:
        raise DomainError("c must be in (0, 1)")

    def log_h_v(v):
        v = np.asarray(v, dtype=float)
        return v - gamma * np.log(v)

    return PotentialSpec("l71", -c, c,
                         {"mu0": float(mu0), "gamma": float(gamma),
                          "c": float(c)},
                         _const_mu(float(mu0)), log_h_v,
                         has_log_weight=True)


_PRESETS = {
    "lebesgue": lebesgue,
    "mu2_pilot": mu2_pilot,
    "t21_d3": t21_d3,
    "t21_dge4": t21_dge4,
    "t23_d3": t23_d3,
    "t23_dge4": t23_dge4,
    "l71": l71,
}


def preset(name, **params):
    """Look up a named preset; validates integrability on construction."""
    try:
        factory = _PRESETS[name]
    except KeyError:
        raise DomainError(f"unknown preset {name!r}; "
                          f"known: {sorted(_PRESETS)}") from None
    spec = factory(**params)
    _validate_integrability(spec)
    return spec


def _validate_integrability(spec, q=None):
    # int_b^c |t|^mu h dt < inf, checked numerically
    q = q or QuadratureConfig(abs_tol=1e-8, rel_tol=1e-8)
    try:
        total = _weight_mass(spec, q)
    except Exception as exc:   # noqa: BLE001 - construction-time gate
        raise EvaluationError(f"weight of {spec.name!r} is not "
                              f"integrable: {exc}") from exc
    if not math.isfinite(total.value):
        raise EvaluationError(f"weight of {spec.name!r} is not integrable")
    return total


def _weight_mass(spec, q):
    def fv(v):
        v = np.asarray(v, dtype=float)
        return np.exp(-(spec.mu_v(v) + 1.0) * v + spec.log_h_v(v))

    total = log_endpoint_quad(fv, spec.c, q)
    if spec.b < 0:
        total = total + log_endpoint_quad(fv, -spec.b, q)
    return total


# --------------------------------------------------------------------
# integrand assembly
# --------------------------------------------------------------------

def _parts_fn(spec, shift, extra):
    """Returns parts(v) -> (ln of weight incl. extra, kernel power p)."""
    mu_v, log_h_v = spec.mu_v, spec.log_h_v

    def parts(v):
        mu = mu_v(v)
        lw = -mu * v + log_h_v(v)
        if extra == "mu":
            lw = lw + np.log(mu)
        elif extra == "mu2":
            lw = lw + 2.0 * np.log(mu)
        return lw, 0.5 * mu + shift

    return parts


def _v_of_t(t):
    with np.errstate(divide="ignore"):
        return -np.log(np.abs(t))


def _sub_cfg(q, pieces):
    return QuadratureConfig(q.abs_tol / pieces, q.rel_tol,
                            q.max_subdivisions, q.singularity_split)


def _route_origin(spec, q, extra):
    """u(0, 0) = int h(t) (x extra) dt; defined when h is integrable."""
    if not spec.integrable_at_origin:
        raise SingularPointError(f"{spec.name}: h is not integrable at 0")

    def fv(v):
        v = np.asarray(v, dtype=float)
        lw = spec.log_h_v(v) - v
        if extra == "mu":
            lw = lw + np.log(spec.mu_v(v))
        elif extra == "mu2":
            lw = lw + 2.0 * np.log(spec.mu_v(v))
        return np.exp(lw)

    total = log_endpoint_quad(fv, spec.c, _sub_cfg(q, 2))
    if spec.b < 0:
        total = total + log_endpoint_quad(fv, -spec.b, _sub_cfg(q, 2))
    return total


def _route_t_space(parts, x, r, lo, hi, q, log_sub):
    """Plain t-space integration when the kernel peak misses [lo, hi]."""
    pieces = []
    r2 = r * r

    def f_t(t):
        t = np.asarray(t, dtype=float)
        lw, p = parts(_v_of_t(t))
        dxt = t - x
        with np.errstate(divide="ignore"):
            logD = np.log(dxt * dxt + r2)
        out = np.exp(lw - p * logD)
        return np.where(t == 0.0, 0.0, out)

    def fv_side(sigma):
        def fv(v):
            v = np.asarray(v, dtype=float)
            lw, p = parts(v)
            t = sigma * np.exp(-v)
            dxt = t - x
            logD = np.log(dxt * dxt + r2)
            return np.exp(lw - v - p * logD)
        return fv

    jobs = []
    if lo < 0.0 < hi:
        jobs.append((lo, 0.0, -1.0))
        jobs.append((0.0, hi, +1.0))
    elif hi <= 0.0:
        jobs.append((lo, hi, -1.0))
    else:
        jobs.append((lo, hi, +1.0))

    n_pieces = sum(2 if (a == 0.0 or b == 0.0) and log_sub else 1
                   for a, b, _ in jobs)
    cfg = _sub_cfg(q, max(n_pieces, 1))
    for a, b, sigma in jobs:
        touches_zero = (a == 0.0 or b == 0.0)
        if touches_zero and log_sub:
            edge = max(abs(a), abs(b))
            z = 0.5 * edge
            pieces.append(log_endpoint_quad(fv_side(sigma), z, cfg))
            rest = (z, edge) if sigma > 0 else (-edge, -z)
            pieces.append(adaptive_quad(f_t, rest[0], rest[1], cfg))
        else:
            pieces.append(adaptive_quad(f_t, a, b, cfg))
    return sum(pieces, QuadResult(0.0, 0.0, 0))


def _route_peak(parts, x, r, lo, hi, q):
    """Kernel-peak route: t = x + r s, wings in w = ln|s|."""
    ln_r = math.log(r)
    S = _PEAK_WINDOW

    def f_s(s):
        s = np.asarray(s, dtype=float)
        t = x + r * s
        lw, p = parts(_v_of_t(t))
        val = np.exp(lw + ln_r - p * (2.0 * ln_r + np.log1p(s * s)))
        return np.where(t == 0.0, 0.0, val)

    def f_w(sigma):
        def fw(w):
            w = np.asarray(w, dtype=float)
            t = x + sigma * np.exp(ln_r + w)
            lw, p = parts(_v_of_t(t))
            logD = 2.0 * ln_r + 2.0 * w + np.log1p(np.exp(-2.0 * w))
            val = np.exp(lw + ln_r + w - p * logD)
            return np.where(t == 0.0, 0.0, val)
        return fw

    # central block and wings, all bounds formed in log space
    s_lo_clip = -S if (x - lo) > S * r else (lo - x) / r
    s_hi_clip = S if (hi - x) > S * r else (hi - x) / r

    jobs = []
    if s_hi_clip > s_lo_clip:
        brk = []
        if lo < 0.0 < hi and abs(x) <= S * r:
            s0 = -x / r
            if s_lo_clip < s0 < s_hi_clip:
                brk.append(s0)
        jobs.append(("s", s_lo_clip, s_hi_clip, None, brk))
    if (hi - x) > S * r:
        w_end = math.log(hi - x) - ln_r
        brk = []
        if x < 0.0 < hi and abs(x) > S * r:
            w0 = math.log(-x) - ln_r
            if math.log(S) < w0 < w_end:
                brk.append(w0)
        jobs.append(("w", math.log(S), w_end, +1.0, brk))
    if (x - lo) > S * r:
        w_end = math.log(x - lo) - ln_r
        brk = []
        if lo < 0.0 < x and abs(x) > S * r:
            w0 = math.log(x) - ln_r
            if math.log(S) < w0 < w_end:
                brk.append(w0)
        jobs.append(("w", math.log(S), w_end, -1.0, brk))

    cfg = _sub_cfg(q, max(len(jobs), 1))
    total = QuadResult(0.0, 0.0, 0)
    for kind, a, b, sigma, brk in jobs:
        f = f_s if kind == "s" else f_w(sigma)
        total = total + adaptive_quad(f, a, b, cfg, breakpoints=brk)
    return total


def _route_interior_singular(spec, parts, x, r, lo, hi, q, shift):
    """r = 0 with x inside (lo, hi): integrable only if mu(x)+2*shift < 1."""
    mu_x = float(spec.mu(x))
    if mu_x + 2.0 * shift >= 1.0:
        raise SingularPointError(
            f"(x, r) = ({x!r}, 0) lies on the non-integrable singular "
            f"segment (local exponent {mu_x + 2 * shift:.3g} >= 1)")
    z = 0.5 * min(x - lo, hi - x, abs(x)) if x != 0 else 0.0
    if z <= 0:
        raise SingularPointError("cannot isolate the singular point")

    def fv_side(sigma):
        def fv(v):
            v = np.asarray(v, dtype=float)
            t = x + sigma * np.exp(-v)
            lw, p = parts(_v_of_t(t))
            return np.exp(lw - v - 2.0 * p * (-v))
        return fv

    cfg = _sub_cfg(q, 4)
    total = log_endpoint_quad(fv_side(+1.0), z, cfg)
    total = total + log_endpoint_quad(fv_side(-1.0), z, cfg)
    total = total + _route_t_space(parts, x, 0.0, lo, x - z, cfg,
                                   spec.has_log_weight)
    total = total + _route_t_space(parts, x, 0.0, x + z, hi, cfg,
                                   spec.has_log_weight)
    return total


def _integral(spec, x, r, q, lo=None, hi=None, shift=0.0, extra=None):
    """Core evaluator for int_lo^hi weight(t)*extra / D^(mu/2+shift) dt."""
    if not (math.isfinite(x) and math.isfinite(r)):
        raise DomainError("x and r must be finite")
    if r < 0:
        raise DomainError("r must be nonnegative")
    lo = spec.b if lo is None else float(lo)
    hi = spec.c if hi is None else float(hi)
    if not spec.b - 1e-15 <= lo <= hi <= spec.c + 1e-15:
        raise DomainError("integration range must sit inside [b, c]")
    if lo == hi:
        return QuadResult(0.0, 0.0, 0)
    parts = _parts_fn(spec, shift, extra)

    if r == 0.0:
        if lo <= x <= hi:
            if x == 0.0 and shift == 0.0:
                return _route_origin(spec, q, extra)
            if x == 0.0:
                raise SingularPointError(
                    "derivative kernels are non-integrable at (0, 0)")
            return _route_interior_singular(spec, parts, x, r, lo, hi, q,
                                            shift)
        return _route_t_space(parts, x, 0.0, lo, hi, q, spec.has_log_weight)

    if x + _PEAK_WINDOW * r < lo or x - _PEAK_WINDOW * r > hi:
        return _route_t_space(parts, x, r, lo, hi, q, spec.has_log_weight)
    return _route_peak(parts, x, r, lo, hi, q)


# --------------------------------------------------------------------
# public operations
# --------------------------------------------------------------------

@dataclass(frozen=True)
class PotentialValue:
    value: float
    error: float

    def __float__(self):
        return self.value


def eval_u(spec: PotentialSpec, x, r, q: QuadratureConfig | None = None,
           lo=None, hi=None) -> PotentialValue:
    """The potential u(x, r), with quadrature error estimate."""
    q = q or QuadratureConfig()
    res = _integral(spec, float(x), float(r), q, lo=lo, hi=hi)
    return PotentialValue(res.value, res.error)


def eval_omega(spec: PotentialSpec, x, r,
               q: QuadratureConfig | None = None) -> PotentialValue:
    """omega = k1/k2 off the segment; mu(x) on the segment (r = 0)."""
    q = q or QuadratureConfig()
    x, r = float(x), float(r)
    if r < 0:
        raise DomainError("r must be nonnegative")
    if r == 0.0:
        if spec.b <= x <= spec.c:
            return PotentialValue(float(spec.mu(x)), 0.0)
        raise DomainError("omega(x, 0) is defined only for x in [b, c]")
    k1 = _integral(spec, x, r, q, shift=1.0, extra="mu2")
    k2 = _integral(spec, x, r, q, shift=1.0, extra="mu")
    if k2.value <= 0 or k2.error > 0.1 * abs(k2.value):
        raise DivisionInstability(
            f"k2 = {k2.value:.6g} +- {k2.error:.2g} is too uncertain")
    val = k1.value / k2.value
    err = (k1.error + abs(val) * k2.error) / abs(k2.value)
    return PotentialValue(val, err)


@dataclass(frozen=True)
class DerivativeValues:
    u_r: float
    u_xx_plus_u_rr: float
    u_r_error: float
    u_xx_plus_u_rr_error: float


def eval_derivatives(spec: PotentialSpec, x, r,
                     q: QuadratureConfig | None = None) -> DerivativeValues:
    """The derivative integrals u_r and u_xx + u_rr at r > 0."""
    q = q or QuadratureConfig()
    x, r = float(x), float(r)
    if r <= 0:
        raise DomainError("derivative integrals need r > 0")
    k2 = _integral(spec, x, r, q, shift=1.0, extra="mu")
    k1 = _integral(spec, x, r, q, shift=1.0, extra="mu2")
    return DerivativeValues(-r * k2.value, k1.value,
                            r * k2.error, k1.error)


@dataclass(frozen=True)
class ResidualValue:
    value: float
    error_budget: float

    def __float__(self):
        return self.value


def pde_residual(spec: PotentialSpec, x, r,
                 q: QuadratureConfig | None = None) -> ResidualValue:
    """u_xx + u_rr + (omega/r) u_r, which vanishes analytically.

    omega is evaluated at 10x tighter tolerance than the derivative
    integrals so the quotient does not cancel float-identically; the
    returned value measures true quadrature error and must stay within
    the combined error budget.
    """
    q = q or QuadratureConfig()
    x, r = float(x), float(r)
    if r <= 0:
        raise DomainError("the PDE residual is defined for r > 0")
    d = eval_derivatives(spec, x, r, q)
    om = eval_omega(spec, x, r, q.tightened(10.0))
    val = d.u_xx_plus_u_rr + om.value / r * d.u_r
    budget = (d.u_xx_plus_u_rr_error + abs(om.value) / r * d.u_r_error
              + abs(d.u_r) / r * om.error)
    return ResidualValue(val, budget)


@dataclass(frozen=True)
class SplitU:
    u1: float
    u2: float
    u1_error: float
    u2_error: float

    @property
    def total(self):
        return self.u1 + self.u2


def split_u(spec: PotentialSpec, x, r,
            q: QuadratureConfig | None = None) -> SplitU:
    """Split u into the inner integral over [-2|x|, 2|x|] and the rest."""
    q = q or QuadratureConfig()
    x, r = float(x), float(r)
    if spec.b != -spec.c:
        raise DomainError("split_u needs a symmetric spec (b = -c)")
    ax = abs(x)
    if 2.0 * ax > spec.c:
        raise DomainError("need 2|x| <= c for the split")
    if ax == 0.0:
        u = eval_u(spec, 0.0, r, q)
        return SplitU(0.0, u.value, 0.0, u.error)
    inner = _integral(spec, x, r, q, lo=-2 * ax, hi=2 * ax)
    left = _integral(spec, x, r, q, lo=spec.b, hi=-2 * ax)
    right = _integral(spec, x, r, q, lo=2 * ax, hi=spec.c)
    return SplitU(inner.value, left.value + right.value,
                  inner.error, left.error + right.error)


@dataclass(frozen=True)
class SpineDerivative:
    """Components of x |ln x|^gamma * d/dx [u2(x, r(x))].

    boundary_scaled carries the two kernel boundary terms under the
    x |ln x|^gamma scaling of the limit statement; tail_scaled the
    interior integral. boundary_scaled_ln2x carries instead the
    x |ln 2x|^gamma scaling that the terms themselves produce, whose
    limit is exactly -2^mu (1 + 3^-mu) up to O((r/x)^2).
    """

    x: float
    total_scaled: float
    boundary_scaled: float
    tail_scaled: float
    boundary_scaled_ln2x: float
    tail_error: float


def u2_spine_derivative(spec: PotentialSpec, profile, x,
                        q: QuadratureConfig | None = None) -> SpineDerivative:
    """Derivative of the outer split along the spine r = r(x), scaled."""
    from .errors import HypothesisError

    q = q or QuadratureConfig()
    x = float(x)
    if spec.name != "l71":
        raise DomainError("the spine derivative is defined for the "
                          "constant-mu log-weight (l71) preset")
    mu = spec.params["mu0"]
    gamma = spec.params["gamma"]
    c = spec.c
    if not 0 < x <= 0.5 * c:
        raise DomainError("need 0 < x <= c/2")
    r = float(profile(x))
    rp = float(profile.derivative(x))
    if abs(rp) > 1.0:
        raise HypothesisError(f"|r'(x)| = {abs(rp):.3g} > 1 at x = {x!r}")
    if r > 0.5 * x:
        raise HypothesisError(f"r(x) = {r!r} is not o(x) at x = {x!r}")

    lnx = math.log(x)
    ln2x = math.log(2.0 * x)
    qq = r / x
    # boundary terms of d/dx u2, from the moving limits at t = +-2x
    b1 = -math.exp(mu * math.log(2.0) - lnx
                   - 0.5 * mu * math.log1p(qq * qq)
                   - gamma * math.log(abs(ln2x)))
    b2 = -math.exp(mu * math.log(2.0) - lnx
                   - 0.5 * mu * math.log1p(qq * qq / 9.0)
                   - mu * math.log(3.0) - gamma * math.log(abs(ln2x)))
    scale = math.exp(lnx + gamma * math.log(abs(lnx)))
    scale_2x = math.exp(lnx + gamma * math.log(abs(ln2x)))

    # interior term g(x): kernel-differentiated integral over [2x, c]
    # and [-c, -2x], integrated in v = ln(1/|t|)
    rrp = r * rp

    def g_side(sigma):
        def gv(v):
            v = np.asarray(v, dtype=float)
            t = sigma * np.exp(-v)
            dxt = t - x
            num = dxt - rrp
            logw = -(mu - 1.0) * v - gamma * np.log(v)
            logk = -(1.0 + 0.5 * mu) * np.log(dxt * dxt + r * r)
            return mu * num * np.exp(logw + logk - v)
        lo_v = math.log(1.0 / c)
        hi_v = math.log(1.0 / (2.0 * x))
        return adaptive_quad(gv, lo_v, hi_v, _sub_cfg(q, 2))

    g_right = g_side(+1.0)
    g_left = g_side(-1.0)
    g_total = g_right.value + g_left.value
    tail_err = (g_right.error + g_left.error) * scale

    return SpineDerivative(
        x=x,
        total_scaled=scale * (b1 + b2 + g_total),
        boundary_scaled=scale * (b1 + b2),
        tail_scaled=scale * g_total,
        boundary_scaled_ln2x=scale_2x * (b1 + b2),
        tail_error=tail_err,
    )


def u2_derivative_limit(mu):
    """Analytic x -> 0 limit of the scaled spine derivative.

    Boundary terms tend to -2^mu (1 + 3^-mu); the interior integral to
    (2^mu - 1) - (1 - (2/3)^mu); the sum collapses to -2 for every mu.
    """
    boundary = -(2.0 ** mu) * (1.0 + 3.0 ** (-mu))
    tail = (2.0 ** mu - 1.0) - (1.0 - (2.0 / 3.0) ** mu)
    return boundary + tail


def lebesgue_asymptotic_gap(x1, r, q: QuadratureConfig | None = None,
                            spec: PotentialSpec | None = None):
    """u(x1, r) - [1 + 2 x1 ln(1/r)] for the d = 3 cusp potential.

    Along r = e^{-eps/x1} the gap tends to 0 and u itself to 1 + 2 eps.
    """
    q = q or QuadratureConfig()
    x1, r = float(x1), float(r)
    if x1 <= 0 or r <= 0:
        raise DomainError("need x1 > 0 and r > 0")
    spec = spec or lebesgue()
    u = eval_u(spec, x1, r, q)
    return PotentialValue(u.value - (1.0 + 2.0 * x1 * math.log(1.0 / r)),
                          u.error)


def verify_weight_conditions(spec: PotentialSpec,
                             q: QuadratureConfig | None = None,
                             n_probe=24):
    """Check int beta < inf and int beta |t|^-nu = inf numerically.

    Returns a dict with the finite mass of beta and the growth fit of
    the divergence probe for the second condition.
    """
    q = q or QuadratureConfig(abs_tol=1e-9, rel_tol=1e-9)

    def fv_beta(v):
        v = np.asarray(v, dtype=float)
        mu = spec.mu_v(v)
        return np.exp(np.log(mu) - (mu + 1.0) * v + spec.log_h_v(v))

    mass = log_endpoint_quad(fv_beta, spec.c, q)
    if spec.b < 0:
        mass = mass + log_endpoint_quad(fv_beta, -spec.b, q)

    # partial integrals of beta |t|^-nu over [delta, c]
    def f_div(t):
        t = np.asarray(t, dtype=float)
        v = _v_of_t(t)
        mu = spec.mu_v(v)
        return np.exp(np.log(mu) + 2.0 * v + spec.log_h_v(v))

    deltas = spec.c * 0.5 ** np.arange(1, n_probe + 1)
    partials = []
    acc = QuadResult(0.0, 0.0, 0)
    prev = spec.c
    for d in deltas:
        acc = acc + adaptive_quad(f_div, d, prev, q)
        partials.append(acc.value)
        prev = d
    fit = classify_growth(deltas, np.asarray(partials))
    return {"beta_mass": mass.value, "beta_mass_error": mass.error,
            "divergence_fit": fit}


def eval_grid(spec: PotentialSpec, points, quantity="u",
              q: QuadratureConfig | None = None):
    """Evaluate u / omega / residual on (x, r) points; CSV-ready rows."""
    q = q or QuadratureConfig()
    rows = []
    for x, r in points:
        if quantity == "u":
            val = eval_u(spec, x, r, q)
            rows.append((float(x), float(r), val.value, val.error))
        elif quantity == "omega":
            val = eval_omega(spec, x, r, q)
            rows.append((float(x), float(r), val.value, val.error))
        elif quantity == "residual":
            val = pde_residual(spec, x, r, q)
            rows.append((float(x), float(r), val.value, val.error_budget))
        else:
            raise DomainError(f"unknown quantity {quantity!r}")
    return rows


# memoized omega evaluation for operator fields -----------------------

class OmegaMemo:
    """Thread-safe omega(x, r) cache on a rounded (x, r) grid."""

    def __init__(self, spec, q=None, grid=1e-6):
        self.spec = spec
        self.q = q or QuadratureConfig(abs_tol=1e-9, rel_tol=1e-9)
        self.grid = grid
        self._lock = threading.Lock()
        self._cache = {}

    def __call__(self, x, r):
        key = (round(float(x) / self.grid), round(float(r) / self.grid))
        with self._lock:
            hit = self._cache.get(key)
        if hit is not None:
            return hit
        xr, rr = key[0] * self.grid, key[1] * self.grid
        if rr <= 0.0:
            rr = 0.0
            xr = min(max(xr, self.spec.b), self.spec.c)
        val = eval_omega(self.spec, xr, rr, self.q).value
        with self._lock:
            self._cache[key] = val
        return val
