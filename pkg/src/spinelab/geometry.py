"""Spine profiles and cusp domains.

A spine profile is the cusp width r(t) of the removed neighborhood of
the positive x1-axis; a cusp domain is a ball minus that neighborhood
(one-sided, or mirrored about x1 = 0 when symmetric). The origin is a
boundary point of every such domain; the whole package studies its
regularity.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, EvaluationError

_E_INV = math.exp(-1.0)


class ProfileKind(str, enum.Enum):
    EXP_SPINE = "exp_spine"            # r(t) = exp(-eps/t)
    POWER = "power"                    # r(t) = t^eta
    LOG_POWER = "log_power"            # r(t) = t |ln t|^-eta
    ITER_LOG_POWER = "iter_log_power"  # r(t) = t |ln t|^-p (ln|ln t|)^-p
    D_MINUS_3_LOG_LOG = "d_minus_3_log_log"   # alias of the above, p = 1/(d-3)
    POWER_ITER_LOG = "power_iter_log"  # r(t) = t^(1 + |ln|ln t||)
    CUSTOM = "custom"


@dataclass(frozen=True)
class SpineProfile:
    """Cusp width r(t) on [0, c], with r(0) = 0 (defined by continuity).

    `c` is the usable domain end: if the requested end exceeds the
    kind's validity threshold t0 (where iterated logarithms degenerate
    or monotonicity is lost), c is clamped to t0 and `clamped` reports
    it. Evaluation above c raises DomainError rather than silently
    extending.
    """

    kind: ProfileKind
    c: float
    params: dict = field(default_factory=dict)
    requested_c: float = None
    fn: Callable = field(default=None, repr=False, compare=False)
    dfn: Callable = field(default=None, repr=False, compare=False)

    # -------------------------------------------------- constructors
    @staticmethod
    def exp_spine(eps, c=1.0):
        if eps <= 0:
            raise DomainError("exp_spine needs eps > 0")
        return _build(ProfileKind.EXP_SPINE, {"eps": float(eps)}, c, math.inf)

    @staticmethod
    def power(eta, c=1.0):
        if eta <= 0:
            raise DomainError("power profile needs eta > 0")
        return _build(ProfileKind.POWER, {"eta": float(eta)}, c, math.inf)

    @staticmethod
    def log_power(eta, c=_E_INV):
        if eta <= 0:
            raise DomainError("log_power profile needs eta > 0")
        # |ln t| must stay >= 1 so that r <= t and the weight is monotone
        return _build(ProfileKind.LOG_POWER, {"eta": float(eta)}, c, _E_INV)

    @staticmethod
    def iter_log_power(p, c=math.exp(-2.0)):
        if p <= 0:
            raise DomainError("iter_log_power needs p > 0")
        # ln|ln t| > 0 requires t < 1/e; monotonicity and r < t hold on
        # (0, e^-2]
        return _build(ProfileKind.ITER_LOG_POWER, {"p": float(p)}, c,
                      math.exp(-2.0))

    @staticmethod
    def d_minus_3_log_log(d, c=math.exp(-2.0)):
        if d < 4:
            raise DomainError("d_minus_3_log_log needs dimension d >= 4")
        return _build(ProfileKind.D_MINUS_3_LOG_LOG,
                      {"d": int(d), "p": 1.0 / (d - 3)}, c, math.exp(-2.0))

    @staticmethod
    def power_iter_log(c=_E_INV):
        return _build(ProfileKind.POWER_ITER_LOG, {}, c, _E_INV)

    @staticmethod
    def custom(fn, c, dfn=None, t0=math.inf):
        return _build(ProfileKind.CUSTOM, {}, c, t0, fn=fn, dfn=dfn)

    # -------------------------------------------------- evaluation
    @property
    def clamped(self):
        return self.requested_c is not None and self.c < self.requested_c

    def __call__(self, t):
        return eval_profile(self, t)

    def derivative(self, t):
        """r'(t) for t in (0, c]; analytic for catalog kinds."""
        t = float(t)
        if not 0 < t <= self.c:
            raise DomainError(f"derivative needs t in (0, c]; got {t!r}")
        if self.dfn is not None:
            return float(self.dfn(t))
        if self.fn is not None:  # custom without derivative: central diff
            h = max(t * 1e-6, 1e-12)
            h = min(h, 0.5 * t, 0.5 * (self.c - t) if self.c > t else h)
            return (eval_profile(self, t + h) - eval_profile(self, t - h)) / (2 * h)
        return _CATALOG_DERIV[self.kind](t, self.params)

    def to_dict(self):
        return {"kind": self.kind.value, "c": self.c,
                "requested_c": self.requested_c,
                "params": dict(self.params)}

    @staticmethod
    def from_dict(doc):
        kind = ProfileKind(doc["kind"])
        p = doc.get("params", {})
        c = doc.get("requested_c") or doc["c"]
        if kind is ProfileKind.EXP_SPINE:
            return SpineProfile.exp_spine(p["eps"], c)
        if kind is ProfileKind.POWER:
            return SpineProfile.power(p["eta"], c)
        if kind is ProfileKind.LOG_POWER:
            return SpineProfile.log_power(p["eta"], c)
        if kind is ProfileKind.ITER_LOG_POWER:
            return SpineProfile.iter_log_power(p["p"], c)
        if kind is ProfileKind.D_MINUS_3_LOG_LOG:
            return SpineProfile.d_minus_3_log_log(p["d"], c)
        if kind is ProfileKind.POWER_ITER_LOG:
            return SpineProfile.power_iter_log(c)
        raise DomainError("custom profiles do not round-trip through documents")


def _build(kind, params, c, t0, fn=None, dfn=None):
    if c <= 0:
        raise DomainError("profile domain end c must be positive")
    eff = min(float(c), t0)
    return SpineProfile(kind=kind, c=eff, params=params,
                        requested_c=float(c), fn=fn, dfn=dfn)


def _raw_eval(profile, t):
    """Profile value on an array with 0 <= t <= c; t = 0 maps to 0."""
    p = profile.params
    out = np.zeros_like(t)
    pos = t > 0
    tp = t[pos]
    kind = profile.kind
    if kind is ProfileKind.EXP_SPINE:
        out[pos] = np.exp(-p["eps"] / tp)
    elif kind is ProfileKind.POWER:
        out[pos] = tp ** p["eta"]
    elif kind is ProfileKind.LOG_POWER:
        out[pos] = tp * np.abs(np.log(tp)) ** (-p["eta"])
    elif kind in (ProfileKind.ITER_LOG_POWER, ProfileKind.D_MINUS_3_LOG_LOG):
        u = np.abs(np.log(tp))
        out[pos] = tp * (u * np.log(u)) ** (-p["p"])
    elif kind is ProfileKind.POWER_ITER_LOG:
        u = np.abs(np.log(tp))
        out[pos] = tp ** (1.0 + np.abs(np.log(u)))
    elif kind is ProfileKind.CUSTOM:
        vals = np.asarray(profile.fn(tp), dtype=float)
        if np.any(~np.isfinite(vals)) or np.any(vals < 0):
            raise EvaluationError("custom profile returned a non-finite or "
                                  "negative value")
        out[pos] = vals
    else:  # pragma: no cover
        raise DomainError(f"unknown profile kind {kind!r}")
    return out


def eval_profile(profile: SpineProfile, t):
    """r(t) for t in [0, c]; exact 0 at t = 0, DomainError outside."""
    arr = np.asarray(t, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if np.any(~np.isfinite(arr)):
        raise DomainError("profile argument must be finite")
    if np.any(arr < 0) or np.any(arr > profile.c * (1 + 4e-16)):
        raise DomainError(
            f"profile argument outside [0, {profile.c!r}]")
    out = _raw_eval(profile, np.minimum(arr, profile.c))
    if np.any(~np.isfinite(out)):
        raise EvaluationError("profile evaluation produced non-finite values")
    return float(out[0]) if scalar else out


def _d_exp(t, p):
    return math.exp(-p["eps"] / t) * p["eps"] / t ** 2


def _d_power(t, p):
    return p["eta"] * t ** (p["eta"] - 1.0)


def _d_log_power(t, p):
    u = abs(math.log(t))
    return u ** (-p["eta"]) * (1.0 + p["eta"] / u)


def _d_iter_log(t, p):
    u = abs(math.log(t))
    w = math.log(u)
    g = (u * w) ** (-p["p"])
    # d/dt [t g]: g + t g' with g' = -p g (w + 1) / (t u w) * ... chain on u
    return g * (1.0 + p["p"] * (w + 1.0) / (u * w))


def _d_power_iter_log(t, p):
    u = abs(math.log(t))
    w = math.log(u)
    val = t ** (1.0 + abs(w))
    sgn = 1.0 if w >= 0 else -1.0
    # d/dt ln r = (1 + |w|)/t + sgn(w)/t  (the ln t and 1/u factors cancel)
    return val * ((1.0 + abs(w)) + sgn) / t


_CATALOG_DERIV = {
    ProfileKind.EXP_SPINE: _d_exp,
    ProfileKind.POWER: _d_power,
    ProfileKind.LOG_POWER: _d_log_power,
    ProfileKind.ITER_LOG_POWER: _d_iter_log,
    ProfileKind.D_MINUS_3_LOG_LOG: _d_iter_log,
    ProfileKind.POWER_ITER_LOG: _d_power_iter_log,
}


def subdiagonal_limit(profile: SpineProfile, margin=1.0, n=4096):
    """Largest x <= c with r(t) < margin * t on all of (0, x], by scan.

    The d = 3 regularity criterion needs r(t) < t on the probe range;
    the blow-up lemma needs r(t) <= t/2 (margin = 0.5).
    """
    grid = np.geomspace(profile.c * 1e-9, profile.c, n)
    vals = eval_profile(profile, grid)
    bad = vals >= margin * grid
    if not np.any(bad):
        return profile.c
    first_bad = int(np.argmax(bad))
    if first_bad == 0:
        raise DomainError("profile violates r < margin*t arbitrarily near 0")
    return float(grid[first_bad - 1])


class BoundaryClass(str, enum.Enum):
    ORIGIN = "origin"
    SPINE = "spine"
    SPHERE = "sphere"
    NOT_BOUNDARY = "not_boundary"


@dataclass(frozen=True)
class CuspDomain:
    """Ball of radius c minus the spine neighborhood |x'| <= r(x1).

    Non-symmetric: the neighborhood is removed along x1 in [0, c] only
    (the negative half-space stays inside the ball). Symmetric: removed
    along |x1|, mirroring the cusp. The origin always lies on the
    boundary.
    """

    d: int
    c: float
    profile: SpineProfile
    symmetric: bool = False

    def __post_init__(self):
        if self.d < 3:
            raise DomainError("dimension must be >= 3")
        if self.c <= 0:
            raise DomainError("ball radius must be positive")

    @property
    def effective_c(self):
        """Usable ball radius; min of requested c and profile validity."""
        return min(self.c, self.profile.c)

    @property
    def radius_clamped(self):
        return self.effective_c < self.c

    def contains(self, x):
        return contains(self, x)

    def to_dict(self):
        return {"d": self.d, "c": self.c, "symmetric": self.symmetric,
                "profile": self.profile.to_dict()}

    @staticmethod
    def from_dict(doc):
        return CuspDomain(d=int(doc["d"]), c=float(doc["c"]),
                          profile=SpineProfile.from_dict(doc["profile"]),
                          symmetric=bool(doc["symmetric"]))


def _check_point(domain, x):
    x = np.asarray(x, dtype=float)
    if x.shape != (domain.d,):
        raise DomainError(f"point must be a {domain.d}-vector")
    if not np.all(np.isfinite(x)):
        raise DomainError("point coordinates must be finite")
    return x


def contains(domain: CuspDomain, x) -> bool:
    """True iff x lies in the open domain (inside ball, off the spine)."""
    x = _check_point(domain, x)
    return bool(contains_batch(domain, x[None, :])[0])


def contains_batch(domain: CuspDomain, pts):
    """Vectorized membership for an (n, d) array of points."""
    pts = np.asarray(pts, dtype=float)
    c = domain.effective_c
    norms = np.linalg.norm(pts, axis=1)
    inside = norms < c
    s = np.abs(pts[:, 0]) if domain.symmetric else pts[:, 0]
    on_spine_side = s >= 0 if not domain.symmetric else np.ones(len(pts), bool)
    check = inside & on_spine_side & (s <= c)
    if np.any(check):
        rp = np.zeros(len(pts))
        rp[check] = _raw_eval(domain.profile, np.clip(s[check], 0.0, c))
        rprime = np.linalg.norm(pts[:, 1:], axis=1)
        inside[check] &= rprime[check] > rp[check]
    return inside


def classify_boundary(domain: CuspDomain, x, tol) -> BoundaryClass:
    """Classify a point against the domain boundary within tolerance tol.

    Precedence: origin > spine > sphere. The spine test is membership
    in the removed neighborhood (within tol), so points that left the
    domain through the cusp classify as SPINE even past the surface.
    """
    if tol <= 0:
        raise DomainError("tolerance must be positive")
    x = _check_point(domain, x)
    c = domain.effective_c
    n = float(np.linalg.norm(x))
    if n <= tol:
        return BoundaryClass.ORIGIN
    s = abs(x[0]) if domain.symmetric else x[0]
    if -tol <= s <= c + tol:
        rp = float(_raw_eval(domain.profile,
                             np.array([min(max(s, 0.0), c)]))[0])
        if float(np.linalg.norm(x[1:])) <= rp + tol:
            return BoundaryClass.SPINE
    if abs(n - c) <= tol:
        return BoundaryClass.SPHERE
    return BoundaryClass.NOT_BOUNDARY
