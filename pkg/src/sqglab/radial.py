"""Smooth compactly supported radial profiles with analytic derivatives.

Every C-infinity bump in the package is an affine image / product /
antiderivative of the canonical mollifier

    m(s) = exp(1 - 1/(1 - s^2))   for |s| < 1,   0 otherwise,

normalized so m(0) = 1.  Keeping everything in this family gives exact
first and second derivatives for the smoothness certificates and exact
zeros outside declared supports.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline


def _mollifier(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    si = s[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - si * si))
    return out


def _mollifier_d1(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    si = s[inside]
    q = 1.0 - si * si
    out[inside] = np.exp(1.0 - 1.0 / q) * (-2.0 * si / q**2)
    return out


def _mollifier_d2(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    si = s[inside]
    q = 1.0 - si * si
    g = -2.0 * si / q**2
    gp = -2.0 / q**2 - 8.0 * si * si / q**3
    out[inside] = np.exp(1.0 - 1.0 / q) * (g * g + gp)
    return out


@dataclass
class RadialProfile:
    """r -> g(r) with analytic g', g'' and exact support [a, b]."""

    fn: callable
    d1: callable
    d2: callable
    support: tuple
    label: str = ""
    certificate: tuple = field(default=None)
    components: list = None  # summands, when built by sum_profiles

    def __post_init__(self):
        if self.certificate is None:
            r = np.linspace(self.support[0], self.support[1], 4001)
            self.certificate = (
                float(np.max(np.abs(self.fn(r)))),
                float(np.max(np.abs(self.d1(r)))),
                float(np.max(np.abs(self.d2(r)))),
            )

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        a, b = self.support
        inside = (r > a) & (r < b)
        out[inside] = self.fn(r[inside])
        return out

    def deriv(self, r, order=1):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        a, b = self.support
        inside = (r > a) & (r < b)
        out[inside] = (self.d1, self.d2)[order - 1](r[inside])
        return out

    @property
    def width(self):
        return self.support[1] - self.support[0]


def bump(a, b, amplitude=1.0):
    """Mollifier bump supported on (a, b), peak value `amplitude`."""
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    s = lambda r: (np.asarray(r) - mid) / half
    return RadialProfile(
        fn=lambda r: amplitude * _mollifier(s(r)),
        d1=lambda r: amplitude * _mollifier_d1(s(r)) / half,
        d2=lambda r: amplitude * _mollifier_d2(s(r)) / half**2,
        support=(a, b),
        label=f"bump({a:g},{b:g})x{amplitude:g}",
    )


def unit_mass_bump(center, halfwidth):
    """Positive bump with integral exactly 1 (the f_{n1,n2} family shape)."""
    base = bump(center - halfwidth, center + halfwidth)
    r = _gl_nodes(center - halfwidth, center + halfwidth, 64)
    mass = float(np.dot(r[1], base(r[0])))
    return scale_profile(base, 1.0 / mass)


def scale_profile(p, factor):
    comps = ([scale_profile(c, factor) for c in p.components]
             if p.components else None)
    return RadialProfile(
        fn=lambda r: factor * p.fn(r),
        d1=lambda r: factor * p.d1(r),
        d2=lambda r: factor * p.d2(r),
        support=p.support,
        label=f"{factor:g}*{p.label}",
        components=comps,
    )


def sum_profiles(profiles):
    lo = min(p.support[0] for p in profiles)
    hi = max(p.support[1] for p in profiles)
    return RadialProfile(
        fn=lambda r: sum(p(r) for p in profiles),
        d1=lambda r: sum(p.deriv(r, 1) for p in profiles),
        d2=lambda r: sum(p.deriv(r, 2) for p in profiles),
        support=(lo, hi),
        label="+".join(p.label for p in profiles),
        components=list(profiles),
    )


def rescale_argument(p, lam, amplitude=1.0):
    """r -> amplitude * p(lam * r); support shrinks by 1/lam."""
    return RadialProfile(
        fn=lambda r: amplitude * p.fn(lam * np.asarray(r)),
        d1=lambda r: amplitude * lam * p.d1(lam * np.asarray(r)),
        d2=lambda r: amplitude * lam**2 * p.d2(lam * np.asarray(r)),
        support=(p.support[0] / lam, p.support[1] / lam),
        label=f"{p.label}({lam:g}r)x{amplitude:g}",
    )


def shift_to_unit(p, scale):
    """r -> p(scale*(r-1) + 1): the N^(1/2)-squeeze onto the unit circle."""
    a, b = p.support
    return RadialProfile(
        fn=lambda r: p.fn(scale * (np.asarray(r) - 1.0) + 1.0),
        d1=lambda r: scale * p.d1(scale * (np.asarray(r) - 1.0) + 1.0),
        d2=lambda r: scale**2 * p.d2(scale * (np.asarray(r) - 1.0) + 1.0),
        support=((a - 1.0) / scale + 1.0, (b - 1.0) / scale + 1.0),
        label=f"{p.label}@squeeze{scale:g}",
    )


def plateau_bump(a, rise, fall, b):
    """C-inf bump = 1 exactly on [rise, fall], supported on (a, b).

    Product of two mollifier ramps; the plateau value is exactly 1 because
    each ramp is a normalized cumulative integral of a mollifier.
    """
    up = _ramp(a, rise)
    down = _ramp(b, fall)  # decreasing
    return RadialProfile(
        fn=lambda r: up.fn(r) * down.fn(r),
        d1=lambda r: up.d1(r) * down.fn(r) + up.fn(r) * down.d1(r),
        d2=lambda r: (up.d2(r) * down.fn(r) + 2.0 * up.d1(r) * down.d1(r)
                      + up.fn(r) * down.d2(r)),
        support=(a, b),
        label=f"plateau({a:g},{rise:g},{fall:g},{b:g})",
    )


_RAMP_GRID = np.linspace(-1.0, 1.0, 2049)
_RAMP_CDF = None


def _ramp_cdf():
    global _RAMP_CDF
    if _RAMP_CDF is None:
        # dense Simpson cumulative of the mollifier, normalized to 1
        vals = _mollifier(_RAMP_GRID)
        h = _RAMP_GRID[1] - _RAMP_GRID[0]
        cum = np.zeros_like(vals)
        cum[1:] = np.cumsum(0.5 * h * (vals[1:] + vals[:-1]))
        mid = _mollifier(0.5 * (_RAMP_GRID[1:] + _RAMP_GRID[:-1]))
        cum[1:] += np.cumsum(h * (mid - 0.5 * (vals[1:] + vals[:-1]))) * (2.0 / 3.0)
        cum /= cum[-1]
        _RAMP_CDF = CubicSpline(_RAMP_GRID, cum)
    return _RAMP_CDF


def _ramp(zero_at, one_at):
    """Smooth monotone transition: exactly 0 at zero_at, exactly 1 at one_at."""
    cdf = _ramp_cdf()
    span = one_at - zero_at

    def to_s(r):
        return np.clip((np.asarray(r, dtype=float) - zero_at) / span * 2.0 - 1.0,
                       -1.0, 1.0)

    norm = _mollifier  # density of the cdf

    return RadialProfile(
        fn=lambda r: cdf(to_s(r)),
        d1=lambda r: _cdf_d1(to_s(r)) * (2.0 / span),
        d2=lambda r: _cdf_d2(to_s(r)) * (2.0 / span)**2,
        support=(min(zero_at, one_at) - 1e-300, max(zero_at, one_at)),
        label=f"ramp({zero_at:g}->{one_at:g})",
        certificate=(1.0, 2.0 / abs(span), 8.0 / span**2),
    )


_RAMP_NORM = None


def _ramp_norm():
    global _RAMP_NORM
    if _RAMP_NORM is None:
        r = _gl_nodes(-1.0, 1.0, 256)
        _RAMP_NORM = float(np.dot(r[1], _mollifier(r[0])))
    return _RAMP_NORM


def _cdf_d1(s):
    return _mollifier(s) / _ramp_norm()


def _cdf_d2(s):
    return _mollifier_d1(s) / _ramp_norm()


def slope_one_profile():
    """C-inf profile on (0.54, 1.46) with derivative exactly 1 on (3/4, 5/4).

    Built as the antiderivative of s(u) - A w(u) where s is a plateau bump
    equal to 1 on (3/4, 5/4) and w is a far-side bump absorbing the area so
    the profile returns to zero at the right support edge.
    """
    s = plateau_bump(0.54, 0.75, 1.25, 1.44)
    g = _gl_nodes(0.54, 1.44, 512)
    area_s = float(np.dot(g[1], s(g[0])))
    w = unit_mass_bump(1.37, 0.068)
    deriv = lambda r: s(r) - area_s * w(r)
    deriv_d1 = lambda r: s.deriv(r, 1) - area_s * w.deriv(r, 1)
    return antiderivative_profile(deriv, deriv_d1, (0.54, 1.46))


def antiderivative_profile(deriv, deriv_d1, support, npts=8193):
    """Profile g with g' = deriv, g(support[0]) = 0; deriv must integrate to 0."""
    a, b = support
    r = np.linspace(a, b, npts)
    h = r[1] - r[0]
    vals = deriv(r)
    mids = deriv(0.5 * (r[1:] + r[:-1]))
    # composite Simpson cumulative
    seg = (h / 6.0) * (vals[:-1] + 4.0 * mids + vals[1:])
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    cum[-1] = 0.0  # deriv integrates to 0 by construction; pin the endpoint
    spline = CubicSpline(r, cum)
    return RadialProfile(
        fn=spline,
        d1=deriv,
        d2=deriv_d1,
        support=support,
        label="antideriv",
    )


def zero_profile():
    z = lambda r: np.zeros_like(np.asarray(r, dtype=float))
    return RadialProfile(fn=z, d1=z, d2=z, support=(1.0, 2.0), label="zero",
                         certificate=(0.0, 0.0, 0.0))


def _gl_nodes(a, b, n):
    """Gauss-Legendre nodes and weights on [a, b]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (a + b), 0.5 * (b - a) * w


def profile_integral(p, weight=None, n=96):
    """integral of p(r) * weight(r) over the support (per-panel GL)."""
    a, b = p.support
    total = 0.0
    edges = np.linspace(a, b, 17)
    for lo, hi in zip(edges[:-1], edges[1:]):
        r, w = _gl_nodes(lo, hi, n)
        f = p(r)
        if weight is not None:
            f = f * weight(r)
        total += float(np.dot(w, f))
    return total
