"""Principal-value quadrature of the polar velocity integrals.

Conventions (fixed package-wide, see README):

* velocity kernel  v(x) = -(1/2pi) PV int (x-y)^perp theta(y) / |x-y|^3 dy,
  matching the spectral module's Fourier symbols exactly;
* ``compute_I_Nn`` evaluates the bare oscillatory double integral

      I_{N,n} = int int sin(h2) h2 / (h1^2 + h2^2)^{3/2} dh1 dh2

  over the rescaled window [-2nN^{1/2}, 2nN^{1/2}] x [-Nn pi, Nn pi]
  (no 1/2pi, so its limit C0 is a positive pure number, close to 2 pi);
* the constant multiplying cos(Nn alpha) g(r) in the radial velocity of a
  thin oscillatory shell is, in this package's normalization,

      c0_radial = -C0 / (2 pi)          (close to -1).

The two section-specific constants are never conflated: ``C0_SECTION4``
is the quadrant-integral prefactor 3/pi of the origin strain rate.

All integrals use period-aligned panels for the oscillatory direction,
symmetric node pairing across the singularity, dyadic panel stacks toward
singular points, and compensated summation; ``error_indicator`` is always
the difference between the last two refinement levels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import ellipe, ellipkm1

from ._backend import rowsums_pow32, weighted_total
from .radial import RadialProfile, _gl_nodes, profile_integral

TWO_PI = 2.0 * math.pi
# quadrant-integral prefactor of the origin strain rate d v1/d x1 (0)
C0_SECTION4 = 3.0 / math.pi

MAX_OSCILLATION = 10_000  # cap on N*n


class QuadratureError(RuntimeError):
    pass


class ConvergenceError(QuadratureError):
    """Refinement failed to shrink the error indicator."""


@dataclass
class KernelEstimate:
    value: float
    error_indicator: float
    panels_used: int

    def __float__(self):
        return self.value


@lru_cache(maxsize=64)
def _gl(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def _split_edges(edges, times):
    """Insert panel midpoints `times` times (nested refinement)."""
    edges = np.asarray(edges, dtype=float)
    for _ in range(times):
        mids = 0.5 * (edges[:-1] + edges[1:])
        edges = np.sort(np.concatenate([edges, mids]))
    return edges


def _panel_nodes(edges, order):
    """GL nodes/weights on consecutive [edges[i], edges[i+1]] panels."""
    x, w = _gl(order)
    lo = edges[:-1]
    hi = edges[1:]
    mid = 0.5 * (lo + hi)[:, None]
    half = 0.5 * (hi - lo)[:, None]
    nodes = (mid + half * x[None, :]).ravel()
    weights = (half * w[None, :]).ravel()
    return nodes, weights


def _dyadic_stack(a, b, depth, towards, n_outer=0):
    """Panel edges on [a,b], halving toward `towards` in {'a','b'}.

    With n_outer > 0 the coarse half farthest from the singular end is
    subdivided into n_outer uniform panels (dyadic stacks alone leave one
    panel spanning half the interval, too wide for structured profiles).
    """
    steps = (b - a) * 2.0 ** (-np.arange(1, depth + 1, dtype=float))
    if towards == "a":
        edges = np.concatenate([[a], a + steps[::-1], [b]])
    else:
        edges = np.concatenate([[a], np.sort(b - steps), [b]])
    if n_outer > 1:
        if towards == "a":
            uni = np.linspace(a + 0.25 * (b - a), b, n_outer + 1)
        else:
            uni = np.linspace(a, b - 0.25 * (b - a), n_outer + 1)
        edges = np.unique(np.concatenate([edges, uni]))
    return edges


# ---------------------------------------------------------------------------
# radial velocity of oscillatory shells: v_r(g(r) trig(Nn alpha + phase))
# ---------------------------------------------------------------------------

def _u_scheme(nn, level):
    """Angular nodes on (0, pi]: dyadic stack inside the first half-period,
    then one GL panel per half-period of sin(nn*u).

    Levels refine by nested midpoint splits of the dyadic stack plus a GL
    order bump everywhere; the half-period panels stay aligned so the
    oscillation phase structure is preserved at every level.
    """
    gl = (8, 10, 12)[level]
    first = math.pi / nn
    # drop the leading edge at exactly 0 (integrand vanishes like u^2 there,
    # the first dyadic panel starts at first*2^-26)
    edges0 = _split_edges(_dyadic_stack(0.0, first, 26, "a", n_outer=4)[1:], level)
    n0, w0 = _panel_nodes(edges0, gl)
    if nn > 1:
        edges1 = first * np.arange(1, nn + 1, dtype=float)
        n1, w1 = _panel_nodes(edges1, gl)
        return np.concatenate([n0, n1]), np.concatenate([w0, w1]), edges0.size + edges1.size - 2
    return n0, w0, edges0.size - 1


def _radial_scheme(support, r, level):
    """Radial panel nodes over the profile support, refined toward r inside.

    Nested: levels split every panel at its midpoint and bump the GL order.
    The dyadic floor (excluded sliver around r) is level-independent so the
    refinement indicator measures quadrature error, not domain truncation.
    """
    gl = (10, 12, 14)[level]
    depth = 28
    base = 10
    a, b = support
    margin = 1e-9 * (b - a)
    if a + margin < r < b - margin:
        left = _dyadic_stack(a, r, depth, "b", n_outer=base)
        right = _dyadic_stack(r, b, depth, "a", n_outer=base)
        edges = np.concatenate([left[:-1], [r], right[1:]])
        # remove the two panels abutting r closer than the dyadic floor
        edges = edges[np.abs(edges - r) > (b - a) * 2.0 ** -(depth + 1) * 0.5]
    else:
        edges = np.linspace(a, b, base + 1)
        if abs(r - a) < 0.25 * (b - a) and r <= a:
            edges = np.unique(np.concatenate([edges, a + (b - a) * 2.0 ** (-np.arange(1, 12.0))]))
        if abs(r - b) < 0.25 * (b - a) and r >= b:
            edges = np.unique(np.concatenate([edges, b - (b - a) * 2.0 ** (-np.arange(1, 12.0))]))
    edges = _split_edges(edges, level)
    return _panel_nodes(edges, gl) + (edges.size - 1,)


def _vr_level(g, nn, r, level):
    u, uw, pu = _u_scheme(nn, level)
    rp, rw, pr = _radial_scheme(g.support, r, level)
    gv = g(rp)
    keep = gv != 0.0
    rp, rw, gv = rp[keep], rw[keep], gv[keep]
    if rp.size == 0:
        return 0.0, pu + pr
    a = (r - rp) ** 2
    b = 2.0 * r * rp
    c = 2.0 * np.sin(0.5 * u) ** 2  # 1 - cos(u), safe for tiny u
    v = uw * np.sin(u) * np.sin(nn * u)
    rows = rowsums_pow32(np.ascontiguousarray(a), np.ascontiguousarray(b),
                         np.ascontiguousarray(c), np.ascontiguousarray(v))
    total = weighted_total(np.ascontiguousarray(rw * gv * rp**2), rows)
    # even in u (doubling) and the package kernel constant -(1/2pi)
    return -total / math.pi, pu + pr


def _refine(level_fn, label, floor=1e-7):
    """Run nested refinement levels and package the result.

    The indicator must shrink by >= 2x per level unless it is already below
    the convergence floor (1e-7 relative + 1e-12 absolute, well under the
    1e-4 relative contract of every estimate).
    """
    v0, p0 = level_fn(0)
    v1, p1 = level_fn(1)
    ind1 = abs(v1 - v0)
    if ind1 <= floor * abs(v1) + 1e-12:
        return KernelEstimate(v1, ind1, p0 + p1)
    v2, p2 = level_fn(2)
    ind2 = abs(v2 - v1)
    if ind2 > 0.5 * ind1 and ind2 > floor * abs(v2) + 1e-12:
        raise ConvergenceError(
            f"{label}: refinement indicator not shrinking "
            f"({ind1:.3e} -> {ind2:.3e}, value {v2:.6e})")
    return KernelEstimate(v2, ind2, p0 + p1 + p2)


def vr_shell_profile(g, N, n, r):
    """V(r) with v_r(g(r) sin(Nn a + p))(r, a) = cos(Nn a + p) V(r).

    The alpha dependence is analytic (odd terms cancel in the PV pairing),
    so the quadrature reduces to this radial profile.
    """
    nn = N * n
    if nn > MAX_OSCILLATION:
        raise QuadratureError(f"N*n = {nn} exceeds cap {MAX_OSCILLATION}")
    if nn < 1:
        raise QuadratureError("N*n must be >= 1")
    if r <= 0:
        raise QuadratureError("r must be positive")
    return _refine(lambda lv: _vr_level(g, nn, r, lv), f"vr_exact(r={r:g}, Nn={nn})")


def vr_exact_quadrature(g, N, n, phase, r, alpha, mode="sin"):
    """PV radial velocity at (r, alpha) for theta = g(r) trig(Nn alpha + phase)."""
    prof = vr_shell_profile(g, N, n, r)
    arg = N * n * alpha + phase
    factor = math.cos(arg) if mode == "sin" else -math.sin(arg)
    return KernelEstimate(factor * prof.value,
                          abs(factor) * prof.error_indicator + 1e-300,
                          prof.panels_used)


def _vr_simplified_level(g, nn, r, level):
    u, uw, pu = _u_scheme(nn, level)
    ga, gb = g.support
    rp, rw, pr = _radial_scheme((ga, gb), r, level)
    gv = g(rp)
    keep = gv != 0.0
    rp, rw, gv = rp[keep], rw[keep], gv[keep]
    if rp.size == 0:
        return 0.0, pu + pr
    h = rp - r
    a = h * h
    b = np.full_like(a, r * r)
    c = u * u
    v = uw * u * np.sin(nn * u)
    rows = rowsums_pow32(np.ascontiguousarray(a), b, np.ascontiguousarray(c),
                         np.ascontiguousarray(v))
    total = weighted_total(np.ascontiguousarray(rw * gv), rows)
    return -(r * r / math.pi) * total, pu + pr


def vr_simplified_integral(g, N, n, r):
    """Flat-kernel approximation of the shell radial velocity.

    Same normalization as ``vr_shell_profile``: the two agree up to
    O(||g||_inf N^{-1/2}), which is the measurable content of the
    flat-kernel approximation lemma.
    """
    nn = N * n
    if nn > MAX_OSCILLATION:
        raise QuadratureError(f"N*n = {nn} exceeds cap {MAX_OSCILLATION}")
    return _refine(lambda lv: _vr_simplified_level(g, nn, r, lv),
                   f"vr_simplified(r={r:g}, Nn={nn})")


# ---------------------------------------------------------------------------
# the oscillatory constant: I_{N,n} and C0
# ---------------------------------------------------------------------------

def _inn_level(N, n, level):
    glh2 = (16, 20, 24)[level]
    glh1 = (12, 14, 16)[level]
    depth = 22
    A = 2.0 * n * math.sqrt(N)
    B = N * n * math.pi
    # h2: dyadic panels inside [0, 2pi] toward 0, then one panel per 2pi period
    e0 = _split_edges(_dyadic_stack(0.0, TWO_PI, depth, "a", n_outer=6)[1:], level)
    periods = TWO_PI * np.arange(1, int(B / TWO_PI) + 1, dtype=float)
    if periods.size and abs(periods[-1] - B) > 1e-12:
        periods = np.concatenate([periods, [B]])
    h2, w2 = _panel_nodes(np.concatenate([e0, periods]), glh2)
    # h1: dyadic toward 0 then geometric panels to A
    grow = [min(2.0**k, A) for k in range(30) if 2.0 ** (k - 1) < A]
    e1 = np.unique(np.concatenate([_dyadic_stack(0.0, 1.0, depth, "a", n_outer=6)[1:], grow]))
    e1 = _split_edges(e1, level)
    h1, w1 = _panel_nodes(e1, glh1)
    a = h1 * h1
    b = np.ones_like(a)
    c = h2 * h2
    v = w2 * np.sin(h2) * h2
    rows = rowsums_pow32(np.ascontiguousarray(a), b, np.ascontiguousarray(c),
                         np.ascontiguousarray(v))
    total = weighted_total(np.ascontiguousarray(w1), rows)
    return 4.0 * total, e0.size + periods.size + e1.size


def compute_I_Nn(N, n):
    """The oscillatory double integral over the proof's rescaled window.

    Positive for all desk-scale N; Cauchy in N at rate N^{-1/2}; the limit
    is independent of n.  Paper-normalized: no kernel constant attached.
    """
    if N * n > MAX_OSCILLATION:
        raise QuadratureError(f"N*n = {N * n} exceeds cap {MAX_OSCILLATION}")
    return _refine(lambda lv: _inn_level(N, n, lv), f"I({N},{n})")


_C0_CACHE = {}


def estimate_C0(n_values=(1, 2, 3), N_values=(64, 128, 256, 512)):
    """Richardson extrapolation of I_{N,n} assuming N^{-1/2} convergence.

    Returns (C0, uncertainty); the uncertainty is the cross-n spread of the
    extrapolated limits.  Fails if the spread exceeds 5%.
    """
    key = (tuple(n_values), tuple(N_values))
    if key in _C0_CACHE:
        return _C0_CACHE[key]
    s2 = math.sqrt(2.0)
    limits = []
    for n in n_values:
        I_hi = compute_I_Nn(N_values[-1], n).value
        I_lo = compute_I_Nn(N_values[-2], n).value
        limits.append((s2 * I_hi - I_lo) / (s2 - 1.0))
    c0 = float(np.mean(limits))
    spread = float(np.ptp(limits))
    if spread > 0.05 * abs(c0):
        raise ConvergenceError(
            f"C0 extrapolation unreliable: cross-n spread {spread:.3e} "
            f"vs value {c0:.3e}")
    _C0_CACHE[key] = (c0, spread)
    return c0, spread


def c0_radial(c0=None):
    """Coefficient of cos(Nn alpha) g(r) in v_r of a thin shell,
    in this package's velocity normalization: -C0 / (2 pi)."""
    if c0 is None:
        c0 = estimate_C0()[0]
    return -c0 / TWO_PI


# ---------------------------------------------------------------------------
# shell-velocity model error (the N^{-1/2} approximation law)
# ---------------------------------------------------------------------------

def lemma_aproxfinal_error(g, N, n, samples, c0=None, mode="sin"):
    """max over samples of |v_r(shell) - c0_radial trig'(Nn a) g(r)|.

    ``samples`` are (r, alpha) pairs inside the near zone
    r in (1 - N^{-1/2}, 1 + N^{-1/2}).  The profile must satisfy the
    C^i certificate scaling ||g||_{C^i} <= M N^{i/2} (slack factor 16).
    """
    m0, m1, m2 = g.certificate
    M = max(m0, 1e-300)
    root = math.sqrt(N)
    # slack covers the canonical mollifier's own derivative constants
    # (max|m'| ~ 2.2, max|m''| ~ 21 per unit amplitude and width)
    if m1 > 40.0 * M * root or m2 > 400.0 * M * N:
        raise QuadratureError(
            f"profile violates C^i certificate scaling: "
            f"({m0:.3g}, {m1:.3g}, {m2:.3g}) vs M*N^(i/2) with M={M:.3g}")
    cr = c0_radial(c0)
    worst = 0.0
    for r, alpha in samples:
        if abs(r - 1.0) >= 1.0 / root:
            raise QuadratureError(f"sample r={r} outside the near zone")
        prof = vr_shell_profile(g, N, n, r).value
        arg = N * n * alpha
        if mode == "sin":
            err = abs(prof * math.cos(arg) - cr * math.cos(arg) * float(g(r)))
        else:
            err = abs(-prof * math.sin(arg) + cr * math.sin(arg) * float(g(r)))
        worst = max(worst, err)
    return worst


def far_field_decay(g, N, n, r_samples):
    """|v_r| of the shell at radii in the far zone."""
    root = math.sqrt(N)
    out = []
    for r in r_samples:
        near = abs(r - 1.0) < 1.0 / root
        far_ok = (0.5 > abs(r - 1.0) >= 1.0 / root) or r >= 1.5
        if near or not far_ok:
            raise QuadratureError(f"sample r={r} inside the near zone")
        out.append(abs(vr_shell_profile(g, N, n, r).value))
    return out


# ---------------------------------------------------------------------------
# angular velocity of radial profiles (elliptic-kernel route)
# ---------------------------------------------------------------------------

def _ellip_kernel(r, rp):
    """G(r, r') = int_0^pi (r - r' cos u) / D^{3/2} du via complete elliptic
    integrals; D = r^2 + r'^2 - 2 r r' cos u."""
    rp = np.asarray(rp, dtype=float)
    a2 = (r - rp) ** 2
    csum = r + rp
    p = a2 / csum**2          # p = 1 - m, tiny near the diagonal
    E = ellipe(1.0 - p)
    K = ellipkm1(p)           # K(m) accurate as m -> 1
    # G = 2 (r-r') E/(a^2 c) + (K-E)/(r c)  with c = r+r', m = 4 r r'/c^2
    return 2.0 * (r - rp) * E / (a2 * csum) + (K - E) / (r * csum)


def _valpha_pv_offsets(hmax, level, depth=32, base=12):
    """Positive offsets (nodes, weights) of the symmetric PV stack about r;
    fixed inner floor, nested midpoint splits across levels."""
    h_edges = np.unique(np.concatenate([
        hmax * 2.0 ** (-np.arange(depth + 1, dtype=float)),
        np.linspace(0.25 * hmax, hmax, 2 * base + 1)]))
    return _panel_nodes(_split_edges(h_edges, level), (10, 12, 14)[level])


def _valpha_level(f, r, level):
    gl = (10, 12, 14)[level]
    base = 12
    a, b = f.support
    w = b - a
    total = 0.0
    npts = 0
    if a < r < b:
        hn, hw = _valpha_pv_offsets(min(r - a, b - r), level)
        # pair the two sides node-by-node: the odd 1/h part of the kernel
        # cancels inside each pair, before any accumulation
        vals = ((r + hn) * _ellip_kernel(r, r + hn) * f(r + hn)
                + (r - hn) * _ellip_kernel(r, r - hn) * f(r - hn))
        total += weighted_total(np.ascontiguousarray(hw),
                                np.ascontiguousarray(vals))
        npts += 2 * hn.size
        hmax = min(r - a, b - r)
        plains = []
        if r - hmax > a + 1e-15 * w:
            plains.append((a, r - hmax))
        if r + hmax < b - 1e-15 * w:
            plains.append((r + hmax, b))
        for lo, hi in plains:
            e = _split_edges(np.linspace(lo, hi, base + 1), level)
            rp, wq = _panel_nodes(e, gl)
            total += weighted_total(np.ascontiguousarray(wq),
                                    np.ascontiguousarray(rp * _ellip_kernel(r, rp) * f(rp)))
            npts += rp.size
    else:
        edges = np.linspace(a, b, 2 * base + 1)
        d = min(abs(r - a), abs(r - b))
        if d < w:
            toward = "a" if abs(r - a) < abs(r - b) else "b"
            edges = np.unique(np.concatenate([edges, _dyadic_stack(a, b, 14, toward)]))
        rp, wq = _panel_nodes(_split_edges(edges, level), gl)
        total += weighted_total(np.ascontiguousarray(wq),
                                np.ascontiguousarray(rp * _ellip_kernel(r, rp) * f(rp)))
        npts += rp.size
    # u-range (-pi, pi] is twice the [0, pi] kernel; constant -(1/2pi)
    return -total / math.pi, npts


def v_alpha_of_radial(f, r):
    """Angular velocity v_alpha(f)(r) of the radial scalar f.

    Uses the closed-form elliptic reduction of the angular integral and a
    principal-value pairing across r' = r; the subtracted form of the PV
    is equivalent here because the kernel integrates to zero over the
    plane (constant fields produce no velocity).  Composite profiles are
    integrated component by component (linearity), so each summand gets
    panels adapted to its own support.
    """
    if r <= 0:
        raise QuadratureError("r must be positive")
    comps = getattr(f, "components", None)
    if comps:
        parts = [v_alpha_of_radial(c, r) for c in comps]
        return KernelEstimate(sum(p.value for p in parts),
                              sum(p.error_indicator for p in parts),
                              sum(p.panels_used for p in parts))
    return _refine(lambda lv: _valpha_level(f, r, lv), f"v_alpha(r={r:g})")


def v_alpha_direct_panels(f, r, nr=800):
    """Direct 2D panel quadrature of the angular-velocity integral
    (independent cross-check of the elliptic route; slower, cruder)."""
    a, b = f.support
    u, uw = _panel_nodes(math.pi * 2.0 ** (-np.arange(30, -1.0, -1.0)), 12)
    if a < r < b:
        hmax = min(r - a, b - r)
        h_edges = hmax * 2.0 ** (-np.arange(31, dtype=float))[::-1]
        hn, hw = _panel_nodes(h_edges, 10)
        rp = np.concatenate([r + hn, r - hn,
                             np.linspace(a, r - hmax, 201)[:-1] + 0.5 * (r - hmax - a) / 200,
                             np.linspace(r + hmax, b, 201)[:-1] + 0.5 * (b - r - hmax) / 200])
        w = np.concatenate([hw, hw,
                            np.full(200, (r - hmax - a) / 200),
                            np.full(200, (b - r - hmax) / 200)])
    else:
        rp = np.linspace(a, b, nr + 1)[:-1] + 0.5 * (b - a) / nr
        w = np.full(nr, (b - a) / nr)
    fv = f(rp)
    D = ((r - rp[:, None]) ** 2 + 4.0 * r * rp[:, None] * np.sin(0.5 * u[None, :]) ** 2)
    ker = (r - rp[:, None] * np.cos(u[None, :])) / D**1.5
    inner = ker @ uw
    return -2.0 * float(np.dot(w, rp * inner * fv)) / TWO_PI


def d_dr_v_alpha_over_r(f, r, order, step=None, route="stencil"):
    """Radial derivatives of W(r) = v_alpha(f)(r)/r.

    route='stencil': central differences of W values (valid everywhere, the
    package default; steps 1e-3 / 4e-3 for orders 1 / 2, fixed by a
    step-halving sweep against quadrature noise).
    route='kernel': differentiation under the integral sign of the
    elliptic kernel; only valid with r outside supp(f).
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    if step is None:
        step = 1e-3 if order == 1 else 4e-3
    a, b = f.support

    if route == "kernel":
        if a <= r <= b:
            raise QuadratureError("kernel route requires r outside the support")
        edges = np.linspace(a, b, 25)
        d = min(abs(r - a), abs(r - b))
        if d < b - a:
            toward = "a" if abs(r - a) < abs(r - b) else "b"
            edges = np.unique(np.concatenate([edges, _dyadic_stack(a, b, 14, toward)]))
        rp, w = _panel_nodes(_split_edges(edges, 1), 12)
        fv = f(rp)
        hk = 1e-3

        def kern(rr):
            return rp * _ellip_kernel(rr, rp) / rr

        if order == 1:
            dk = (kern(r + hk) - kern(r - hk)) / (2.0 * hk)
        else:
            dk = (kern(r + hk) - 2.0 * kern(r) + kern(r - hk)) / hk**2
        val = -float(np.dot(w, dk * fv)) / math.pi
        return KernelEstimate(val, abs(val) * 1e-8 + 1e-12, rp.size)

    def W(rr):
        return v_alpha_of_radial(f, rr).value / rr

    h = step
    wm2, wm1, w0, wp1, wp2 = (W(r - 2 * h), W(r - h), W(r),
                              W(r + h), W(r + 2 * h))
    if order == 1:
        val = (wm2 - 8.0 * wm1 + 8.0 * wp1 - wp2) / (12.0 * h)
    else:
        val = (-wm2 + 16.0 * wm1 - 30.0 * w0 + 16.0 * wp1 - wp2) / (12.0 * h**2)
    return KernelEstimate(val, abs(val) * 1e-6 + 1e-12, 0)


# ---------------------------------------------------------------------------
# origin strain rate (quadrant integral)
# ---------------------------------------------------------------------------

def origin_stretch_polar(theta_fn, r_support, n_r=400, n_alpha=96):
    """d v1 / d x1 at the origin for odd-odd data given in polar form.

    theta_fn(r, alpha) vectorized; r_support = (r_min, r_max) with
    r_min > 0.  Value = -(3/pi) int int sin(2a) theta / r^2 dr da over the
    first quadrant; strictly negative for positive first-quadrant data.
    """
    r0, r1 = r_support
    if r0 <= 0:
        raise QuadratureError("support must stay away from the origin")
    # geometric radial edges resolve many-decade layered supports
    edges = np.geomspace(r0, r1, n_r + 1)
    rn, rw = _panel_nodes(edges, 12)
    an, aw = _panel_nodes(np.linspace(0.0, math.pi / 2.0, n_alpha + 1), 8)
    vals = theta_fn(rn[:, None], an[None, :])
    inner = (vals * np.sin(2.0 * an)[None, :]) @ aw
    return -C0_SECTION4 * float(np.dot(rw, inner / rn**2))


def origin_stretch_field(theta, r_cut=0.0):
    """Grid version: direct weighted sum of the quadrant integral over cells
    with r > r_cut (used for the per-shell truncated strain rates)."""
    r, alpha = theta.grid.polar()
    dA = theta.grid.dx ** 2
    mask = r > max(r_cut, 2.0 * theta.grid.dx)
    # full-plane integral of sin(2a) theta / r^2 / 4 equals the quadrant one
    s = np.sum(np.sin(2.0 * alpha[mask]) * theta.values[mask] / r[mask] ** 2) * dA
    return -C0_SECTION4 * 0.25 * s


def check_odd_odd(values, origin_offset, tol=1e-8):
    """Relative deviation from theta(-x1,x2) = theta(x1,-x2) = -theta.

    On the periodic grid the reflection through the origin cell maps index
    j to (2*o - j) mod n, i.e. a flip followed by a roll of 2*o - n + 1.
    """
    o1, o2 = origin_offset
    n1, n2 = values.shape
    a = np.roll(values[::-1, :], (2 * o1 - n1 + 1) % n1, axis=0)
    scale = np.max(np.abs(values)) or 1.0
    d1 = np.max(np.abs(values + a)) / scale
    b = np.roll(values[:, ::-1], (2 * o2 - n2 + 1) % n2, axis=1)
    d2 = np.max(np.abs(values + b)) / scale
    return max(d1, d2)


def origin_stretch(theta, enforce_symmetry=True):
    """d v1/d x1 at the origin of a gridded odd-odd field via the spectral
    derivative of the Riesz velocity (exact for the grid world)."""
    from . import spectral as sp
    if enforce_symmetry:
        dev = check_odd_odd(theta.values, theta.grid.origin_offset)
        if dev > 1e-8:
            raise QuadratureError(f"odd-odd symmetry violation {dev:.2e}")
        r, _ = theta.grid.polar()
        inner = np.abs(theta.values[r < 4 * theta.grid.dx])
        if inner.size and inner.max() > 1e-10 * (np.abs(theta.values).max() or 1.0):
            raise QuadratureError("support touches the origin")
    th = sp.to_spectral(theta)
    k1, k2 = theta.grid.wavenumbers()
    mag = np.hypot(k1, k2)
    mag[0, 0] = 1.0
    mult = (1j * k1) * (-1j * k2 / mag)
    mult[0, 0] = 0.0
    g = sp._irfft2(th.coefficients * mult, (theta.grid.n, theta.grid.n))
    o1, o2 = theta.grid.origin_offset
    return float(g[o1, o2])


# ---------------------------------------------------------------------------
# small utilities
# ---------------------------------------------------------------------------

def sine_integral(x, panels=64, order=12):
    """Si(x) by composite Gauss-Legendre quadrature of sin(t)/t."""
    if x == 0.0:
        return 0.0
    t, w = _panel_nodes(np.linspace(0.0, abs(x), panels + 1), order)
    val = float(np.dot(w, np.sinc(t / math.pi)))
    return math.copysign(val, x)
