"""Constructors for the initial-data families.

Families:

* C^k family: lambda (f1(r) + f2(N^{1/2}(r-1)+1) sum_k sin(Nk a)/(N^2 k^3))
  with f1 carrying the angular-velocity cancellation at r = 1 (first and
  second radial derivatives of v_alpha(f1)/r vanish there), arranged by a
  2x2 solve over two far bumps.
* H^beta family: rescaled profile g(l1 r)/(l2 l1^{beta-1}) with prescribed
  differential-rotation strength, plus a thin shell normalized in L2.
* layered odd-odd data sum_j c f(b^-j r) b^j sin(2a)/j.
* the anisotropically sheared oscillatory packet at the origin.

Desk-scale caps: K <= 64, J <= 4, N <= 1024, lambda1 <= 1e4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels as kn
from . import radial as rd
from .spectral import Grid2D, ScalarField

DESK_CAPS = {"K": 64, "J": 4, "N": 1024, "lambda1": 1.0e4}

_GRID_SIZES = (64, 96, 128, 192, 256, 320, 384, 448, 512, 640, 768, 896,
               1024, 1152, 1280, 1536, 1792, 2048, 2304, 2560, 3072, 3584,
               4096, 5120, 6144, 8192)


def round_grid_n(n):
    for s in _GRID_SIZES:
        if s >= n:
            return s
    raise ValueError(f"needed grid n={n} exceeds desk scale")


@dataclass
class BumpSpec:
    support: tuple
    plateau: tuple = None       # sub-interval where value == 1
    slope_plateau: tuple = None  # sub-interval where derivative == 1
    amplitude: float = 1.0


def build_bump(spec):
    """C-infinity profile realizing the spec (value or slope plateau)."""
    a, b = spec.support
    if a >= b:
        raise ValueError("support must be an increasing interval")
    if spec.plateau is not None:
        lo, hi = spec.plateau
        if not (a < lo < hi < b):
            raise ValueError("plateau must sit inside the open support")
        p = rd.plateau_bump(a, lo, hi, b)
        return rd.scale_profile(p, spec.amplitude) if spec.amplitude != 1.0 else p
    if spec.slope_plateau is not None:
        lo, hi = spec.slope_plateau
        if not (a < lo < hi < b):
            raise ValueError("slope plateau must sit inside the open support")
        if (lo, hi) != (0.75, 1.25) or (a, b) != (0.54, 1.46):
            raise ValueError("slope-1 profile is built on (0.54,1.46)/(3/4,5/4)")
        return rd.slope_one_profile()
    return rd.bump(a, b, spec.amplitude)


# ---------------------------------------------------------------------------
# C^k profile pair with the angular-velocity cancellation
# ---------------------------------------------------------------------------

@dataclass
class CkProfilePair:
    f1: rd.RadialProfile
    f1_inner: rd.RadialProfile
    f2: rd.RadialProfile
    correction_coeffs: tuple
    cancellation_residuals: tuple
    w_scale: float
    style: str = "near"

    @property
    def outer_support(self):
        return self.f1.support[1]


# correction-bump placements: (center, sharpness) pairs per style.
# "far" puts both correctors well outside the unit annulus (weak levers,
# large amplitudes -> strong rotation, stiff CFL); "near" flanks the
# plateau inside (1/2,3/2) with opposite-sign second-derivative levers
# (small amplitudes, solver-friendly).  Both zero the same derivatives.
_CORRECTION_CANDIDATES = {
    "far": [((1.8, 2.0), (2.3, 2.0)), ((1.8, 2.0), (2.35, 2.0)),
            ((1.75, 2.0), (2.25, 2.0)), ((1.85, 2.0), (2.4, 2.0))],
    "near": [((1.38, 5.0), (0.62, 5.0)), ((1.42, 6.0), (0.64, 6.0)),
             ((1.36, 6.0), (0.62, 5.0)), ((1.38, 5.0), (0.64, 6.0))],
}


def _correction_bump(center, n1=2.0):
    """f_{n1,n2}(r) = n1 h(n1 (r - n2)) with h a unit-mass mollifier bump."""
    h = rd.unit_mass_bump(0.0, 0.5)
    return rd.RadialProfile(
        fn=lambda r: n1 * h.fn(n1 * (np.asarray(r) - center)),
        d1=lambda r: n1 * n1 * h.d1(n1 * (np.asarray(r) - center)),
        d2=lambda r: n1 ** 3 * h.d2(n1 * (np.asarray(r) - center)),
        support=(center - 0.5 / n1, center + 0.5 / n1),
        label=f"far_bump@{center:g}",
    )


def _w_derivs(profile, order):
    return kn.d_dr_v_alpha_over_r(profile, 1.0, order, route="kernel").value


_F1_CACHE = {}


def build_f1_ck(style="near"):
    """Inner slope-1 profile plus a two-bump correction that zeroes the
    first and second radial derivatives of v_alpha(f1)/r at r = 1.

    The correction coefficients solve a 2x2 system assembled from the
    kernel-route derivatives of the two bumps; candidate placements are
    retried if the system is ill-conditioned or residuals stay large.
    """
    if style in _F1_CACHE:
        return _F1_CACHE[style]
    inner = rd.slope_one_profile()
    # inner profile covers r=1: stencil differences of the assembled W
    w1_in = kn.d_dr_v_alpha_over_r(inner, 1.0, 1).value
    w2_in = kn.d_dr_v_alpha_over_r(inner, 1.0, 2).value
    last_err = None
    for (m1, n1a), (m2, n1b) in _CORRECTION_CANDIDATES[style]:
        o1, o2 = _correction_bump(m1, n1a), _correction_bump(m2, n1b)
        M = np.array([[_w_derivs(o1, 1), _w_derivs(o2, 1)],
                      [_w_derivs(o1, 2), _w_derivs(o2, 2)]])
        if np.linalg.cond(M) > 1e6:
            last_err = f"ill-conditioned correction system at {(m1, m2)}"
            continue
        coeffs = np.linalg.solve(M, -np.array([w1_in, w2_in]))
        f1 = rd.sum_profiles([inner,
                              rd.scale_profile(o1, coeffs[0]),
                              rd.scale_profile(o2, coeffs[1])])
        r1 = kn.d_dr_v_alpha_over_r(f1, 1.0, 1).value
        r2 = kn.d_dr_v_alpha_over_r(f1, 1.0, 2).value
        scale = abs(kn.v_alpha_of_radial(f1, 1.0).value) + abs(w1_in)
        if max(abs(r1), abs(r2)) < 1e-4 * scale:
            f2 = rd.plateau_bump(0.55, 0.75, 1.25, 1.45)
            pair = CkProfilePair(f1, inner, f2, tuple(coeffs), (r1, r2),
                                 scale, style)
            _F1_CACHE[style] = pair
            return pair
        last_err = f"residuals {(r1, r2)} too large at {(m1, m2)}"
    raise kn.QuadratureError(f"cancellation solve failed: {last_err}")


ENVELOPE_CELLS = 24  # grid cells across the N^(-1/2) shell envelope


def ck_grid(N, K, box=None, n=None, outer_radius=2.65):
    """Grid resolving the C^k family at mode count N*K.

    Two constraints: >= 8 points per angular wavelength 2 pi r/(N K), and
    >= ENVELOPE_CELLS cells across the squeezed radial envelope (the
    mollifier's spectral tail, not the oscillation, limits accuracy at
    moderate N).
    """
    if box is None:
        box = 4.0 * 2.0 * outer_radius
    r_min = 1.0 - 1.0 / math.sqrt(max(N, 4))
    wavelength = 2.0 * math.pi * r_min / (N * K)
    env_width = 0.9 / math.sqrt(N)
    need = max(int(math.ceil(8.0 * box / wavelength)),
               int(math.ceil(ENVELOPE_CELLS * box / env_width)))
    return Grid2D(round_grid_n(need) if n is None else n, box)


def ck_osc_grid(N, K, box=12.0, n=None):
    """Grid for the oscillatory part alone (perturbation-form solver and
    residual work): the radial background is handled in closed form, so
    the box only needs to pad the shell."""
    return ck_grid(N, K, box=box, n=n)


def build_ck_initial(pair, lam, K, N, k_order=2, grid=None):
    """The t = 0 field of the C^k family on a padded grid."""
    if K > DESK_CAPS["K"] or N > DESK_CAPS["N"]:
        raise ValueError("desk-scale caps exceeded")
    if k_order not in (2, 3, 4):
        raise ValueError("k_order must be 2, 3 or 4")
    if grid is None:
        grid = ck_grid(N, K, outer_radius=pair.outer_support)
    r, alpha = grid.polar()
    shell = rd.shift_to_unit(pair.f2, math.sqrt(N))
    vals = pair.f1(r).astype(float)
    env = shell(r)
    osc = np.zeros_like(vals)
    for k in range(1, K + 1):
        phase = 0.0 if k_order == 2 else -0.5 * math.pi * k
        osc += np.sin(N * k * alpha + phase) / (N ** k_order * k ** (k_order + 1))
    vals = lam * (vals + env * osc)
    support_radius = pair.outer_support
    wl = 2.0 * math.pi * (1.0 - 1.0 / math.sqrt(N)) / (N * K)
    fld = ScalarField(grid, vals, support_radius, min_wavelength=wl)
    return fld


# ---------------------------------------------------------------------------
# H^beta profiles
# ---------------------------------------------------------------------------

@dataclass
class HsProfileTriple:
    f1cK: rd.RadialProfile
    f2cK: rd.RadialProfile
    r_cK: float
    epsilon: float
    beta: float
    c: float
    K: float
    lambda1: float
    lambda2: float
    hbeta_measured: float
    stretch_measured: float


_HS_BASE = {}


def _hs_base_profile():
    """Far bump normalized so d(v_alpha/r)/dr at r = 1 equals exactly 1."""
    if "g" not in _HS_BASE:
        g0 = _correction_bump(2.5, n1=2.0)  # support (2.25, 2.75)
        a = _w_derivs(g0, 1)
        _HS_BASE["g"] = rd.scale_profile(g0, 1.0 / a)
    return _HS_BASE["g"]


def hs_rescaled(lambda1, lambda2, beta):
    g = _hs_base_profile()
    return rd.rescale_argument(g, lambda1,
                               amplitude=1.0 / (lambda2 * lambda1 ** (beta - 1.0)))


def build_hs_profiles(beta, c, K):
    """Profile triple with ||f1||_{H^beta} <= c and differential rotation
    of strength >= K/(2 r) across the shell radius r_cK."""
    if not 1.5 < beta < 2.0:
        raise ValueError("beta must lie in (3/2, 2)")
    g = _hs_base_profile()
    h_base = kn_radial_hbeta(g, beta)
    lambda2 = 1.05 * h_base / c
    lambda1 = max(1.0, (K * lambda2) ** (1.0 / (2.0 - beta)) * 1.05)
    if lambda1 > DESK_CAPS["lambda1"]:
        raise ValueError(f"lambda1 = {lambda1:.3g} beyond the desk-scale cap")
    f1 = hs_rescaled(lambda1, lambda2, beta)
    r_ck = 1.0 / lambda1
    h_meas = kn_radial_hbeta(f1, beta)
    if h_meas > c:
        lambda2 *= 1.05 * h_meas / c
        f1 = hs_rescaled(lambda1, lambda2, beta)
        h_meas = kn_radial_hbeta(f1, beta)

    def stretch(rr):
        return kn.d_dr_v_alpha_over_r(f1, rr, 1, route="kernel").value

    s_mid = stretch(r_ck)
    target = K / (2.0 * r_ck)
    if abs(s_mid) < target:
        raise kn.QuadratureError(
            f"stretch {s_mid:.3g} below target {target:.3g} after scaling")
    # bisect the largest epsilon on which the condition holds throughout
    lo, hi = 0.0, 0.45 * r_ck
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        rr = np.linspace(r_ck - mid, r_ck + mid, 7)
        ok = all(abs(stretch(x)) >= K / (2.0 * x) for x in rr)
        if ok:
            lo = mid
        else:
            hi = mid
    eps = lo
    if eps <= 0.0:
        raise kn.QuadratureError("no interval satisfies the stretch condition")
    shell = rd.bump(r_ck - eps, r_ck + eps)
    l2 = _radial_l2(shell)
    f2 = rd.scale_profile(shell, c / l2)
    return HsProfileTriple(f1, f2, r_ck, eps, beta, c, K,
                           lambda1, lambda2, h_meas, s_mid)


def kn_radial_hbeta(profile, beta):
    from .norms import radial_sobolev_norm
    return radial_sobolev_norm(profile, beta)


def _radial_l2(profile):
    """2D L2 norm of the radial field profile(r)."""
    return math.sqrt(rd.profile_integral(lambda_sq(profile),
                                         weight=lambda r: 2.0 * math.pi * r))


def lambda_sq(profile):
    return rd.RadialProfile(
        fn=lambda r: profile.fn(r) ** 2,
        d1=lambda r: 2.0 * profile.fn(r) * profile.d1(r),
        d2=lambda r: 2.0 * (profile.d1(r) ** 2 + profile.fn(r) * profile.d2(r)),
        support=profile.support,
        label=f"({profile.label})^2",
    )


def build_hs_grid_family(beta, stretch, c_shell=1.0):
    """Grid-feasible member of the H^beta family, mapped to the unit annulus.

    The lambda-scaled construction of ``build_hs_profiles`` concentrates at
    radius 1/lambda1, which is out of reach of a padded grid once the
    angular wavenumber N/r_cK matters.  Velocity scale invariance makes the
    source and growth exponents identical across the scaling orbit, so grid
    experiments use this member: shell at r = 1, differential rotation of
    prescribed strength from a disjoint outer profile.
    """
    if not 1.5 < beta < 2.0:
        raise ValueError("beta must lie in (3/2, 2)")
    outer = rd.bump(1.3, 2.2)
    a = kn.d_dr_v_alpha_over_r(outer, 1.0, 1, route="kernel").value
    f1 = rd.scale_profile(outer, stretch / a)
    shell = rd.bump(0.9, 1.1)
    f2 = rd.scale_profile(shell, c_shell / _radial_l2(shell))
    return HsProfileTriple(f1, f2, 1.0, 0.1, beta, c_shell, 2.0 * stretch,
                           1.0, 1.0,
                           kn_radial_hbeta(f1, beta), stretch)


def hs_grid(triple, N, box=None, t_shear=0.0):
    """Grid resolving the H^beta family, optionally at sheared time."""
    r_lo = triple.r_cK - triple.epsilon
    k_ang = N / r_lo
    # 2x margin: the differential rotation near the shell edges exceeds
    # the center value used as the nominal stretch
    k_rad = 2.0 * N * abs(triple.stretch_measured) * t_shear
    k_max = math.hypot(k_ang, k_rad)
    if box is None:
        box = 4.0 * 2.0 * triple.f1cK.support[1]
    need = int(math.ceil(8.0 * box * k_max / (2.0 * math.pi)))
    return Grid2D(round_grid_n(need), box)


def build_hs_initial(triple, N, grid=None):
    if grid is None:
        grid = hs_grid(triple, N)
    r, alpha = grid.polar()
    vals = triple.f1cK(r) + (triple.f2cK(r) * triple.r_cK ** triple.beta
                             * np.sin(N * alpha) / N ** triple.beta)
    wl = 2.0 * math.pi * (triple.r_cK - triple.epsilon) / N
    return ScalarField(grid, vals, triple.f1cK.support[1], min_wavelength=wl)


# ---------------------------------------------------------------------------
# layered critical data
# ---------------------------------------------------------------------------

@dataclass
class LayeredSpec:
    c: float
    J: int
    b: float
    f: rd.RadialProfile = None
    h4_normalized: bool = True
    ctilde: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.b < 0.5:
            raise ValueError("b must lie in (0, 1/2)")
        if not 0 <= self.J <= DESK_CAPS["J"]:
            raise ValueError(f"J must lie in [0, {DESK_CAPS['J']}]")
        if self.f is None:
            self.f = layer_base_profile()

    @property
    def admissible(self):
        """c < 1/(Ctilde t0)-type label, recorded with t0 = 1."""
        return self.c < 1.0 / self.ctilde

    def layer_profiles(self):
        return [rd.rescale_argument(self.f, self.b ** (-j),
                                    amplitude=self.c * self.b ** j / j)
                for j in range(1, self.J + 1)]


_LAYER_BASE = {}


def layer_base_profile():
    """Positive bump on [1/2, 3/2] with ||f(r) sin(2a)||_{H^4} = 1.

    The H^4 normalization is measured once on a reference grid with the
    derivative-sum convention and cached.
    """
    if "f" not in _LAYER_BASE:
        base = rd.bump(0.5, 1.5)
        h4 = _h4_of_sin2a(base)
        _LAYER_BASE["f"] = rd.scale_profile(base, 1.0 / h4)
    return _LAYER_BASE["f"]


def _h4_of_sin2a(profile):
    from . import norms
    grid = Grid2D(1024, 12.0)
    r, alpha = grid.polar()
    fld = ScalarField(grid, profile(r) * np.sin(2.0 * alpha), 1.5,
                      min_wavelength=profile.width)
    return norms.derivative_sum_norm(fld, 4)


def build_layered(spec, grid=None, min_cells=32):
    """Odd-odd layered field; the innermost layer must span >= min_cells."""
    layers = spec.layer_profiles()
    if spec.J == 0:
        grid = grid or Grid2D(256, 3.0)
        return ScalarField(grid, np.zeros((grid.n, grid.n)), spec.b)
    if grid is None:
        outer = 1.5 * spec.b
        box = 4.0 * 2.0 * outer
        need = box / (spec.b ** spec.J * spec.f.width) * min_cells
        grid = Grid2D(round_grid_n(int(math.ceil(need))), box)
    inner_width = spec.b ** spec.J * spec.f.width
    if inner_width < min_cells * grid.dx * (1 - 1e-12):
        raise ValueError(
            f"innermost layer spans {inner_width / grid.dx:.1f} cells "
            f"(need >= {min_cells}); max feasible J on this grid: "
            f"{_max_feasible_j(spec, grid, min_cells)}")
    r, alpha = grid.polar()
    vals = np.zeros_like(r)
    for p in layers:
        vals += p(r)
    vals *= np.sin(2.0 * alpha)
    return ScalarField(grid, vals, 1.5 * spec.b,
                       min_wavelength=inner_width)


def _max_feasible_j(spec, grid, min_cells):
    j = 0
    while spec.b ** (j + 1) * spec.f.width >= min_cells * grid.dx:
        j += 1
    return j


# ---------------------------------------------------------------------------
# critical perturbation packet
# ---------------------------------------------------------------------------

_PACKET_BASE = {}


def _unit_l2_1d_bump():
    if "g" not in _PACKET_BASE:
        x = np.linspace(-1.0, 1.0, 20001)
        m = rd._mollifier(x)
        nrm = math.sqrt(np.trapezoid(m * m, x))
        _PACKET_BASE["g"] = (lambda s: rd._mollifier(s) / nrm, 1.0 / nrm)
    return _PACKET_BASE["g"]


def build_critical_perturbation(c0, N, G=0.0, grid=None):
    """Sheared oscillatory packet (c0/4) g1(e^G N^{1/2} x1) g2(e^-G N^{1/2} x2)
    sin(e^G N x1) / N^{3/2} with unit-L2 profiles g1 = g2."""
    g, _ = _unit_l2_1d_bump()
    eg = math.exp(G)
    root = math.sqrt(N)
    if grid is None:
        wl = 2.0 * math.pi / (eg * N)
        radius = math.sqrt(2.0) * max(1.0 / (eg * root), eg / root)
        box = 4.0 * 2.0 * radius
        grid = Grid2D(round_grid_n(int(math.ceil(8.0 * box / wl))), box)
    x1, x2 = grid.meshgrid()
    vals = (0.25 * c0 * g(eg * root * x1) * g(root * x2 / eg)
            * np.sin(eg * N * x1) / N ** 1.5)
    return ScalarField(grid, vals, math.sqrt(2.0) * max(1.0 / (eg * root), eg / root),
                       min_wavelength=2.0 * math.pi / (eg * N))


# ---------------------------------------------------------------------------
# translated families
# ---------------------------------------------------------------------------

@dataclass
class TranslationLayout:
    offsets: list
    separations: list


def apply_translation_layout(fields, layout):
    """Superpose x1-translates; offsets snap to grid cells, overlap rejected."""
    if len(fields) != len(layout.offsets):
        raise ValueError("one offset per field required")
    grid = fields[0].grid
    vals = np.zeros((grid.n, grid.n))
    intervals = []
    for fld, off in zip(fields, layout.offsets):
        if fld.grid is not grid and (fld.grid.n != grid.n
                                     or fld.grid.box_length != grid.box_length):
            raise ValueError("fields must share one grid")
        cells = int(round(off / grid.dx))
        intervals.append((off - fld.support_radius, off + fld.support_radius))
        vals += np.roll(fld.values, -cells, axis=0)
    intervals.sort()
    for (a0, b0), (a1, b1), sep in zip(intervals[:-1], intervals[1:],
                                       layout.separations):
        if a1 - b0 < sep:
            raise ValueError(f"supports separated by {a1 - b0:.3g} < {sep:.3g}")
    radius = max(abs(v) for iv in intervals for v in iv)
    wls = [f.min_wavelength for f in fields if f.min_wavelength]
    return ScalarField(grid, vals, radius,
                       min_wavelength=min(wls) if wls else None)
