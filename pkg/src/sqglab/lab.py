"""Experiment orchestration: the catalog of scaling laws, parameter sweeps,
slope fits and result persistence.

Every experiment row cites a law_id from LAW_CATALOG, the package's static
table of expected exponents; tolerances are declared there with a one-line
justification and are wider for solver-limited measurements than for
quadrature-limited ones.
"""

from __future__ import annotations

import json
import math
import subprocess
import time
from dataclasses import dataclass, field, asdict

import numpy as np

DESK_LIMITS = {"N": 1024, "K": 64, "J": 4, "lambda1": 1.0e4}

EXPERIMENT_IDS = ("C0_CONV", "KERNEL_APPROX", "FAR_DECAY", "SOURCE_L2",
                  "SOURCE_HI", "SOLUTION_ERROR", "CK_GROWTH", "HS_GROWTH",
                  "CRIT_STRETCH", "CRIT_PERTURB")

# law_id -> (expected exponent, tolerance, justification)
LAW_CATALOG = {
    "osc_const_cauchy": (-0.5, 0.3,
                         "window truncation of the kernel constant is "
                         "bounded by N^-1/2 (the observed decay is faster, "
                         "~N^-1 oscillatory); upper-bound check"),
    "osc_const_nindep": (-0.5, 0.3,
                         "cross-n differences of the kernel constant are "
                         "bounded by N^-1/2; upper-bound check"),
    "shell_model_err": (-0.575, 0.225,
                        "error of the cos-model for the shell radial "
                        "velocity is O(N^-1/2); acceptance band "
                        "[-0.8,-0.35]"),
    "kernel_flat_err": (-0.5, 0.3,
                        "flat-kernel approximation error is bounded by "
                        "||g|| N^-1/2 (observed decay is faster, ~N^-1); "
                        "upper-bound check"),
    "far_decay_n": (-1.5, 0.3,
                    "far-zone shell velocity is bounded by N^-3/2; the "
                    "true multipole decay is exponential, so this is "
                    "checked as an upper bound, not a fitted slope"),
    "far_decay_r": (-2.0, 0.5,
                    "far-zone shell velocity is bounded by |r-1|^-2; "
                    "upper-bound check (see far_decay_n)"),
    "source_l2_c2": (-2.75, 0.35,
                     "L2 residual of the C^2 family; acceptance requires "
                     "slope <= -2.4"),
    "source_h3_c2": (0.75, 0.35,
                     "H^3 residual of the C^2 family grows like N^(3/4)"),
    "source_h225_c2": (-0.125, 0.5,
                       "interpolated residual norm bounded by N^-1/8; "
                       "flat-within-noise accepted"),
    "source_l2_hs": (None, 0.3,
                     "L2 residual of the H^beta family decays like "
                     "N^-(2 beta - 1); expected exponent filled per beta"),
    "solution_err_l2": (-2.75, 0.75,
                        "solver-vs-evaluator L2 error at fixed time; "
                        "solver-limited, acceptance requires slope <= -2"),
    "ck_growth_lnk": (1.0, None,
                      "the localized angular second-derivative certificate "
                      "(a lower bound for 2||.||_C2) grows linearly in ln K "
                      "at the phase-aligned time; verdict by fit R^2 > 0.9. "
                      "The total C^2 norm itself is ln K-flat at desk scale "
                      "because the smooth background dominates it"),
    "hs_growth_t": (None, 0.15,
                    "H^beta norm of the sheared shell grows like t^beta; "
                    "expected exponent = beta; solver confirmation at 0.25"),
    "crit_harmonic": (1.0, 0.02,
                      "origin strain of layered data adds like the "
                      "harmonic series; measured/H_J within 2%"),
    "crit_scale_invariance": (0.0, 1e-4,
                              "origin strain is invariant under the "
                              "critical rescaling theta -> theta(lx)/l"),
    "crit_perturb_band": (1.0, 1.0,
                          "packet window-H2 growth tracks e^(2G(t)) within "
                          "a factor-2 band while the monitor conditions "
                          "hold"),
}


@dataclass
class ExperimentConfig:
    experiment_id: str
    params: dict = field(default_factory=dict)
    grid_resolution: int = None
    seed: int = 0

    def __post_init__(self):
        if self.experiment_id not in EXPERIMENT_IDS:
            raise ValueError(f"unknown experiment {self.experiment_id}")
        for key in ("N", "K", "J"):
            vals = self.params.get(key + "_values", [])
            cap = DESK_LIMITS.get(key)
            scalar = self.params.get(key)
            if cap and ((scalar and scalar > cap) or any(v > cap for v in vals)):
                raise ValueError(f"{key} beyond the desk-scale cap {cap}")

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text):
        return cls(**json.loads(text))


@dataclass
class ScalingResult:
    experiment_id: str
    law_id: str
    param_name: str
    x_values: list
    y_values: list
    fitted_slope: float
    slope_stderr: float
    expected_exponent: float
    tolerance: float
    verdict: str
    fit_kind: str = "loglog"
    extras: dict = field(default_factory=dict)
    runtime_s: float = 0.0
    grid: str = ""


def fit_slope(xs, ys):
    """Least squares slope of ln y vs ln x with residual-based stderr."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size < 3:
        raise ValueError("need at least 3 points")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ValueError("log-log fit needs positive values")
    return _linfit(np.log(xs), np.log(ys))


def _linfit(lx, ly):
    n = lx.size
    A = np.vstack([lx, np.ones(n)]).T
    coef, res, _, _ = np.linalg.lstsq(A, ly, rcond=None)
    slope = float(coef[0])
    if n > 2:
        resid = ly - A @ coef
        sxx = float(np.sum((lx - lx.mean()) ** 2))
        stderr = math.sqrt(float(np.sum(resid**2)) / (n - 2) / sxx)
    else:
        stderr = 0.0
    return slope, stderr


def linear_fit_r2(xs, ys):
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    slope, stderr = _linfit(xs, ys)
    pred = slope * (xs - xs.mean()) + ys.mean()
    ss_res = float(np.sum((ys - pred) ** 2))
    ss_tot = float(np.sum((ys - ys.mean()) ** 2)) or 1e-300
    return slope, stderr, 1.0 - ss_res / ss_tot


def verdict_for(slope, stderr, expected, tol):
    """pass iff |slope - expected| <= tol and stderr < tol/2; inconclusive
    on a noisy fit; fail otherwise."""
    if stderr >= tol / 2.0:
        return "inconclusive"
    return "pass" if abs(slope - expected) <= tol else "fail"


def make_result(experiment_id, law_id, param_name, xs, ys, fit_kind="loglog",
                expected=None, tol=None, runtime_s=0.0, grid="", extras=None):
    exp_default, tol_default, _ = LAW_CATALOG[law_id]
    expected = exp_default if expected is None else expected
    tol = tol_default if tol is None else tol
    if fit_kind == "loglog":
        slope, stderr = fit_slope(xs, ys)
        verdict = verdict_for(slope, stderr, expected, tol)
        extras = dict(extras or {})
    elif fit_kind == "linear_lnx":
        slope, stderr, r2 = linear_fit_r2(np.log(np.asarray(xs, float)), ys)
        verdict = "pass" if r2 > 0.9 else "fail"
        extras = dict(extras or {}, r2=r2)
    elif fit_kind == "ratio_band":
        lo, hi = extras["band"]
        ratios = np.asarray(ys, float) / np.asarray(extras["reference"], float)
        ok = np.all((ratios >= lo) & (ratios <= hi))
        slope, stderr = float(ratios.mean()), float(ratios.std())
        verdict = "pass" if ok else "fail"
        extras = dict(extras, ratios=list(map(float, ratios)))
    elif fit_kind == "upper_bound":
        # "decays at least like x^expected": the sequence y * x^-expected,
        # normalized by its first entry, must not grow beyond 25%
        xs_a = np.asarray(xs, float)
        ys_a = np.asarray(ys, float)
        norm = ys_a * xs_a ** (-expected)
        slope, stderr = fit_slope(xs, ys) if np.all(ys_a > 0) else (float("-inf"), 0.0)
        verdict = "pass" if np.max(norm) <= 1.25 * norm[0] else "fail"
        extras = dict(extras or {}, normalized=list(map(float, norm)))
    elif fit_kind == "max_rel_dev":
        devs = np.abs(np.asarray(ys, float) / np.asarray(extras["reference"],
                                                         float) - 1.0)
        slope, stderr = float(devs.max()), 0.0
        verdict = "pass" if devs.max() <= tol else "fail"
        extras = dict(extras, deviations=list(map(float, devs)))
    else:
        raise ValueError(fit_kind)
    return ScalingResult(experiment_id, law_id, param_name, list(xs),
                         list(ys), slope, stderr, expected, tol, verdict,
                         fit_kind, extras or {}, runtime_s, grid)


CSV_HEADER = ("experiment_id,lemma_id,param_name,param_value,measured,"
              "expected_exponent,fitted_slope,stderr,verdict,runtime_s,"
              "grid,commit,run_id")


def _commit_hash():
    try:
        return subprocess.run(["git", "rev-parse", "--short", "HEAD"],
                              capture_output=True, text=True,
                              timeout=5).stdout.strip()
    except Exception:
        return ""


def emit_results(results, path, run_id="", append=False):
    """Stable-column CSV; one row per measured point."""
    commit = _commit_hash()
    mode = "a" if append else "w"
    with open(path, mode) as fh:
        if not append:
            fh.write(CSV_HEADER + "\n")
        for r in results:
            for x, y in zip(r.x_values, r.y_values):
                fh.write(",".join([
                    r.experiment_id, r.law_id, r.param_name,
                    f"{x:.10g}", f"{y:.12g}",
                    f"{r.expected_exponent:.6g}" if r.expected_exponent is not None else "",
                    f"{r.fitted_slope:.10g}", f"{r.slope_stderr:.6g}",
                    r.verdict, f"{r.runtime_s:.3f}", r.grid, commit, run_id,
                ]) + "\n")


def read_results(path):
    rows = []
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        for line in fh:
            rows.append(dict(zip(header, line.rstrip("\n").split(","))))
    return rows


def exit_code(results):
    verdicts = {r.verdict for r in results}
    if "fail" in verdicts:
        return 1
    if "inconclusive" in verdicts:
        return 2
    return 0


# ---------------------------------------------------------------------------
# experiment implementations
# ---------------------------------------------------------------------------

def run_experiment(config):
    """Dispatch a config to its experiment; failures are data (a failed
    cell is recorded, the sweep continues)."""
    fn = _EXPERIMENTS[config.experiment_id]
    t0 = time.time()
    results = fn(config.params)
    for r in results:
        if not r.runtime_s:
            r.runtime_s = time.time() - t0
    return results


def _exp_c0(params):
    from . import kernels as kn
    Ns = params.get("N_values", [64, 128, 256, 512])
    n_modes = params.get("n_values", [1, 2, 3])
    out = []
    I1 = {N: kn.compute_I_Nn(N, 1).value for N in Ns}
    diffs = [abs(I1[b] - I1[a]) for a, b in zip(Ns[:-1], Ns[1:])]
    out.append(make_result("C0_CONV", "osc_const_cauchy", "N",
                           Ns[:-1], diffs, fit_kind="upper_bound"))
    I2 = {N: kn.compute_I_Nn(N, 2).value for N in Ns}
    nind = [abs(I1[N] - I2[N]) for N in Ns]
    out.append(make_result("C0_CONV", "osc_const_nindep", "N", Ns, nind,
                           fit_kind="upper_bound"))
    c0, spread = kn.estimate_C0(n_values=n_modes, N_values=Ns)
    res = make_result("C0_CONV", "osc_const_cauchy", "C0", [1.0, 2.0, 4.0],
                      [c0] * 3)
    res.verdict = "pass" if (c0 > 0 and spread < 0.05 * c0) else "fail"
    res.fitted_slope = c0
    res.slope_stderr = spread
    res.extras = {"C0": c0, "spread": spread}
    out.append(res)
    return out


def _shell_profile_for(N):
    from . import radial as rd
    root = math.sqrt(N)
    return rd.bump(1.0 - 0.5 / root, 1.0 + 0.5 / root)


def _exp_kernel_approx(params):
    from . import kernels as kn
    Ns = params.get("N_values", [16, 32, 64, 128])
    n_modes = params.get("n_values", [1, 2])
    out = []
    c0 = kn.estimate_C0()[0]
    for n in n_modes:
        errs = []
        for N in Ns:
            g = _shell_profile_for(N)
            samples = [(1.0 + f / math.sqrt(N), 0.0)
                       for f in (-0.6, -0.25, 0.0, 0.25, 0.6)]
            errs.append(kn.lemma_aproxfinal_error(g, N, n, samples, c0=c0))
        out.append(make_result("KERNEL_APPROX", "shell_model_err",
                               f"N(n={n})", Ns, errs))
    # cos-mode variant at n = 1, sampled where the trig factor is +-1
    errs = []
    for N in Ns:
        g = _shell_profile_for(N)
        samples = [(1.0 + f / math.sqrt(N), 0.5 * math.pi / N)
                   for f in (-0.5, 0.0, 0.5)]
        errs.append(kn.lemma_aproxfinal_error(g, N, 1, samples, c0=c0,
                                              mode="cos"))
    out.append(make_result("KERNEL_APPROX", "shell_model_err", "N(cos)",
                           Ns, errs))
    # flat-kernel difference, max over radial samples across the shell
    for n in n_modes:
        diffs = []
        for N in Ns:
            g = _shell_profile_for(N)
            worst = 0.0
            for f in (-0.5, -0.2, 0.0, 0.2, 0.5):
                r = 1.0 + f / math.sqrt(N)
                ex = kn.vr_shell_profile(g, N, n, r).value
                si = kn.vr_simplified_integral(g, N, n, r).value
                worst = max(worst, abs(ex - si))
            diffs.append(worst)
        out.append(make_result("KERNEL_APPROX", "kernel_flat_err",
                               f"N(n={n})", Ns, diffs,
                               fit_kind="upper_bound"))
    return out


def _exp_far_decay(params):
    from . import kernels as kn
    Ns = params.get("N_values", [16, 32, 64, 128])
    r_fixed = params.get("r", 1.3)
    vals = []
    for N in Ns:
        g = _shell_profile_for(N)
        vals.append(kn.far_field_decay(g, N, 1, [r_fixed])[0])
    out = [make_result("FAR_DECAY", "far_decay_n", "N", Ns, vals,
                       fit_kind="upper_bound")]
    N = params.get("N", 64)
    g = _shell_profile_for(N)
    offsets = params.get("r_offsets", [0.16, 0.22, 0.3, 0.4])
    rs = [1.0 + d for d in offsets]
    vals = kn.far_field_decay(g, N, 1, rs)
    out.append(make_result("FAR_DECAY", "far_decay_r", "r-1", offsets, vals,
                           fit_kind="upper_bound"))
    return out


def _exp_source_l2(params):
    from . import pseudo as PS
    from . import profiles as pf
    out = []
    Ns = params.get("N_values", [32, 64, 128, 256])
    lam = params.get("lam", 0.5)
    K = params.get("K", 1)
    t = params.get("t", 0.5)
    vals = []
    grids = []
    for N in Ns:
        ps = PS.make_pseudo_ck(lam=lam, K=K, N=N)
        vals.append(PS.residual_source(ps, t).l2())
        grids.append(ps.grid.n)
    out.append(make_result("SOURCE_L2", "source_l2_c2", "N", Ns, vals,
                           grid="x".join(map(str, grids))))
    for beta in params.get("beta_values", [1.6, 1.8]):
        stretch = params.get("stretch", 1.0)
        triple = pf.build_hs_grid_family(beta, stretch)
        vals = []
        for N in params.get("N_values_hs", [16, 32, 64, 128]):
            ps = PS.make_pseudo_hs(triple, N)
            vals.append(PS.residual_source(ps, t).l2())
        out.append(make_result("SOURCE_L2", "source_l2_hs",
                               f"N(beta={beta})",
                               params.get("N_values_hs", [16, 32, 64, 128]),
                               vals, expected=-(2.0 * beta - 1.0)))
    return out


def _exp_source_hi(params):
    from . import pseudo as PS
    Ns = params.get("N_values", [32, 64, 128, 256])
    lam = params.get("lam", 0.5)
    K = params.get("K", 1)
    t = params.get("t", 0.5)
    h3, h225 = [], []
    for N in Ns:
        ps = PS.make_pseudo_ck(lam=lam, K=K, N=N)
        scan = PS.source_scan(ps, [t])
        h3.append(scan.h_high_norms[0])
        h225.append(scan.h_interp_norms[0])
    return [make_result("SOURCE_HI", "source_h3_c2", "N", Ns, h3),
            make_result("SOURCE_HI", "source_h225_c2", "N", Ns, h225)]


def _exp_solution_error(params):
    from . import evolution as ev
    from . import pseudo as PS
    Ns = params.get("N_values", [32, 64, 128])
    lam = params.get("lam", 0.5)
    K = params.get("K", 1)
    T = params.get("t", 0.5)
    errs, grids, drifts = [], [], []
    for N in Ns:
        ps = PS.make_pseudo_ck(lam=lam, K=K, N=N)
        res = ev.run_and_compare(ps, T, [T])
        errs.append(res["rows"][-1][1])
        grids.append(ps.grid.n)
        drifts.append(res["drift"])
    return [make_result("SOLUTION_ERROR", "solution_err_l2", "N", Ns, errs,
                        grid="x".join(map(str, grids)),
                        extras={"drifts": [list(d) for d in drifts]})]


def _exp_ck_growth(params):
    from . import pseudo as PS
    Ks = params.get("K_values", [4, 8, 16, 32])
    N = params.get("N", 128)
    lam = params.get("lam", 0.5)
    t = params.get("t", 0.5)
    ys = []
    for K in Ks:
        ps = PS.make_pseudo_ck(lam=lam, K=K, N=N,
                               grid=_tiny_grid())
        ys.append(PS.ck_angular_certificate(ps, t) / (lam**2 * t))
    return [make_result("CK_GROWTH", "ck_growth_lnk", "K", Ks, ys,
                        fit_kind="linear_lnx", grid="analytic")]


def _tiny_grid():
    from .spectral import Grid2D
    return Grid2D(64, 24.0)


def _exp_hs_growth(params):
    from . import profiles as pf
    from . import pseudo as PS
    out = []
    for beta in params.get("beta_values", [1.6, 1.8]):
        stretch = params.get("stretch", 3.0)
        triple = pf.build_hs_grid_family(beta, stretch)
        ps = PS.make_pseudo_hs(triple, params.get("N", 64),
                               grid=_tiny_grid())
        ts = params.get("t_values", [1.0, 1.5, 2.25, 3.0])
        ys = [PS.hs_growth_norm(ps, t) for t in ts]
        out.append(make_result("HS_GROWTH", "hs_growth_t",
                               f"t(beta={beta})", ts, ys, expected=beta,
                               grid="analytic"))
    return out


def _exp_crit_stretch(params):
    from . import kernels as kn
    from . import profiles as pf
    from . import radial as rd
    c = params.get("c", 0.5)
    b = params.get("b", 0.125)
    Js = params.get("J_values", [1, 2, 3, 4])
    f = pf.layer_base_profile()
    # single layer (J=1) in closed form: the layer-sum strain is exactly
    # -(3c/4j) int f(u)/u^2 du per layer
    single = -(3.0 / 4.0) * c * rd.profile_integral(
        f, weight=lambda r: 1.0 / r**2)
    measured = []
    harmonic = []
    for J in Js:
        spec = pf.LayeredSpec(c=c, J=J, b=b)
        val = kn.origin_stretch_polar(
            lambda r, a: sum(p(r) for p in spec.layer_profiles()) * np.sin(2 * a),
            (0.4 * b**J, 1.6 * b))
        measured.append(val / single)
        harmonic.append(sum(1.0 / j for j in range(1, J + 1)))
    out = [make_result("CRIT_STRETCH", "crit_harmonic", "J", Js, measured,
                       fit_kind="max_rel_dev",
                       extras={"reference": harmonic})]
    # rescaling invariance on the J = 1 layer
    spec = pf.LayeredSpec(c=c, J=1, b=b)
    vals = []
    for lam in (1.0, 2.0, 4.0):
        vals.append(kn.origin_stretch_polar(
            lambda r, a: sum(p(lam * r) / lam
                             for p in spec.layer_profiles()) * np.sin(2 * a),
            (0.4 * b / lam, 1.6 * b / lam)))
    out.append(make_result("CRIT_STRETCH", "crit_scale_invariance", "lambda",
                           [1.0, 2.0, 4.0], vals, fit_kind="max_rel_dev",
                           extras={"reference": [vals[0]] * 3}))
    return out


def _exp_crit_perturb(params):
    from . import evolution as ev
    from . import profiles as pf
    spec = pf.LayeredSpec(c=params.get("c", 30.0), J=params.get("J", 1),
                          b=params.get("b", 0.125),
                          ctilde=params.get("ctilde", 0.01))
    res = ev.critical_perturbation_growth(
        spec, c0=params.get("c0", 1.0), N=params.get("N", 1024),
        t0=params.get("t0", 1.0), K_budget=params.get("K_budget", 1.0))
    rows = res["rows"][1:]
    ys = [r["growth"] for r in rows]
    ref = [r["predicted"] for r in rows]
    return [make_result("CRIT_PERTURB", "crit_perturb_band", "t",
                        [r["t"] for r in rows], ys, fit_kind="ratio_band",
                        extras={"band": (0.5, 2.0), "reference": ref,
                                "t_crit": res["monitor"].t_crit,
                                "t_crit_reason": res["monitor"].t_crit_reason})]


_EXPERIMENTS = {
    "C0_CONV": _exp_c0,
    "KERNEL_APPROX": _exp_kernel_approx,
    "FAR_DECAY": _exp_far_decay,
    "SOURCE_L2": _exp_source_l2,
    "SOURCE_HI": _exp_source_hi,
    "SOLUTION_ERROR": _exp_solution_error,
    "CK_GROWTH": _exp_ck_growth,
    "HS_GROWTH": _exp_hs_growth,
    "CRIT_STRETCH": _exp_crit_stretch,
    "CRIT_PERTURB": _exp_crit_perturb,
}
