"""Command-line entry point: `sqglab <subcommand>`.

Subcommands: c0 | kernel | build-data | source-scan | evolve | scaling |
critical | report.  Global flags: --config <json>, --out <dir>, --threads,
--seed.  Exit code 0 iff all verdicts pass, 2 if any inconclusive, 1 on
failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np


def _load_config(args, default=None):
    if args.config:
        with open(args.config) as fh:
            return json.load(fh)
    return dict(default or {})


def _outdir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _run_and_emit(configs, out, run_id):
    from . import lab
    results = []
    for cfg in configs:
        try:
            results.extend(lab.run_experiment(cfg))
        except Exception as exc:  # failures are data
            res = lab.ScalingResult(cfg.experiment_id, "error", "error",
                                    [0.0], [0.0], float("nan"), float("nan"),
                                    0.0, 0.0, "fail",
                                    extras={"error": str(exc)})
            results.append(res)
            print(f"[{cfg.experiment_id}] FAILED: {exc}", file=sys.stderr)
    path = out / "results.csv"
    lab.emit_results(results, path, run_id=run_id)
    for r in results:
        print(f"{r.experiment_id:{16}} {r.law_id:24} slope={r.fitted_slope:+.3f} "
              f"+-{r.slope_stderr:.3f} expected={r.expected_exponent} "
              f"-> {r.verdict}")
    print(f"results written to {path}")
    return lab.exit_code(results)


def cmd_c0(args):
    from . import lab
    params = _load_config(args)
    cfg = lab.ExperimentConfig("C0_CONV", params, seed=args.seed)
    return _run_and_emit([cfg], _outdir(args), args.run_id)


def cmd_kernel(args):
    """Raw kernel measurements CSV: lemma_id,N,n,r,value,bound_rhs,error_indicator."""
    from . import kernels as kn
    from . import lab
    params = _load_config(args, {"N_values": [16, 32, 64, 128]})
    out = _outdir(args)
    rows = []
    c0 = kn.estimate_C0()[0]
    cr = kn.c0_radial(c0)
    for N in params["N_values"]:
        import sqglab.radial as rd
        root = math.sqrt(N)
        g = rd.bump(1.0 - 0.5 / root, 1.0 + 0.5 / root)
        for n in params.get("n_values", [1, 2]):
            est = kn.vr_shell_profile(g, N, n, 1.0)
            model = cr * float(g(np.array([1.0]))[0])
            rows.append(("shell_model_err", N, n, 1.0, est.value - model,
                         abs(model) / root, est.error_indicator))
        r_far = params.get("r_far", 1.3)
        est = kn.vr_shell_profile(g, N, 1, r_far)
        rows.append(("far_decay_n", N, 1, r_far, est.value,
                     1.0 / (N**1.5 * (r_far - 1.0) ** 2),
                     est.error_indicator))
        inn = kn.compute_I_Nn(N, 1)
        rows.append(("osc_const_cauchy", N, 1, 0.0, inn.value,
                     c0 + 1.0 / root, inn.error_indicator))
    path = out / "kernel.csv"
    with open(path, "w") as fh:
        fh.write("lemma_id,N,n,r,value,bound_rhs,error_indicator\n")
        for row in rows:
            fh.write(",".join(str(x) for x in row) + "\n")
    print(f"kernel measurements written to {path}")
    return 0


def cmd_build_data(args):
    from . import norms, profiles as pf, spectral as sp
    cfg = _load_config(args)
    family = cfg.get("family")
    out = _outdir(args)
    meta = {"family": family, "params": cfg}
    if family == "ck":
        pair = pf.build_f1_ck(cfg.get("style", "near"))
        fld = pf.build_ck_initial(pair, cfg.get("lam", 1.0), cfg.get("K", 1),
                                  cfg.get("N", 32),
                                  k_order=cfg.get("k_order", 2))
        meta["cancellation_residuals"] = list(pair.cancellation_residuals)
        meta["correction_coeffs"] = list(pair.correction_coeffs)
    elif family == "hs":
        triple = pf.build_hs_profiles(cfg["beta"], cfg["c"], cfg["K"])
        fld = pf.build_hs_initial(triple, cfg.get("N", 32))
        meta.update(lambda1=triple.lambda1, lambda2=triple.lambda2,
                    r_cK=triple.r_cK, epsilon=triple.epsilon,
                    hbeta_measured=triple.hbeta_measured,
                    stretch_measured=triple.stretch_measured)
    elif family == "layered":
        spec = pf.LayeredSpec(c=cfg.get("c", 0.5), J=cfg.get("J", 2),
                              b=cfg.get("b", 0.25))
        fld = pf.build_layered(spec)
        meta["admissible"] = spec.admissible
    elif family == "critical":
        fld = pf.build_critical_perturbation(cfg.get("c0", 1.0),
                                             cfg.get("N", 256),
                                             cfg.get("G", 0.0))
    else:
        print(f"unknown family {family!r}", file=sys.stderr)
        return 1
    meta["l2"] = fld.l2()
    meta["linf"] = fld.linf()
    meta["grid"] = {"n": fld.grid.n, "box_length": fld.grid.box_length}
    base = out / f"{family}_field"
    sp.save_snapshot(fld, base)
    with open(out / f"{family}_meta.json", "w") as fh:
        json.dump(meta, fh, indent=1)
    print(f"snapshot written to {base} (+.json), metadata to {family}_meta.json")
    return 0


def cmd_source_scan(args):
    from . import profiles as pf, pseudo as PS
    cfg = _load_config(args, {"family": "ck", "N_values": [32, 64],
                              "t_values": [0.25, 0.5],
                              "norm_orders": [0.0, 2.25, 3.0]})
    out = _outdir(args)
    path = out / "source_scan.csv"
    with open(path, "w") as fh:
        fh.write("family,N,t,norm_order,value\n")
        for N in cfg["N_values"]:
            if cfg.get("family", "ck") == "ck":
                ps = PS.make_pseudo_ck(lam=cfg.get("lam", 0.5),
                                       K=cfg.get("K", 1), N=N)
            else:
                triple = pf.build_hs_grid_family(cfg.get("beta", 1.8),
                                                 cfg.get("stretch", 1.0))
                ps = PS.make_pseudo_hs(triple, N)
            scan = PS.source_scan(ps, cfg["t_values"])
            for i, t in enumerate(scan.times):
                fh.write(f"{cfg.get('family','ck')},{N},{t},0,{scan.l2_norms[i]:.10g}\n")
                fh.write(f"{cfg.get('family','ck')},{N},{t},3,{scan.h_high_norms[i]:.10g}\n")
                fh.write(f"{cfg.get('family','ck')},{N},{t},2.25,"
                         f"{scan.h_interp_norms[i]:.10g}\n")
    print(f"source scan written to {path}")
    return 0


def cmd_evolve(args):
    from . import evolution as ev, spectral as sp
    out = _outdir(args)
    init = sp.load_snapshot(args.init)
    state = ev.make_state(init, cfl=args.cfl,
                          filter="exponential" if args.filter else "none")
    samples = list(np.arange(args.sample_every, args.T + 1e-12,
                             args.sample_every))
    rows = []

    def on_sample(st):
        d = st.drift()
        rows.append((st.time, d[0], d[1], d[2]))
        if args.snapshots:
            sp.save_snapshot(st.field(), out / f"snap_t{st.time:.4f}")

    ev.run(state, args.T, sample_times=samples, on_sample=on_sample)
    path = out / "evolve.csv"
    with open(path, "w") as fh:
        fh.write("t,l2_drift,linf_drift,mean_drift\n")
        for row in rows:
            fh.write(",".join(f"{x:.10g}" for x in row) + "\n")
    print(f"time series written to {path}; filter={'on' if args.filter else 'off'}")
    return 0


def cmd_scaling(args):
    from . import lab
    cfg = _load_config(args, {"experiments": ["C0_CONV", "KERNEL_APPROX",
                                              "FAR_DECAY"]})
    configs = []
    for eid in cfg.get("experiments", []):
        configs.append(lab.ExperimentConfig(eid, cfg.get(eid, {}),
                                            seed=args.seed))
    return _run_and_emit(configs, _outdir(args), args.run_id)


def cmd_critical(args):
    from . import lab
    cfg = _load_config(args, {})
    configs = [lab.ExperimentConfig("CRIT_STRETCH",
                                    cfg.get("CRIT_STRETCH", {}),
                                    seed=args.seed)]
    if not cfg.get("skip_perturbation"):
        configs.append(lab.ExperimentConfig("CRIT_PERTURB",
                                            cfg.get("CRIT_PERTURB", {}),
                                            seed=args.seed))
    return _run_and_emit(configs, _outdir(args), args.run_id)


def cmd_report(args):
    from . import lab
    rows = lab.read_results(Path(args.out) / "results.csv")
    verdicts = [r["verdict"] for r in rows]
    seen = {}
    for r in rows:
        key = (r["experiment_id"], r["lemma_id"], r["param_name"])
        seen[key] = r
    for (eid, law, pname), r in sorted(seen.items()):
        print(f"{eid:16} {law:24} {pname:14} slope={r['fitted_slope']:>10} "
              f"expected={r['expected_exponent']:>8} {r['verdict']}")
    if "fail" in verdicts:
        return 1
    if "inconclusive" in verdicts:
        return 2
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(prog="sqglab",
                                     description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--threads", type=int, default=-1)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--run-id", default=time.strftime("%Y%m%d-%H%M%S"))
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("c0", help="oscillatory constant convergence")
    sub.add_parser("kernel", help="raw kernel measurement table")
    sub.add_parser("build-data", help="construct an initial-data family")
    sub.add_parser("source-scan", help="residual norms over (N, t)")
    p = sub.add_parser("evolve", help="time integration from a snapshot")
    p.add_argument("--init", required=True, help="snapshot path (raw f64)")
    p.add_argument("--T", type=float, default=0.5)
    p.add_argument("--cfl", type=float, default=0.5)
    p.add_argument("--filter", action="store_true",
                   help="enable the exponential filter (breaks exact "
                        "conservation arguments; disclosed in output)")
    p.add_argument("--sample-every", type=float, default=0.1)
    p.add_argument("--snapshots", action="store_true")
    sub.add_parser("scaling", help="run scaling experiments from config")
    sub.add_parser("critical", help="critical strain and perturbation runs")
    sub.add_parser("report", help="summarize a results.csv")

    args = parser.parse_args(argv)
    from . import spectral
    spectral.set_fft_workers(args.threads)
    np.random.seed(args.seed)

    commands = {"c0": cmd_c0, "kernel": cmd_kernel,
                "build-data": cmd_build_data, "source-scan": cmd_source_scan,
                "evolve": cmd_evolve, "scaling": cmd_scaling,
                "critical": cmd_critical, "report": cmd_report}
    return commands[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
