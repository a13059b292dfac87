"""Command-line experiment runner.

Subcommands: run a config file (or builtin config name), list catalogue
entries, describe one of them, and run the whole regression suite.
Reports are deterministic for a fixed config fingerprint (only the
timestamp field varies between runs).
"""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import math
import os
import sys

import numpy as np

from . import __version__
from . import _rng
from . import diagnostics as dg
from . import geometry as geo
from . import gibbs as gb
from . import groups as gr
from . import walk as wk
from .config import BUILTIN_CONFIGS, ConfigError, ExperimentConfig


# ------------------------------------------------------------ experiments

def _run_inequality(cfg: ExperimentConfig) -> tuple:
    act = cfg.build_action()
    mu = cfg.build_measure(act)
    F = cfg.build_potential(act)
    p = dict(cfg.params)
    p["seed"] = cfg.seed
    rep = dg.inequality_report(act, mu, F, p, fingerprint=cfg.fingerprint)
    ok = True
    want = cfg.expect.get("verdict")
    if want is not None:
        ok = rep.verdict == want
    rows = [
        ["h", rep.h.value, rep.h.stderr],
        ["ell", rep.ell.value, rep.ell.stderr],
        ["v_F", rep.v_f.value, rep.v_f.stderr],
        ["ell_F", rep.ell_f.value, rep.ell_f.stderr],
        ["gap", rep.gap, rep.gap_stderr],
    ]
    return rep.to_json(), {"components": (["quantity", "value", "stderr"], rows)}, ok, rep.verdict


def _run_pressure_covariance(cfg: ExperimentConfig) -> tuple:
    act = cfg.build_action()
    p = cfg.params
    ball = gr.orbit_ball(act, float(p["radius"]))
    window = tuple(p["window"])
    tol = float(p.get("tol", 0.02))
    v0 = gb.pressure(ball, gb.Zero(), window)
    rows = [["0", v0.value, v0.stderr, v0.value, 0.0]]
    ok = True
    for c in p["shifts"]:
        vc = gb.pressure(ball, gb.Constant(float(c)), window)
        drift_ = vc.value - (v0.value + float(c))
        ok = ok and abs(drift_) <= tol + vc.stderr + v0.stderr
        rows.append([str(c), vc.value, vc.stderr, v0.value + float(c), drift_])
    results = {"v_zero": v0.to_json(), "tolerance": tol,
               "rows": [[r[0]] + [float(x) for x in r[1:]] for r in rows]}
    return results, {"pressure": (["shift", "v_hat", "stderr", "expected", "excess"], rows)}, ok, None


def _run_parabolic_distortion(cfg: ExperimentConfig) -> tuple:
    act = cfg.build_action()
    p = cfg.params
    rep = gr.parabolic_distortion_report(act, N=int(p.get("N", 60)),
                                         fit_lo=int(p.get("fit_lo", 8)))
    band = p.get("log_c_band", [0.45, 0.55])
    ok = band[0] <= rep["log_c"] <= band[1]
    # closed-form displacement check at n = 10
    g10 = act.element(act.parabolic_letter * 10)
    d10 = geo.dist(act.base, geo.apply(g10, act.base))
    ok = ok and abs(d10 - math.acosh(51.0)) <= 1e-9
    rows = [[r["n"], r["word_norm"], r["displacement"], r["certified"]]
            for r in rep["rows"]]
    results = {"log_c": rep["log_c"], "log_c_stderr": rep.get("log_c_stderr"),
               "band": band, "d_10": d10, "d_10_expected": math.acosh(51.0)}
    return results, {"distortion": (["n", "word_norm", "displacement", "certified"], rows)}, ok, None


def _run_deviation_tail(cfg: ExperimentConfig) -> tuple:
    mu = cfg.build_measure()
    p = cfg.params
    t = dg.deviation_tail(mu, int(p["k"]), int(p["n"]), p["a_grid"],
                          int(p["batch"]), _rng.derive_seed(cfg.seed, "tail"))
    mono = all(x >= y - 1e-12 for x, y in zip(t["tail"], t["tail"][1:]))
    ok = (not t["degenerate"]) and mono and t["slope"] <= float(p["max_slope"])
    rows = list(zip(t["a"], t["tail"]))
    return t, {"tails": (["a", "tail"], rows)}, ok, None


def _run_green_decay(cfg: ExperimentConfig) -> tuple:
    act = cfg.build_action()
    mu = cfg.build_measure(act)
    p = cfg.params
    ball = gr.orbit_ball(act, float(p["radius"]))
    band = tuple(p.get("band", [0.3, 3.5]))
    res = dg.green_decay_check(mu, ball, method=p.get("method", "auto"),
                               band=band)
    rows = [[r["word"], r["norm"], r["d_green"], r["ratio"]]
            for r in res["rows"]]
    slim = dict(res)
    slim["rows"] = rows
    return slim, {"ratios": (["word", "norm", "d_green", "ratio"], rows)}, res["passes"], None


def _run_mc_green(cfg: ExperimentConfig) -> tuple:
    mu = cfg.build_measure()
    p = cfg.params
    sig = float(p.get("sigmas", 4.0))
    rows = []
    ok = True
    for w in p["words"]:
        exact = wk.green_function(mu, w, method="exact-recursive")
        mc = wk.green_function(mu, w, method="monte-carlo",
                               M=int(p["paths"]), N=int(p["horizon"]),
                               seed=_rng.derive_seed(cfg.seed, "mc-" + w))
        z = abs(mc.value - exact.value) / mc.stderr if mc.stderr > 0 else 0.0
        ok = ok and z <= sig
        rows.append([w, exact.value, mc.value, mc.stderr, z])
    results = {"sigmas": sig,
               "rows": [[r[0]] + [float(x) for x in r[1:]] for r in rows]}
    return results, {"green": (["word", "exact", "monte_carlo", "stderr", "z"], rows)}, ok, None


def _run_shadow_bands(cfg: ExperimentConfig) -> tuple:
    act = cfg.build_action()
    mu = cfg.build_measure(act)
    p = cfg.params
    ball = gr.orbit_ball(act, float(p["radius"]))
    window = tuple(p["window"])
    v_hat = gb.pressure(ball, gb.Zero(), window).value
    max_norm = int(p.get("max_norm", 6))
    factor = float(p.get("band_factor", 10.0))
    # a few deterministic targets per norm, in ball enumeration order
    by_norm: dict = {}
    for i in range(len(ball.disps)):
        w = ball.word(i)
        m = len(w)
        if 1 <= m <= max_norm and len(by_norm.setdefault(m, [])) < 3:
            by_norm[m].append(w)
    kappa_rows = []
    nu_rows = []
    for m in sorted(by_norm):
        for w in by_norm[m]:
            kap = gb.shadow_mass_limit(ball, gb.Zero(), v_hat,
                                       geo.TreePoint(w), 0.0)
            kappa_rows.append([w, m, kap, kap * math.exp(v_hat * m)])
            est = dg.harmonic_shadow_mass(
                mu, geo.Shadow(act.base, geo.TreePoint(w), 0.0),
                int(p["horizon"]), int(p["batch"]),
                _rng.derive_seed(cfg.seed, "nu-" + w))
            dgm = wk.green_metric(mu, w)
            nu_rows.append([w, m, est.value, est.value * math.exp(dgm)])
    kb = [r[3] for r in kappa_rows]
    nb = [r[3] for r in nu_rows if r[2] > 0]
    dF = gb._ball_fake_distances(ball, gb.Zero())
    idx = gb.shell_index(ball.disps)
    logw = dF - v_hat * ball.disps
    shells = []
    for k in range(int(window[0]), int(window[1]) + 1):
        sel = idx == k
        if sel.any():
            shells.append(float(np.exp(logw[sel]).sum()))
    bands = {
        "kappa_band": max(kb) / min(kb),
        "nu_band": max(nb) / min(nb) if nb else float("inf"),
        "shell_band": max(shells) / min(shells),
    }
    ok = all(v <= factor for v in bands.values())
    results = {"v_hat": v_hat, "band_factor": factor, **bands}
    arts = {
        "kappa": (["word", "norm", "kappa", "kappa_scaled"], kappa_rows),
        "nu": (["word", "norm", "nu", "nu_scaled"], nu_rows),
        "shells": (["shell", "weighted_sum"],
                   list(zip(range(int(window[0]), int(window[1]) + 1), shells))),
    }
    return results, arts, ok, None


def _run_phi_trend(cfg: ExperimentConfig) -> tuple:
    act = cfg.build_action()
    mu = cfg.build_measure(act)
    F = cfg.build_potential(act)
    p = cfg.params
    ball = gr.orbit_ball(act, float(p.get("radius", 12)))
    if act.model == "tree":
        k = act.free_rank or 2
        v_hat = math.log(2 * k - 1)
    else:
        v_hat = gb.pressure(ball, F, tuple(p.get("window", (5, 12)))).value
    atoms = gb.patterson_atoms(ball, F, s=v_hat + 0.1, v_hat=v_hat)
    rows = dg.shadow_ratio_stats(mu, F, atoms, p["n_grid"],
                                 int(p["batch"]),
                                 _rng.derive_seed(cfg.seed, "phi"))
    trend = p.get("trend", "stable")
    if trend == "stable":
        ok = all(r["p_ge_0.5"] >= float(p.get("min_p_half", 0.9))
                 for r in rows)
    else:
        meds = [r["median_phi"] for r in rows]
        ok = all(x > y for x, y in zip(meds, meds[1:]))
    cols = ["n", "median_phi", "mean_phi", "p_ge_0.5", "p_ge_0.1",
            "p_ge_0.01", "psi_over_n_mean", "cesaro_mean",
            "low_confidence_count"]
    art = [[r[c] for c in cols] for r in rows]
    return {"trend": trend, "rows": rows, "v_hat": v_hat}, \
        {"phi": (cols, art)}, ok, None


def _run_geometry_identities(cfg: ExperimentConfig) -> tuple:
    samples = int(cfg.params.get("samples", 10000))
    rng = np.random.default_rng(cfg.seed)
    delta = math.log(1.0 + math.sqrt(2.0))
    fail = {"cocycle": 0, "bound": 0, "four_point": 0, "invariance": 0}
    tol = 1e-8

    def rpt():
        return geo.PlanePoint(float(rng.normal(0, 3)),
                              float(np.exp(rng.normal(0, 1.2))))

    def riso():
        m = rng.normal(0, 1, (2, 2))
        while abs(np.linalg.det(m)) < 1e-3:
            m = rng.normal(0, 1, (2, 2))
        if np.linalg.det(m) < 0:
            m[0] = -m[0]
        return geo.PlaneIsometry(m)

    for _ in range(samples):
        x, y, z, w = rpt(), rpt(), rpt(), rpt()
        zeta = geo.PlaneBoundary(float(rng.normal(0, 3)))
        bxy = geo.busemann(zeta, x, y)
        byz = geo.busemann(zeta, y, z)
        bxz = geo.busemann(zeta, x, z)
        if abs(bxy + byz - bxz) > tol:
            fail["cocycle"] += 1
        if abs(bxy) > geo.dist(x, y) + tol:
            fail["bound"] += 1
        # four-point condition via Gromov products
        dxy, dzw = geo.dist(x, y), geo.dist(z, w)
        dxz, dyw = geo.dist(x, z), geo.dist(y, w)
        dxw, dyz = geo.dist(x, w), geo.dist(y, z)
        s = sorted([dxy + dzw, dxz + dyw, dxw + dyz])
        if s[2] - s[1] > 2.0 * delta + tol:
            fail["four_point"] += 1
        g = riso()
        if abs(geo.dist(geo.apply(g, x), geo.apply(g, y))
               - geo.dist(x, y)) > tol:
            fail["invariance"] += 1

    letters = "aAbB"

    def rword(max_len=14):
        n = int(rng.integers(0, max_len))
        out = []
        for _ in range(n):
            choices = [c for c in letters
                       if not out or c != out[-1].swapcase()]
            out.append(choices[int(rng.integers(0, len(choices)))])
        return "".join(out)

    tfail = {"cocycle": 0, "bound": 0, "four_point": 0, "invariance": 0}
    for _ in range(samples):
        x, y = geo.TreePoint(rword()), geo.TreePoint(rword())
        z, w = geo.TreePoint(rword()), geo.TreePoint(rword())
        pre = rword() or "a"
        per = "ab" if pre[-1] != "A" else "ba"
        zeta = geo.TreeBoundary(pre, per, depth=256)
        bxy = geo.busemann(zeta, x, y)
        if abs(bxy + geo.busemann(zeta, y, z) - geo.busemann(zeta, x, z)) > tol:
            tfail["cocycle"] += 1
        if abs(bxy) > geo.dist(x, y) + tol:
            tfail["bound"] += 1
        s = sorted([geo.dist(x, y) + geo.dist(z, w),
                    geo.dist(x, z) + geo.dist(y, w),
                    geo.dist(x, w) + geo.dist(y, z)])
        if s[2] - s[1] > tol:  # tree four-point constant is 0
            tfail["four_point"] += 1
        g = geo.TreeIsometry(rword())
        if abs(geo.dist(geo.apply(g, x), geo.apply(g, y))
               - geo.dist(x, y)) > tol:
            tfail["invariance"] += 1
    ok = sum(fail.values()) + sum(tfail.values()) == 0
    return {"samples": samples, "failures_plane": fail,
            "failures_tree": tfail, "delta": delta}, {}, ok, None


def _run_bump_fake_drift(cfg: ExperimentConfig) -> tuple:
    act = cfg.build_action()
    mu = cfg.build_measure(act)
    F = cfg.build_potential(act)
    p = cfg.params
    n = int(p["n"])
    batch = int(p["batch"])
    e1 = gb.fake_drift(F, mu, n, batch, _rng.derive_seed(cfg.seed, "fd1"))
    e2 = gb.fake_drift(F, mu, 2 * n, batch, _rng.derive_seed(cfg.seed, "fd2"))
    tot1, se1 = e1.value * n, e1.stderr * n
    tot2, se2 = e2.value * 2 * n, e2.stderr * 2 * n
    stable = abs(tot1 - tot2) <= 2.0 * (se1 + se2)
    finite = math.isfinite(e1.value) and math.isfinite(e2.value)
    results = {"n": n, "doubled_n": 2 * n,
               "value_n": e1.value, "value_2n": e2.value,
               "total_n": tot1, "total_2n": tot2,
               "total_stderr_n": se1, "total_stderr_2n": se2,
               "increment_n": e1.extra["increment_value"],
               "increment_2n": e2.extra["increment_value"],
               "stable": stable}
    return results, {}, bool(stable and finite), None


RUNNERS = {
    "inequality": _run_inequality,
    "pressure-covariance": _run_pressure_covariance,
    "parabolic-distortion": _run_parabolic_distortion,
    "deviation-tail": _run_deviation_tail,
    "green-decay": _run_green_decay,
    "mc-green": _run_mc_green,
    "shadow-bands": _run_shadow_bands,
    "phi-trend": _run_phi_trend,
    "geometry-identities": _run_geometry_identities,
    "bump-fake-drift": _run_bump_fake_drift,
}


# --------------------------------------------------------------- plumbing

def _load_config(spec: str) -> ExperimentConfig:
    if os.path.exists(spec):
        return ExperimentConfig.from_file(spec)
    if spec in BUILTIN_CONFIGS:
        return ExperimentConfig.from_dict(BUILTIN_CONFIGS[spec])
    raise ConfigError("no config file or builtin config named %r" % spec)


def _write_report(cfg: ExperimentConfig, out_dir: str, results, artifacts,
                  ok: bool, verdict) -> str:
    os.makedirs(out_dir, exist_ok=True)
    report = {
        "name": cfg.name,
        "experiment": cfg.experiment,
        "fingerprint": cfg.fingerprint,
        "seed": cfg.seed,
        "versions": {"hypdrift": __version__, "numpy": np.__version__},
        "results": results,
        "pass": bool(ok),
        "verdict": verdict,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    path = os.path.join(out_dir, "report.json")
    with open(path, "w") as fh:
        json.dump(report, fh, sort_keys=True, indent=2, default=_jsonify)
        fh.write("\n")
    for name, (header, rows) in artifacts.items():
        with open(os.path.join(out_dir, name + ".csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for r in rows:
                w.writerow(list(r))
    return path


def _jsonify(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if hasattr(x, "to_json"):
        return x.to_json()
    raise TypeError("not serializable: %r" % type(x))


def _run_one(cfg: ExperimentConfig, out_dir: str) -> tuple:
    runner = RUNNERS[cfg.experiment]
    results, artifacts, ok, verdict = runner(cfg)
    path = _write_report(cfg, out_dir, results, artifacts, ok, verdict)
    return ok, verdict, path


def cmd_run(args) -> int:
    try:
        cfg = _load_config(args.config)
    except ConfigError as e:
        print("error: %s" % e, file=sys.stderr)
        return 1
    if args.seed is not None:
        raw = dict(cfg.raw)
        raw["seed"] = args.seed
        cfg = ExperimentConfig.from_dict(raw)
    out = args.out or os.path.join("reports", cfg.name)
    try:
        ok, verdict, path = _run_one(cfg, out)
    except Exception as e:  # honest failure surface, nonzero exit
        print("error: %s: %s" % (type(e).__name__, e), file=sys.stderr)
        return 1
    status = verdict or ("pass" if ok else "fail")
    print("%s: %s (report: %s)" % (cfg.name, status, path))
    if verdict == "inconclusive":
        return 2
    return 0


def cmd_suite(args) -> int:
    out_root = args.out or "reports"
    rows = []
    worst = 0
    for name in sorted(BUILTIN_CONFIGS):
        cfg = ExperimentConfig.from_dict(BUILTIN_CONFIGS[name])
        if args.seed is not None:
            raw = dict(cfg.raw)
            raw["seed"] = args.seed
            cfg = ExperimentConfig.from_dict(raw)
        try:
            ok, verdict, _ = _run_one(cfg, os.path.join(out_root, name))
            status = verdict or ("pass" if ok else "FAIL")
            if verdict == "inconclusive" or not ok:
                worst = max(worst, 2)
        except Exception as e:
            status = "ERROR(%s)" % type(e).__name__
            ok = False
            worst = 1
        rows.append((name, status, "ok" if ok else "check"))
    width = max(len(r[0]) for r in rows)
    for name, status, flag in rows:
        print("%-*s  %-22s %s" % (width, name, status, flag))
    return worst


def cmd_list(args) -> int:
    kind = args.kind
    if kind == "actions":
        for name in sorted(gr.BUILTIN_ACTIONS):
            print(name)
    elif kind == "configs":
        for name in sorted(BUILTIN_CONFIGS):
            print("%s  (%s)" % (name, BUILTIN_CONFIGS[name]["experiment"]))
    elif kind == "potentials":
        print("zero\nconstant (param c)\nplane-bump (params amplitude, "
              "rep_radius, optional c)")
    elif kind == "experiments":
        for name in sorted(RUNNERS):
            print(name)
    elif kind == "measures":
        print("any [[word, weight], ...] list over the action's generators; "
              "builtin configs use uniform measures")
    else:
        print("error: unknown kind %r" % kind, file=sys.stderr)
        return 1
    return 0


def cmd_describe(args) -> int:
    name = args.name
    if name in gr.BUILTIN_ACTIONS:
        act = gr.BUILTIN_ACTIONS[name]()
        print("action %s (%s model)" % (act.name, act.model))
        print("letters:", " ".join(act.letters))
        for g, iso in sorted(act.gens.items()):
            if act.model == "plane":
                m = iso.mat
                print("  %s = [[%.6g, %.6g], [%.6g, %.6g]]"
                      % (g, m[0, 0], m[0, 1], m[1, 0], m[1, 1]))
            else:
                print("  %s : free generator" % g)
        if act.has_parabolics:
            print("parabolic letter:", act.parabolic_letter)
        return 0
    if name in BUILTIN_CONFIGS:
        print(json.dumps(BUILTIN_CONFIGS[name], indent=2, sort_keys=True))
        return 0
    if name in ("zero", "constant", "plane-bump"):
        docs = {
            "zero": "Zero potential: F = 0; all derived quantities reduce "
                    "to the unweighted ones.",
            "constant": "Constant potential F = c: shifts pressure by c and "
                        "fake distances by c*d.",
            "plane-bump": "Gaussian bump A exp(-d(z, i)^2) summed over the "
                          "orbit points within rep_radius; optionally "
                          "shifted by c.",
        }
        print(docs[name])
        return 0
    print("error: unknown name %r" % name, file=sys.stderr)
    return 1


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="hypdrift",
        description="numerical laboratory for random walks on hyperbolic "
                    "group actions")
    sub = ap.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config", help="config JSON path or builtin name")
    p_run.add_argument("--out", help="output directory")
    p_run.add_argument("--seed", type=int, help="override the master seed")
    p_run.set_defaults(fn=cmd_run)
    p_suite = sub.add_parser("suite", help="run all builtin configs")
    p_suite.add_argument("--out", help="output root directory")
    p_suite.add_argument("--seed", type=int, help="override all master seeds")
    p_suite.set_defaults(fn=cmd_suite)
    p_list = sub.add_parser("list", help="list catalogue entries")
    p_list.add_argument("kind", choices=["actions", "configs", "potentials",
                                         "experiments", "measures"])
    p_list.set_defaults(fn=cmd_list)
    p_desc = sub.add_parser("describe", help="describe an action, config, "
                                             "or potential")
    p_desc.add_argument("name")
    p_desc.set_defaults(fn=cmd_describe)
    args = ap.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
