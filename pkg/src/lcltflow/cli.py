"""Command-line front door.

Subcommands: classify | predict | verify | simulate | spectral | renewal |
correlate.  Every run writes a ``manifest.json`` into the output directory
with the command, a hash of the configuration, the seed, library versions,
and a checksum per emitted file, so any run can be reproduced exactly.

Exit codes: 0 success, 2 configuration/parse failure, 3 mathematical domain
error, 4 verification failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import tempfile
from fractions import Fraction

import numpy as np

from . import __version__
from .errors import LcltError
from .groups import (CaseLabel, classify_case, closure_1d, closure_of_group,
                     covolume, interval)
from .montecarlo import (HistogramSpec, estimate_correlation, estimate_lclt,
                         estimate_mlclt, estimate_sigma, full_set)
from .predict import (FlowMLCLTParams, PredictionRequest, flow_variance,
                      mixing_classify, predict, prediction_record)
from .quadfield import QuadScalar, as_quad
from .renewal_exact import (counterexample_scan, scan_csv_rows,
                            stationary_event_probability)
from .spectral import TwistedOperatorModel, eigen_curve_rows
from .systems import load_system

DEFAULT_SEED = 20260823

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_MATH = 3
EXIT_VERIFY = 4


# ---------------------------------------------------------------------------
# config plumbing
# ---------------------------------------------------------------------------

def _parse_scalar(v, D=2):
    """Exact scalar from JSON: number, [num, den], or [pn, pd, qn, qd]."""
    if isinstance(v, (int, float)):
        return as_quad(Fraction(v).limit_denominator(10 ** 12), D)
    if isinstance(v, list) and len(v) == 2:
        return as_quad(Fraction(v[0], v[1]), D)
    if isinstance(v, list) and len(v) == 4:
        return QuadScalar(Fraction(v[0], v[1]), Fraction(v[2], v[3]), D)
    raise ValueError(f"cannot parse scalar {v!r}")


def _atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _sha256(text):
    return hashlib.sha256(text.encode()).hexdigest()


class Run:
    """Collects outputs and writes the manifest at the end."""

    def __init__(self, args, config):
        self.args = args
        self.config = config
        self.outdir = args.out or "."
        os.makedirs(self.outdir, exist_ok=True)
        self.outputs = {}

    def emit(self, name, text):
        path = os.path.join(self.outdir, name)
        _atomic_write(path, text)
        self.outputs[name] = _sha256(text)
        return path

    def finish(self, command):
        manifest = {
            "command": command,
            "config_hash": _sha256(json.dumps(self.config, sort_keys=True)),
            "config": self.config,
            "seed": self.args.seed,
            "versions": {
                "package": __version__,
                "python": sys.version.split()[0],
                "numpy": np.__version__,
            },
            "outputs": self.outputs,
        }
        _atomic_write(os.path.join(self.outdir, "manifest.json"),
                      json.dumps(manifest, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# shared extraction helpers
# ---------------------------------------------------------------------------

def _group_from_config(cfg):
    """GroupWithShift from explicit generators or a finite-support system."""
    D = cfg.get("D", 2)
    if "generators" in cfg:
        gens = [(_parse_scalar(g[0], D), _parse_scalar(g[1], D))
                for g in cfg["generators"]]
        shift = cfg.get("shift", [0, 0])
        shift = (_parse_scalar(shift[0], D), _parse_scalar(shift[1], D))
        return closure_of_group(gens, shift=shift, D=D)
    system = load_system(cfg["system"])
    gens, shift = system.value_group()
    return closure_of_group(gens, shift=shift)


def _tau_group_from_config(cfg):
    """(Group1D M(tau), shift r) for the mixing verdict."""
    D = cfg.get("D", 2)
    if "generators" in cfg:
        gens = [_parse_scalar(g[1], D) for g in cfg["generators"]]
        shift = cfg.get("shift", [0, 0])
        r = _parse_scalar(shift[1], D)
        return closure_1d(gens), r
    system = load_system(cfg["system"])
    sup = system.tau_support()
    diffs = [v - sup[0] for v in sup[1:]] or [sup[0] - sup[0]]
    return closure_1d(diffs), sup[0]


def _fmt_param(v):
    if isinstance(v, QuadScalar):
        return repr(float(v)) if not v.is_rational() else str(v.p)
    return str(v)


def _params_from_config(cfg):
    case_cfg = cfg["case"]
    D = cfg.get("D", 2)
    case = CaseLabel(case_cfg["variant"],
                     **{k: _parse_scalar(v, D)
                        for k, v in case_cfg.items() if k != "variant"})
    if "sigma_flow" in cfg:
        sigma_flow = float(cfg["sigma_flow"])
    else:
        sigma_flow = flow_variance(cfg["sigma_base"], float(cfg["nu_tau"]))
    return FlowMLCLTParams(case, sigma_flow, float(cfg["nu_tau"]))


def _request_from_config(cfg):
    req = cfg["request"]
    target = req.get("target")
    if target is not None:
        target = [interval(target[0], target[1])]
    return PredictionRequest(
        t=float(req["t"]), W_of_t=float(req.get("W", 0.0)),
        w=float(req.get("w", 0.0)), l=int(req.get("l", 0)),
        nu_A=float(req.get("nu_A", 1.0)), nu_B=float(req.get("nu_B", 1.0)),
        I=tuple(req["I"]) if req.get("I") else None,
        J=tuple(req["J"]) if req.get("J") else None,
        target=target)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_classify(run):
    cfg = run.config
    g = _group_from_config(cfg)
    case = classify_case(g)
    M, r = _tau_group_from_config(cfg)
    if case.variant == "Degenerate":
        verdict = "NotWeaklyMixing"
        line = "Degenerate / not weakly mixing"
    else:
        verdict = mixing_classify(M, r)
        parts = [f"Case {case.variant}"]
        parts += [f"{k}={_fmt_param(v)}" for k, v in sorted(
            case.params.items())]
        if case.variant in ("D", "E"):
            parts.append(f"covolume={covolume(case):g}")
        yn = "yes" if verdict == "Mixing" else "no"
        line = ", ".join(parts) + f", flow mixing: {yn}"
    record = {
        "case": case.variant,
        "params": {k: float(v) for k, v in case.params.items()},
        "mixing": verdict,
        "group": g.to_json(),
    }
    if case.variant in ("D", "E"):
        record["covolume"] = covolume(case)
    print(line)
    if run.args.json:
        run.emit("classify.json", json.dumps(record, indent=2) + "\n")
    run.finish("classify")
    return EXIT_OK


def cmd_predict(run):
    params = _params_from_config(run.config)
    req = _request_from_config(run.config)
    rec = prediction_record(params, req)
    print(json.dumps(rec, indent=2))
    run.emit("predict.json", json.dumps(rec, indent=2) + "\n")
    run.finish("predict")
    return EXIT_OK


def _mc_windows(cfg, t):
    wins = []
    for w in cfg["windows"]:
        if w[0] == "flow":
            wins.append(("flow", float(w[1]), float(w[2]), float(w[3])))
        elif w[0] == "section":
            wins.append(("section", float(w[1]), int(w[2])))
        else:
            raise ValueError(f"unknown window {w!r}")
    return HistogramSpec(t=t, windows=wins)


def cmd_simulate(run):
    cfg = run.config
    system = load_system(cfg["system"])
    spec = _mc_windows(cfg, float(cfg["t"]))
    ests = estimate_lclt(system, spec, int(cfg["N"]), run.args.seed,
                         workers=run.args.workers)
    rows = ["window,point,std_error,n_samples,seed"]
    recs = []
    for w, e in zip(spec.windows, ests):
        rows.append(f"\"{w}\",{e.point!r},{e.std_error!r},"
                    f"{e.n_samples},{e.seed}")
        recs.append({"window": list(w), "point": e.point,
                     "std_error": e.std_error, "n_samples": e.n_samples,
                     "seed": e.seed})
    if run.args.csv:
        run.emit("simulate.csv", "\n".join(rows) + "\n")
    else:
        run.emit("simulate.json", json.dumps(recs, indent=2) + "\n")
    for r in recs:
        print(f"{r['window']}: {r['point']:.6g} +- {r['std_error']:.2g}")
    run.finish("simulate")
    return EXIT_OK


def cmd_spectral(run):
    cfg = run.config
    system = load_system(cfg["system"])
    model = TwistedOperatorModel(
        system, components=tuple(cfg["components"])
        if cfg.get("components") is not None else None)
    grid = cfg.get("t_grid")
    if grid is None:
        grid = [k * math.pi / 4 for k in range(-8, 9)]
    rows = eigen_curve_rows(model, grid)
    d = len(rows[0]) - 4 if rows else 1
    header = ",".join(f"t{k}" for k in range(d)) \
        + ",re_lambda,im_lambda,abs_lambda,gap"
    lines = [header] + [",".join(repr(float(v)) for v in r) for r in rows]
    run.emit("eigen_curve.csv", "\n".join(lines) + "\n")
    print(f"wrote eigen_curve.csv ({len(rows)} rows)")
    run.finish("spectral")
    return EXIT_OK


def cmd_renewal(run):
    cfg = run.config
    atoms = None
    if "system" in cfg:
        system = load_system(cfg["system"])
        atoms = [(int(float(a[0])), a[1], a[2]) for a in system.atoms]
    ts = [Fraction(t).limit_denominator(10 ** 6) if isinstance(t, float)
          else Fraction(t) for t in cfg["t_values"]]
    rows = counterexample_scan(ts, atoms=atoms)
    run.emit("scan.csv", "\n".join(scan_csv_rows(rows)) + "\n")
    for r in rows:
        print(f"t={r[0]:g} cell={r[1]} sqrt(t)P={r[2]:.6f} pruned={r[3]:.2g}")
    run.finish("renewal")
    return EXIT_OK


def _band_set(delta, period=1.0):
    def pred(states, s):
        return np.mod(s, period) < delta
    return pred


def cmd_correlate(run):
    cfg = run.config
    system = load_system(cfg["system"])
    delta = float(cfg.get("band_delta", 0.3))
    pred = _band_set(delta, float(cfg.get("band_period", 1.0)))
    series = estimate_correlation(system, pred, pred, cfg["t_grid"],
                                  int(cfg["N"]), run.args.seed,
                                  workers=run.args.workers)
    rows = ["t,correlation,std_error"]
    rows += [f"{t!r},{c!r},{se!r}" for t, c, se in series]
    run.emit("correlation.csv", "\n".join(rows) + "\n")
    for t, c, se in series:
        print(f"t={t:g} corr={c:+.5f} (+-{se:.2g})")
    run.finish("correlate")
    return EXIT_OK


def cmd_verify(run):
    cfg = run.config
    scale = run.args.tolerance_scale
    system = load_system(cfg["system"])
    t = float(cfg["t"])
    N = int(cfg["N"])
    checks = []

    if cfg.get("mode", "flow") == "flow":
        # non-arithmetic LCLT: flow windows against the Gaussian density
        if "sigma_flow" in cfg:
            sigma = float(cfg["sigma_flow"])
        else:
            cov, _ = estimate_sigma(system, seed=run.args.seed,
                                    workers=run.args.workers)
            sigma = flow_variance([[cov[0, 0]]], system.nu_tau)
        g = 1.0 / math.sqrt(2 * math.pi * sigma)
        for win in cfg["windows"]:
            w, lo, hi = float(win[0]), float(win[1]), float(win[2])
            predicted = g * math.exp(-w * w / (2 * sigma)) * (hi - lo)
            est = estimate_mlclt(system, t, N, run.args.seed,
                                 window=("flow", w, lo, hi),
                                 workers=run.args.workers)
            tol = (3 * est.std_error + 0.10 * abs(predicted)) * scale
            checks.append((f"flow window w={w} [{lo},{hi})", predicted,
                           est, tol, None))
    else:
        # lattice (case D) fiber check against prediction and the exact DP
        params = _params_from_config(cfg)
        req = _request_from_config(cfg)
        predicted = predict(params, req)
        a = float(params.case.a) if "a" in params.case.params else 1.0
        est = estimate_mlclt(system, t, N, run.args.seed,
                             window=("section", a, req.l),
                             I=req.I, J=req.J,
                             workers=run.args.workers)
        tol = (3 * est.std_error + 0.10 * abs(predicted)) * scale
        oracle = None
        if system.kind == "renewal" and cfg.get("oracle", True):
            p = stationary_event_probability(
                system.atoms, Fraction(t), req.l, I=req.I, J=req.J)
            oracle = math.sqrt(t) * float(p)
        checks.append((f"fiber l={req.l}", predicted, est, tol, oracle))

    rows = ["check,predicted,estimate,std_error,oracle,tolerance,status"]
    all_pass = True
    for name, predicted, est, tol, oracle in checks:
        ok = abs(est.point - predicted) <= tol
        if oracle is not None:
            ok = ok and abs(est.point - oracle) <= 3 * est.std_error * scale
        all_pass &= ok
        status = "PASS" if ok else "FAIL"
        ostr = "" if oracle is None else f"{oracle:.6f}"
        print(f"{status}  {name}: predicted {predicted:.6f}, "
              f"estimate {est.point:.6f} +- {est.std_error:.2g}"
              + (f", oracle {ostr}" if oracle is not None else ""))
        rows.append(f"\"{name}\",{predicted!r},{est.point!r},"
                    f"{est.std_error!r},{ostr},{tol!r},{status}")
    run.emit("verify.csv", "\n".join(rows) + "\n")
    run.finish("verify")
    return EXIT_OK if all_pass else EXIT_VERIFY


_COMMANDS = {
    "classify": cmd_classify,
    "predict": cmd_predict,
    "verify": cmd_verify,
    "simulate": cmd_simulate,
    "spectral": cmd_spectral,
    "renewal": cmd_renewal,
    "correlate": cmd_correlate,
}


def build_parser():
    p = argparse.ArgumentParser(
        prog="lcltflow",
        description="Verify local limit theorems for suspension flows.")
    p.add_argument("command", choices=sorted(_COMMANDS))
    p.add_argument("config", help="path to a JSON configuration file")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=None, help="output directory")
    fmt = p.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true")
    fmt.add_argument("--csv", action="store_true")
    p.add_argument("--tolerance-scale", type=float, default=1.0,
                   dest="tolerance_scale")
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_PARSE if e.code not in (0, None) else 0
    try:
        with open(args.config) as fh:
            config = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        print(f"error: cannot read config: {e}", file=sys.stderr)
        return EXIT_PARSE
    run = Run(args, config)
    try:
        return _COMMANDS[args.command](run)
    except (KeyError, TypeError) as e:
        print(f"error: bad configuration: {e!r}", file=sys.stderr)
        return EXIT_PARSE
    except (LcltError, ValueError, ArithmeticError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_MATH


if __name__ == "__main__":
    sys.exit(main())
