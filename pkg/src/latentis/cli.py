"""Command-line interface: ``latentis {fit,detect,predict,eval,gen}``.

Exit codes: 0 success, 1 runtime or model error, 2 usage error. Outputs are
written atomically, so a failed command never leaves a partial file. All
randomness flows from ``--seed`` (default 0).
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings

import numpy as np

from . import classic_lvm as lvm
from . import deep_pls, monitoring, synth
from .dataio import (
    Dataset,
    apply_scaler,
    atomic_write,
    fit_scaler,
    load_csv,
    load_model,
    save_model,
    write_csv,
)
from .errors import LatentisError

DEFAULT_SEED = 0
FIT_KINDS = ("pca", "fa", "ica", "cca", "pls", "gmm", "hmm", "dpi", "dpls", "gdpls")
SUPERVISED = ("cca", "pls", "dpls", "gdpls")
GEN_KINDS = ("linear_gaussian", "gmm", "hmm", "process_with_fault")


class UsageError(Exception):
    pass


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _name_list(text: str) -> list[str]:
    return [v.strip() for v in str(text).split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="latentis", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="JSON file supplying defaults for any flag")
    sub = p.add_subparsers(dest="command", required=True)

    def shared(sp):
        sp.add_argument("--input", help="input CSV")
        sp.add_argument("--output", help="output file")
        sp.add_argument("--model", help="model file")
        sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
        sp.add_argument("--json", action="store_true", help="machine-readable report")
        sp.add_argument("--no-header", dest="header", action="store_false",
                        help="input CSV has no header row")

    f = sub.add_parser("fit", help="fit a model and write a model file")
    shared(f)
    f.add_argument("--kind", choices=FIT_KINDS, required=True)
    f.add_argument("--k", type=int, help="components / factors / sources / states")
    f.add_argument("--layer-ks", type=_int_list, help="per-layer component counts")
    f.add_argument("--depth", type=int, default=3)
    f.add_argument("--cpv", type=float, default=0.9)
    f.add_argument("--delta", type=float, default=0.01)
    f.add_argument("--mu", type=float, default=1.0)
    f.add_argument("--eta", type=float, default=0.01)
    f.add_argument("--window", type=int, default=10)
    f.add_argument("--mapping", choices=deep_pls.MAPPING_KINDS, default="identity")
    f.add_argument("--mapping-dim", type=int, default=100)
    f.add_argument("--gamma", type=float, default=1.0)
    f.add_argument("--y-cols", type=_name_list, help="target / second-block column names")
    f.add_argument("--task", choices=deep_pls.TASKS, default="regression")
    f.add_argument("--algorithm", choices=("svd", "nipals"), default="svd")
    f.add_argument("--symbols", type=int, help="HMM alphabet size (default: max symbol + 1)")
    f.add_argument("--max-iter", type=int, default=500)
    f.add_argument("--normalize", action=argparse.BooleanOptionalAction, default=True)

    d = sub.add_parser("detect", help="run a DPI detector over a CSV stream")
    shared(d)

    pr = sub.add_parser("predict", help="predict with a PLS/DPLS/GDPLS model")
    shared(pr)

    e = sub.add_parser("eval", help="score predictions or detections against truth")
    shared(e)
    e.add_argument("--predictions", help="precomputed prediction CSV (default: run the model)")
    e.add_argument("--fault-col", default="fault", help="fault-mask column for detectors")

    g = sub.add_parser("gen", help="write a synthetic CSV fixture")
    shared(g)
    g.add_argument("--kind", choices=GEN_KINDS, required=True)
    g.add_argument("--n", type=int, default=1000)
    g.add_argument("--m", type=int, default=20)
    g.add_argument("--k", type=int, default=5)
    g.add_argument("--noise", type=float, default=0.1)
    g.add_argument("--plant-seed", type=int, default=0,
                   help="seed of the plant loadings (shared across train/test files)")
    g.add_argument("--onset", type=int)
    g.add_argument("--magnitude", type=float, default=3.0)
    g.add_argument("--fault-vars", type=_int_list, default=[0, 1, 2, 3, 4])
    g.add_argument("--mode", choices=("shift", "variance"), default="shift")
    g.add_argument("--length", type=int, default=100)
    return p


def _subparser(parser, command):
    for action in parser._subparsers._group_actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[command]
    raise KeyError(command)


def parse_args(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            parser.error(f"cannot read config {args.config}: {exc}")
        sp = _subparser(parser, args.command)
        known = {a.dest for a in sp._actions}
        unknown = sorted(set(cfg) - known)
        if unknown:
            parser.error(f"unknown config key(s): {', '.join(unknown)}")
        # config values become defaults so explicit flags still win
        sp.set_defaults(**{k.replace("-", "_"): v for k, v in cfg.items()})
        args = parser.parse_args(argv)
    return parser, args


# -- helpers ------------------------------------------------------------------


def _require(args, *names):
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n) in (None, [])]
    if missing:
        raise UsageError(f"{args.command} requires {', '.join(missing)}")


def _report(args, report: dict, title: str):
    if args.json:
        print(json.dumps(_plain(report), indent=1, sort_keys=True))
        return
    print(title)
    for key, val in report.items():
        val = _plain(val)
        if isinstance(val, list) and val and isinstance(val[0], list):
            print(f"  {key}:")
            for row in val:
                print("    " + " ".join(_short(v) for v in row))
        elif isinstance(val, list):
            print(f"  {key}: " + " ".join(_short(v) for v in val))
        else:
            print(f"  {key}: {_short(val)}")


def _short(v):
    return f"{v:.6g}" if isinstance(v, float) else str(v)


def _plain(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    if isinstance(v, dict):
        return {k: _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    return v


def _split_xy(data: Dataset, y_cols, required=True):
    if not y_cols:
        if required:
            raise UsageError("this model kind requires --y-cols")
        return data, None
    return data.drop(y_cols), data.columns(y_cols)


def _tail(trace, n=5):
    return [float(v) for v in np.asarray(trace)[-n:]]


def _hmm_sequences(data: Dataset):
    if "sequence" in data.names:
        sym_col = [c for c in data.names if c != "sequence"]
        if len(sym_col) != 1:
            raise LatentisError("HMM input needs exactly one symbol column besides 'sequence'")
        ids = data.columns(["sequence"]).values[:, 0]
        syms = data.columns(sym_col).values[:, 0]
        order = list(dict.fromkeys(ids.tolist()))
        return [syms[ids == i].astype(int) for i in order]
    if data.m != 1:
        raise LatentisError("HMM input must be one symbol column or (sequence, symbol)")
    return [data.values[:, 0].astype(int)]


# -- commands -----------------------------------------------------------------


def cmd_fit(args) -> int:
    _require(args, "input", "model")
    data = load_csv(args.input, header=args.header)
    kind = args.kind
    meta: dict = {"x_names": list(data.names), "task": "regression"}
    report: dict = {"kind": kind, "samples": data.n}

    if kind == "hmm":
        if args.k is None:
            raise UsageError("hmm requires --k")
        seqs = _hmm_sequences(data)
        m = args.symbols or int(max(s.max() for s in seqs)) + 1
        model = lvm.hmm_baum_welch(seqs, args.k, m, max_iter=args.max_iter, seed=args.seed)
        report.update(states=args.k, symbols=m, transition=model.transition,
                      loglik_tail=_tail(model.loglik_trace), converged=model.converged)
        save_model(model, args.model, meta)
        _report(args, report, f"fitted {kind}")
        return 0

    X, Y = _split_xy(data, args.y_cols, required=kind in SUPERVISED)
    meta["x_names"] = list(X.names)
    meta["y_names"] = list(Y.names) if Y is not None else []
    scaler = fit_scaler(X) if args.normalize else None
    meta["scaler"] = scaler
    Xs = apply_scaler(scaler, X.values) if scaler else X.values
    report.update(variables=X.m, normalized=bool(scaler))

    if kind in ("pca", "fa", "ica", "cca", "pls", "gmm") and args.k is None and kind != "pca":
        raise UsageError(f"{kind} requires --k")

    if kind == "pca":
        model = lvm.fit_pca(Xs, k=args.k, cpv=None if args.k else args.cpv)
        report.update(k=model.k, eigenvalues=model.eigenvalues[: model.k])
    elif kind == "fa":
        model = lvm.fit_fa(Xs, args.k, max_iter=args.max_iter)
        report.update(k=model.k, Psi=model.Psi, loglik_tail=_tail(model.loglik_trace),
                      converged=model.converged)
    elif kind == "ica":
        model = lvm.fit_ica(Xs.T, args.k, max_iter=args.max_iter, seed=args.seed)
        report.update(k=model.k, converged=model.converged, ambiguous=model.ambiguous,
                      nongaussianity=model.nongaussianity)
    elif kind == "cca":
        model = lvm.fit_cca(Xs, Y.values, args.k)
        report.update(k=model.k, correlations=model.correlations)
    elif kind == "pls":
        model = lvm.fit_pls(Xs, Y.values, args.k, algorithm=args.algorithm)
        report.update(k=model.k, singular_values=model.singular_values)
    elif kind == "gmm":
        model = lvm.fit_gmm(Xs, args.k, max_iter=args.max_iter, seed=args.seed)
        report.update(k=model.k, weights=model.weights, loglik_tail=_tail(model.loglik_trace),
                      converged=model.converged)
    elif kind == "dpi":
        params = monitoring.FusionParams(mu=args.mu, delta=args.delta, eta=args.eta,
                                         window=args.window)
        model = monitoring.build_dpi(Xs, depth=args.depth, cpv=args.cpv, k_pca=args.layer_ks,
                                     k_ica=args.k, params=params, seed=args.seed)
        report.update(
            depth=model.depth,
            pca_dims=[p.k for p in model.pca_layers],
            ica_dims=[i.k for i in model.ica_layers],
            control_limits=[[f"L{l + 1}.{kd}={c.limit:.6g}" for kd, c in zip(monitoring.KINDS, row)]
                            for l, row in enumerate(model.limits)],
        )
    else:
        ks = args.layer_ks or ([args.k] * args.depth if args.k else None)
        if ks is None:
            raise UsageError(f"{kind} requires --layer-ks or --k")
        target = Y.values[:, 0] if args.task == "classification" and Y.m == 1 else Y.values
        if kind == "dpls":
            model = deep_pls.fit_dpls(Xs, target, args.depth, ks, task=args.task)
        else:
            maps = [deep_pls.MappingSpec(args.mapping, args.mapping_dim, args.seed + l, args.gamma)
                    for l in range(args.depth)]
            model = deep_pls.fit_gdpls(Xs, target, args.depth, maps, ks, task=args.task)
        meta["task"] = args.task
        prof = deep_pls.covariance_profile(model, Xs, target)
        report.update(depth=model.depth, layer_ks=model.layer_ks, task=args.task,
                      covariance_profile=prof.values)
    save_model(model, args.model, meta)
    _report(args, report, f"fitted {kind}")
    return 0


def _load(args, kinds):
    model, meta = load_model(args.model, with_meta=True)
    if model.kind not in kinds:
        raise LatentisError(f"{args.command} needs a {'/'.join(kinds)} model, got {model.kind!r}")
    return model, meta


def _inputs(data: Dataset, meta: dict) -> np.ndarray:
    X = data.columns(meta["x_names"]) if meta.get("x_names") else data
    scaler = meta.get("scaler")
    return apply_scaler(scaler, X.values) if scaler is not None else X.values


DETECT_HEADER = ["index", "DBS_T2", "DBS_QT", "DBS_I2", "DBS_QI", "ODBS", "is_fault"]


def cmd_detect(args) -> int:
    _require(args, "input", "model", "output")
    det, meta = _load(args, ("dpi",))
    data = load_csv(args.input, header=args.header)
    out = monitoring.detect_batch(det, _inputs(data, meta))
    rows = ([i, *out["dbs"][i], out["odbs"][i], bool(out["is_fault"][i])] for i in range(data.n))
    write_csv(args.output, DETECT_HEADER, rows)
    _report(args, {"samples": data.n, "faults": int(out["is_fault"].sum()),
                   "fault_fraction": float(out["is_fault"].mean())}, "detection")
    return 0


def _predict(model, meta, X):
    if model.kind == "pls":
        return lvm.pls_predict(model, X)
    return deep_pls.dpls_predict(model, X)


def cmd_predict(args) -> int:
    _require(args, "input", "model", "output")
    model, meta = _load(args, ("pls", "dpls", "gdpls"))
    data = load_csv(args.input, header=args.header)
    Yh = _predict(model, meta, _inputs(data, meta))
    names = meta.get("y_names") or [f"y{j + 1}" for j in range(np.atleast_2d(Yh).shape[1])]
    if Yh.ndim == 1:
        names = names[:1] if len(names) == 1 else ["label"]
        Yh = Yh[:, None]
    write_csv(args.output, names, Yh.tolist())
    _report(args, {"samples": data.n, "columns": names}, "prediction")
    return 0


def cmd_eval(args) -> int:
    _require(args, "input", "model")
    model, meta = load_model(args.model, with_meta=True)
    data = load_csv(args.input, header=args.header)
    report: dict = {"kind": model.kind, "samples": data.n}

    if model.kind == "dpi":
        if args.fault_col not in data.names:
            raise LatentisError(f"missing truth column {args.fault_col!r}")
        mask = data.columns([args.fault_col]).values[:, 0] != 0
        if args.predictions:
            flags = load_csv(args.predictions).columns(["is_fault"]).values[:, 0] != 0
        else:
            flags = monitoring.detect_batch(model, _inputs(data, meta))["is_fault"]
        if len(flags) != len(mask):
            raise LatentisError("prediction and truth row counts differ")
        report.update(
            detection_rate=float(flags[mask].mean()) if mask.any() else float("nan"),
            false_alarm_rate=float(flags[~mask].mean()) if (~mask).any() else float("nan"),
        )
    elif model.kind in ("pls", "dpls", "gdpls"):
        y_names = meta.get("y_names") or []
        missing = [c for c in y_names if c not in data.names]
        if not y_names or missing:
            raise LatentisError(f"missing truth column(s): {', '.join(missing or ['<none>'])}")
        truth = data.columns(y_names).values
        if args.predictions:
            pred = load_csv(args.predictions).values
        else:
            pred = _predict(model, meta, _inputs(data, meta))
            pred = pred[:, None] if pred.ndim == 1 else pred
        if len(pred) != len(truth):
            raise LatentisError("prediction and truth row counts differ")
        if meta.get("task") == "classification":
            report["accuracy"] = float(np.mean(pred[:, 0] == truth[:, 0]))
        else:
            err = pred - truth
            ss_res = np.sum(err**2, axis=0)
            ss_tot = np.sum((truth - truth.mean(axis=0)) ** 2, axis=0)
            report["rmse"] = float(np.sqrt(np.mean(err**2)))
            report["rmse_per_column"] = np.sqrt(np.mean(err**2, axis=0))
            with np.errstate(divide="ignore", invalid="ignore"):
                report["r2_per_column"] = 1.0 - ss_res / ss_tot
    elif model.kind in ("gmm", "fa"):
        X = _inputs(data, meta)
        ll = lvm.gmm_loglik(model, X) if model.kind == "gmm" else lvm.fa_loglik(model, X)
        report["loglik"] = ll
        report["loglik_per_sample"] = ll / data.n
    else:
        raise LatentisError(f"eval does not support {model.kind!r} models")
    _report(args, report, "evaluation")
    return 0


def cmd_gen(args) -> int:
    _require(args, "output")
    if args.kind == "hmm":
        A = np.array([[0.9, 0.1], [0.1, 0.9]])
        B = np.array([[0.8, 0.15, 0.05], [0.05, 0.15, 0.8]])
        spec = synth.HmmSpec(A, B, np.array([0.5, 0.5]), max(args.n // args.length, 1),
                             args.length, args.seed)
        obs, _ = synth.gen_hmm(spec)
        rows = [(i, s) for i, o in enumerate(obs) for s in o]
        write_csv(args.output, ["sequence", "symbol"], rows)
    elif args.kind == "gmm":
        r = synth.SynthRng(args.seed + 104729)
        means = 6.0 * r.normal((args.k, args.m))
        spec = synth.GmmSpec(np.full(args.k, 1.0 / args.k), means,
                             np.array([np.eye(args.m)] * args.k), args.n, args.seed)
        data, labels = synth.gen_gmm(spec)
        write_csv(args.output, [*data.names, "component"],
                  (list(row) + [int(c)] for row, c in zip(data.values, labels)))
    else:
        plant = synth.random_plant(args.m, args.k, args.n, seed=args.seed, noise=args.noise,
                                   plant_seed=args.plant_seed)
        if args.kind == "linear_gaussian":
            data, _ = synth.gen_linear_gaussian(plant)
            write_csv(args.output, data.names, data.values.tolist())
        else:
            onset = args.onset if args.onset is not None else args.n // 2
            spec = synth.FaultSpec(plant, onset, args.fault_vars, args.magnitude, args.mode)
            data, mask = synth.gen_process_with_fault(spec)
            write_csv(args.output, [*data.names, "fault"],
                      (list(row) + [int(f)] for row, f in zip(data.values, mask)))
    _report(args, {"kind": args.kind, "output": args.output}, "generated")
    return 0


COMMANDS = {"fit": cmd_fit, "detect": cmd_detect, "predict": cmd_predict,
            "eval": cmd_eval, "gen": cmd_gen}


def main(argv=None) -> int:
    try:
        parser, args = parse_args(argv)
    except SystemExit as exc:  # argparse usage errors and --help
        return exc.code if isinstance(exc.code, int) else 2
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore" if args.json else "default")
            return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"latentis: error: {exc}", file=sys.stderr)
        return 2
    except (LatentisError, ValueError, OSError) as exc:
        print(f"latentis: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
