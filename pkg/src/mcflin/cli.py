"""Command-line entry point: train, eval, experiment, synth."""

from __future__ import annotations

import argparse
import csv
import gzip
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import synth
from .augmentation import HingeConfig, LogisticConfig
from .data import (
    Dataset,
    SparseVector,
    parse_svmlight,
    serialize_svmlight,
)
from .evaluation import (
    DeletionSchedule,
    GridSpec,
    delete_features,
    evaluate,
    nightmare_curve,
)
from .noise import NoiseSpec
from .trainers import (
    train_dropout_logistic,
    train_dropout_svm,
    train_explicit_corruption,
    train_mcf_quadratic,
)
from .wls import ModelParams

TRAINERS = ("dropout-svm", "dropout-logistic", "mcf-quadratic", "explicit")
CSV_FIELDS = ("trainer", "noise", "q", "c", "ell", "deletion", "error",
              "n_test", "seed")


class ConfigError(ValueError):
    pass


def _open_text(path):
    if str(path).endswith(".gz"):
        return gzip.open(path, "rt")
    return open(path, "r")


def load_dataset(path, dim_hint=None, scale_maxabs=False):
    with _open_text(path) as fh:
        data = parse_svmlight(fh, dim_hint=dim_hint)
    if scale_maxabs:
        data = _scale_maxabs(data)
    return data


def _scale_maxabs(data):
    scale = np.zeros(data.dim)
    for x in data.examples:
        np.maximum.at(scale, x.indices, np.abs(x.values))
    scale[scale == 0.0] = 1.0
    examples = [SparseVector(x.indices, x.values / scale[x.indices])
                for x in data.examples]
    return Dataset(data.dim, examples, data.labels)


def _noise_from_args(args):
    kind = args.noise
    if kind == "none":
        return NoiseSpec.none()
    if kind == "dropout":
        return NoiseSpec.dropout(args.q)
    if kind == "gaussian":
        return NoiseSpec.gaussian(args.sigma2)
    if kind == "laplace":
        return NoiseSpec.laplace(args.scale)
    if kind == "poisson":
        return NoiseSpec.poisson()
    raise ConfigError(f"unknown noise kind {kind!r}")


def save_model(path, model, trainer, noise, c, ell):
    lines = [
        f"dim {model.dim}",
        f"trainer {trainer}",
        f"noise {noise.describe()}",
        f"c {c!r}",
        f"ell {ell!r}",
    ]
    lines += [f"{i} {v!r}" for i, v in enumerate(model.w)]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path):
    meta = {}
    coeffs = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            key, _, rest = line.partition(" ")
            if key.isdigit():
                coeffs[int(key)] = float(rest)
            else:
                meta[key] = rest
    dim = int(meta["dim"])
    w = np.zeros(dim + 1)
    for i, v in coeffs.items():
        w[i] = v
    return ModelParams(w, dim), meta


def _train_model(data, args):
    noise = _noise_from_args(args)
    if args.trainer == "dropout-svm":
        cfg = HingeConfig(c=args.c, ell=args.ell, max_iters=args.max_iters,
                          tol=args.tol)
        return train_dropout_svm(data, noise, cfg)
    if args.trainer == "dropout-logistic":
        cfg = LogisticConfig(c=args.c, max_iters=args.max_iters, tol=args.tol)
        return train_dropout_logistic(data, noise, cfg)
    if args.trainer == "mcf-quadratic":
        return train_mcf_quadratic(data, noise, args.c, variant=args.variant)
    if args.trainer == "explicit":
        cfg = HingeConfig(c=args.c, ell=args.ell, max_iters=args.max_iters,
                          tol=args.tol)
        rng = np.random.default_rng(args.seed)
        return train_explicit_corruption(data, noise, args.M, cfg, rng)
    raise ConfigError(f"unknown trainer {args.trainer!r}")


def _write_csv_rows(path, rows, fields):
    exists = os.path.exists(path) and os.path.getsize(path) > 0
    with open(path, "a", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        if not exists:
            writer.writeheader()
        for row in rows:
            writer.writerow(row)


def _ordered_map(fn, items, threads):
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def cmd_train(args):
    data = load_dataset(args.data, scale_maxabs=args.scale_maxabs)
    report = _train_model(data, args)
    noise = _noise_from_args(args)
    save_model(args.out, report.model, args.trainer, noise, args.c, args.ell)
    log_path = args.out + ".log"
    with open(log_path, "w") as fh:
        fh.write(f"converged {report.converged}\n")
        fh.write(f"iterations {report.state.iteration}\n")
        for i, v in enumerate(report.state.objective_trace):
            fh.write(f"{i} {v!r}\n")
    print(f"wrote {args.out} ({report.state.iteration} iterations, "
          f"converged={report.converged})")
    return 0


def cmd_eval(args):
    model, meta = load_model(args.model)
    test = load_dataset(args.test, dim_hint=model.dim,
                        scale_maxabs=args.scale_maxabs)
    if test.dim > model.dim:
        raise ConfigError(
            f"test dimension {test.dim} exceeds model dimension {model.dim}")
    if args.deletion > 0.0:
        rng = np.random.default_rng(args.seed)
        test = delete_features(test, args.deletion, rng)
    result = evaluate(model, test)
    row = {
        "trainer": meta.get("trainer", ""),
        "noise": meta.get("noise", ""),
        "q": args.q,
        "c": meta.get("c", ""),
        "ell": meta.get("ell", ""),
        "deletion": args.deletion,
        "error": result.error_rate,
        "n_test": result.n_test,
        "seed": args.seed,
    }
    print(f"error {result.error_rate:.6f} on {result.n_test} examples")
    if args.out:
        _write_csv_rows(args.out, [row], CSV_FIELDS)
    return 0


def _fit_factory(name, args):
    def fit(data, c, q):
        noise = NoiseSpec.dropout(q) if q > 0 else NoiseSpec.none()
        if name == "dropout-svm":
            cfg = HingeConfig(c=c, ell=args.ell, max_iters=args.max_iters,
                              tol=args.tol)
            return train_dropout_svm(data, noise, cfg).model
        if name == "dropout-logistic":
            cfg = LogisticConfig(c=c, max_iters=args.max_iters, tol=args.tol)
            return train_dropout_logistic(data, noise, cfg).model
        if name == "mcf-quadratic":
            return train_mcf_quadratic(data, noise, c).model
        raise ConfigError(f"unknown trainer {name!r}")

    return fit


def cmd_experiment(args):
    train = load_dataset(args.data, scale_maxabs=args.scale_maxabs)
    test = load_dataset(args.test, dim_hint=train.dim,
                        scale_maxabs=args.scale_maxabs)
    rows = []
    fields = list(CSV_FIELDS)
    if args.protocol == "binary-sweep":
        trainers = ("dropout-svm", "dropout-logistic", "mcf-quadratic")
        jobs = [(name, q) for name in trainers for q in args.grid_q]

        def run(job):
            name, q = job
            model = _fit_factory(name, args)(train, args.c, q)
            err = evaluate(model, test).error_rate
            return {"trainer": name, "noise": "dropout", "q": q, "c": args.c,
                    "ell": args.ell, "deletion": 0.0, "error": err,
                    "n_test": len(test), "seed": args.seed}

        rows = _ordered_map(run, jobs, args.threads)
    elif args.protocol == "explicit-vs-implicit":
        fields = fields[:5] + ["M"] + fields[5:]
        noise = NoiseSpec.dropout(args.q)
        cfg = HingeConfig(c=args.c, ell=args.ell, max_iters=args.max_iters,
                          tol=args.tol)

        def run(m):
            rng = np.random.default_rng((args.seed, m))
            report = train_explicit_corruption(train, noise, m, cfg, rng)
            err = evaluate(report.model, test).error_rate
            return {"trainer": "explicit", "noise": "dropout", "q": args.q,
                    "c": args.c, "ell": args.ell, "M": m, "deletion": 0.0,
                    "error": err, "n_test": len(test), "seed": args.seed}

        rows = _ordered_map(run, list(args.grid_m), args.threads)
        implicit = train_dropout_svm(train, noise, cfg)
        err = evaluate(implicit.model, test).error_rate
        rows.append({"trainer": "dropout-svm", "noise": "dropout", "q": args.q,
                     "c": args.c, "ell": args.ell, "M": "", "deletion": 0.0,
                     "error": err, "n_test": len(test), "seed": args.seed})
    elif args.protocol == "nightmare":
        trainers = {name: _fit_factory(name, args)
                    for name in ("dropout-svm", "dropout-logistic",
                                 "mcf-quadratic")}
        sched = DeletionSchedule(tuple(args.fractions), seed=args.seed)
        grid = GridSpec(tuple(args.grid_c), tuple(args.grid_q),
                        folds=args.folds, seed=args.seed)
        for name, fraction, err, c, q in nightmare_curve(
                trainers, train, test, sched, grid):
            rows.append({"trainer": name, "noise": "dropout", "q": q, "c": c,
                         "ell": args.ell, "deletion": fraction, "error": err,
                         "n_test": len(test), "seed": args.seed})
    else:
        raise ConfigError(f"unknown protocol {args.protocol!r}")
    _write_csv_rows(args.out, rows, fields)
    print(f"wrote {len(rows)} rows to {args.out}")
    if not args.no_plot:
        from .plotting import render_protocol_figure

        fig_path = os.path.splitext(args.out)[0] + ".png"
        render_protocol_figure(rows, args.protocol, fig_path)
        print(f"wrote {fig_path}")
    return 0


def cmd_synth(args):
    if args.kind == "blobs":
        train, test = synth.make_blobs(args.n, args.n_test, args.d, args.seed)
    elif args.kind == "redundant-sparse":
        train, test = synth.make_redundant_sparse(args.n, args.n_test, args.seed)
    else:
        raise ConfigError(f"unknown synthetic kind {args.kind!r}")
    for suffix, data in (("train", train), ("test", test)):
        path = f"{args.out}.{suffix}.svm"
        with open(path, "w") as fh:
            fh.write(serialize_svmlight(data))
        print(f"wrote {path} ({len(data)} examples, dim {data.dim})")
    return 0


def _read_config(path):
    values = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"bad config line {line!r}")
            key, _, val = line.partition("=")
            values[key.strip().replace("-", "_")] = val.strip()
    return values


def _float_list(text):
    return [float(tok) for tok in text.split(",") if tok]


def _int_list(text):
    return [int(tok) for tok in text.split(",") if tok]


def build_parser():
    parser = argparse.ArgumentParser(prog="mcflin", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    subparsers = {}

    def common(p):
        p.add_argument("--config", help="key=value config file; flags override")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
        p.add_argument("--scale-maxabs", action="store_true",
                       help="per-feature max-abs scaling at ingestion")

    def noise_flags(p):
        p.add_argument("--noise", default="none",
                       choices=("none", "dropout", "gaussian", "laplace",
                                "poisson"))
        p.add_argument("--q", type=float, default=0.0)
        p.add_argument("--sigma2", type=float, default=0.0)
        p.add_argument("--scale", type=float, default=1.0)

    def fit_flags(p):
        p.add_argument("--c", type=float, default=1.0)
        p.add_argument("--ell", type=float, default=1.0)
        p.add_argument("--max-iters", type=int, default=200)
        p.add_argument("--tol", type=float, default=1e-6)

    p = sub.add_parser("train", help="fit a model and write it to a text file")
    common(p)
    noise_flags(p)
    fit_flags(p)
    p.add_argument("--data", required=True)
    p.add_argument("--trainer", required=True, choices=TRAINERS)
    p.add_argument("--variant", default="hinge-form",
                   choices=("hinge-form", "logistic-form"))
    p.add_argument("--M", type=int, default=1, help="explicit-corruption copies")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a model file on a test set")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--deletion", type=float, default=0.0)
    p.add_argument("--q", type=float, default=0.0)
    p.add_argument("--out", help="CSV file to append the result row to")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("experiment", help="run a named protocol, emit CSV + figure")
    common(p)
    fit_flags(p)
    p.add_argument("--protocol", required=True,
                   choices=("binary-sweep", "explicit-vs-implicit", "nightmare"))
    p.add_argument("--data", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--q", type=float, default=0.5)
    p.add_argument("--grid-q", type=_float_list,
                   default=[0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])
    p.add_argument("--grid-c", type=_float_list, default=[0.1, 1.0, 10.0])
    p.add_argument("--grid-m", type=_int_list, default=[1, 4, 16, 64, 256])
    p.add_argument("--fractions", type=_float_list,
                   default=[0.0, 0.25, 0.5, 0.75])
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--out", required=True)
    p.add_argument("--no-plot", action="store_true",
                   help="skip rendering the figure next to the CSV")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("synth", help="generate synthetic train/test files")
    common(p)
    p.add_argument("--kind", required=True, choices=("blobs", "redundant-sparse"))
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--n-test", type=int, default=200)
    p.add_argument("--d", type=int, default=10)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    for name, sp in sub.choices.items():
        subparsers[name] = sp
    return parser, subparsers


def main(argv=None):
    parser, subparsers = build_parser()
    args, _ = parser.parse_known_args(argv)
    if getattr(args, "config", None):
        try:
            overrides = _read_config(args.config)
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        actions = {a.dest: a for a in subparsers[args.command]._actions}
        for key, val in overrides.items():
            if key not in actions:
                print(f"error: unknown config key {key!r}", file=sys.stderr)
                return 2
            action = actions[key]
            if action.type is not None:
                val = action.type(val)
            elif isinstance(action.default, bool):
                val = val.lower() in ("1", "true", "yes")
            setattr(args, key, val)
        # flags given on the command line win over config values
        args = parser.parse_args(argv, namespace=args)
    else:
        args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
