"""Command-line interface.

Every subcommand writes one JSON-lines metrics record (``--metrics``, default
stdout) carrying ``schema_version``, the fully resolved configuration and the
results. Human-readable summaries go to stderr. Exit codes: 0 success,
2 usage or format error, 3 IO error, 4 numerical failure.
"""
import argparse
import csv
import json
import math
import os
import resource
import sys
import time

import numpy as np

from . import formats
from .em_batch import bic_scan, fit_batch, init_model
from .em_online import OnlineConfig, fit_online
from .errors import DegenerateComponentError, FormatError
from .matching import (
    Dictionary,
    full_match,
    hdgmm_match,
    match_many,
    normalize_signals,
    param_mae,
    svd_compress,
    svd_match,
    svd_reconstruct_all,
)
from .model import log_likelihood
from .reduction import (
    CompressedDataset,
    compressed_size_bytes,
    compression_report,
    reconstruct_dataset,
    reduce_dataset,
)
from .stiefel import StiefelSettings
from .synthetic import DictionaryGrid, add_noise, gen_synthetic_dictionary, random_model, sample_hdgmm

SCHEMA_VERSION = 1
EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4


class UsageError(Exception):
    pass


# -- argument helpers -------------------------------------------------------

def int_list(text):
    """``"4,6,8"`` or inclusive ranges ``"1-5"``, possibly mixed."""
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError(f"empty integer list {text!r}")
    return out


def float_list(text):
    try:
        out = [float(p) for p in str(text).split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from None
    if not out:
        raise argparse.ArgumentTypeError(f"empty number list {text!r}")
    return out


def _bool(text):
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def read_config(path):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            values[key.replace("-", "_")] = value
    return values


def _apply_config(parser, sub, argv):
    """Parse with config-file values as defaults so explicit flags win."""
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("command", nargs="?")
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config or known.command not in sub:
        return parser.parse_args(argv)
    target = sub[known.command]
    actions = {a.dest: a for a in target._actions}
    defaults = {}
    for key, raw in read_config(known.config).items():
        action = actions.get(key)
        if action is None or key in ("help", "config") or not action.option_strings:
            raise UsageError(f"unknown config key {key!r} for {known.command}")
        if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            value = _bool(raw)
        elif action.type is not None:
            try:
                value = action.type(raw)
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise UsageError(f"config key {key!r}: {exc}") from None
        else:
            value = raw
        if action.choices is not None and value not in action.choices:
            raise UsageError(f"config key {key!r}: {raw!r} not in {sorted(action.choices)}")
        defaults[key] = value
        action.required = False
    target.set_defaults(**defaults)
    return parser.parse_args(argv)


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value


def _emit(args, results, started):
    record = {
        "schema_version": SCHEMA_VERSION,
        "command": args.command,
        "config": {k: v for k, v in vars(args).items() if k != "func"},
        "results": results,
        "timing": {
            "wall_s": time.perf_counter() - started,
            "peak_rss_kb": resource.getrusage(resource.RUSAGE_SELF).ru_maxrss,
        },
    }
    line = json.dumps(_jsonable(record), sort_keys=True)
    if args.metrics in (None, "-"):
        print(line)
    else:
        with open(args.metrics, "a", encoding="utf-8") as f:
            f.write(line + "\n")


def _say(text):
    print(text, file=sys.stderr)


def _require_file(path):
    if not os.path.isfile(path):
        raise FileNotFoundError(f"no such file: {path}")


def _maybe_normalize(X, on):
    return normalize_signals(X) if on else X


# -- subcommands ------------------------------------------------------------

def cmd_gen_dict(args):
    grid = DictionaryGrid(
        t1=tuple(np.geomspace(args.t1_min, args.t1_max, args.n_t1)),
        t2=tuple(np.geomspace(args.t2_min, args.t2_max, args.n_t2)),
        df=tuple(np.linspace(args.df_min, args.df_max, args.n_df)),
        M=args.M,
        dt=args.dt,
        tr=args.tr,
    )
    dictionary = gen_synthetic_dictionary(grid)
    if args.shuffle:
        # grid order is far from stationary; streamed fits want random order
        order = np.random.default_rng((args.seed, 1)).permutation(dictionary.N)
        dictionary = Dictionary(dictionary.signals[order], dictionary.labels[order], dictionary.label_names)
    if args.snr is not None:
        dictionary = Dictionary(add_noise(dictionary.signals, args.snr, args.seed),
                                dictionary.labels, dictionary.label_names)
    formats.write_dictionary(args.out, dictionary, args.width)
    size = formats.dictionary_file_size(dictionary.N, dictionary.M, dictionary.label_names, args.width)
    _say(f"wrote {args.out}: N={dictionary.N} M={dictionary.M} bytes={size}")
    return {"N": dictionary.N, "M": dictionary.M, "bytes": size}


def cmd_gen_gmm(args):
    model = random_model(args.K, args.M, args.d, args.seed, separation=args.separation)
    Y, labels = sample_hdgmm(model, args.N, args.seed + 1)
    dictionary = Dictionary(Y, labels.astype(np.float64), ("component",))
    formats.write_dictionary(args.out, dictionary, args.width)
    if args.model_out:
        formats.write_model(args.model_out, model)
    size = formats.dictionary_file_size(args.N, args.M, ("component",), args.width)
    _say(f"wrote {args.out}: N={args.N} M={args.M} bytes={size}")
    return {"N": args.N, "M": args.M, "bytes": size}


def _streamed_log_likelihood(model, path, chunk_size, normalize):
    total, n = [], 0
    for chunk in formats.open_chunked(path, chunk_size):
        X = _maybe_normalize(chunk, normalize)
        total.append(log_likelihood(model, X))
        n += X.shape[0]
    ll = math.fsum(total)
    return ll, ll / n


def _noisy_chunks(reader, normalize, snr, seed):
    for i, chunk in enumerate(reader):
        X = _maybe_normalize(chunk, normalize)
        yield X if snr is None else add_noise(X, snr, (seed, i))


def cmd_fit(args):
    _require_file(args.data)
    if args.mode == "batch":
        dictionary = formats.read_dictionary(args.data)
        X = _maybe_normalize(dictionary.signals, args.normalize)
        train = X if args.train_snr is None else add_noise(X, args.train_snr, args.seed)
        model, trace = fit_batch(train, args.K, args.d, max_iter=args.max_iter,
                                 rel_tol=args.rel_tol, seed=args.seed)
        progress = {"iterations": trace.iterations, "converged": trace.converged,
                    "monotone": trace.is_monotone()}
    else:
        reader = formats.open_chunked(args.data, args.chunk_size)
        head, have = [], 0
        for X in _noisy_chunks(reader, args.normalize, args.train_snr, args.seed):
            head.append(X)
            have += X.shape[0]
            if have >= args.init_size:
                break
        init = init_model(np.concatenate(head)[: args.init_size], args.K, args.d, seed=args.seed)
        cfg = OnlineConfig(
            alpha=args.alpha, t0=args.t0, batch_size=args.batch_size, n_burn=args.n_burn,
            basis_mode=args.basis_mode, stiefel=StiefelSettings(seed=args.seed),
        )
        holdout = None
        if args.holdout:
            holdout = _maybe_normalize(formats.read_dictionary(args.holdout).signals, args.normalize)
        stream = _noisy_chunks(reader, args.normalize, args.train_snr, args.seed)
        model, trace = fit_online(stream, args.K, args.d, cfg, init, holdout=holdout)
        progress = {"batches": trace.iterations, "records": trace.records,
                    "starved_updates": trace.starved}
        if holdout is not None:
            progress["holdout_avg_log_likelihood"] = trace.log_likelihood[-1]
    formats.write_model(args.out, model)
    ll, avg = _streamed_log_likelihood(model, args.data, args.chunk_size, args.normalize)
    _say(f"wrote {args.out}: K={model.K} d={model.d} log-likelihood={ll:.6g}")
    return {"K": model.K, "M": model.M, "d": model.d, "log_likelihood": ll,
            "avg_log_likelihood": avg, "weights": model.weights, **progress}


def cmd_compress(args):
    _require_file(args.data)
    _require_file(args.model)
    model = formats.read_model(args.model)
    reader = formats.open_chunked(args.data, args.chunk_size)
    if reader.M != model.M:
        raise UsageError(f"dictionary has M={reader.M}, model has M={model.M}")
    ids, coords = [], []
    for chunk in reader:
        part = reduce_dataset(model, _maybe_normalize(chunk, args.normalize))
        ids.append(part.cluster_ids)
        coords.append(part.coords)
    cds = CompressedDataset(model, np.concatenate(ids), np.concatenate(coords))
    formats.write_compressed(args.out, cds, args.width)
    size = formats.compressed_file_size(cds.count, model.K, model.M, model.d, args.width)
    counts = np.bincount(cds.cluster_ids, minlength=model.K)
    _say(f"wrote {args.out}: N={cds.count} d={model.d} bytes={size}")
    return {"N": cds.count, "d": model.d, "bytes": size,
            "payload_bytes": compressed_size_bytes(cds.count, model.d, args.width),
            "cluster_counts": counts}


def cmd_reconstruct(args):
    _require_file(args.compressed)
    cds = formats.read_compressed(args.compressed)
    Y = reconstruct_dataset(cds)
    labels, names = np.empty((cds.count, 0)), ()
    if args.labels_from:
        src = formats.read_dictionary(args.labels_from)
        if src.N != cds.count:
            raise UsageError(f"label source has {src.N} rows, compressed has {cds.count}")
        labels, names = src.labels, src.label_names
    results = {"N": cds.count, "M": cds.model.M}
    if args.reference:
        ref = formats.read_dictionary(args.reference)
        if ref.signals.shape != Y.shape:
            raise UsageError(f"reference shape {ref.signals.shape} != {Y.shape}")
        results["mae"] = float(np.mean(np.abs(_maybe_normalize(ref.signals, args.normalize) - Y)))
    formats.write_dictionary(args.out, Dictionary(Y, labels, names))
    _say(f"wrote {args.out}: N={cds.count} M={cds.model.M}")
    return results


def _size_query(args):
    rows = []
    for d in args.d:
        rep = compression_report(args.size_query, args.M, d, args.coord_bytes, args.original_bytes)
        rows.append(rep)
        line = f"N={rep['count']} d={d}: {rep['compressed_gb']:.2f} Go, ratio vs raw {100 * rep['ratio_raw']:.1f}%"
        if rep["ratio_stated"] is not None:
            line += f", vs stated {100 * rep['ratio_stated']:.1f}%"
        if rep["discrepancy"]:
            line += " [below the 97% headline against the raw-float size]"
        _say(line)
    return {"size_query": rows}


def cmd_evaluate(args):
    if args.size_query is not None:
        return _size_query(args)
    if not args.data:
        raise UsageError("evaluate needs a dictionary file or --size-query")
    _require_file(args.data)
    dictionary = formats.read_dictionary(args.data)
    clean = dictionary.unit_signals
    rows = []
    for snr in args.snr:
        noisy = clean if math.isinf(snr) else add_noise(clean, snr, args.seed)
        for d in args.d:
            if not 1 <= d < clean.shape[1]:
                raise UsageError(f"d={d} outside [1, M-1]")
            sc = svd_compress(Dictionary(noisy, dictionary.labels), d)
            rows.append({"method": "svd", "d": d, "snr": snr,
                         "mae": float(np.mean(np.abs(svd_reconstruct_all(sc) - clean))),
                         "size_bytes": compressed_size_bytes(dictionary.N, d, args.coord_bytes)})
            model, _ = fit_batch(noisy, args.K, d, max_iter=args.max_iter,
                                 rel_tol=args.rel_tol, seed=args.seed)
            rec = reconstruct_dataset(reduce_dataset(model, noisy))
            rows.append({"method": "hdgmm", "d": d, "snr": snr,
                         "mae": float(np.mean(np.abs(rec - clean))),
                         "size_bytes": compressed_size_bytes(dictionary.N, d, args.coord_bytes)})
    _say(f"{'method':<8}{'d':>4}{'snr':>8}{'MAE':>12}{'size (B)':>14}")
    for r in rows:
        _say(f"{r['method']:<8}{r['d']:>4}{r['snr']:>8g}{r['mae']:>12.5f}{r['size_bytes']:>14}")
    if args.csv:
        with open(args.csv, "w", newline="", encoding="utf-8") as f:
            w = csv.DictWriter(f, fieldnames=["method", "d", "snr", "mae", "size_bytes"])
            w.writeheader()
            w.writerows(rows)
    return {"table": rows}


def _read_results(path):
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    if not rows or rows[0][:3] != ["query", "index", "score"]:
        raise FormatError(f"{path} is not a match results file")
    body = rows[1:]
    index = np.array([int(r[1]) for r in body], dtype=np.int64)
    params = np.array([[float(v) for v in r[3:]] for r in body], dtype=np.float64)
    return index, params.reshape(len(body), -1)


def cmd_match(args):
    for p in (args.source, args.queries):
        _require_file(p)
    queries = formats.read_dictionary(args.queries).signals
    if args.method == "hdgmm":
        if not args.labels_from:
            raise UsageError("hdgmm matching needs --labels-from DICT")
        cds = formats.read_compressed(args.source)
        labels_dict = formats.read_dictionary(args.labels_from)
        if labels_dict.N != cds.count:
            raise UsageError(f"label source has {labels_dict.N} rows, compressed has {cds.count}")
        labels, names = labels_dict.labels, labels_dict.label_names
        M = cds.model.M
        top_n = min(args.top_n, cds.model.K)

        def fn(q):
            return hdgmm_match(cds, labels, cds.model, q, top_n=top_n, metric=args.metric)
    else:
        dictionary = formats.read_dictionary(args.source)
        labels, names, M = dictionary.labels, dictionary.label_names, dictionary.M
        if args.method == "full":
            dictionary.unit_signals  # warm the cache before threads share it

            def fn(q):
                return full_match(dictionary, q)
        else:
            if args.d is None:
                raise UsageError("svd matching needs --d")
            sc = svd_compress(dictionary, args.d)

            def fn(q):
                return svd_match(sc, labels, q)
    if queries.shape[1] != M:
        raise UsageError(f"queries have M={queries.shape[1]}, source has M={M}")
    results = match_many(fn, queries, args.threads)
    index = np.array([r.index for r in results], dtype=np.int64)
    params = np.array([r.params for r in results]).reshape(len(results), -1)
    with open(args.out, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["query", "index", "score", *names])
        for i, r in enumerate(results):
            w.writerow([i, r.index, repr(float(r.score)), *(repr(float(v)) for v in r.params)])
    out = {"queries": len(results), "method": args.method}
    if args.reference:
        ref_index, ref_params = _read_results(args.reference)
        if ref_index.shape != index.shape or ref_params.shape != params.shape:
            raise UsageError("reference results do not match the query set")
        out["agreement"] = float(np.mean(ref_index == index))
        out["param_mae"] = dict(zip(names, param_mae(params, ref_params).tolist()))
        _say(f"agreement {100 * out['agreement']:.2f}%  MAE " +
             " ".join(f"{k}={v:.4g}" for k, v in out["param_mae"].items()))
    return out


def cmd_bic_scan(args):
    _require_file(args.data)
    X = _maybe_normalize(formats.read_dictionary(args.data).signals, args.normalize)
    scan = bic_scan(X, args.K, args.d, max_iter=args.max_iter, rel_tol=args.rel_tol, seed=args.seed)
    rows = scan.as_rows()
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as f:
            w = csv.DictWriter(f, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)
    if scan.best is None:
        raise DegenerateComponentError(-1)
    _say(f"BIC argmin: K={scan.best[0]} d={scan.best[1]}")
    return {"best": {"K": scan.best[0], "d": scan.best[1]}, "grid": rows}


def cmd_info(args):
    _require_file(args.path)
    header = formats.info(args.path)
    _say(json.dumps(_jsonable(header), indent=2, sort_keys=True))
    return header


# -- parser -----------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file; explicit flags take precedence")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    common.add_argument("--metrics", default="-", help="JSON-lines output path ('-' = stdout)")

    parser = argparse.ArgumentParser(prog="hdgmm", description="HD-GMM dictionary compression and matching")
    subs = parser.add_subparsers(dest="command", required=True)
    sub = {}

    def add(name, func, help_text):
        p = subs.add_parser(name, parents=[common], help=help_text)
        p.set_defaults(func=func)
        sub[name] = p
        return p

    p = add("gen-dict", cmd_gen_dict, "write the toy relaxation dictionary")
    g = DictionaryGrid()
    p.add_argument("--out", required=True)
    p.add_argument("--n-t1", type=int, default=len(g.t1))
    p.add_argument("--n-t2", type=int, default=len(g.t2))
    p.add_argument("--n-df", type=int, default=len(g.df))
    p.add_argument("--t1-min", type=float, default=g.t1[0])
    p.add_argument("--t1-max", type=float, default=g.t1[-1])
    p.add_argument("--t2-min", type=float, default=g.t2[0])
    p.add_argument("--t2-max", type=float, default=g.t2[-1])
    p.add_argument("--df-min", type=float, default=g.df[0])
    p.add_argument("--df-max", type=float, default=g.df[-1])
    p.add_argument("--M", type=int, default=g.M)
    p.add_argument("--dt", type=float, default=g.dt)
    p.add_argument("--tr", type=float, default=None, help="scalar TR (default: varying schedule)")
    p.add_argument("--snr", type=float, default=None, help="add noise at this SNR (dB)")
    p.add_argument("--shuffle", action="store_true", help="write rows in a seeded random order")
    p.add_argument("--width", type=int, choices=(4, 8), default=8)

    p = add("gen-gmm", cmd_gen_gmm, "sample records from a random HD-GMM")
    p.add_argument("--out", required=True)
    p.add_argument("--model-out")
    p.add_argument("--K", type=int, default=3)
    p.add_argument("--M", type=int, default=10)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--N", type=int, default=2000)
    p.add_argument("--separation", type=float, default=3.0)
    p.add_argument("--width", type=int, choices=(4, 8), default=8)

    p = add("fit", cmd_fit, "fit an HD-GMM by batch or online EM")
    p.add_argument("data")
    p.add_argument("--out", required=True)
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--mode", choices=("batch", "online"), default="batch")
    p.add_argument("--normalize", action="store_true", help="scale records to unit norm")
    p.add_argument("--train-snr", type=float, default=None, help="fit on a noisy copy at this SNR (dB)")
    p.add_argument("--max-iter", type=int, default=200)
    p.add_argument("--rel-tol", type=float, default=1e-7)
    p.add_argument("--chunk-size", type=int, default=4096)
    p.add_argument("--init-size", type=int, default=5000)
    p.add_argument("--batch-size", type=int, default=256)
    p.add_argument("--alpha", type=float, default=0.6)
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--n-burn", type=int, default=None)
    p.add_argument("--basis-mode", choices=("eigen", "stiefel"), default="stiefel")
    p.add_argument("--holdout")

    p = add("compress", cmd_compress, "reduce every record in its most probable cluster")
    p.add_argument("data")
    p.add_argument("model")
    p.add_argument("--out", required=True)
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--width", type=int, choices=(4, 8), default=8)
    p.add_argument("--chunk-size", type=int, default=4096)

    p = add("reconstruct", cmd_reconstruct, "expand a compressed file back to full records")
    p.add_argument("compressed")
    p.add_argument("--out", required=True)
    p.add_argument("--labels-from")
    p.add_argument("--reference", help="dictionary to report the reconstruction MAE against")
    p.add_argument("--normalize", action="store_true", help="normalize the reference first")

    p = add("evaluate", cmd_evaluate, "SVD vs HD-GMM reconstruction MAE and sizes")
    p.add_argument("data", nargs="?")
    p.add_argument("--d", type=int_list, default=[4, 6, 8])
    p.add_argument("--K", type=int, default=8)
    p.add_argument("--snr", type=float_list, default=[math.inf, 15.0])
    p.add_argument("--max-iter", type=int, default=15)
    p.add_argument("--rel-tol", type=float, default=1e-5)
    p.add_argument("--coord-bytes", type=int, choices=(4, 8), default=8)
    p.add_argument("--csv")
    p.add_argument("--size-query", type=lambda s: int(float(s)), default=None,
                   help="record count for a header-only size computation")
    p.add_argument("--M", type=int, default=260, help="record length for --size-query")
    p.add_argument("--original-bytes", type=float, default=None)

    p = add("match", cmd_match, "match query signals against a dictionary")
    p.add_argument("source", help="dictionary (full, svd) or compressed file (hdgmm)")
    p.add_argument("queries")
    p.add_argument("--out", required=True)
    p.add_argument("--method", choices=("full", "svd", "hdgmm"), default="full")
    p.add_argument("--top-n", type=int, default=1)
    p.add_argument("--metric", choices=("coords", "full"), default="coords")
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--labels-from")
    p.add_argument("--reference", help="results file to compare against")

    p = add("bic-scan", cmd_bic_scan, "fit a (K, d) grid and pick the BIC minimizer")
    p.add_argument("data")
    p.add_argument("--K", type=int_list, default=[1, 2, 3, 4, 5])
    p.add_argument("--d", type=int_list, default=[1, 2, 3, 4])
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--max-iter", type=int, default=200)
    p.add_argument("--rel-tol", type=float, default=1e-7)
    p.add_argument("--out")

    p = add("info", cmd_info, "validate a file and print its header")
    p.add_argument("path")
    return parser, sub


def main(argv=None):
    parser, sub = build_parser()
    started = time.perf_counter()
    try:
        args = _apply_config(parser, sub, argv)
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        results = args.func(args)
        _emit(args, results, started)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except DegenerateComponentError as exc:
        _say(f"error: degenerate fit: {exc}")
        return EXIT_NUMERIC
    except (UsageError, FormatError) as exc:
        _say(f"error: {exc}")
        return EXIT_USAGE
    except OSError as exc:
        _say(f"error: {exc}")
        return EXIT_IO
    except np.linalg.LinAlgError as exc:
        _say(f"error: numerical failure: {exc}")
        return EXIT_NUMERIC
    except ValueError as exc:
        _say(f"error: {exc}")
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
