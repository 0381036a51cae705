"""Command-line pipeline: split, cluster, train, eval, predict, synth.

Every subcommand is deterministic in (inputs, flags, seed) and records a
manifest with input/output content hashes and per-stage timings. Exit
codes: 0 success, 2 usage or validation error, 1 runtime failure. The
HYPERPROJ_LOG environment variable (debug/info/warning/error) controls
log verbosity.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import dataset as ds
from . import evaluation, synth, training
from .clustering import ClusterModel, fit_kmeans, offsets
from .embeddings import load_embeddings, vocab_hash
from .errors import HyperprojError, InputError
from .projection import ProjectionModel, Regularizer, load_model, save_model
from .training import AdamParams, TrainConfig

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _atomic_write(path: Path, write_fn) -> None:
    """Run write_fn against a temp name, then rename over the target."""
    tmp = path.with_name(path.name + f".tmp{os.getpid()}")
    try:
        write_fn(tmp)
        os.replace(tmp, path)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise


class Manifest:
    """Run record: config, input/output hashes, stage timings."""

    def __init__(self, command: str, config: dict):
        self.payload: dict = {"command": command, "config": config,
                              "inputs": {}, "outputs": {}, "timings": {}}
        self._t0 = time.monotonic()
        self._stage_start = self._t0

    def add_input(self, path: Path) -> None:
        self.payload["inputs"][str(path)] = _sha256(path)

    def add_output(self, path: Path) -> None:
        self.payload["outputs"][str(path)] = _sha256(path)

    def stage(self, name: str) -> None:
        now = time.monotonic()
        self.payload["timings"][name] = now - self._stage_start
        self._stage_start = now

    def write(self, path: Path) -> None:
        self.payload["timings"]["total"] = time.monotonic() - self._t0
        blob = json.dumps(self.payload, sort_keys=True, indent=2) + "\n"
        _atomic_write(path, lambda p: p.write_text(blob, encoding="utf-8"))


def _load_table(args, manifest: Manifest):
    path = Path(args.embeddings)
    table = load_embeddings(path, format=args.format, normalize=args.normalize)
    manifest.add_input(path)
    return table


def _check_vocab_hash(model: ProjectionModel, table) -> None:
    if model.vocab_hash and model.vocab_hash != vocab_hash(table):
        log.warning("embedding vocabulary differs from the one the model was trained on")


def _write_clusters_json(clusters: ClusterModel, path: Path) -> None:
    payload = {
        "k": clusters.k,
        "dim": clusters.dim,
        "inertia": clusters.inertia,
        "centroids": clusters.centroids.tolist(),
    }
    blob = json.dumps(payload, sort_keys=True) + "\n"
    _atomic_write(path, lambda p: p.write_text(blob, encoding="utf-8"))


def _read_clusters_json(path: Path) -> ClusterModel:
    if not path.is_file():
        raise InputError(f"cluster file not found: {path}")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
        centroids = np.array(payload["centroids"], dtype=np.float64)
        inertia = float(payload["inertia"])
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: malformed cluster file ({exc})") from None
    return ClusterModel(centroids, inertia)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_split(args) -> int:
    fractions = tuple(args.fractions)
    ds.validate_fractions(fractions)
    manifest = Manifest("split", {"relations": args.relations, "fractions": list(fractions),
                                  "seed": args.seed, "out": args.out})
    manifest.add_input(Path(args.relations))
    pairs = ds.load_relations(args.relations)
    positives = [p for p in pairs if p.relation == "hypernym"]
    negatives = [p for p in pairs if p.relation != "hypernym"]
    manifest.stage("load")
    assignment = ds.lexical_split(positives, fractions, args.seed)
    split = ds.RelationDataset(positives, assignment, negatives)
    manifest.stage("split")
    out_dir = Path(args.out)
    paths = ds.write_split(split, out_dir)
    for path in paths.values():
        manifest.add_output(path)
    manifest.stage("write")
    manifest.write(out_dir / "manifest.json")
    counts = {b: len(split.pairs_in(b)) for b in ds.BUCKETS}
    print(f"split {len(positives)} positive pairs -> "
          + ", ".join(f"{b}={n}" for b, n in counts.items()))
    return 0


def cmd_cluster(args) -> int:
    manifest = Manifest("cluster", {"embeddings": args.embeddings, "split_dir": args.split_dir,
                                    "k": args.k, "seed": args.seed, "max_iter": args.max_iter,
                                    "tol": args.tol, "normalize": args.normalize,
                                    "format": args.format, "out": args.out})
    table = _load_table(args, manifest)
    manifest.stage("load_embeddings")
    bound = ds.read_split_dir(args.split_dir, table)
    train_pairs = bound.pairs_in("train")
    if not train_pairs:
        raise InputError("training bucket is empty after binding")
    manifest.stage("load_relations")
    model = fit_kmeans(offsets(train_pairs, table), args.k, args.seed,
                       max_iter=args.max_iter, tol=args.tol)
    manifest.stage("fit")
    out = Path(args.out)
    _write_clusters_json(model, out)
    manifest.add_output(out)
    manifest.write(out.with_name(out.name + ".manifest.json"))
    print(f"k={model.k} clusters on {len(train_pairs)} offsets, inertia {model.inertia:.6g}")
    return 0


def _train_config(args) -> TrainConfig:
    return TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        init_std=args.init_std,
        adam=AdamParams(alpha=args.alpha),
        lam=args.lam,
        regularizer=Regularizer(args.reg),
        k=args.k,
        seed=args.seed,
        select_on=args.select_on,
    )


def cmd_train(args) -> int:
    cfg = _train_config(args)
    cfg.validate()
    manifest = Manifest("train", {
        "embeddings": args.embeddings, "split_dir": args.split_dir, "k": args.k,
        "reg": args.reg, "lambda": args.lam, "epochs": args.epochs,
        "batch_size": args.batch_size, "init_std": args.init_std, "alpha": args.alpha,
        "seed": args.seed, "select_on": args.select_on, "threads": args.threads,
        "clusters": args.clusters, "normalize": args.normalize, "format": args.format,
        "out": args.out,
    })
    table = _load_table(args, manifest)
    manifest.stage("load_embeddings")
    bound = ds.read_split_dir(args.split_dir, table)
    for name in ("train", "validation", "test", "negatives"):
        path = Path(args.split_dir) / f"{name}.tsv"
        if path.is_file():
            manifest.add_input(path)
    manifest.stage("load_relations")
    clusters = None
    if args.clusters:
        clusters = _read_clusters_json(Path(args.clusters))
        manifest.add_input(Path(args.clusters))
    model = training.train(bound, table, cfg, clusters=clusters, threads=args.threads)
    manifest.stage("train")
    out = Path(args.out)
    _atomic_write(out, lambda p: save_model(model, p))
    manifest.add_output(out)
    trace_path = Path(args.trace) if args.trace else out.with_name(out.name + ".trace.csv")
    _atomic_write(trace_path, lambda p: training.write_trace_csv(model, p))
    manifest.add_output(trace_path)
    manifest.stage("write")
    manifest.write(out.with_name(out.name + ".manifest.json"))
    losses = ", ".join("none" if v is None else f"{v:.6g}" for v in model.meta.final_losses)
    print(f"trained k={model.k} reg={model.regularizer.value} lambda={model.lam}; "
          f"final loss per cluster: {losses}")
    return 0


def cmd_eval(args) -> int:
    manifest = Manifest("eval", {"model": args.model, "embeddings": args.embeddings,
                                 "test": args.test, "l_max": args.l_max,
                                 "normalize": args.normalize, "format": args.format,
                                 "out": args.out})
    model = load_model(args.model)
    manifest.add_input(Path(args.model))
    table = _load_table(args, manifest)
    _check_vocab_hash(model, table)
    manifest.stage("load")
    pairs = ds.load_relations(args.test)
    pairs = [p for p in pairs if p.relation == "hypernym"]
    if not pairs:
        raise InputError(f"{args.test}: no hypernym pairs to evaluate")
    manifest.add_input(Path(args.test))
    report = evaluation.evaluate(model, table, pairs, l_max=args.l_max)
    manifest.stage("evaluate")
    config_echo = {
        "model": args.model, "test": args.test, "l_max": args.l_max,
        "k": model.k, "regularizer": model.regularizer.value, "lambda": model.lam,
        "seed": model.meta.seed, "epochs": model.meta.epochs,
        "batch_size": model.meta.batch_size,
    }
    out = Path(args.out)
    _atomic_write(out, lambda p: evaluation.write_report_json(report, p, config_echo))
    manifest.add_output(out)
    pp_path = Path(args.per_pair) if args.per_pair else out.with_name(out.name + ".pairs.tsv")
    _atomic_write(pp_path, lambda p: evaluation.write_per_pair_tsv(report, p))
    manifest.add_output(pp_path)
    manifest.stage("write")
    manifest.write(out.with_name(out.name + ".manifest.json"))
    shown = {i: report.hits[i - 1] for i in (1, 5, 10) if i <= report.l_max}
    curve = " ".join(f"hit@{i}={v:.4f}" for i, v in shown.items())
    print(f"{curve} auc={report.auc:.4f} n={report.n_pairs} skips={report.skips}")
    return 0


def cmd_predict(args) -> int:
    model = load_model(args.model)
    table = load_embeddings(args.embeddings, format=args.format, normalize=args.normalize)
    _check_vocab_hash(model, table)
    resolved = 0
    for word in args.words:
        if word not in table:
            print(f"warning: {word!r} is not in the vocabulary", file=sys.stderr)
            continue
        resolved += 1
        for rank, (cand, score) in enumerate(
                evaluation.predict_candidates(model, table, word, args.l), start=1):
            print(f"{word}\t{rank}\t{cand}\t{score:.9g}")
    return 0 if resolved else 1


def cmd_synth(args) -> int:
    cfg = synth.SynthConfig(dim=args.d, n_pairs=args.n, noise=args.noise,
                            distractors=args.distractors, seed=args.seed,
                            planted_clusters=args.clusters,
                            hyper_angle_deg=args.hyper_angle,
                            distractor_angle_deg=args.distractor_angle)
    cfg.validate()
    manifest = Manifest("synth", {
        "d": args.d, "n": args.n, "noise": args.noise, "distractors": args.distractors,
        "seed": args.seed, "clusters": args.clusters, "hyper_angle": args.hyper_angle,
        "distractor_angle": args.distractor_angle, "out": args.out,
    })
    table, relations = synth.make_fixture(cfg)
    manifest.stage("generate")
    paths = synth.write_fixture(table, relations, args.out)
    for path in paths.values():
        manifest.add_output(path)
    manifest.stage("write")
    manifest.write(Path(args.out) / "manifest.json")
    print(f"wrote {len(table)} words (dim {table.dim}) and {len(relations)} relations "
          f"to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_embedding_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--embeddings", required=True, help="embedding file")
    parser.add_argument("--format", choices=("text", "binary"), default="text",
                        help="embedding file format (default text)")
    parser.add_argument("--normalize", action="store_true",
                        help="L2-normalize embedding rows at load time")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hyperproj",
        description="Learn and evaluate per-cluster hypernym projection matrices.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("split", help="lexically disjoint train/validation/test split")
    p.add_argument("--relations", required=True, help="relations TSV")
    p.add_argument("--fractions", type=float, nargs=3, default=(0.8, 0.1, 0.1),
                   metavar=("TRAIN", "VAL", "TEST"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("cluster", help="fit k-means over training offsets")
    _add_embedding_flags(p)
    p.add_argument("--split-dir", required=True, help="directory written by split")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--out", required=True, help="output cluster JSON")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("train", help="train per-cluster projection matrices")
    _add_embedding_flags(p)
    p.add_argument("--split-dir", required=True, help="directory written by split")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--reg", choices=[r.value for r in Regularizer], default="none")
    p.add_argument("--lambda", dest="lam", type=float, default=0.1,
                   help="regularization weight (default 0.1)")
    p.add_argument("--epochs", type=int, default=700)
    p.add_argument("--batch-size", type=int, default=1024)
    p.add_argument("--init-std", type=float, default=0.1)
    p.add_argument("--alpha", type=float, default=0.001, help="Adam learning rate")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--select-on", choices=("final", "best_validation_hit10"),
                   default="final")
    p.add_argument("--clusters", help="precomputed cluster JSON from the cluster command")
    p.add_argument("--threads", type=int, default=1, help="parallel cluster workers")
    p.add_argument("--trace", help="loss trace CSV (default: <out>.trace.csv)")
    p.add_argument("--out", required=True, help="output model file")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="hit@l curve and AUC on a test TSV")
    _add_embedding_flags(p)
    p.add_argument("--model", required=True)
    p.add_argument("--test", required=True, help="test pairs TSV")
    p.add_argument("--l-max", type=int, default=10)
    p.add_argument("--per-pair", help="per-pair TSV (default: <out>.pairs.tsv)")
    p.add_argument("--out", required=True, help="output report JSON")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="ranked hypernym candidates for words")
    _add_embedding_flags(p)
    p.add_argument("--model", required=True)
    p.add_argument("--l", type=int, default=10, help="candidates per word")
    p.add_argument("words", nargs="+", help="query words")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("synth", help="generate a synthetic embedding+relations fixture")
    p.add_argument("--d", type=int, default=10, help="embedding dimension")
    p.add_argument("--n", type=int, default=1000, help="number of hypernym pairs")
    p.add_argument("--noise", type=float, default=0.0, help="hypernym noise std")
    p.add_argument("--distractors", type=int, default=0, help="synonyms per hyponym")
    p.add_argument("--clusters", type=int, default=1, help="planted mixing matrices")
    p.add_argument("--hyper-angle", type=float, default=90.0,
                   help="planted hyponym-hypernym angle in degrees (default 90)")
    p.add_argument("--distractor-angle", type=float, default=15.0,
                   help="distractor cone half-angle in degrees (default 15)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    return parser


def _configure_logging() -> None:
    level = os.environ.get("HYPERPROJ_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv: list[str] | None = None) -> int:
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except InputError as exc:
        log.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (HyperprojError, OSError) as exc:
        log.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
