"""Command-line interface.

    phenoclust cluster --config run.cfg --k 10
    phenoclust audit   --input traits.csv --traits PH,SW --replications 1000
    phenoclust eigs    --input traits.csv --count 50
    phenoclust bench   --input blobs.csv --truth labels.csv --ks 10
    phenoclust synth   --n 2400 --m 8 --k 10 --output data/

Settings come from the defaults, then ``--config``, then the
``PHENOCLUST_OUTPUT`` environment variable (output directory only), then
flags.  Exit status: 0 success, 2 configuration error, 3 data error,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys

import numpy as np

from . import __version__
from .config import ALGORITHMS, SAMPLERS, load_config
from .errors import ConfigError, DataError, PhenoclustError
from .hclust import ENGINES, LINKAGES
from .pipeline import (
    bench_csv,
    eigenvalues_csv,
    emit_eigenvalue_plotdata,
    estimators_csv,
    load_dataset,
    pipeline_files,
    run_benchmark,
    run_estimator_audit,
    run_id,
    run_pipeline,
    sizes_csv,
    time_full_vs_sampled,
    write_outputs,
)
from .rng import stage_streams
from .simgraph import MEASURES
from .spectral import KINDS
from .synth import make_blobs
from .validate import VARIANTS

log = logging.getLogger("phenoclust")

# flag dest -> RunConfig field; flags left at None do not override anything
RUN_FLAGS = (
    "input",
    "delimiter",
    "traits",
    "categorical",
    "sample_size",
    "sampler",
    "algorithm",
    "measure",
    "laplacian",
    "linkage",
    "hc_engine",
    "k",
    "k_max",
    "seed",
    "restarts",
    "vq_restarts",
    "reverse_measure",
    "silhouette_variant",
    "row_normalize",
    "shuffle",
    "output",
    "workers",
)


def _csv_list(raw: str) -> list[str]:
    return [part.strip() for part in raw.split(",") if part.strip()]


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("run settings (override the config file)")
    g.add_argument("--config", help="key = value settings file")
    g.add_argument("--input", help="trait table (CSV, one row per unit, first column = unit id)")
    g.add_argument("--delimiter")
    g.add_argument("--traits", help="comma-separated trait subset")
    g.add_argument("--categorical", help="comma-separated categorical columns")
    g.add_argument(
        "--encode",
        action="append",
        default=[],
        metavar="COL=L1,L2,...",
        help="ordinal encoding of a categorical column (repeatable)",
    )
    g.add_argument("--sample-size", dest="sample_size")
    g.add_argument("--sampler", choices=SAMPLERS)
    g.add_argument("--algorithm", choices=ALGORITHMS)
    g.add_argument("--measure", choices=MEASURES)
    g.add_argument("--laplacian", choices=KINDS)
    g.add_argument("--linkage", choices=LINKAGES)
    g.add_argument("--hc-engine", dest="hc_engine", choices=ENGINES)
    g.add_argument("--k", help="number of clusters, or 'auto' for the eigengap rule")
    g.add_argument("--k-max", dest="k_max")
    g.add_argument("--seed")
    g.add_argument("--restarts")
    g.add_argument("--vq-restarts", dest="vq_restarts")
    g.add_argument("--reverse-measure", dest="reverse_measure", choices=MEASURES)
    g.add_argument("--silhouette-variant", dest="silhouette_variant", choices=VARIANTS)
    g.add_argument("--row-normalize", dest="row_normalize", action="store_const", const=True)
    g.add_argument("--shuffle", action="store_const", const=True, help="shuffle unit order before the pivotal contest")
    g.add_argument("--output", help="output directory")
    g.add_argument("--workers", help="threads for distance computations")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phenoclust", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cluster", help="sample, cluster, reverse-map and validate one table")
    _add_run_flags(p)
    p.add_argument("--write-similarity", action="store_true", help="also write similarity.csv")
    p.add_argument("--write-merges", action="store_true", help="also write merges.csv (hierarchical only)")

    p = sub.add_parser("audit", help="population totals against HT and Hajek estimates")
    _add_run_flags(p)
    p.add_argument("--audit-traits", dest="audit_traits", help="numeric traits to total (default: all numeric)")
    p.add_argument("--samplers", default=None, help="comma-separated samplers (default: the configured one)")
    p.add_argument("--replications", type=int, default=1)

    p = sub.add_parser("eigs", help="smallest Laplacian eigenvalues of the sampled similarity graph")
    _add_run_flags(p)
    p.add_argument("--count", type=int, default=50)

    p = sub.add_parser("bench", help="seed-matched sampler x algorithm comparison grid")
    _add_run_flags(p)
    p.add_argument("--samplers", default="pivotal,vq")
    p.add_argument("--algorithms", default="spectral,hierarchical")
    p.add_argument("--measures", default=None, help="default: the configured measure")
    p.add_argument("--ks", default=None, help="default: the configured k")
    p.add_argument("--truth", help="unit_id,cluster CSV with planted labels")
    p.add_argument("--time-full-hc", action="store_true", help="time unsampled HC against the sampled pipeline")
    p.add_argument("--repeats", type=int, default=5)

    p = sub.add_parser("synth", help="write a synthetic table with planted clusters")
    p.add_argument("--n", type=int, default=2400)
    p.add_argument("--m", type=int, default=8)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--separation", type=float, default=6.0, help="minimum centre distance in units of sigma")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--tail", choices=("gaussian", "student_t"), default="gaussian")
    p.add_argument("--df", type=float, default=2.0, help="degrees of freedom for student_t tails")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", default=None, help="output directory")
    return parser


def config_from_args(args: argparse.Namespace, environ=None):
    overrides = {key: getattr(args, key) for key in RUN_FLAGS}
    encodings = {}
    for item in args.encode:
        col, sep, labels = item.partition("=")
        if not sep or not col.strip():
            raise ConfigError(f"--encode expects COL=L1,L2,..., got {item!r}")
        encodings[col.strip()] = _csv_list(labels)
    overrides["encodings"] = encodings or None
    return load_config(args.config, overrides, environ)


def read_truth(path: str, unit_ids) -> np.ndarray:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(line for line in fh if not line.startswith("#")) if r]
    except OSError as exc:
        raise DataError(f"cannot read truth file {path}: {exc}") from exc
    if not rows or rows[0][:2] != ["unit_id", "cluster"]:
        raise DataError(f"{path}: expected header unit_id,cluster")
    try:
        lookup = {uid: int(c) for uid, c, *_ in rows[1:]}
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc
    missing = [u for u in unit_ids if u not in lookup]
    if missing:
        raise DataError(f"{path}: no planted label for {len(missing)} units, e.g. {missing[0]!r}")
    return np.array([lookup[u] for u in unit_ids])


def cmd_cluster(args) -> int:
    cfg = config_from_args(args)
    result = run_pipeline(cfg)
    files = pipeline_files(result)
    if args.write_similarity and result.clustering.similarity is not None:
        buf = io.StringIO()
        buf.write(f"# run={result.run}\n")
        result.clustering.similarity.to_csv(buf)
        files["similarity.csv"] = buf.getvalue()
    if args.write_merges:
        if result.clustering.merges is None:
            raise ConfigError("--write-merges needs algorithm = hierarchical")
        buf = io.StringIO()
        result.clustering.merges.to_csv(buf, header_comment=f"run={result.run}")
        files["merges.csv"] = buf.getvalue()
    write_outputs(cfg.output, files, result.manifest())
    s = result.silhouette
    overall = "n/a" if s is None else f"{s.overall:.4f}"
    print(f"run {result.run}: k={result.clustering.k}, silhouette {overall}, wrote {cfg.output}")
    return 0


def _manifest(command: str, cfg, dataset, run: str, **extra) -> dict:
    return {
        "run": run,
        "command": command,
        "version": __version__,
        "config": cfg.snapshot(),
        "input": {"path": dataset.source, "sha256": dataset.digest, "n": dataset.normalized.n},
        **extra,
    }


def cmd_audit(args) -> int:
    cfg = config_from_args(args)
    dataset = load_dataset(cfg)
    traits = _csv_list(args.audit_traits) if args.audit_traits else None
    samplers = _csv_list(args.samplers) if args.samplers else None
    rows = run_estimator_audit(cfg, traits, samplers, args.replications, dataset)
    run = run_id(cfg, dataset, f"audit:{samplers}:{traits}:{args.replications}")
    text = estimators_csv(rows, run)
    write_outputs(cfg.output, {"estimators.csv": text}, _manifest("audit", cfg, dataset, run))
    sys.stdout.write(text)
    return 0


def cmd_eigs(args) -> int:
    cfg = config_from_args(args)
    dataset = load_dataset(cfg)
    data = emit_eigenvalue_plotdata(cfg, args.count, dataset)
    run = run_id(cfg, dataset, f"eigs:{args.count}")
    manifest = _manifest("eigs", cfg, dataset, run, eigengap_k=data.eigengap_k, nodes=data.nodes)
    write_outputs(cfg.output, {"eigenvalues.csv": eigenvalues_csv(data, run)}, manifest)
    print(f"run {run}: {data.eigenvalues.size} eigenvalues of a {data.nodes}-node graph, eigengap k={data.eigengap_k}")
    return 0


def cmd_bench(args) -> int:
    cfg = config_from_args(args)
    dataset = load_dataset(cfg)
    truth = read_truth(args.truth, dataset.normalized.unit_ids) if args.truth else None
    measures = _csv_list(args.measures) if args.measures else None
    ks = [int(k) for k in _csv_list(args.ks)] if args.ks else None
    result = run_benchmark(
        cfg,
        samplers=_csv_list(args.samplers),
        algorithms=_csv_list(args.algorithms),
        measures=measures,
        ks=ks,
        truth=truth,
        dataset=dataset,
    )
    files = {"bench.csv": bench_csv(result)}
    for cell in result.cells:
        files[os.path.join("sizes", f"{cell.name}.csv")] = sizes_csv(cell, result.run)
    timing = {"cells": {c.name: c.seconds for c in result.cells}}
    if args.time_full_hc:
        timing["full_hc_vs_sampled"] = time_full_vs_sampled(cfg, dataset, args.repeats)
    manifest = _manifest("bench", cfg, dataset, result.run, timing=timing, truth=args.truth)
    write_outputs(cfg.output, files, manifest)
    sys.stdout.write(files["bench.csv"])
    if "full_hc_vs_sampled" in timing:
        print(f"full HC / sampled pipeline wall-time ratio: {timing['full_hc_vs_sampled']['speedup']:.1f}")
    return 0


def cmd_synth(args) -> int:
    outdir = args.output or os.environ.get("PHENOCLUST_OUTPUT") or "."
    rng = stage_streams(args.seed)["synth"]
    blobs = make_blobs(args.n, args.m, args.k, args.separation, args.sigma, rng, tail=args.tail, df=args.df)
    data, labels = io.StringIO(), io.StringIO()
    blobs.to_csv(data)
    blobs.labels_csv(labels)
    manifest = {
        "command": "synth",
        "version": __version__,
        "settings": {k: v for k, v in vars(args).items() if k not in ("output", "func", "verbose", "command")},
    }
    write_outputs(outdir, {"synthetic.csv": data.getvalue(), "labels.csv": labels.getvalue()}, manifest)
    print(f"wrote {args.n} x {args.m} table with {args.k} planted clusters to {outdir}")
    return 0


COMMANDS = {"cluster": cmd_cluster, "audit": cmd_audit, "eigs": cmd_eigs, "bench": cmd_bench, "synth": cmd_synth}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except PhenoclustError as exc:
        print(f"phenoclust {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
