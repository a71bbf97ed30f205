"""End-to-end runs: ingest, sample, cluster, reverse-map, validate, report.

Every artifact written by a run carries the run id, a digest of the
result-determining settings and the input bytes, so artifacts can be tied
back to ``manifest.json``.
"""

from __future__ import annotations

import hashlib
import io
import json
import logging
import os
import shutil
import statistics
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .assign import assign_remaining
from .assignment import SAMPLED, ClusterAssignment, same_partition
from .config import RunConfig
from .errors import ConfigError, DataError, NumericalError, PhenoclustError
from .hclust import MergeHistory, merge_history
from .ingest import FeatureTable, NormalizedTable, encode_categorical, normalize, parse_table
from .rng import stage_streams
from .sampling import (
    EstimateReport,
    InclusionPlan,
    SampleIndexSet,
    hajek_estimate,
    ht_estimate,
    inclusion_probabilities,
    pivotal_sample,
    vq_sample,
)
from .simgraph import SimilarityMatrix, pairwise_distances, similarity_matrix
from .spectral import SpectralEmbedding, cluster_embedding, eigengap_estimate_k, embed
from .validate import SilhouetteReport, silhouette

log = logging.getLogger(__name__)

STAGES = (
    "ingest",
    "sampling",
    "similarity",
    "eigensolve",
    "kmeans",
    "agglomeration",
    "reverse_map",
    "silhouette",
)


class StageTimer:
    def __init__(self):
        self.timings = {name: 0.0 for name in STAGES}

    @contextmanager
    def stage(self, name: str):
        t0 = time.perf_counter()
        try:
            yield
        except PhenoclustError as exc:
            raise type(exc)(f"stage {name}: {exc}") from exc
        except (np.linalg.LinAlgError, FloatingPointError) as exc:
            raise NumericalError(f"stage {name}: {exc}") from exc
        finally:
            self.timings[name] += time.perf_counter() - t0


@dataclass(frozen=True)
class Dataset:
    table: FeatureTable
    normalized: NormalizedTable
    digest: str
    source: str | None = None


def dataset_from_text(text: str, config: RunConfig, source: str | None = None) -> Dataset:
    table = parse_table(io.StringIO(text), schema=config.schema, delimiter=config.delimiter, traits=config.traits)
    encoded = encode_categorical(table, config.encodings)
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    return Dataset(table, normalize(encoded), digest, source)


def load_dataset(config: RunConfig) -> Dataset:
    if not config.input:
        raise ConfigError("no input file configured")
    try:
        with open(config.input, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read input {config.input}: {exc}") from exc
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise DataError(f"input {config.input} is not UTF-8: {exc}") from exc
    return dataset_from_text(text, config, source=config.input)


def dataset_from_array(values: np.ndarray, unit_ids=None, names=None) -> Dataset:
    table = FeatureTable.from_array(values, unit_ids, names)
    digest = hashlib.sha256(np.ascontiguousarray(values, dtype=float).tobytes()).hexdigest()
    return Dataset(table, normalize(table), digest)


def run_id(config: RunConfig, dataset: Dataset, command: str) -> str:
    payload = json.dumps({"command": command, "config": config.snapshot(), "input": dataset.digest}, sort_keys=True)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def draw_sample(
    config: RunConfig, dataset: Dataset, streams
) -> tuple[InclusionPlan | None, SampleIndexSet | None]:
    norm = dataset.normalized
    if config.sampler == "none":
        return None, None
    if config.sample_size >= norm.n:
        raise ConfigError(f"sample_size {config.sample_size} must be smaller than n = {norm.n}")
    plan = inclusion_probabilities(norm.deviations, config.sample_size, n_traits=norm.m)
    if config.sampler == "pivotal":
        sample = pivotal_sample(plan, streams["sampling"], shuffle=config.shuffle)
    else:
        sample = vq_sample(norm.values, config.sample_size, streams["vq"], restarts=config.vq_restarts)
    return plan, sample


@dataclass
class Clustering:
    labels: np.ndarray
    k: int
    embedding: SpectralEmbedding | None = None
    eigengap_k: int | None = None
    merges: MergeHistory | None = None
    similarity: SimilarityMatrix | None = None


def cluster_rows(
    X: np.ndarray, config: RunConfig, kmeans_rng: np.random.Generator, timer: StageTimer
) -> Clustering:
    """Cluster the (sampled) rows with the configured algorithm."""
    N = X.shape[0]
    if config.algorithm == "spectral":
        with timer.stage("similarity"):
            W = similarity_matrix(X, config.measure, workers=config.workers)
        want = config.k_max if config.auto_k else config.k
        if want > N:
            raise ConfigError(f"k = {want} exceeds the {N} units being clustered")
        with timer.stage("eigensolve"):
            emb = embed(W, want, config.laplacian)
        gap_k = eigengap_estimate_k(emb.eigenvalues, min(config.k_max, emb.eigenvalues.size)) if emb.eigenvalues.size >= 2 else None
        k = gap_k if config.auto_k else config.k
        with timer.stage("kmeans"):
            if k == 1:
                labels = np.zeros(N, dtype=np.intp)
            else:
                labels = cluster_embedding(emb, k, kmeans_rng, config.restarts, config.row_normalize)
        return Clustering(labels, k, embedding=emb, eigengap_k=gap_k, similarity=W)
    k = config.k
    if k > N:
        raise ConfigError(f"k = {k} exceeds the {N} units being clustered")
    with timer.stage("similarity"):
        geometry = "euclidean" if config.linkage == "ward" else config.measure
        D = pairwise_distances(X, geometry, workers=config.workers)
    with timer.stage("agglomeration"):
        stop_at = k if config.hc_engine == "naive" else 1
        history = merge_history(X, config.measure, config.linkage, config.hc_engine, stop_at=stop_at, distances=D)
        labels = history.cut(k)
    return Clustering(labels, k, merges=history)


def estimate_totals(
    table: FeatureTable,
    plan: InclusionPlan,
    sample: SampleIndexSet,
    traits: Sequence[str] | None = None,
    sampler: str = "pivotal",
) -> list[EstimateReport]:
    traits = _numeric_traits(table, traits)
    reports = []
    for name in traits:
        values = np.asarray(table.column(name), dtype=float)
        reports.append(
            EstimateReport(
                trait=name,
                actual_total=float(values.sum()),
                ht_estimate=ht_estimate(values, plan, sample),
                hajek_estimate=hajek_estimate(values, plan, sample, table.n),
                sampler=sampler,
            )
        )
    return reports


def _numeric_traits(table: FeatureTable, traits: Sequence[str] | None) -> list[str]:
    if traits is None:
        return [c.name for c in table.columns if c.kind == "numeric"]
    out = []
    for name in traits:
        col = table.columns[table.column_index(name)]
        if col.kind != "numeric":
            raise ConfigError(f"trait {name!r} is categorical; population totals need numeric traits")
        out.append(name)
    return out


@dataclass
class PipelineResult:
    config: RunConfig
    dataset: Dataset
    run: str
    assignment: ClusterAssignment
    sample_assignment: ClusterAssignment
    silhouette: SilhouetteReport | None
    estimates: list[EstimateReport]
    clustering: Clustering
    plan: InclusionPlan | None
    sample: SampleIndexSet | None
    timings: dict[str, float]
    wall_time: float
    notes: list[str] = field(default_factory=list)

    def manifest(self, artifacts: dict[str, str] | None = None) -> dict:
        norm = self.dataset.normalized
        return {
            "run": self.run,
            "command": "cluster",
            "version": __version__,
            "config": self.config.snapshot(),
            "input": {
                "path": self.dataset.source,
                "sha256": self.dataset.digest,
                "n": norm.n,
                "m": norm.m,
                "traits": list(norm.names),
            },
            "k": self.clustering.k,
            "eigengap_k": self.clustering.eigengap_k,
            "timings": self.timings,
            "wall_time": self.wall_time,
            "artifacts": artifacts or {},
            "notes": self.notes,
        }


def run_pipeline(config: RunConfig, dataset: Dataset | None = None) -> PipelineResult:
    """Ingest, sample, cluster the sample, reverse-map the rest and validate."""
    config.validate()
    t_start = time.perf_counter()
    timer = StageTimer()
    if dataset is None:
        with timer.stage("ingest"):
            dataset = load_dataset(config)
    norm = dataset.normalized
    streams = stage_streams(config.seed)
    notes: list[str] = []

    with timer.stage("sampling"):
        plan, sample = draw_sample(config, dataset, streams)
    idx = np.arange(norm.n) if sample is None else sample.indices
    clustering = cluster_rows(norm.values[idx], config, streams["kmeans"], timer)
    sampled = ClusterAssignment(idx, clustering.labels, clustering.k, (SAMPLED,) * idx.size, norm.unit_ids)
    if sampled.empty_clusters:
        notes.append(f"empty clusters after sample clustering: {sampled.empty_clusters}")

    with timer.stage("reverse_map"):
        if sample is None:
            full = sampled
        else:
            full = assign_remaining(norm, sampled, config.reverse_measure or config.measure)

    report = None
    with timer.stage("silhouette"):
        labels = full.labels_by_position(norm.n)
        if np.unique(labels).size >= 2:
            report = silhouette(norm.values, labels, config.measure, config.silhouette_variant)
            sample_sizes = sampled.sizes
            report.extra.update(
                {
                    "run": run_id(config, dataset, "cluster"),
                    "sample_cluster_sizes": sample_sizes.tolist(),
                    "sample_singleton_clusters": [int(c) for c in np.flatnonzero(sample_sizes == 1)],
                    "empty_clusters": full.empty_clusters,
                }
            )
        else:
            notes.append("fewer than 2 non-empty clusters; silhouette skipped")

    estimates = [] if sample is None else estimate_totals(dataset.table, plan, sample, sampler=config.sampler)
    return PipelineResult(
        config=config,
        dataset=dataset,
        run=run_id(config, dataset, "cluster"),
        assignment=full,
        sample_assignment=sampled,
        silhouette=report,
        estimates=estimates,
        clustering=clustering,
        plan=plan,
        sample=sample,
        timings=timer.timings,
        wall_time=time.perf_counter() - t_start,
        notes=notes,
    )


# ---------------------------------------------------------------- audit


@dataclass(frozen=True)
class AuditRow:
    report: EstimateReport
    replications: int


def run_estimator_audit(
    config: RunConfig,
    traits: Sequence[str] | None = None,
    samplers: Iterable[str] | None = None,
    replications: int = 1,
    dataset: Dataset | None = None,
) -> list[AuditRow]:
    """Population totals against HT and Hajek estimates, averaged over draws.

    The VQ sampler has no design probabilities of its own; its sample is
    weighted with the same deviation-based probabilities as the pivotal
    design.
    """
    config.validate()
    if replications < 1:
        raise ConfigError("replications must be positive")
    dataset = dataset or load_dataset(config)
    table = dataset.table
    names = _numeric_traits(table, traits)
    samplers = list(samplers or [config.sampler])
    rows: list[AuditRow] = []
    for sampler in samplers:
        cfg = replace(config, sampler=sampler).validate()
        streams = stage_streams(config.seed)
        ht = {name: [] for name in names}
        hj = {name: [] for name in names}
        actual = {}
        reps = 1 if sampler == "none" else replications
        for _ in range(reps):
            plan, sample = draw_sample(cfg, dataset, streams)
            if plan is None:
                plan = InclusionPlan.census(table.n)
                sample = SampleIndexSet(np.arange(table.n), "census")
            for rep in estimate_totals(table, plan, sample, names, sampler):
                ht[rep.trait].append(rep.ht_estimate)
                hj[rep.trait].append(rep.hajek_estimate)
                actual[rep.trait] = rep.actual_total
        for name in names:
            rows.append(
                AuditRow(
                    EstimateReport(
                        trait=name,
                        actual_total=actual[name],
                        ht_estimate=float(np.mean(ht[name])),
                        hajek_estimate=float(np.mean(hj[name])),
                        sampler=sampler,
                    ),
                    reps,
                )
            )
    return rows


def estimators_csv(rows: Sequence[AuditRow | EstimateReport], run: str) -> str:
    out = io.StringIO()
    out.write(f"# run={run}\n")
    out.write("trait,sampler,actual,ht,hajek,replications\n")
    for row in rows:
        rep, reps = (row.report, row.replications) if isinstance(row, AuditRow) else (row, 1)
        actual = "" if rep.actual_total is None else repr(rep.actual_total)
        out.write(f"{rep.trait},{rep.sampler},{actual},{rep.ht_estimate!r},{rep.hajek_estimate!r},{reps}\n")
    return out.getvalue()


# ---------------------------------------------------------------- eigenvalues


@dataclass
class EigenvalueData:
    eigenvalues: np.ndarray
    eigengap_k: int | None
    nodes: int


def emit_eigenvalue_plotdata(config: RunConfig, count: int = 50, dataset: Dataset | None = None) -> EigenvalueData:
    """Smallest ``count`` Laplacian eigenvalues of the (sampled) similarity graph."""
    config.validate()
    if config.algorithm != "spectral":
        raise ConfigError("eigenvalue output needs algorithm = spectral")
    dataset = dataset or load_dataset(config)
    streams = stage_streams(config.seed)
    _, sample = draw_sample(config, dataset, streams)
    X = dataset.normalized.values
    if sample is not None:
        X = X[sample.indices]
    if count > X.shape[0]:
        raise ConfigError(f"asked for {count} eigenvalues of a {X.shape[0]}-node graph")
    emb = embed(similarity_matrix(X, config.measure, workers=config.workers), count, config.laplacian)
    gap_k = eigengap_estimate_k(emb.eigenvalues, min(config.k_max, count)) if count >= 2 else None
    return EigenvalueData(emb.eigenvalues, gap_k, X.shape[0])


def eigenvalues_csv(data: EigenvalueData, run: str) -> str:
    out = io.StringIO()
    out.write(f"# run={run}\n")
    out.write("index,eigenvalue\n")
    for i, v in enumerate(data.eigenvalues, start=1):
        out.write(f"{i},{float(v)!r}\n")
    return out.getvalue()


# ---------------------------------------------------------------- benchmark


@dataclass(frozen=True)
class BenchCell:
    sampler: str
    algorithm: str
    measure: str
    k: int
    sample_size: int
    silhouette: float
    sample_singletons: int
    singletons: int
    size_skew: float
    size_ratio: float
    sizes: tuple[int, ...]
    exact_recovery: bool | None
    seconds: float

    @property
    def name(self) -> str:
        return f"{self.sampler}-{self.algorithm}-{self.measure}-k{self.k}"


@dataclass
class BenchResult:
    run: str
    cells: list[BenchCell]
    timing: dict = field(default_factory=dict)


def _bench_cell(config: RunConfig, dataset: Dataset, sample: SampleIndexSet, D: np.ndarray, truth) -> BenchCell:
    t0 = time.perf_counter()
    norm = dataset.normalized
    timer = StageTimer()
    idx = sample.indices
    # Fresh streams per cell: results do not depend on cell order or worker count.
    clustering = cluster_rows(norm.values[idx], config, stage_streams(config.seed)["kmeans"], timer)
    sampled = ClusterAssignment(idx, clustering.labels, clustering.k, (SAMPLED,) * idx.size, norm.unit_ids)
    full = assign_remaining(norm, sampled, config.reverse_measure or config.measure)
    labels = full.labels_by_position(norm.n)
    report = silhouette(None, labels, config.measure, config.silhouette_variant, distances=D)
    sizes = full.sizes
    nonempty = sizes[sizes > 0]
    return BenchCell(
        sampler=config.sampler,
        algorithm=config.algorithm,
        measure=config.measure,
        k=clustering.k,
        sample_size=idx.size,
        silhouette=report.overall,
        sample_singletons=int(np.sum(sampled.sizes == 1)),
        singletons=len(report.singleton_clusters),
        size_skew=float(nonempty.max() / np.median(nonempty)),
        size_ratio=float(nonempty.max() / nonempty.min()),
        sizes=tuple(int(s) for s in sizes),
        exact_recovery=None if truth is None else same_partition(labels, truth),
        seconds=time.perf_counter() - t0,
    )


def run_benchmark(
    config: RunConfig,
    samplers: Sequence[str] = ("pivotal", "vq"),
    algorithms: Sequence[str] = ("spectral", "hierarchical"),
    measures: Sequence[str] | None = None,
    ks: Sequence[int] | None = None,
    truth: np.ndarray | None = None,
    dataset: Dataset | None = None,
    workers: int | None = None,
) -> BenchResult:
    """Seed-matched comparison grid over samplers, algorithms, measures and k.

    All cells share the input, the seed and therefore the drawn samples; the
    silhouette is computed over all ``n`` units after reverse mapping.
    """
    config.validate()
    dataset = dataset or load_dataset(config)
    norm = dataset.normalized
    measures = list(measures or [config.measure])
    ks = list(ks or [config.k])
    if any(k is None for k in ks):
        raise ConfigError("benchmark grids need explicit k values")
    workers = config.workers if workers is None else workers
    samples = {}
    for sampler in samplers:
        cfg = replace(config, sampler=sampler).validate()
        _, samples[sampler] = draw_sample(cfg, dataset, stage_streams(config.seed))
        if samples[sampler] is None:
            samples[sampler] = SampleIndexSet(np.arange(norm.n), "none")
    jobs = []
    for measure in measures:
        D = pairwise_distances(norm.values, measure, workers=workers)
        for sampler in samplers:
            for algorithm in algorithms:
                for k in ks:
                    cfg = replace(config, sampler=sampler, algorithm=algorithm, measure=measure, k=k, workers=1)
                    jobs.append((cfg.validate(), samples[sampler], D))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(lambda job: _bench_cell(job[0], dataset, job[1], job[2], truth), jobs))
    else:
        cells = [_bench_cell(cfg, dataset, s, D, truth) for cfg, s, D in jobs]
    return BenchResult(run_id(config, dataset, "bench"), cells)


def time_full_vs_sampled(config: RunConfig, dataset: Dataset, repeats: int = 5) -> dict:
    """Median wall time of the sampled pipeline against unsampled HC on all units.

    Ingest is excluded from both sides.  The sampled side includes
    silhouette validation over all units, the HC side only distances and
    agglomeration, so the ratio errs against the sampled pipeline.
    """
    sampled_cfg = replace(config, algorithm="spectral", sampler="pivotal").validate()
    full_cfg = replace(config, algorithm="hierarchical", sampler="none", hc_engine="naive").validate()
    sampled_times, full_times = [], []
    for _ in range(repeats):
        result = run_pipeline(sampled_cfg, dataset)
        sampled_times.append(sum(v for name, v in result.timings.items() if name != "ingest"))
        t0 = time.perf_counter()
        cluster_rows(dataset.normalized.values, full_cfg, stage_streams(config.seed)["kmeans"], StageTimer())
        full_times.append(time.perf_counter() - t0)
    sampled_med = statistics.median(sampled_times)
    full_med = statistics.median(full_times)
    return {
        "repeats": repeats,
        "sampled_pipeline_seconds": sampled_med,
        "full_hc_seconds": full_med,
        "speedup": full_med / sampled_med if sampled_med > 0 else float("inf"),
    }


def bench_csv(result: BenchResult) -> str:
    out = io.StringIO()
    out.write(f"# run={result.run}\n")
    out.write(
        "sampler,algorithm,measure,k,sample_size,silhouette,sample_singletons,"
        "singletons,size_skew,size_ratio,exact_recovery\n"
    )
    for c in result.cells:
        exact = "" if c.exact_recovery is None else str(c.exact_recovery).lower()
        out.write(
            f"{c.sampler},{c.algorithm},{c.measure},{c.k},{c.sample_size},{c.silhouette!r},"
            f"{c.sample_singletons},{c.singletons},{c.size_skew!r},{c.size_ratio!r},{exact}\n"
        )
    return out.getvalue()


def sizes_csv(cell: BenchCell, run: str) -> str:
    out = io.StringIO()
    out.write(f"# run={run} cell={cell.name}\n")
    out.write("cluster,size\n")
    for c, s in enumerate(cell.sizes):
        out.write(f"{c},{s}\n")
    return out.getvalue()


# ---------------------------------------------------------------- output


def _digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def write_outputs(outdir: str, files: dict[str, str], manifest: dict) -> dict[str, str]:
    """Write ``files`` plus ``manifest.json`` into ``outdir`` all-or-nothing.

    Files are staged in a temporary directory next to ``outdir`` and moved
    in only once every one of them was written.
    """
    os.makedirs(outdir, exist_ok=True)
    digests = {name: _digest(text) for name, text in sorted(files.items())}
    manifest = dict(manifest, artifacts=digests)
    staging = tempfile.mkdtemp(prefix=".staging-", dir=outdir)
    try:
        for name, text in files.items():
            path = os.path.join(staging, name)
            os.makedirs(os.path.dirname(path), exist_ok=True)
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        with open(os.path.join(staging, "manifest.json"), "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        moved = []
        try:
            for name in list(files) + ["manifest.json"]:
                dest = os.path.join(outdir, name)
                os.makedirs(os.path.dirname(dest), exist_ok=True)
                os.replace(os.path.join(staging, name), dest)
                moved.append(dest)
        except OSError:
            for dest in moved:
                os.remove(dest)
            raise
    finally:
        shutil.rmtree(staging, ignore_errors=True)
    return digests


def pipeline_files(result: PipelineResult) -> dict[str, str]:
    run = result.run
    files = {}
    buf = io.StringIO()
    result.assignment.to_csv(buf, header_comment=f"run={run}")
    files["assignment.csv"] = buf.getvalue()
    if result.silhouette is not None:
        files["silhouette.json"] = result.silhouette.to_json()
        files["silhouette.txt"] = f"# run={run}\n" + result.silhouette.to_text()
        buf = io.StringIO()
        result.silhouette.histogram_csv(buf, header_comment=f"run={run}")
        files["cluster_sizes.csv"] = buf.getvalue()
    if result.estimates:
        files["estimators.csv"] = estimators_csv(result.estimates, run)
    emb = result.clustering.embedding
    if emb is not None:
        data = EigenvalueData(emb.eigenvalues, result.clustering.eigengap_k, emb.vectors.shape[0])
        files["eigenvalues.csv"] = eigenvalues_csv(data, run)
    return files
