"""Staged pipeline: every stage reads its inputs from disk, writes into
``<out>/<stage>/`` and records itself in ``<out>/manifest.json``."""
import logging
import os
import time
from dataclasses import asdict, dataclass, field

import numpy as np
import pandas as pd

import green_complexity
from green_complexity.models import bipartite, complexity, green, null_model, relatedness
from green_complexity.pipeline import preprocessing
from green_complexity.pipeline.plot_data import write_plot_data
from green_complexity.src import startup
from green_complexity.src.config import STAGES
from green_complexity.src.data.codes import COMPATIBLE, label
from green_complexity.src.data.matrices import tag_green
from green_complexity.src.errors import ConfigError, GreenComplexityError
from green_complexity.src.utils import export

logger = logging.getLogger(__name__)

MANIFEST = "manifest.json"
ERROR_REPORT = "error.json"
PACKAGE_LOGGER = "green_complexity"


@dataclass
class StageRecord:
    """Manifest entry of one stage."""
    status: str = "pending"
    params: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    convergence: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    seconds: float = 0.0


@dataclass
class RunManifest:
    """Config snapshot, input digests and per-stage records of a run."""
    version: str = green_complexity.__version__
    config: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)
    stages: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)

    def write(self, output_dir):
        return export.write_json(self.to_dict(), os.path.join(output_dir, MANIFEST))

    @classmethod
    def load(cls, output_dir):
        path = os.path.join(output_dir, MANIFEST)
        if not os.path.isfile(path):
            return cls()
        document = export.read_json(path)
        stages = {name: StageRecord(**entry) for name, entry in document.get("stages", {}).items()}
        return cls(document.get("version"), document.get("config", {}), document.get("inputs", {}), stages)


class WarningCollector(logging.Handler):
    """Keeps the WARNING (and worse) messages emitted while a stage runs."""

    def __init__(self):
        super().__init__(level=logging.WARNING)
        self.messages = []

    def emit(self, record):
        self.messages.append(record.getMessage())


class StageContext:
    """What a stage function sees: the config, its work directory, and the
    slots it fills in for the manifest."""

    def __init__(self, config, workdir, inputs=None):
        self.config = config
        self.output_dir = config.output_dir
        self.workdir = workdir
        self.inputs = inputs or {}
        self.params = {}
        self.convergence = {}

    def path(self, filename):
        return os.path.join(self.workdir, filename)

    def upstream(self, stage, filename, key=None):
        """Upstream artifact, unless ``key`` names an explicit input override."""
        if key is not None and self.inputs.get(key):
            return self.inputs[key]
        return preprocessing.upstream_path(self.output_dir, stage, filename)


def stage_ingest(ctx):
    config = ctx.config
    reports = {}
    for layer, (frame, report) in preprocessing.ingest_layers(config).items():
        export.write_records(frame, ctx.path(preprocessing.records_file(layer)))
        reports[layer] = report.to_dict()
    export.write_json(reports, ctx.path("ingest_report.json"))
    ctx.params = {
        "strict": config.strict,
        "count_mode": config.count_mode,
        "geo_level": config.geo_level,
        "patent_scheme": config.patent_scheme,
        "trade_schema": config.trade_schema,
    }


def stage_rca(ctx):
    config = ctx.config
    weights = preprocessing.layer_matrix(config.output_dir, config.layer, config.period, config.digits)
    rca = bipartite.compute_rca(weights)
    export.write_matrix(weights, weights.weights, ctx.path("weights.csv"))
    export.write_matrix(rca, rca.values, ctx.path("rca.csv"), threshold=config.threshold)
    ctx.params = {"layer": config.layer, "period": config.period, "digits": config.digits}


def stage_binarize(ctx):
    rca = preprocessing.read_rca(ctx.upstream("rca", "rca.csv"))
    m = bipartite.binarize(rca, ctx.config.threshold)
    export.write_binary(m, ctx.path("m.csv"))
    profile = bipartite.degrees(m)
    export.write_csv(
        pd.DataFrame({"id": list(m.geos), "diversification": profile.diversification}),
        ctx.path("diversification.csv"),
    )
    export.write_csv(
        pd.DataFrame({"id": m.activity_labels, "ubiquity": profile.ubiquity}),
        ctx.path("ubiquity.csv"),
    )
    ctx.params = {"threshold": ctx.config.threshold}


def _specialization_matrix(ctx):
    return bipartite.drop_empty(export.read_binary(ctx.upstream("binarize", "m.csv", "matrix")))


def stage_complexity(ctx):
    config = ctx.config
    m = _specialization_matrix(ctx)
    ctx.params = {"methods": list(config.methods)}
    if "eci" in config.methods:
        eci, pci = complexity.eci_pci(m)
        export.write_scores(eci, ctx.path("eci.csv"))
        export.write_scores(pci, ctx.path("pci.csv"))
        pairs = complexity.aggregation_paradox(m, pci)
        export.write_csv(pd.DataFrame(pairs, columns=["geo", "other", "average_pci"]),
                         ctx.path("aggregation_paradox.csv"))
        ctx.convergence["eci"] = {**eci.convergence.to_dict(), **eci.flags}
    if "fitness" in config.methods:
        fitness, quality = complexity.fitness_complexity(
            m, tol=config.tol, max_iter=config.max_iter, scale=config.scale, reference=config.reference,
        )
        export.write_scores(fitness, ctx.path("fitness.csv"))
        export.write_scores(quality, ctx.path("complexity.csv"))
        ctx.convergence["fitness"] = fitness.convergence.to_dict()
        ctx.params.update({"tol": config.tol, "max_iter": config.max_iter,
                           "scale": config.scale, "reference": config.reference})
    if config.exogenous_q:
        q_ref = export.read_scores(config.exogenous_q, axis=complexity.ACTIVITY, method="Complexity")
        export.write_scores(complexity.exogenous_fitness(m, q_ref), ctx.path("exogenous_fitness.csv"))
        ctx.params["exogenous_q"] = config.exogenous_q
    if config.exogenous_pci:
        pci_ref = export.read_scores(config.exogenous_pci, axis=complexity.ACTIVITY, method="PCI")
        export.write_scores(complexity.exogenous_eci(m, pci_ref), ctx.path("exogenous_eci.csv"))
        ctx.params["exogenous_pci"] = config.exogenous_pci


def stage_nestedness(ctx):
    report = bipartite.nestedness(export.read_binary(ctx.upstream("binarize", "m.csv", "matrix")))
    export.write_json(_finite({
        "score": report.score,
        "rows_score": report.rows_score,
        "columns_score": report.columns_score,
        "defined": report.defined,
        "row_order": report.ordered_geos,
        "column_order": report.ordered_activities,
    }), ctx.path("nestedness.json"))
    write_plot_data(report, ctx.path("nestedness_cells.csv"))


def stage_proximity(ctx):
    m = _specialization_matrix(ctx)
    net = relatedness.proximity(m)
    export.write_proximity(net, ctx.path("proximity.csv"))
    edges = net.edges()
    export.write_csv(edges, ctx.path("proximity_edges.csv"))
    export.write_graph(edges, ctx.path("proximity_graph.json"), nodes=net.labels,
                       attributes={"kind": "proximity", "period": net.period, "layer": net.layer})
    density = relatedness.relatedness_density(net, m)
    export.write_matrix(m, density.values, ctx.path("density.csv"))


def stage_assist(ctx):
    config = ctx.config
    y2 = config.period
    y1 = config.period - config.lag
    m_src = preprocessing.layer_binary(config.output_dir, config.source_layer, y1, config.digits, config.threshold)
    m_dst = preprocessing.layer_binary(config.output_dir, config.target_layer, y2, config.digits, config.threshold)
    b = relatedness.assist_matrix(m_src, m_dst, y1, y2)
    export.write_binary(m_src, ctx.path("m_source.csv"))
    export.write_binary(m_dst, ctx.path("m_target.csv"))
    export.write_assist(b, ctx.path("assist.csv"))
    edges = b.edges()
    export.write_csv(edges, ctx.path("assist_edges.csv"))
    export.write_graph(edges, ctx.path("assist_graph.json"), directed=True, attributes={
        "kind": "assist", "source_layer": b.source_layer, "target_layer": b.target_layer,
        "y1": y1, "y2": y2,
    })
    ctx.params = {
        "source_layer": config.source_layer, "target_layer": config.target_layer,
        "y1": y1, "y2": y2, "lag": config.lag, "digits": config.digits, "threshold": config.threshold,
    }


def stage_validate(ctx):
    config = ctx.config
    m_src = export.read_binary(ctx.upstream("assist", "m_source.csv"))
    m_dst = export.read_binary(ctx.upstream("assist", "m_target.csv"))
    b = export.read_assist(ctx.upstream("assist", "assist.csv"))
    null_src = null_model.fit_bicm(m_src)
    null_dst = null_model.fit_bicm(m_dst)
    network = null_model.validate_links(
        b, null_src, null_dst, samples=config.samples, alpha=config.alpha,
        correction=config.correction, seed=config.seed,
    )
    edges = network.edges()
    export.write_csv(edges, ctx.path("validated_edges.csv"))
    export.write_graph(edges, ctx.path("validated_graph.json"), directed=True, attributes={
        "kind": "validated-assist", "alpha": config.alpha, "correction": config.correction,
        "samples": config.samples, "seed": config.seed,
    })
    export.write_csv(network.table(), ctx.path("p_values.csv"))
    ctx.params = {"samples": config.samples, "alpha": config.alpha,
                  "correction": config.correction, "seed": config.seed}
    ctx.convergence = {
        "bicm_source": {"iterations": null_src.iterations, "residual": null_src.residual},
        "bicm_target": {"iterations": null_dst.iterations, "residual": null_dst.residual},
        "significant_links": int(network.significant.sum()),
        "tested_links": network.n_tested,
    }


def stage_green(ctx):
    config = ctx.config
    m = _specialization_matrix(ctx)
    pci = export.read_scores(ctx.upstream("complexity", "pci.csv", "pci"), axis=complexity.ACTIVITY)
    net = export.read_proximity(ctx.upstream("proximity", "proximity.csv", "proximity"))
    if net.labels != m.activity_labels:
        net = relatedness.proximity(m)
    classification = preprocessing.green_classification(config)
    mask = tag_green(m, classification)
    scores = green.green_scores(m, pci, net, mask, rank_transform=config.rank_transform,
                                weighting=config.gcp_weighting)
    export.write_csv(scores.to_frame(), ctx.path("green_scores.csv"))
    ctx.params = {"green_list": config.green_list_name(), "rank_transform": config.rank_transform,
                  "gcp_weighting": config.gcp_weighting, "green_activities": len(scores.green_activities)}
    quality_path = os.path.join(config.output_dir, "complexity", "complexity.csv")
    if os.path.isfile(quality_path):
        quality = export.read_scores(quality_path, axis=complexity.ACTIVITY)
        sectoral = complexity.sectoral_fitness(m, quality, mask, name=classification.name)
        export.write_scores(sectoral, ctx.path("green_fitness.csv"))
    if os.path.isfile(os.path.join(config.output_dir, "assist", "assist.csv")):
        _green_assist_potential(ctx, classification)


def _significant_links(path, b):
    """Boolean link mask of B from a p-value table of the validate stage."""
    table = pd.read_csv(path, dtype={"source": str, "target": str})
    significant = table.pivot(index="source", columns="target", values="significant")
    significant = significant.reindex(
        index=[label(a) for a in b.source_activities],
        columns=[label(a) for a in b.target_activities],
    )
    return significant.eq(True).to_numpy()


def _green_assist_potential(ctx, classification):
    config = ctx.config
    target_scheme = config.layer_scheme(config.target_layer)
    if config.green_list_scheme() not in COMPATIBLE[target_scheme]:
        logger.info("green list cannot tag the %s target layer; no assist potential", config.target_layer)
        return
    out = config.output_dir
    m_src = export.read_binary(os.path.join(out, "assist", "m_source.csv"))
    m_dst = export.read_binary(os.path.join(out, "assist", "m_target.csv"))
    b = export.read_assist(os.path.join(out, "assist", "assist.csv"))
    mask = tag_green(m_dst, classification)
    if not mask.any():
        logger.info("no green activity in the %s target layer; no assist potential", config.target_layer)
        return
    links = None
    p_values = os.path.join(out, "validate", "p_values.csv")
    if os.path.isfile(p_values):
        links = _significant_links(p_values, b)
    potential = green.green_assist_potential(b, m_src, m_dst, mask, links=links)
    export.write_scores(potential, ctx.path("green_assist_potential.csv"))
    ctx.params["assist_links"] = potential.flags["links"]


def stage_report(ctx):
    """Plot-ready tables and a summary of whatever upstream stages produced."""
    config = ctx.config
    out = config.output_dir
    summary = {}
    for name in ("fitness", "eci", "exogenous_fitness", "exogenous_eci"):
        path = os.path.join(out, "complexity", f"{name}.csv")
        if os.path.isfile(path):
            write_plot_data(export.read_scores(path, axis=complexity.GEO), ctx.path(f"{name}_curve.csv"))
            summary[name] = True
    m_path = os.path.join(out, "binarize", "m.csv")
    if os.path.isfile(m_path):
        report = bipartite.nestedness(export.read_binary(m_path))
        write_plot_data(report, ctx.path("nestedness_cells.csv"))
        summary["nestedness"] = report.score
    proximity_path = os.path.join(out, "proximity", "proximity.csv")
    if os.path.isfile(proximity_path):
        write_plot_data(export.read_proximity(proximity_path), ctx.path("proximity_edges.csv"),
                        cutoff=config.proximity_cutoff)
    validated_path = os.path.join(out, "validate", "validated_edges.csv")
    if os.path.isfile(validated_path):
        edges = pd.read_csv(validated_path, dtype={"source": str, "target": str})
        export.write_csv(pd.DataFrame({
            "x": edges["source"], "y": edges["target"], "label": "assist", "value": edges["weight"],
        }), ctx.path("validated_edges.csv"))
        summary["significant_links"] = len(edges)
    if not summary:
        raise ConfigError("nothing to report; run the metric stages first")
    export.write_json(_finite(summary), ctx.path("summary.json"))
    ctx.params = {"proximity_cutoff": config.proximity_cutoff}


STAGE_FUNCTIONS = {
    "ingest": stage_ingest,
    "rca": stage_rca,
    "binarize": stage_binarize,
    "complexity": stage_complexity,
    "nestedness": stage_nestedness,
    "proximity": stage_proximity,
    "assist": stage_assist,
    "validate": stage_validate,
    "green": stage_green,
    "report": stage_report,
}


def _finite(document):
    """Replace non-finite floats so the manifest stays valid JSON."""
    if isinstance(document, dict):
        return {k: _finite(v) for k, v in document.items()}
    if isinstance(document, (list, tuple)):
        return [_finite(v) for v in document]
    if isinstance(document, (float, np.floating)) and not np.isfinite(document):
        return None
    return document


def run_stage(name, config, manifest, inputs=None):
    """Run one stage into ``<stage>.partial`` and move it into place.

    On failure the partial outputs move to ``<stage>.quarantine`` and the
    error is re-raised with its ``stage`` set.
    """
    workdir = startup.open_stage(config.output_dir, name)
    ctx = StageContext(config, workdir, inputs)
    collector = WarningCollector()
    package_logger = logging.getLogger(PACKAGE_LOGGER)
    package_logger.addHandler(collector)
    record = StageRecord(status="running")
    manifest.stages[name] = record
    start = time.perf_counter()
    logger.info("stage %s", name)
    try:
        STAGE_FUNCTIONS[name](ctx)
    except Exception as e:
        startup.quarantine_stage(config.output_dir, name)
        record.status = "failed"
        record.warnings = list(collector.messages)
        record.seconds = round(time.perf_counter() - start, 6)
        e.stage = name
        raise
    finally:
        package_logger.removeHandler(collector)
    final = startup.commit_stage(config.output_dir, name)
    record.status = "ok"
    record.params = _finite(ctx.params)
    record.convergence = _finite(ctx.convergence)
    record.warnings = list(collector.messages)
    record.outputs = {f: export.file_digest(os.path.join(final, f)) for f in sorted(os.listdir(final))}
    record.seconds = round(time.perf_counter() - start, 6)
    return record


# stages whose outputs a stage reads
UPSTREAM = {
    "ingest": (),
    "rca": ("ingest",),
    "binarize": ("rca",),
    "complexity": ("binarize",),
    "nestedness": ("binarize",),
    "proximity": ("binarize",),
    "assist": ("ingest",),
    "validate": ("assist",),
    "green": ("binarize", "complexity", "proximity"),
    "report": (),
}
# input override key that stands in for a stage's outputs
OVERRIDE_KEYS = {"binarize": "matrix", "complexity": "pci", "proximity": "proximity"}


def resolve_stages(output_dir, requested, inputs=None):
    """``requested`` plus every prerequisite that has no outputs on disk yet, in run order.

    A prerequisite counts as present when ``<output_dir>/<stage>/`` exists or
    ``inputs`` overrides its artifact.
    """
    inputs = inputs or {}

    def present(stage):
        return os.path.isdir(os.path.join(output_dir, stage)) or bool(inputs.get(OVERRIDE_KEYS.get(stage)))

    selected = set(requested)
    pending = list(requested)
    while pending:
        for upstream in UPSTREAM[pending.pop()]:
            if upstream not in selected and not present(upstream):
                selected.add(upstream)
                pending.append(upstream)
    added = sorted(selected - set(requested), key=STAGES.index)
    if added:
        logger.info("running missing upstream stages %s first", ", ".join(added))
    return [name for name in STAGES if name in selected]


def run_pipeline(config, stages=None, inputs=None, validate=True):
    """Validate ``config`` and run ``stages`` (default: ``config.stages``) in dependency order.

    Requested stages pull in the upstream stages whose outputs are missing.
    ``inputs`` maps artifact keys (``matrix``, ``pci``, ``proximity``) to
    files that replace the upstream stage outputs.

    Returns
    -------
    RunManifest
        Also written to ``<output_dir>/manifest.json``, after every stage.
    """
    requested = list(stages if stages is not None else config.stages)
    unknown = set(requested) - set(STAGES)
    if unknown:
        raise ConfigError(f"unknown stages {sorted(unknown)}")
    to_run = resolve_stages(config.output_dir, requested, inputs)
    if validate:
        config.validate(to_run)
    startup.make_directory(config.output_dir)
    manifest = RunManifest.load(config.output_dir)
    manifest.version = green_complexity.__version__
    manifest.config = config.to_dict()
    manifest.inputs.update({name: export.file_digest(path) for name, path in config.input_paths().items()})
    try:
        for name in to_run:
            run_stage(name, config, manifest, inputs)
            manifest.write(config.output_dir)
    except Exception:
        manifest.write(config.output_dir)
        raise
    return manifest


def write_error_report(error, output_dir):
    """Machine-readable ``error.json`` for a failed run."""
    document = error.to_dict() if isinstance(error, GreenComplexityError) else {
        "error": type(error).__name__, "message": str(error), "exit_code": 1, "details": {},
    }
    document["stage"] = getattr(error, "stage", None)
    startup.make_directory(output_dir)
    return export.write_json(_finite(document), os.path.join(output_dir, ERROR_REPORT))
