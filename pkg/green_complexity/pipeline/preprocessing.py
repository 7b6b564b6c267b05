"""Loading of stage inputs: raw files for ``ingest``, upstream artifacts for
every later stage."""
import logging
import os

from green_complexity.models.bipartite import RcaMatrix, binarize, compute_rca
from green_complexity.src.config import TECHNOLOGY, TRADE
from green_complexity.src.data.counting import count_patents
from green_complexity.src.data.matrices import build_matrix
from green_complexity.src.data.parsing import (
    IngestReport, RecordSchema, parse_green_list, parse_patents, read_records, records_to_frame,
)
from green_complexity.src.errors import ConfigError, DataError
from green_complexity.src.utils import export
from green_complexity.src.utils.green_lists import BUILTIN, builtin_classification

logger = logging.getLogger(__name__)


def upstream_path(output_dir, stage, filename):
    """Path of an artifact a finished upstream stage wrote."""
    path = os.path.join(output_dir, stage, filename)
    if not os.path.isfile(path):
        raise ConfigError(f"{path} is missing; run the {stage!r} stage first")
    return path


def ingest_layers(config):
    """Read every configured input into a canonical record frame.

    Returns
    -------
    dict
        ``{layer: (frame, IngestReport)}``
    """
    layers = {}
    if config.trade:
        report = IngestReport()
        try:
            schema = RecordSchema.from_dict({**config.trade_schema, "strict": config.strict})
        except DataError as e:
            raise ConfigError(str(e))
        frame = read_records(config.trade, schema, report)
        layers[TRADE] = (frame, report)
    if config.patents:
        report = IngestReport()
        patents = parse_patents(config.patents, config.patent_scheme, config.strict, report)
        records = count_patents(patents, config.count_mode, level=config.geo_level)
        if not records:
            raise DataError(f"{config.patents} holds no usable patent")
        layers[TECHNOLOGY] = (records_to_frame(records), report)
    return layers


def records_file(layer):
    return f"records_{layer}.csv"


def layer_matrix(output_dir, layer, period, digits=None):
    """WeightedBipartite of one layer and period from the ingested records."""
    frame = export.read_records_table(upstream_path(output_dir, "ingest", records_file(layer)))
    return build_matrix(frame, period, digits=digits, layer=layer)


def layer_binary(output_dir, layer, period, digits, threshold):
    """Binary specialization matrix of one layer and period, built from the ingested records."""
    return binarize(compute_rca(layer_matrix(output_dir, layer, period, digits)), threshold)


def read_rca(path):
    geos, activities, values, meta = export.read_matrix(path)
    return RcaMatrix(geos, activities, values, period=meta.get("period"), layer=meta.get("layer"))


def green_classification(config):
    """The configured green list: a built-in name or a list file."""
    name = config.green_list_name()
    if name in BUILTIN:
        return builtin_classification(name)
    return parse_green_list(name, scheme=config.green_list_scheme())
