"""Run configuration: one JSON document, validated before any computation."""
import json
import logging
import os
from dataclasses import asdict, dataclass, field, fields

from green_complexity.src.data.codes import COMPATIBLE, HS, SCHEMES, normalize_scheme
from green_complexity.src.data.counting import COUNT_MODES, FRACTIONAL
from green_complexity.src.errors import ConfigError, DataError
from green_complexity.src.utils.green_lists import BUILTIN, builtin_scheme, default_list

logger = logging.getLogger(__name__)

STAGES = [
    "ingest", "rca", "binarize", "complexity", "nestedness",
    "proximity", "assist", "validate", "green", "report",
]
METHODS = ["eci", "fitness"]
SCALES = ["mean-one", "dummy", "reference"]
CORRECTIONS = ["bonferroni", "bh-fdr"]
TRADE = "trade"
TECHNOLOGY = "technology"
LAYERS = [TRADE, TECHNOLOGY]

DEFAULT_OUTPUT_DIR = "output"
DEFAULT_THRESHOLD = 1.0
DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 5000
DEFAULT_LAG = 5
DEFAULT_SAMPLES = 1000
DEFAULT_ALPHA = 0.05
DEFAULT_CORRECTION = "bh-fdr"
DEFAULT_SEED = 0
DEFAULT_CUTOFF = 0.0
MIN_SAMPLES = 100


@dataclass
class RunConfig:
    """Everything a pipeline run needs.

    ``trade`` is a record file (geo, activity, value, period), ``patents`` a
    patent file; either or both may be given. ``layer`` picks the one the
    single-layer metrics run on. ``green_list`` is a path or the name of a
    built-in list; left unset, the built-in list for the layer's code scheme
    is used. ``green_scheme`` is the scheme of a list file and defaults to
    the layer's.
    """
    output_dir: str = DEFAULT_OUTPUT_DIR
    trade: str = None
    trade_schema: dict = field(default_factory=dict)
    patents: str = None
    patent_scheme: str = "CPC"
    count_mode: str = FRACTIONAL
    geo_level: int = None
    strict: bool = True
    layer: str = TRADE
    period: int = None
    digits: int = None
    threshold: float = DEFAULT_THRESHOLD
    methods: list = field(default_factory=lambda: list(METHODS))
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    scale: str = "mean-one"
    reference: str = None
    exogenous_q: str = None
    exogenous_pci: str = None
    lag: int = DEFAULT_LAG
    source_layer: str = TRADE
    target_layer: str = TRADE
    samples: int = DEFAULT_SAMPLES
    alpha: float = DEFAULT_ALPHA
    correction: str = DEFAULT_CORRECTION
    seed: int = DEFAULT_SEED
    green_list: str = None
    green_scheme: str = None
    rank_transform: bool = False
    gcp_weighting: str = None
    proximity_cutoff: float = DEFAULT_CUTOFF
    stages: list = field(default_factory=lambda: list(STAGES))

    @classmethod
    def from_dict(cls, mapping):
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(mapping) - known)
        if unknown:
            raise ConfigError(f"unknown configuration keys: {unknown}")
        return cls(**mapping)

    @classmethod
    def from_json(cls, path):
        try:
            with open(path, encoding="utf-8") as f:
                mapping = json.load(f)
        except FileNotFoundError:
            raise ConfigError(f"configuration file {path} not found")
        except json.JSONDecodeError as e:
            raise ConfigError(f"configuration file {path} is not valid JSON: {e}")
        if not isinstance(mapping, dict):
            raise ConfigError("configuration document must be a JSON object")
        return cls.from_dict(mapping)

    def to_dict(self):
        return asdict(self)

    def override(self, **values):
        """Copy with every non-None value replaced."""
        mapping = self.to_dict()
        mapping.update({k: v for k, v in values.items() if v is not None})
        return RunConfig.from_dict(mapping)

    def input_paths(self):
        paths = {}
        if self.trade:
            paths[TRADE] = self.trade
        if self.patents:
            paths[TECHNOLOGY] = self.patents
        if self.exogenous_q:
            paths["exogenous_q"] = self.exogenous_q
        if self.exogenous_pci:
            paths["exogenous_pci"] = self.exogenous_pci
        if self.green_list and self.green_list not in BUILTIN:
            paths["green_list"] = self.green_list
        return paths

    def layer_scheme(self, layer=None):
        """Code scheme of a layer's activities (default: ``layer``)."""
        layer = layer or self.layer
        if layer == TECHNOLOGY:
            return normalize_scheme(self.patent_scheme)
        return normalize_scheme(self.trade_schema.get("scheme", HS))

    def green_list_name(self):
        return self.green_list or default_list(self.layer_scheme())

    def green_list_scheme(self):
        name = self.green_list_name()
        if name in BUILTIN:
            return builtin_scheme(name)
        return self.green_scheme or self.layer_scheme()

    def validate(self, stages=None):
        """Raise ConfigError on the first invalid setting.

        ``stages`` (default: ``self.stages``) are the stages about to run;
        layer and green list checks apply only to the stages that use them.
        """
        try:
            return self._validate(self.stages if stages is None else stages)
        except DataError as e:
            raise ConfigError(str(e))
        except TypeError as e:
            raise ConfigError(f"configuration value of the wrong type: {e}")

    def _validate(self, stages):
        for name, path in self.input_paths().items():
            if not os.path.isfile(path):
                raise ConfigError(f"{name} input {path} does not exist")
        if not self.trade and not self.patents:
            raise ConfigError("configuration names no input (trade or patents)")
        _check(self.threshold > 0, f"threshold must be > 0, got {self.threshold}")
        _check(self.tol > 0, f"tol must be > 0, got {self.tol}")
        _check(self.max_iter >= 1, f"max_iter must be >= 1, got {self.max_iter}")
        _check(self.samples >= MIN_SAMPLES, f"samples must be >= {MIN_SAMPLES}, got {self.samples}")
        _check(0 < self.alpha < 1, f"alpha must be in (0, 1), got {self.alpha}")
        _check(self.lag >= 0, f"lag must be >= 0, got {self.lag}")
        _check(self.digits is None or self.digits >= 1, f"digits must be >= 1, got {self.digits}")
        _check(self.geo_level is None or self.geo_level >= 1, f"geo_level must be >= 1, got {self.geo_level}")
        _check(0 <= self.proximity_cutoff <= 1, f"proximity_cutoff must be in [0, 1], got {self.proximity_cutoff}")
        _check(self.period is not None, "period is required")
        _one_of("scale", self.scale, SCALES)
        _one_of("correction", self.correction, CORRECTIONS)
        _one_of("count_mode", self.count_mode, COUNT_MODES)
        _one_of("gcp_weighting", self.gcp_weighting, [None, "pci"])
        _one_of("patent_scheme", self.patent_scheme, SCHEMES)
        _one_of("green_scheme", self.green_scheme, [None, *SCHEMES])
        checked = ["layer"]
        if "assist" in stages or "validate" in stages:
            checked += ["source_layer", "target_layer"]
        for name in checked:
            _one_of(name, getattr(self, name), LAYERS)
            if not self._has_layer(getattr(self, name)):
                raise ConfigError(f"{name} {getattr(self, name)!r} has no input file")
        for method in self.methods:
            _one_of("method", method, METHODS)
        for stage in self.stages:
            _one_of("stage", stage, STAGES)
        if self.scale == "reference" and not self.reference:
            raise ConfigError("scale 'reference' needs a reference geo")
        if "green" in stages:
            self._validate_green_list()
        return self

    def _validate_green_list(self):
        layer_scheme, list_scheme = self.layer_scheme(), self.green_list_scheme()
        if list_scheme not in COMPATIBLE[layer_scheme]:
            raise ConfigError(
                f"green list {self.green_list_name()!r} holds {list_scheme} codes but the "
                f"{self.layer} layer has {layer_scheme} activities"
            )

    def _has_layer(self, layer):
        return bool(self.trade) if layer == TRADE else bool(self.patents)


def _check(condition, message):
    if not condition:
        raise ConfigError(message)


def _one_of(name, value, allowed):
    if value not in allowed:
        raise ConfigError(f"{name} must be one of {allowed}, got {value!r}")


def default_config_json():
    """The documented default configuration."""
    return json.dumps(RunConfig().to_dict(), indent=2, sort_keys=True)
