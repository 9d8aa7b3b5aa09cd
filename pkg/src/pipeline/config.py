"""
Experiment configuration: a YAML file validated into pydantic models.

Relative paths resolve against the directory of the experiment file.
"""

import logging
import os
from pathlib import Path
from typing import List, Literal, Optional, Tuple, Union

import yaml
from pydantic import BaseModel, Field, PrivateAttr, ValidationError, field_validator, model_validator

from src.alignment.anchors import KNN_METRICS, STRATEGIES
from src.alignment.procrustes import METHODS
from src.embeddings.base import EmbedConfig
from src.embeddings.factory import EMBEDDERS
from src.errors import ConfigurationError, Diagnostic
from src.evaluation.scenarios import Scenario
from src.learners.forest import ForestConfig

logger = logging.getLogger(__name__)

AnchorCount = Union[int, Literal["all"]]


class VersionConfig(BaseModel):
    src: Optional[str] = None  # Java source tree
    graph: Optional[str] = None  # or a ready graph file
    metrics: str
    name_column: str = "name"

    @model_validator(mode="after")
    def _one_graph_source(self):
        if (self.src is None) == (self.graph is None):
            raise ValueError("exactly one of 'src' or 'graph' is required")
        return self


class PairConfig(BaseModel):
    id: Optional[str] = None
    old: VersionConfig
    new: VersionConfig


class AlignmentConfig(BaseModel):
    anchors: Optional[List[AnchorCount]] = None  # None -> d, 2d, 4d, all
    k: int = Field(10, ge=1)
    method: List[str] = Field(default_factory=lambda: ["orthogonal"])
    knn_metric: str = "euclidean"

    @field_validator("method", mode="before")
    @classmethod
    def _as_list(cls, value):
        return [value] if isinstance(value, str) else value

    def anchor_counts(self, dim: int) -> List[Optional[int]]:
        """Anchor sweep with ``all`` as None, duplicates removed."""
        values = self.anchors if self.anchors is not None else [dim, 2 * dim, 4 * dim, "all"]
        counts: List[Optional[int]] = []
        for value in values:
            count = None if value == "all" else int(value)
            if count not in counts:
                counts.append(count)
        return counts


class MetaConfig(BaseModel):
    node2vec_strategy: str = "knn"
    line2_strategy: str = "gns"
    method: str = "orthogonal"
    anchors: AnchorCount = "all"


class EvaluationConfig(BaseModel):
    repetitions: int = Field(30, ge=1)
    base_seed: int = 0
    threshold: float = Field(0.5, ge=0, le=1)
    reseed_embeddings: bool = True
    comparisons: Optional[List[Tuple[str, str]]] = None  # None -> everything against static_only
    roc: bool = True


class ExperimentConfig(BaseModel):
    seed: int = 0
    workspace: Optional[str] = None
    workers: int = Field(1, ge=1)
    pairs: List[PairConfig] = Field(default_factory=list)
    embedding: EmbedConfig = Field(default_factory=EmbedConfig)
    algorithms: List[str] = Field(default_factory=lambda: ["node2vec", "line2"])
    alignment: AlignmentConfig = Field(default_factory=AlignmentConfig)
    learner: ForestConfig = Field(default_factory=ForestConfig)
    meta: MetaConfig = Field(default_factory=MetaConfig)
    evaluation: EvaluationConfig = Field(default_factory=EvaluationConfig)
    scenarios: List[str] = Field(default_factory=lambda: [s.value for s in Scenario])

    _base_dir: Path = PrivateAttr(default_factory=Path.cwd)

    @property
    def base_dir(self) -> Path:
        return self._base_dir

    def resolve(self, path: Optional[str]) -> Optional[Path]:
        if path is None:
            return None
        candidate = Path(os.path.expanduser(path))
        return candidate if candidate.is_absolute() else self._base_dir / candidate

    def pair_ids(self) -> List[str]:
        return [pair.id or f"pair{i + 1}" for i, pair in enumerate(self.pairs)]


def _schema_diagnostics(error: ValidationError, path: Optional[Path]) -> List[Diagnostic]:
    diagnostics = []
    for item in error.errors():
        where = ".".join(str(part) for part in item["loc"])
        diagnostics.append(Diagnostic("fatal", "invalid-value", f"{where}: {item['msg']}", str(path) if path else None))
    return diagnostics


def parse_experiment_config(data: dict, base_dir: Union[str, Path] = ".", source: Optional[Path] = None) -> ExperimentConfig:
    """Validate a parsed mapping; raises ConfigurationError listing every schema problem."""
    if not isinstance(data, dict):
        raise ConfigurationError(
            "experiment file must contain a mapping",
            [Diagnostic("fatal", "invalid-file", "top level is not a mapping", str(source) if source else None)],
        )
    try:
        config = ExperimentConfig.model_validate(data)
    except ValidationError as e:
        diagnostics = _schema_diagnostics(e, source)
        raise ConfigurationError(f"invalid experiment configuration ({len(diagnostics)} problems)", diagnostics)
    config._base_dir = Path(base_dir).resolve()
    return config


def load_experiment_config(path: Union[str, Path]) -> ExperimentConfig:
    """
    Load and schema-check an experiment file.

    Args:
        path: YAML experiment file

    Returns:
        ExperimentConfig whose relative paths resolve against the file's directory
    """
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(
            f"experiment file not found: {path}", [Diagnostic("fatal", "missing-file", "experiment file not found", str(path))]
        )
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        raise ConfigurationError(f"cannot parse {path}: {e}", [Diagnostic("fatal", "invalid-yaml", str(e), str(path))])
    return parse_experiment_config(data, path.parent, path)


def validate_experiment(config: ExperimentConfig) -> List[Diagnostic]:
    """
    Check paths, ranges and names; every problem is reported, none raised.

    Fatal diagnostics make the experiment unrunnable; warnings do not.
    """
    diagnostics: List[Diagnostic] = []

    def fatal(code: str, message: str, file: Optional[str] = None):
        diagnostics.append(Diagnostic("fatal", code, message, file))

    def warn(code: str, message: str):
        diagnostics.append(Diagnostic("warning", code, message))

    if not config.pairs:
        fatal("no-pairs", "the experiment lists no version pairs")

    ids = config.pair_ids()
    for duplicate in sorted({i for i in ids if ids.count(i) > 1}):
        fatal("duplicate-pair", f"pair id '{duplicate}' is used more than once")

    for pair_id, pair in zip(ids, config.pairs):
        for role, version in (("old", pair.old), ("new", pair.new)):
            where = f"{pair_id}.{role}"
            metrics = config.resolve(version.metrics)
            if not metrics.is_file():
                fatal("missing-file", f"{where}: metrics file not found", str(metrics))
            if version.src is not None and not config.resolve(version.src).is_dir():
                fatal("missing-file", f"{where}: source directory not found", str(config.resolve(version.src)))
            if version.graph is not None and not config.resolve(version.graph).is_file():
                fatal("missing-file", f"{where}: graph file not found", str(config.resolve(version.graph)))

    known_scenarios = {s.value for s in Scenario}
    for name in config.scenarios:
        if name not in known_scenarios:
            fatal("unknown-scenario", f"unknown scenario '{name}' (expected one of {', '.join(sorted(known_scenarios))})")
    if not config.scenarios:
        fatal("no-scenarios", "the experiment lists no scenarios")

    for algorithm in config.algorithms:
        if algorithm not in EMBEDDERS:
            fatal("unknown-algorithm", f"unknown embedding algorithm '{algorithm}'")
    for method in config.alignment.method:
        if method not in METHODS:
            fatal("unknown-method", f"unknown alignment method '{method}'")
    if config.alignment.knn_metric not in KNN_METRICS:
        fatal("unknown-metric", f"unknown k-NN metric '{config.alignment.knn_metric}'")

    dim = config.embedding.dim
    for count in config.alignment.anchor_counts(dim):
        if count is not None and count < 1:
            fatal("invalid-anchors", f"anchor count must be at least 1, got {count}")
        elif count is not None and count < dim:
            warn("few-anchors", f"anchor count {count} is below the embedding dimension {dim}")

    if Scenario.META.value in config.scenarios:
        for strategy in (config.meta.node2vec_strategy, config.meta.line2_strategy):
            if strategy not in STRATEGIES:
                fatal("unknown-strategy", f"unknown meta anchor strategy '{strategy}'")
        if config.meta.method not in METHODS:
            fatal("unknown-method", f"unknown meta alignment method '{config.meta.method}'")
        if isinstance(config.meta.anchors, int) and config.meta.anchors < 1:
            fatal("invalid-anchors", f"meta anchor count must be at least 1, got {config.meta.anchors}")

    for a, b in config.evaluation.comparisons or []:
        for label in (a, b):
            if label.split("/", 1)[0] not in known_scenarios:
                warn("unknown-comparison", f"comparison refers to '{label}', which no scenario produces")

    for diagnostic in diagnostics:
        log = logger.error if diagnostic.is_fatal else logger.warning
        log(str(diagnostic))
    return diagnostics


def check_experiment_file(path: Union[str, Path]) -> Tuple[Optional[ExperimentConfig], List[Diagnostic]]:
    """Schema and semantic checks together, as (config or None, diagnostics)."""
    try:
        config = load_experiment_config(path)
    except ConfigurationError as e:
        return None, e.diagnostics
    return config, validate_experiment(config)
