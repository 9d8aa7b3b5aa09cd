"""
Experimental scenarios and the repetition protocol.

A scenario is one way of building the features for the old (training) and
new (test) version. ``run_scenario`` repeats a scenario with seeds
base_seed + r and scores each repetition with AUC and F1; ``summarize`` and
``compare_scenarios`` turn the repetition rows into the report tables.
"""

import logging
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Optional, Protocol, Sequence, Tuple

import numpy as np
import pandas as pd

from src.errors import EvaluationError
from src.evaluation.metrics import DEFAULT_THRESHOLD, auc, f1, roc_points, threshold_predictions
from src.evaluation.wilcoxon import RECOMMENDED_PAIRS, wilcoxon_signed_rank

logger = logging.getLogger(__name__)


class Scenario(str, Enum):
    STATIC_ONLY = "static_only"
    EMB_NO_ALIGN = "emb_no_align"
    EMB_RANDOM_ANCHOR = "emb_random_anchor"
    EMB_KNN_ANCHOR = "emb_knn_anchor"
    EMB_GNS_ANCHOR = "emb_gns_anchor"
    META = "meta"

    @property
    def uses_graphs(self) -> bool:
        return self is not Scenario.STATIC_ONLY

    @property
    def anchor_strategy(self) -> Optional[str]:
        return {
            Scenario.EMB_RANDOM_ANCHOR: "random",
            Scenario.EMB_KNN_ANCHOR: "knn",
            Scenario.EMB_GNS_ANCHOR: "gns",
        }.get(self)


@dataclass(frozen=True)
class ScenarioSpec:
    """One concrete variant of a scenario."""

    scenario: Scenario
    algorithm: Optional[str] = None
    method: Optional[str] = None
    anchors: Optional[int] = None  # None with an anchor strategy means every shared module

    @property
    def label(self) -> str:
        parts = [self.scenario.value]
        if self.algorithm:
            parts.append(self.algorithm)
        if self.method:
            parts.append(self.method)
        if self.scenario.anchor_strategy:
            parts.append(f"N={'all' if self.anchors is None else self.anchors}")
        return "/".join(parts)

    @property
    def family(self) -> str:
        """Label without the anchor count; the sweep groups on it."""
        return "/".join(p for p in self.label.split("/") if not p.startswith("N="))


@dataclass
class Prediction:
    names: Tuple[str, ...]
    probabilities: np.ndarray
    labels: np.ndarray
    details: Dict[str, float] = field(default_factory=dict)


class ScenarioRunner(Protocol):
    pair_id: str

    def predict(self, spec: ScenarioSpec, seed: int) -> Prediction:
        ...


@dataclass
class RunRecord:
    pair: str
    scenario: str
    rep: int
    auc: float
    f1: float
    seed: int
    family: str = ""
    anchors: str = ""
    n_test: int = 0
    defect_rate: float = 0.0


@dataclass
class EvalReport:
    runs: pd.DataFrame
    summary: pd.DataFrame
    comparisons: pd.DataFrame
    sweep: pd.DataFrame
    failures: pd.DataFrame
    stats: pd.DataFrame = field(default_factory=pd.DataFrame)
    roc: Dict[Tuple[str, str], pd.DataFrame] = field(default_factory=dict)

    @property
    def has_failures(self) -> bool:
        return not self.failures.empty


def expand_scenarios(
    scenarios: Iterable[str],
    algorithms: Sequence[str],
    methods: Sequence[str],
    anchor_counts: Sequence[Optional[int]],
) -> List[ScenarioSpec]:
    """Cross every requested scenario with the algorithms, methods and anchor counts it uses."""
    specs: List[ScenarioSpec] = []
    for name in scenarios:
        try:
            scenario = Scenario(name)
        except ValueError:
            raise EvaluationError(f"unknown scenario '{name}'")
        if scenario is Scenario.STATIC_ONLY or scenario is Scenario.META:
            specs.append(ScenarioSpec(scenario))
        elif scenario is Scenario.EMB_NO_ALIGN:
            specs.extend(ScenarioSpec(scenario, algorithm) for algorithm in algorithms)
        else:
            specs.extend(
                ScenarioSpec(scenario, algorithm, method, n)
                for algorithm in algorithms
                for method in methods
                for n in anchor_counts
            )
    return specs


def score_prediction(prediction: Prediction, threshold: float = DEFAULT_THRESHOLD) -> Tuple[float, float]:
    return (
        auc(prediction.probabilities, prediction.labels),
        f1(threshold_predictions(prediction.probabilities, threshold), prediction.labels),
    )


def run_scenario(
    runner: ScenarioRunner,
    spec: ScenarioSpec,
    repetitions: int = 30,
    base_seed: int = 0,
    threshold: float = DEFAULT_THRESHOLD,
) -> List[RunRecord]:
    """
    Repeat one scenario on one version pair.

    Args:
        runner: Builds predictions for the pair
        spec: Scenario variant
        repetitions: Number of repetitions
        base_seed: Repetition r uses seed base_seed + r
        threshold: Probability cut-off for F1

    Returns:
        One RunRecord per repetition
    """
    records = []
    for rep in range(repetitions):
        records.append(run_repetition(runner, spec, rep, base_seed + rep, threshold)[0])
    return records


def run_repetition(
    runner: ScenarioRunner, spec: ScenarioSpec, rep: int, seed: int, threshold: float = DEFAULT_THRESHOLD
) -> Tuple[RunRecord, Prediction]:
    try:
        prediction = runner.predict(spec, seed)
        auc_value, f1_value = score_prediction(prediction, threshold)
    except Exception as e:
        raise EvaluationError(f"{runner.pair_id} / {spec.label} / rep {rep}: {e}") from e
    record = RunRecord(
        pair=runner.pair_id,
        scenario=spec.label,
        rep=rep,
        auc=auc_value,
        f1=f1_value,
        seed=seed,
        family=spec.family,
        anchors="" if not spec.scenario.anchor_strategy else ("all" if spec.anchors is None else str(spec.anchors)),
        n_test=len(prediction.labels),
        defect_rate=float(np.mean(prediction.labels)),
    )
    return record, prediction


RUN_COLUMNS = [f for f in RunRecord.__dataclass_fields__]


def runs_frame(records: Iterable[RunRecord]) -> pd.DataFrame:
    frame = pd.DataFrame([asdict(r) for r in records], columns=RUN_COLUMNS)
    return frame.sort_values(["pair", "scenario", "rep"], kind="mergesort").reset_index(drop=True)


def summarize(runs: pd.DataFrame) -> pd.DataFrame:
    """Mean and standard deviation of AUC and F1 per (pair, scenario)."""
    columns = ["pair", "scenario", "repetitions", "mean_auc", "std_auc", "mean_f1", "std_f1"]
    if runs.empty:
        return pd.DataFrame(columns=columns)
    grouped = runs.groupby(["pair", "scenario"], sort=True)
    summary = grouped.agg(
        repetitions=("rep", "count"),
        mean_auc=("auc", "mean"),
        std_auc=("auc", "std"),
        mean_f1=("f1", "mean"),
        std_f1=("f1", "std"),
    ).reset_index()
    return summary.fillna({"std_auc": 0.0, "std_f1": 0.0})[columns]


def sweep_table(runs: pd.DataFrame) -> pd.DataFrame:
    """Mean AUC / F1 against the anchor count, per scenario family."""
    columns = ["family", "anchors", "pairs", "mean_auc", "mean_f1"]
    swept = runs[runs["anchors"] != ""] if not runs.empty else runs
    if swept.empty:
        return pd.DataFrame(columns=columns)
    per_pair = swept.groupby(["family", "anchors", "pair"], sort=True)[["auc", "f1"]].mean().reset_index()
    table = per_pair.groupby(["family", "anchors"], sort=True).agg(
        pairs=("pair", "count"), mean_auc=("auc", "mean"), mean_f1=("f1", "mean")
    ).reset_index()
    order = table["anchors"].map(lambda a: float("inf") if a == "all" else float(a))
    return table.assign(_order=order).sort_values(["family", "_order"]).drop(columns="_order").reset_index(drop=True)


def default_comparisons(labels: Iterable[str], baseline: str = Scenario.STATIC_ONLY.value) -> List[Tuple[str, str]]:
    labels = sorted(set(labels))
    if baseline not in labels:
        return []
    return [(label, baseline) for label in labels if label != baseline]


def compare_scenarios(
    runs: pd.DataFrame,
    comparisons: Sequence[Tuple[str, str]],
    metrics: Sequence[str] = ("auc", "f1"),
) -> pd.DataFrame:
    """
    Paired Wilcoxon tests between scenarios.

    With at least RECOMMENDED_PAIRS version pairs the units are the pairs'
    mean scores; otherwise the units are (pair, repetition) rows.
    """
    columns = ["scenario_a", "scenario_b", "metric", "level", "n", "mean_a", "mean_b", "W", "p_value", "note"]
    rows = []
    pairs = runs["pair"].nunique() if not runs.empty else 0
    level = "pair" if pairs >= RECOMMENDED_PAIRS else "repetition"
    for a, b in comparisons:
        for metric in metrics:
            left = runs[runs["scenario"] == a]
            right = runs[runs["scenario"] == b]
            if level == "pair":
                left = left.groupby("pair")[metric].mean()
                right = right.groupby("pair")[metric].mean()
            else:
                left = left.set_index(["pair", "rep"])[metric]
                right = right.set_index(["pair", "rep"])[metric]
            joined = pd.concat([left.rename("a"), right.rename("b")], axis=1, join="inner").sort_index()
            row = {
                "scenario_a": a, "scenario_b": b, "metric": metric, "level": level, "n": len(joined),
                "mean_a": joined["a"].mean() if len(joined) else np.nan,
                "mean_b": joined["b"].mean() if len(joined) else np.nan,
                "W": np.nan, "p_value": np.nan, "note": "",
            }
            try:
                result = wilcoxon_signed_rank(joined["a"].to_numpy(), joined["b"].to_numpy())
                row.update(W=result.statistic, p_value=result.p_value, note=result.method)
            except EvaluationError as e:
                row["note"] = str(e)
            rows.append(row)
    return pd.DataFrame(rows, columns=columns)


def roc_frame(prediction: Prediction) -> pd.DataFrame:
    fpr, tpr, thresholds = roc_points(prediction.probabilities, prediction.labels)
    return pd.DataFrame({"fpr": fpr, "tpr": tpr, "threshold": thresholds})
