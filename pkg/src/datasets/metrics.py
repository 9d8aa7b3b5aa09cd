"""
PROMISE-format static metric tables.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np
import pandas as pd

from src.errors import DatasetError

logger = logging.getLogger(__name__)

METRIC_COLUMNS: Tuple[str, ...] = (
    "wmc", "dit", "noc", "cbo", "rfc", "lcom", "lcom3", "npm", "dam", "moa",
    "mfa", "cam", "ic", "cbm", "amc", "ca", "ce", "avg_cc", "max_cc", "loc",
)
BUG_COLUMN = "bug"


@dataclass(frozen=True)
class ModuleRecord:
    name: str
    metrics: Tuple[float, ...]
    bug_count: int

    @property
    def label(self) -> int:
        return binarize_label(self.bug_count)


def binarize_label(bug_count: int) -> int:
    """1 iff the module has at least one bug."""
    return 1 if bug_count >= 1 else 0


def normalize_name(name: str) -> str:
    """Nested-class separator ``$`` becomes ``.``; everything else is kept verbatim."""
    return name.strip().replace("$", ".")


def load_metrics_csv(path: Union[str, Path], name_column: str = "name") -> List[ModuleRecord]:
    """
    Load one PROMISE ck-metrics CSV.

    Args:
        path: CSV file with a header row
        name_column: Column holding the module name (``name.1`` in files
            whose first ``name`` column is the project)

    Returns:
        One ModuleRecord per data row, in file order
    """
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"metrics file not found: {path}")

    frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    frame.columns = [str(c).strip() for c in frame.columns]

    for column in (name_column, *METRIC_COLUMNS, BUG_COLUMN):
        if column not in frame.columns:
            raise DatasetError(f"missing column: {column}", column=column)

    if frame.empty:
        logger.warning(f"{path} has no data rows")
        return []

    numeric = {}
    for column in (*METRIC_COLUMNS, BUG_COLUMN):
        values = pd.to_numeric(frame[column].str.strip(), errors="coerce")
        bad = values.isna() | ~np.isfinite(values.astype(float))
        if bad.any():
            position = int(np.flatnonzero(bad.to_numpy())[0])
            raise DatasetError(
                f"non-numeric value '{frame[column].iloc[position]}' in column '{column}'",
                row=position + 2,
                column=column,
            )
        numeric[column] = values.astype(float).to_numpy()

    bugs = numeric[BUG_COLUMN]
    if (bugs < 0).any() or (bugs != np.floor(bugs)).any():
        position = int(np.flatnonzero((bugs < 0) | (bugs != np.floor(bugs)))[0])
        raise DatasetError("bug count must be a non-negative integer", row=position + 2, column=BUG_COLUMN)
    if (numeric["loc"] < 0).any():
        position = int(np.flatnonzero(numeric["loc"] < 0)[0])
        raise DatasetError("loc must be non-negative", row=position + 2, column="loc")

    matrix = np.column_stack([numeric[c] for c in METRIC_COLUMNS])
    names = frame[name_column].str.strip()
    records = [
        ModuleRecord(name=name, metrics=tuple(float(v) for v in row), bug_count=int(bug))
        for name, row, bug in zip(names, matrix, bugs)
    ]
    defective = sum(r.label for r in records)
    logger.info(f"Loaded {len(records)} modules from {path.name} ({defective} defective)")
    return records


def write_metrics_csv(records: List[ModuleRecord], path: Union[str, Path]):
    """Write records back in PROMISE layout (name, 20 metrics, bug)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame([r.metrics for r in records], columns=list(METRIC_COLUMNS))
    frame.insert(0, "name", [r.name for r in records])
    frame[BUG_COLUMN] = [r.bug_count for r in records]
    frame.to_csv(path, index=False)
