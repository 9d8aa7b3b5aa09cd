"""
Report Writer - Writes the experiment report directory.
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional

import pandas as pd
import yaml

from src.evaluation.scenarios import EvalReport

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.10g"


class ReportWriter:
    """Exports an EvalReport as CSV tables plus a short README."""

    def export(self, report: EvalReport, output_path: str, cache_stats: Optional[Dict] = None) -> List[Path]:
        """
        Export the report.

        Args:
            report: Aggregated experiment results
            output_path: Directory to write files
            cache_stats: Optional per-stage cache hit/miss counts

        Creates:
            output_path/
            ├── runs.csv
            ├── summary.csv
            ├── comparisons.csv
            ├── sweep.csv
            ├── stats.csv
            ├── failures.csv
            ├── README.md
            └── roc/
                └── <pair>__<scenario>.csv
        """
        output_dir = Path(output_path)
        output_dir.mkdir(parents=True, exist_ok=True)

        written = []
        tables = {
            "runs.csv": report.runs,
            "summary.csv": report.summary,
            "comparisons.csv": report.comparisons,
            "sweep.csv": report.sweep,
            "stats.csv": report.stats,
            "failures.csv": report.failures,
        }
        for filename, frame in tables.items():
            path = output_dir / filename
            frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
            written.append(path)
            logger.info(f"   📄 Created {path}")

        if report.roc:
            roc_dir = output_dir / "roc"
            roc_dir.mkdir(exist_ok=True)
            for (pair_id, label), curve in sorted(report.roc.items()):
                path = roc_dir / f"{pair_id}__{_safe(label)}.csv"
                curve.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
                written.append(path)
            logger.info(f"   📄 Created {len(report.roc)} ROC curves in {roc_dir}")

        readme_path = output_dir / "README.md"
        with open(readme_path, "w", encoding="utf-8") as f:
            f.write(self._generate_readme(report, cache_stats))
        written.append(readme_path)
        logger.info(f"   📄 Created {readme_path}")
        return written

    def _generate_readme(self, report: EvalReport, cache_stats: Optional[Dict]) -> str:
        """Generate a README for the report."""
        lines = [
            "# Cross-version defect prediction report",
            "",
            "## Mean AUC / F1 per pair and scenario",
            "",
            "| pair | scenario | reps | AUC | F1 |",
            "|---|---|---|---|---|",
        ]
        for row in report.summary.itertuples(index=False):
            lines.append(
                f"| {row.pair} | {row.scenario} | {row.repetitions} | "
                f"{row.mean_auc:.4f} ± {row.std_auc:.4f} | {row.mean_f1:.4f} ± {row.std_f1:.4f} |"
            )

        if not report.comparisons.empty:
            lines.extend(["", "## Wilcoxon signed-rank comparisons", ""])
            for row in report.comparisons.itertuples(index=False):
                p = "n/a" if pd.isna(row.p_value) else f"{row.p_value:.4g}"
                lines.append(f"- {row.scenario_a} vs {row.scenario_b} ({row.metric}, {row.level}, n={row.n}): p = {p}")

        if report.has_failures:
            lines.extend(["", f"## Failed cells: {len(report.failures)}", "", "See `failures.csv`."])

        if cache_stats:
            lines.extend(["", "## Cache", "", "```yaml", yaml.safe_dump(cache_stats, sort_keys=True).rstrip(), "```"])

        return "\n".join(lines) + "\n"


def _safe(label: str) -> str:
    return "".join(c if c.isalnum() or c in "._=-" else "_" for c in label)
