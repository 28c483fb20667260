"""Rendering of results: JSON documents, CSV tables and stdout summaries.

CSV column orders are frozen; new columns are only ever appended.
"""

from __future__ import annotations

from pathlib import Path
from typing import List, Optional, Sequence, Union

import pandas as pd
from pydantic import BaseModel

from .io import write_json
from .schemas import (
    CertificateReport,
    CoverageReport,
    EvaluationResult,
    LearnResult,
    RateReport,
)


LEARN_COLUMNS = ["policy_index", "rho_hat", "radius", "lcb", "r_pi", "sigma_pi", "selected"]
RATE_COLUMNS = [
    "n",
    "mean_gap",
    "se",
    "mean_w1",
    "violation_rate",
    "delta_gap",
    "envelope",
    "certified_envelope",
    "precondition_holds",
]
COVERAGE_COLUMNS = [
    "estimator",
    "flavor",
    "delta",
    "trials",
    "violations",
    "violation_rate",
    "ci_low",
    "ci_high",
    "slack_threshold",
    "within_slack",
    "mode",
    "n",
    "mean_radius",
    "mean_error",
]


class Renderer:
    """Turns report models into tables, files and one-line summaries."""

    def learn_table(self, result: LearnResult) -> pd.DataFrame:
        rows = [
            {
                "policy_index": r.policy_index,
                "rho_hat": r.rho_hat,
                "radius": r.radius,
                "lcb": r.lcb,
                "r_pi": r.diagnostics.r,
                "sigma_pi": r.diagnostics.sigma,
                "selected": r.policy_index == result.selected,
            }
            for r in result.reports
        ]
        return pd.DataFrame(rows, columns=LEARN_COLUMNS)

    def rate_table(self, report: RateReport) -> pd.DataFrame:
        return pd.DataFrame([p.model_dump() for p in report.points], columns=RATE_COLUMNS)

    def coverage_table(self, reports: Sequence[CoverageReport]) -> pd.DataFrame:
        rows = [r.model_dump(mode="json") for r in reports]
        return pd.DataFrame(rows, columns=COVERAGE_COLUMNS)

    def write(self, doc: BaseModel, path: Union[str, Path], table: Optional[pd.DataFrame] = None) -> List[Path]:
        """Write ``doc`` as JSON and, with a table, a ``.csv`` sibling."""
        path = Path(path)
        written = [write_json(doc, path)]
        if table is not None:
            csv_path = path.with_suffix(".csv")
            table.to_csv(csv_path, index=False, lineterminator="\n")
            written.append(csv_path)
        return written

    def summarize_learn(self, result: LearnResult) -> str:
        chosen = result.reports[result.selected]
        lines = [
            f"mode={result.mode} selected={result.selected} "
            f"rho_hat={chosen.rho_hat:.6f} lcb={chosen.lcb:.6f} radius={chosen.radius:.6f}",
            f"policies={len(result.reports)} natarajan_dim={result.natarajan_dim} "
            f"L={result.lipschitz:g} n={result.n}",
        ]
        if result.tie:
            lines.append(f"tie: several policies share the best score; picked smallest index {result.selected}")
        return "\n".join(lines)

    def summarize_evaluation(self, result: EvaluationResult) -> str:
        return result.model_dump_json(indent=2)

    def summarize_coverage(self, reports: Sequence[CoverageReport]) -> str:
        lines = []
        for r in reports:
            lines.append(
                f"{r.mode:<9} {r.estimator.value:<10} {r.flavor.value:<9} delta={r.delta:<5g} "
                f"violations={r.violations}/{r.trials} rate={r.violation_rate:.4f} "
                f"ci=[{r.ci_low:.4f}, {r.ci_high:.4f}] slack={r.slack_threshold:.4f} "
                f"{'ok' if r.within_slack else 'EXCEEDED'}"
            )
        return "\n".join(lines)

    def summarize_certificate(self, report: CertificateReport) -> str:
        return (
            f"coverage_events={report.coverage_events}/{report.trials} "
            f"certificate_failures={report.certificate_failures} "
            f"lcb_violation_rate={report.lcb_violation_rate:.4f} "
            f"mean_gap={report.mean_gap:.6f} greedy_mean_gap={report.greedy_mean_gap:.6f}"
        )

    def summarize_rate(self, report: RateReport) -> str:
        lines = [f"{'n':>8} {'mean_gap':>12} {'se':>10} {'mean_w1':>10} {'envelope':>10}"]
        for p in report.points:
            lines.append(f"{p.n:>8} {p.mean_gap:>12.6f} {p.se:>10.6f} {p.mean_w1:>10.6f} {p.envelope:>10.6f}")
        if report.slope is not None:
            lines.append(
                f"slope={report.slope:.4f} ci=[{report.slope_ci_low:.4f}, {report.slope_ci_high:.4f}]"
            )
        else:
            lines.append("slope: fewer than three points with a positive mean gap")
        return "\n".join(lines)
