"""Metrics collection.

Counters, a histogram and resource gauges for experiment runs, held in a
private prometheus_client registry and exported in the Prometheus text format:
- Counter: trials run, bound violations, policies evaluated, errors
- Histogram: per-trial wall time
- Gauge: process memory and CPU usage (psutil)

Metrics are a side channel; they never enter result files.
"""

from __future__ import annotations

import psutil
from prometheus_client import (
    CollectorRegistry,
    Counter,
    Gauge,
    Histogram,
    generate_latest,
)


class MetricsCollector:
    """Owns one registry so that several collectors can coexist in a process."""

    def __init__(self):
        self.registry = CollectorRegistry()

        self.trials_total = Counter(
            "trials_total",
            "Total number of Monte Carlo trials",
            ["experiment"],
            registry=self.registry,
        )
        self.violations_total = Counter(
            "violations_total",
            "Trials where a confidence radius was violated",
            ["experiment"],
            registry=self.registry,
        )
        self.policies_evaluated_total = Counter(
            "policies_evaluated_total",
            "Total number of policy evaluations (estimator + risk + radius)",
            ["estimator"],
            registry=self.registry,
        )
        self.errors_total = Counter(
            "errors_total",
            "Total number of errors",
            ["error_code"],
            registry=self.registry,
        )

        self.trial_duration_seconds = Histogram(
            "trial_duration_seconds",
            "Wall time of one trial in seconds",
            ["experiment"],
            buckets=(0.001, 0.005, 0.01, 0.05, 0.1, 0.5, 1.0, 5.0),
            registry=self.registry,
        )

        self.memory_usage_bytes = Gauge(
            "memory_usage_bytes",
            "Resident memory of the process in bytes",
            registry=self.registry,
        )
        self.cpu_usage_percent = Gauge(
            "cpu_usage_percent",
            "CPU usage percentage of the process",
            registry=self.registry,
        )

        self._process = psutil.Process()

    def record_trial(self, experiment: str, duration: float, violated: bool = False):
        """Record one finished trial."""
        self.trials_total.labels(experiment=experiment).inc()
        self.trial_duration_seconds.labels(experiment=experiment).observe(duration)
        if violated:
            self.violations_total.labels(experiment=experiment).inc()

    def record_policy_evaluation(self, estimator: str, count: int = 1):
        self.policies_evaluated_total.labels(estimator=estimator).inc(count)

    def record_error(self, error_code: str):
        self.errors_total.labels(error_code=error_code).inc()

    def update_resource_usage(self):
        """Sample memory and CPU usage of the current process."""
        try:
            self.memory_usage_bytes.set(self._process.memory_info().rss)
            self.cpu_usage_percent.set(self._process.cpu_percent(interval=None))
        except psutil.Error:
            # process info unavailable (sandboxed platforms)
            pass

    def counter_value(self, name: str, **labels) -> float:
        """Current value of a counter sample, 0 if never incremented."""
        value = self.registry.get_sample_value(f"{name}_total" if not name.endswith("_total") else name, labels)
        return float(value or 0.0)

    def export_prometheus(self) -> str:
        """Render all metrics in the Prometheus text exposition format."""
        self.update_resource_usage()
        return generate_latest(self.registry).decode("utf-8")
