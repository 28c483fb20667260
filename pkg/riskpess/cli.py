"""Command-line front end.

Subcommands:
    gen-data      sample a logged dataset from an environment and behavior spec
    evaluate      plug-in risk, pointwise radius and LCB of one policy
    learn         pessimistic (or greedy / overlap-only) selection over a class
    coverage      coverage experiment grid from a run config
    certificate   suboptimality-certificate experiment from a run config
    rate-curve    suboptimality-vs-n experiment from a run config
    natarajan     brute-force Natarajan dimension of a class file

Results go to stdout or ``--out``; logs go to stderr. Exit codes: 0 success,
2 invalid input or configuration, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import uuid
from pathlib import Path
from typing import List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .bounds import natarajan_dim_bruteforce, pointwise_bound, satisfies_growth_bound, uniform_radius
from .dataset import Dataset, PolicyClass
from .estimators import ConditionalCDFModel, TabularCDFModel, diagnostics, estimate_cdf
from .infrastructure.config import Config
from .infrastructure.error_handler import EXIT_OK, ConfigurationError, ErrorHandler, MissingModelError
from .infrastructure.logger import StructuredLogger, create_logger
from .infrastructure.metrics import MetricsCollector
from .io import (
    dump_stepfn,
    load_behavior,
    load_environment,
    load_json,
    load_model,
    load_policy,
    load_policy_class,
    read_dataset,
    read_policy_class,
    write_dataset,
)
from .learner import PolicyLearner
from .renderer import Renderer
from .risk import RiskFunctional, evaluate_risk, lipschitz_constant, parse_risk
from .schemas import BoundConfig, CoverageGridReport, Estimator, EvaluationResult, Flavor
from .simlab.environment import Environment, sample_dataset
from .simlab.experiments import MinimaxFamilySpec, certificate_experiment, coverage_experiment, rate_curve
from .stepfn import from_atoms


ESTIMATOR_CHOICES = ["is", "wis", "dr"]
FLAVOR_CHOICES = [f.value for f in Flavor]


# Run configs


class _RunConfig(BaseModel):
    """Base for experiment configs; relative paths resolve against the config file."""

    model_config = ConfigDict(extra="forbid")

    def resolve(self, base: Path, value: Optional[str]) -> Optional[Path]:
        if value is None:
            return None
        path = Path(value)
        return path if path.is_absolute() else base / path


class CoverageRunConfig(_RunConfig):
    environment: str
    behavior: str
    policy: Optional[str] = None
    policy_class: Optional[str] = None
    n: int = Field(..., ge=1)
    trials: int = Field(2000, ge=100)
    seed: int = Field(0, ge=0)
    deltas: List[float] = Field(default_factory=lambda: [0.05], min_length=1)
    flavors: List[Flavor] = Field(default_factory=lambda: [Flavor.HOEFFDING], min_length=1)
    estimators: List[Literal["is", "wis", "dr"]] = Field(default_factory=lambda: ["is"], min_length=1)
    # "oracle", "wrong" or a model file path; required for dr
    model: Optional[str] = None
    completion: Optional[Literal["zero", "one"]] = None
    force_radius_one: bool = False

    @model_validator(mode="after")
    def one_target(self) -> CoverageRunConfig:
        if (self.policy is None) == (self.policy_class is None):
            raise ValueError("set exactly one of policy and policy_class")
        if any(not 0.0 < d < 1.0 for d in self.deltas):
            raise ValueError("every delta must lie in (0, 1)")
        return self


class CertificateRunConfig(_RunConfig):
    environment: str
    behavior: str
    policy_class: str
    risk: Union[str, dict]
    estimator: Literal["is", "wis", "dr"] = "is"
    delta: float = Field(0.05, gt=0.0, lt=1.0)
    flavor: Flavor = Flavor.HOEFFDING
    n: int = Field(..., ge=1)
    trials: int = Field(2000, ge=1)
    seed: int = Field(0, ge=0)
    model: Optional[str] = None
    completion: Optional[Literal["zero", "one"]] = None


class RateRunConfig(_RunConfig):
    risk: Union[str, dict]
    estimator: Literal["is", "wis", "dr"] = "is"
    delta: float = Field(0.05, gt=0.0, lt=1.0)
    flavor: Flavor = Flavor.HOEFFDING
    n_grid: List[int] = Field(..., min_length=4)
    trials_per_n: int = Field(200, ge=1)
    seed: int = Field(0, ge=0)
    family: Optional[MinimaxFamilySpec] = None
    environment: Optional[str] = None
    behavior: Optional[str] = None
    policy_class: Optional[str] = None
    model: Optional[str] = None
    completion: Optional[Literal["zero", "one"]] = None
    c0: float = Field(1.0, gt=0.0)

    @model_validator(mode="after")
    def one_source(self) -> RateRunConfig:
        if (self.family is None) == (self.environment is None):
            raise ValueError("set exactly one of family and environment")
        if self.environment is not None and (self.behavior is None or self.policy_class is None):
            raise ValueError("an environment rate curve also needs behavior and policy_class")
        return self


# Shared helpers


def parse_risk_arg(value: Union[str, dict]) -> RiskFunctional:
    """A risk from JSON text, a JSON file, a bare kind name or a decoded dict."""
    if isinstance(value, dict):
        return parse_risk(value)
    text = value.strip()
    if text.startswith("{"):
        return parse_risk(text)
    if Path(text).is_file():
        return parse_risk(load_json(text, "risk"))
    return parse_risk({"kind": text})


def _model_for(
    choice: Optional[str], env: Environment, base: Path = Path(".")
) -> Optional[ConditionalCDFModel]:
    if choice is None:
        return None
    if choice == "oracle":
        return env.oracle_model()
    if choice == "wrong":
        return TabularCDFModel.uniform(from_atoms([0.0], [1.0]), env.n_contexts, env.K, env.support)
    path = Path(choice) if Path(choice).is_absolute() else base / choice
    return load_model(path, env.n_contexts, env.K, env.support)


def _completion(choice: Optional[str], config: Config) -> float:
    if choice is None:
        return config.completion_value
    return 1.0 if choice == "one" else 0.0


def _load_run_config(path: str, model: type) -> tuple:
    doc = load_json(path, "run config")
    return model(**doc), Path(path).resolve().parent


class CLIContext:
    """Per-invocation state shared by the subcommands."""

    def __init__(self, args: argparse.Namespace):
        self.config = Config.load(args.config)
        level = args.log_level or self.config.log_level
        fmt = args.log_format or self.config.log_format
        self.logger: StructuredLogger = create_logger(
            "riskpess", {"log_level": level, "log_format": fmt, "log_file": self.config.log_file}
        )
        self.run_id = uuid.uuid4().hex[:12]
        self.logger.set_run_id(self.run_id)
        self.threads = args.threads if args.threads is not None else self.config.threads
        self.metrics_out = args.metrics_out or self.config.metrics_file
        wants_metrics = self.metrics_out is not None or self.config.metrics_enabled
        self.metrics: Optional[MetricsCollector] = MetricsCollector() if wants_metrics else None
        self.renderer = Renderer()

    def bound_config(self, estimator: str, delta: Optional[float], flavor: Optional[str],
                     dr_bias: Optional[float] = None) -> BoundConfig:
        return BoundConfig(
            delta=delta if delta is not None else self.config.default_delta,
            flavor=flavor or self.config.default_flavor,
            estimator=estimator,
            dr_bias=dr_bias,
        )

    def flush_metrics(self) -> None:
        if self.metrics is not None and self.metrics_out:
            Path(self.metrics_out).write_text(self.metrics.export_prometheus(), encoding="utf-8")


def _parse_dr_bias(value: Optional[str]) -> Union[None, float, str]:
    if value is None or value == "r_pi":
        return value
    try:
        bias = float(value)
    except ValueError:
        raise ConfigurationError(f"--dr-bias must be a nonnegative number or 'r_pi', got {value!r}")
    if bias < 0:
        raise ConfigurationError(f"--dr-bias must be nonnegative, got {bias}")
    return bias


def _data_model(path: Optional[str], data: Dataset) -> Optional[ConditionalCDFModel]:
    if path is None:
        return None
    return load_model(path, data.n_contexts, data.K, data.support)


# Subcommands


def cmd_gen_data(args: argparse.Namespace, ctx: CLIContext) -> int:
    env = load_environment(args.env)
    behavior = load_behavior(args.behavior, env)
    data = sample_dataset(env, behavior, args.n, args.seed)
    write_dataset(data, args.out)
    ctx.logger.log_event("dataset_written", "Dataset written", path=str(args.out), n=data.n, seed=args.seed)
    print(f"n={data.n} K={data.K} D={data.support.upper:g} contexts={data.n_contexts} out={args.out}")
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace, ctx: CLIContext) -> int:
    data = read_dataset(args.data)
    pi = load_policy(args.policy, data.n_contexts, data.K)
    rho = parse_risk_arg(args.risk)
    dr_bias = _parse_dr_bias(args.dr_bias)
    diag = diagnostics(data, pi)
    config = ctx.bound_config(
        args.estimator, args.delta, args.flavor, diag.r if dr_bias == "r_pi" else dr_bias
    )
    model = _data_model(args.model, data)
    if config.estimator.needs_model and model is None:
        raise MissingModelError("estimator dr needs a conditional CDF model (--model)")

    L = lipschitz_constant(rho, data.support).value
    cdf = estimate_cdf(data, pi, config.estimator, model, ctx.config.completion_value)
    rho_hat = evaluate_risk(rho, cdf, data.support)
    if config.estimator == Estimator.CLIPPED_IS:
        radius = pointwise_bound(diag, data.n, config.delta, config.flavor)
        source = "pointwise"
    else:
        radius = uniform_radius(diag, data.n, data.K, 0, config)
        source = "uniform_d0"
    if ctx.metrics:
        ctx.metrics.record_policy_evaluation(config.estimator.value)

    result = EvaluationResult(
        estimator=config.estimator,
        rho_hat=rho_hat,
        pointwise_radius=radius.value,
        radius_source=source,
        lcb=rho_hat - L * radius.value,
        lipschitz=L,
        risk=rho,
        diagnostics=diag,
    )
    if args.dump_cdf:
        dump_stepfn(cdf, args.dump_cdf)
    print(ctx.renderer.summarize_evaluation(result))
    return EXIT_OK


def cmd_learn(args: argparse.Namespace, ctx: CLIContext) -> int:
    data = read_dataset(args.data)
    policy_class = load_policy_class(args.policy_class, data.n_contexts, data.K)
    rho = parse_risk_arg(args.risk)
    dr_bias = _parse_dr_bias(args.dr_bias)
    config = ctx.bound_config(
        args.estimator, args.delta, args.flavor, dr_bias if isinstance(dr_bias, float) else None
    )
    bias_fn = None
    if dr_bias == "r_pi":
        # r_pi bounds the model error on uninformative rows for any model
        bias_fn = lambda _index, pi: diagnostics(data, pi).r  # noqa: E731
    learner = PolicyLearner(
        rho,
        config,
        model=_data_model(args.model, data),
        completion=ctx.config.completion_value,
        dr_bias_fn=bias_fn,
        threads=ctx.threads,
        logger=ctx.logger,
        metrics=ctx.metrics,
    )
    mode = "greedy" if args.greedy else "overlap_only" if args.overlap_only else "pessimistic"
    result = learner.select(data, policy_class, mode)
    if args.out:
        ctx.renderer.write(result, args.out, ctx.renderer.learn_table(result))
    else:
        print(result.model_dump_json(indent=2))
    print(ctx.renderer.summarize_learn(result))
    return EXIT_OK


def cmd_coverage(args: argparse.Namespace, ctx: CLIContext) -> int:
    run, base = _load_run_config(args.run_config, CoverageRunConfig)
    seed = args.seed if args.seed is not None else run.seed
    env = load_environment(run.resolve(base, run.environment))
    behavior = load_behavior(run.resolve(base, run.behavior), env)
    if run.policy is not None:
        target = load_policy(run.resolve(base, run.policy), env.n_contexts, env.K)
    else:
        target = load_policy_class(run.resolve(base, run.policy_class), env.n_contexts, env.K)
    model = _model_for(run.model, env, base)
    completion = _completion(run.completion, ctx.config)

    cells = []
    for name in run.estimators:
        estimator = Estimator.from_cli(name)
        # WIS and DR radii exist in one flavor only
        flavors = run.flavors if estimator == Estimator.CLIPPED_IS else [Flavor.HOEFFDING]
        for flavor in flavors:
            for delta in run.deltas:
                config = BoundConfig(delta=delta, flavor=flavor, estimator=estimator)
                cells.append(
                    coverage_experiment(
                        env, behavior, target, config, run.n, run.trials, seed,
                        model=model, completion=completion, threads=ctx.threads,
                        force_radius_one=run.force_radius_one,
                        logger=ctx.logger, metrics=ctx.metrics,
                    )
                )
    report = CoverageGridReport(cells=cells)
    if args.out:
        ctx.renderer.write(report, args.out, ctx.renderer.coverage_table(cells))
    else:
        print(report.model_dump_json(indent=2))
    print(ctx.renderer.summarize_coverage(cells))
    return EXIT_OK


def cmd_certificate(args: argparse.Namespace, ctx: CLIContext) -> int:
    run, base = _load_run_config(args.run_config, CertificateRunConfig)
    seed = args.seed if args.seed is not None else run.seed
    env = load_environment(run.resolve(base, run.environment))
    behavior = load_behavior(run.resolve(base, run.behavior), env)
    policy_class = load_policy_class(run.resolve(base, run.policy_class), env.n_contexts, env.K)
    config = BoundConfig(delta=run.delta, flavor=run.flavor, estimator=run.estimator)
    report = certificate_experiment(
        env, behavior, policy_class, parse_risk_arg(run.risk), config, run.n, run.trials, seed,
        model=_model_for(run.model, env, base), completion=_completion(run.completion, ctx.config),
        threads=ctx.threads, logger=ctx.logger, metrics=ctx.metrics,
    )
    if args.out:
        ctx.renderer.write(report, args.out)
    else:
        print(report.model_dump_json(indent=2))
    print(ctx.renderer.summarize_certificate(report))
    return EXIT_OK


def cmd_rate_curve(args: argparse.Namespace, ctx: CLIContext) -> int:
    run, base = _load_run_config(args.run_config, RateRunConfig)
    seed = args.seed if args.seed is not None else run.seed
    config = BoundConfig(delta=run.delta, flavor=run.flavor, estimator=run.estimator)
    env = behavior = policy_class = model = None
    if run.environment is not None:
        env = load_environment(run.resolve(base, run.environment))
        behavior = load_behavior(run.resolve(base, run.behavior), env)
        policy_class = load_policy_class(run.resolve(base, run.policy_class), env.n_contexts, env.K)
        model = _model_for(run.model, env, base)
    elif run.model is not None:
        raise ConfigurationError("minimax families take no model file; use an environment for dr")

    report = rate_curve(
        parse_risk_arg(run.risk), config, run.n_grid, run.trials_per_n, seed,
        family=run.family, env=env, behavior=behavior, policy_class=policy_class,
        model=model, completion=_completion(run.completion, ctx.config), c0=run.c0,
        threads=ctx.threads, logger=ctx.logger, metrics=ctx.metrics,
    )
    if args.out:
        ctx.renderer.write(report, args.out, ctx.renderer.rate_table(report))
    else:
        print(report.model_dump_json(indent=2))
    print(ctx.renderer.summarize_rate(report))
    return EXIT_OK


def cmd_natarajan(args: argparse.Namespace, ctx: CLIContext) -> int:
    policy_class: PolicyClass = read_policy_class(args.policy_class)
    K = max(max(p.table) for p in policy_class) + 1
    d = natarajan_dim_bruteforce(policy_class)
    print(json.dumps({
        "natarajan_dim": d,
        "declared": policy_class.natarajan_dim,
        "policies": len(policy_class),
        "contexts": policy_class.n_contexts,
        "growth_bound_holds": satisfies_growth_bound(policy_class, K, d),
    }, indent=2))
    return EXIT_OK


COMMANDS = {
    "gen-data": cmd_gen_data,
    "evaluate": cmd_evaluate,
    "learn": cmd_learn,
    "coverage": cmd_coverage,
    "certificate": cmd_certificate,
    "rate-curve": cmd_rate_curve,
    "natarajan": cmd_natarajan,
}


def _add_bound_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--risk", required=True, help="risk as JSON text, a JSON file or a kind name (e.g. mean)")
    p.add_argument("--estimator", choices=ESTIMATOR_CHOICES, default="is")
    p.add_argument("--delta", type=float, default=None, help="confidence level (default from config)")
    p.add_argument("--flavor", choices=FLAVOR_CHOICES, default=None)
    p.add_argument("--model", default=None, help="conditional CDF model file (required for dr)")
    p.add_argument("--dr-bias", default=None, help="model-bias bound for the dr radius: a number or r_pi")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="riskpess",
        description="Risk-aware pessimistic offline policy learning for contextual bandits",
    )
    parser.add_argument("--config", default=None, help="JSON/YAML settings file")
    parser.add_argument("--log-level", default=None, choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"])
    parser.add_argument("--log-format", default=None, choices=["json", "text"])
    parser.add_argument("--threads", type=int, default=None, help="worker threads (fallback: RISKPESS_THREADS)")
    parser.add_argument("--metrics-out", default=None, help="write Prometheus metrics to this file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="sample a logged dataset")
    p.add_argument("--env", required=True)
    p.add_argument("--behavior", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("evaluate", help="evaluate one policy")
    p.add_argument("--data", required=True)
    p.add_argument("--policy", required=True)
    _add_bound_flags(p)
    p.add_argument("--dump-cdf", default=None, help="write the estimated CDF to this file")

    p = sub.add_parser("learn", help="select a policy from a class")
    p.add_argument("--data", required=True)
    p.add_argument("--class", dest="policy_class", required=True)
    _add_bound_flags(p)
    p.add_argument("--out", default=None)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--greedy", action="store_true", help="maximize the plug-in risk only")
    group.add_argument("--overlap-only", action="store_true", help="rule out policies without full overlap")

    for name, help_text in (
        ("coverage", "coverage experiment grid"),
        ("certificate", "suboptimality-certificate experiment"),
        ("rate-curve", "suboptimality-vs-n experiment"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("run_config", metavar="CONFIG", help="experiment config (JSON)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None)

    p = sub.add_parser("natarajan", help="brute-force the Natarajan dimension of a class")
    p.add_argument("--class", dest="policy_class", required=True)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        ctx = CLIContext(args)
    except Exception as e:
        response = ErrorHandler().handle(e, {"command": args.command})
        print(response.model_dump_json(), file=sys.stderr)
        return response.exit_code
    try:
        code = COMMANDS[args.command](args, ctx)
    except Exception as e:
        response = ErrorHandler().handle(e, {"command": args.command}, ctx.run_id)
        ctx.logger.log_error(e, {"command": args.command})
        if ctx.metrics:
            ctx.metrics.record_error(response.error_code)
        print(response.model_dump_json(), file=sys.stderr)
        code = response.exit_code
    ctx.flush_metrics()
    return code


if __name__ == "__main__":
    sys.exit(main())
