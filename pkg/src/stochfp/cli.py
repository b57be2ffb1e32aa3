"""Configuration-driven experiment runner.

Reads a flat key-value config with section headers (grammar documented in
the README), builds the problem and schedules, validates the step/batch
coupling conditions, runs a seeded Monte-Carlo ensemble, and writes a trace
CSV plus a human-readable summary.

Exit codes: 0 success, 1 config error, 2 oracle failure, 3 diverged run
(the offending seed is reported), 4 validation failure (``validate`` only).
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, replace

import numpy as np

from .benchmarks import random_halfspace_problem, random_quadratic_problem
from .core import DivergenceError, OracleError, OracleInfo, Problem
from .diagnostics import (averaged_rate_bound, default_probes, ensemble,
                          estimate_sigma_sq, fit_rate, predicted_rate_exponent,
                          resolve_oracle, theorem_constants)
from .mappings import Halfspace, make_projection_family
from .schedules import BatchSchedule, StepSchedule, ValidationReport, validate
from .solvers import METHODS, SolverConfig

__all__ = ["ConfigError", "ExperimentConfig", "parse_config",
           "run_experiment", "validate_only", "main"]

CSV_HEADER = ("k,alpha,batch,residual_mean,residual_se,"
              "f0gap_mean,f0gap_se,msq_dist_mean,msq_dist_se")


class ConfigError(ValueError):
    """Config file rejected; message carries file, line, and field."""


@dataclass
class ExperimentConfig:
    """Parsed experiment: problem, solver configuration, trial count, output."""

    problem: Problem
    solver: SolverConfig
    trials: int
    prefix: str
    fit_window: tuple[int, int]
    source: str


# ---------------------------------------------------------------------------
# parsing

_SECTIONS = ("problem", "method", "step", "batch", "run", "output")


def _read_sections(path: str) -> dict[str, list[tuple[int, str, str]]]:
    sections: dict[str, list[tuple[int, str, str]]] = {s: [] for s in _SECTIONS}
    current = None
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc}") from exc
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip().lower()
            if name not in _SECTIONS:
                raise ConfigError(f"{path}:{lineno}: unknown section [{name}]")
            current = name
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        if current is None:
            raise ConfigError(f"{path}:{lineno}: key outside any [section]")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        sections[current].append((lineno, key.lower(), value))
    return sections


class _Section:
    """Typed accessor over one section's (line, key, value) triples."""

    def __init__(self, path: str, name: str,
                 entries: list[tuple[int, str, str]]):
        self.path = path
        self.name = name
        self.entries = entries
        self._used: set[str] = set()

    def _find(self, key: str) -> tuple[int, str] | None:
        hits = [(ln, v) for ln, k, v in self.entries if k == key]
        if len(hits) > 1:
            raise ConfigError(f"{self.path}:{hits[1][0]}: duplicate key "
                              f"'{key}' in [{self.name}]")
        return hits[0] if hits else None

    def all(self, key: str) -> list[tuple[int, str]]:
        self._used.add(key)
        return [(ln, v) for ln, k, v in self.entries if k == key]

    def get(self, key: str, conv, default=None, required: bool = False):
        self._used.add(key)
        hit = self._find(key)
        if hit is None:
            if required:
                raise ConfigError(f"{self.path}: [{self.name}] is missing "
                                  f"required key '{key}'")
            return default
        lineno, value = hit
        try:
            return conv(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{self.path}:{lineno}: bad value for "
                              f"'{key}': {exc}") from exc

    def reject_unused(self):
        for lineno, key, _ in self.entries:
            if key not in self._used:
                raise ConfigError(f"{self.path}:{lineno}: unknown key '{key}' "
                                  f"in [{self.name}]")


def _vector(text: str) -> np.ndarray:
    vals = [float(tok) for tok in text.split()]
    if not vals:
        raise ValueError("expected at least one number")
    return np.array(vals)


def _halfspace(text: str) -> Halfspace:
    if ";" not in text:
        raise ValueError("expected 'a1 a2 ... ad ; offset'")
    left, right = text.split(";", 1)
    return Halfspace(normal=_vector(left), offset=float(right))


def _eta(text: str):
    return "auto" if text.strip().lower() == "auto" else float(text)


def _build_problem(sec: _Section) -> Problem:
    kind = sec.get("kind", str, required=True).lower()
    if kind == "halfspaces":
        rows = sec.all("halfspace")
        if not rows:
            raise ConfigError(f"{sec.path}: [problem] kind=halfspaces needs "
                              "at least one 'halfspace =' line")
        halfspaces = []
        for lineno, text in rows:
            try:
                halfspaces.append(_halfspace(text))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{sec.path}:{lineno}: bad halfspace: {exc}") from exc
        x0 = sec.get("x0", _vector, required=True)
        halfspaces = tuple(halfspaces)
        try:
            family = make_projection_family(halfspaces)
            problem = Problem(family=family, x0=x0,
                              oracle_info=OracleInfo("halfspaces", halfspaces),
                              name="halfspaces")
        except ValueError as exc:
            raise ConfigError(f"{sec.path}: [problem]: {exc}") from exc
    elif kind == "random_halfspaces":
        n = sec.get("n", int, required=True)
        dim = sec.get("dim", int, required=True)
        gen_seed = sec.get("gen_seed", int, required=True)
        scale = sec.get("anchor_scale", float, default=2.0)
        try:
            problem = random_halfspace_problem(n, dim, gen_seed, anchor_scale=scale)
        except ValueError as exc:
            raise ConfigError(f"{sec.path}: [problem]: {exc}") from exc
    elif kind == "quadratic":
        n = sec.get("n", int, required=True)
        dim = sec.get("dim", int, required=True)
        gen_seed = sec.get("gen_seed", int, required=True)
        lo = sec.get("sv_lo", float, default=0.7)
        hi = sec.get("sv_hi", float, default=1.0)
        eta = sec.get("eta", _eta, default="auto")
        try:
            problem = random_quadratic_problem(n, dim, gen_seed,
                                               sv_range=(lo, hi), eta=eta)
        except ValueError as exc:
            raise ConfigError(f"{sec.path}: [problem]: {exc}") from exc
    else:
        raise ConfigError(f"{sec.path}: [problem] has unknown kind '{kind}'")
    sec.reject_unused()
    return problem


def _build_step(sec: _Section) -> StepSchedule:
    kind = sec.get("kind", str, required=True).lower()
    try:
        if kind == "poly":
            sched = StepSchedule.poly(sec.get("a", float, required=True))
        elif kind == "lambda_poly":
            sched = StepSchedule.lambda_poly(sec.get("a", float, required=True),
                                             sec.get("lambda", float, required=True))
        elif kind == "constant":
            sched = StepSchedule.constant(sec.get("c", float, required=True))
        else:
            raise ConfigError(f"{sec.path}: [step] has unknown kind '{kind}'")
    except ValueError as exc:
        raise ConfigError(f"{sec.path}: [step]: {exc}") from exc
    sec.reject_unused()
    return sched


def _build_batch(sec: _Section) -> BatchSchedule | None:
    if not sec.entries:
        return None
    kind = sec.get("kind", str, required=True).lower()
    cap = sec.get("cap", int)
    try:
        if kind == "constant":
            sched = BatchSchedule.constant(sec.get("b", int, required=True), cap=cap)
        elif kind == "polynomial":
            sched = BatchSchedule.polynomial(sec.get("a0", float, required=True),
                                             sec.get("b0", float, required=True),
                                             sec.get("c", float, required=True),
                                             cap=cap)
        elif kind == "exponential":
            sched = BatchSchedule.exponential(sec.get("b0", float, required=True),
                                              sec.get("delta", float, required=True),
                                              cap=cap)
        else:
            raise ConfigError(f"{sec.path}: [batch] has unknown kind '{kind}'")
    except ValueError as exc:
        raise ConfigError(f"{sec.path}: [batch]: {exc}") from exc
    sec.reject_unused()
    return sched


def parse_config(path: str) -> ExperimentConfig:
    """Parse and fully validate an experiment config file."""
    sections = _read_sections(path)
    problem = _build_problem(_Section(path, "problem", sections["problem"]))
    step = _build_step(_Section(path, "step", sections["step"]))
    batch = _build_batch(_Section(path, "batch", sections["batch"]))

    msec = _Section(path, "method", sections["method"])
    method = msec.get("name", str, required=True).lower()
    lam = msec.get("lambda", float)
    msec.reject_unused()
    if method not in METHODS:
        raise ConfigError(f"{path}: [method] name must be one of {METHODS}")

    rsec = _Section(path, "run", sections["run"])
    iterations = rsec.get("iterations", int, required=True)
    record_every = rsec.get("record_every", int, default=1)
    trials = rsec.get("trials", int, default=2)
    seed = rsec.get("seed", int, required=True)
    fit_lo = rsec.get("fit_lo", int, default=max(10, iterations // 100))
    fit_hi = rsec.get("fit_hi", int, default=iterations)
    rsec.reject_unused()
    if trials < 2:
        raise ConfigError(f"{path}: [run] trials must be >= 2")

    osec = _Section(path, "output", sections["output"])
    prefix = osec.get("prefix", str, required=True)
    osec.reject_unused()

    try:
        solver = SolverConfig(method=method, step=step, batch=batch,
                              iterations=iterations, seed=seed,
                              record_every=record_every, lam=lam)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return ExperimentConfig(problem=problem, solver=solver, trials=trials,
                            prefix=prefix, fit_window=(fit_lo, fit_hi),
                            source=path)


# ---------------------------------------------------------------------------
# condition logic per method

def method_conditions_ok(report: ValidationReport, method: str) -> tuple[bool, list[str]]:
    """Check the convergence-theory conditions relevant to the given method."""
    reasons = []

    def need(flag: bool, text: str):
        if not flag:
            reasons.append(text)

    if method in ("km", "stoch_km"):
        need(report.km_step_sum_diverges, "sum alpha_k(1-alpha_k) must diverge")
        need(report.step_max < 1.0, "averaged methods need alpha_k < 1")
        if method == "stoch_km":
            need(report.batch_inv_sqrt_summable, "sum 1/sqrt(b_k) must be finite")
    elif method == "halpern":
        need(report.step_vanishes, "alpha_k must vanish")
        need(report.step_sum_diverges, "sum alpha_k must diverge")
        need(report.step_abs_diff_summable, "sum |alpha_(k+1)-alpha_k| must be finite")
    elif method == "stoch_halpern":
        need(report.step_vanishes, "alpha_k must vanish")
        need(report.step_sum_diverges, "sum alpha_k must diverge")
        need(report.step_abs_diff_summable, "sum |alpha_(k+1)-alpha_k| must be finite")
        need(report.inv_b_le_alpha_sq.holds_eventually,
             "1/b_k <= alpha_k^2 never holds through the horizon")
        need(report.batch_inv_sqrt_summable, "sum 1/sqrt(b_k) must be finite")
    elif method == "stoch_halpern_lambda":
        need(report.step_sum_diverges, "sum alpha_k must diverge")
        need(report.inv_b_le_alpha.holds_eventually,
             "1/b_k <= alpha_k never holds through the horizon")
        need(report.alpha_le_lambda_bound is not None
             and report.alpha_le_lambda_bound.holds_eventually,
             "alpha_k <= (2*lam-1)/(2*(1-lam)) never holds through the horizon")
        need(report.batch_inv_summable, "sum 1/b_k must be finite")
    return (not reasons), reasons


# ---------------------------------------------------------------------------
# output

def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def _write_csv(path: str, stats) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for i, k in enumerate(stats.ks):
            row = [
                str(int(k)),
                _fmt(stats.alphas[i]),
                str(int(stats.batch_sizes[i])),
                _fmt(stats.residual_mean[i]),
                _fmt(stats.residual_se[i]),
                _fmt(stats.f0gap_mean[i]),
                _fmt(stats.f0gap_se[i]),
                _fmt(stats.msq_dist_mean[i]),
                _fmt(stats.msq_dist_se[i]),
            ]
            fh.write(",".join(row) + "\n")


def _summary_lines(cfg: ExperimentConfig, oracle, sigma_sq, constants,
                   report: ValidationReport, stats, slope_text: str) -> list[str]:
    s = cfg.solver
    out = []
    out.append(f"problem: {cfg.problem.name} "
               f"(n={cfg.problem.family.n}, d={cfg.problem.family.dim}, "
               f"kind={cfg.problem.family.kind})")
    out.append(f"method: {s.method}"
               + (f" (lambda={s.lam:g})" if s.lam is not None else ""))
    out.append(f"step: {s.step.describe()}")
    out.append(f"batch: {s.batch.describe() if s.batch is not None else 'exact mean (deterministic)'}")
    out.append(f"iterations: {s.iterations}; record_every: {s.record_every}; "
               f"trials: {cfg.trials}; master seed: {s.seed}")
    out.append("")
    out.append("oracle:")
    out.append(f"  method: {oracle.method}")
    out.append(f"  x_star: [{' '.join(_fmt(v) for v in oracle.x_star)}]")
    out.append(f"  residual_at_star: {_fmt(oracle.residual_at_star)}")
    out.append(f"  f0_star: {_fmt(stats.f0_star)}")
    out.append("")
    out.append("constants:")
    out.append(f"  sigma_sq_hat: {_fmt(sigma_sq)}")
    out.append(f"  M:  {_fmt(constants.M)}")
    out.append(f"  M1: {_fmt(constants.M1)}")
    out.append(f"  M2: {_fmt(constants.M2)}")
    out.append(f"  M3: {_fmt(constants.M3)}")
    out.append("  B:  " + (_fmt(constants.B) if constants.B is not None
                           else "undefined (constant batch: sum 1/b_k diverges)"))
    out.append("")
    out.append("schedule validation:")
    out.extend("  " + line for line in report.lines(include_batch=s.batch is not None))
    ok, reasons = method_conditions_ok(report, s.method)
    out.append(f"  conditions for {s.method}: {'satisfied' if ok else 'NOT satisfied'}")
    out.extend(f"    - {r}" for r in reasons)
    out.append("")
    out.append("rate fit:")
    out.append(f"  window: [{cfg.fit_window[0]}, {cfg.fit_window[1]}]")
    out.append(f"  {slope_text}")
    _, pred = predicted_rate_exponent(s.step)
    out.append(f"  {pred}")
    if (s.method == "stoch_halpern_lambda" and s.batch is not None
            and stats.x_star is not None):
        dist0 = float(np.sum((cfg.problem.x0 - oracle.x_star) ** 2))
        rhs = averaged_rate_bound(constants, s.step, s.batch, s.iterations, dist0)
        out.append(f"  rate bound rhs at horizon: {_fmt(rhs)}")
    out.append("")
    out.append("final recorded iterate:")
    out.append(f"  k: {int(stats.ks[-1])}")
    out.append(f"  mean residual: {_fmt(stats.residual_mean[-1])}")
    out.append(f"  mean squared distance to x_star: {_fmt(stats.msq_dist_mean[-1])}")
    out.append(f"  mean f0 gap: {_fmt(stats.f0gap_mean[-1])}")
    return out


def run_experiment(config_path: str, trials: int | None = None,
                   seed: int | None = None, out_prefix: str | None = None,
                   stream=None) -> int:
    """Run the configured ensemble and write ``<prefix>_trace.csv`` and
    ``<prefix>_summary.txt``.  Returns the process exit code."""
    stream = stream if stream is not None else sys.stdout
    try:
        cfg = parse_config(config_path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    if trials is not None:
        cfg.trials = trials
        if cfg.trials < 2:
            print("config error: --trials must be >= 2", file=sys.stderr)
            return 1
    if seed is not None:
        cfg.solver = replace(cfg.solver, seed=seed)
    if out_prefix is not None:
        cfg.prefix = out_prefix

    try:
        oracle = resolve_oracle(cfg.problem)
    except OracleError as exc:
        print(f"oracle failure: {exc}", file=sys.stderr)
        return 2

    s = cfg.solver
    report = validate(s.step, s.batch, s.iterations, lam=s.lam) \
        if s.batch is not None else validate(s.step, BatchSchedule.constant(1),
                                             s.iterations, lam=s.lam)
    try:
        stats = ensemble(cfg.problem, s, cfg.trials)
    except DivergenceError as exc:
        print(f"diverged run: {exc} (trial seed {exc.seed})", file=sys.stderr)
        return 3

    probes = default_probes(cfg.problem, oracle, seed=s.seed)
    sigma_sq = estimate_sigma_sq(cfg.problem.family, probes)
    constants = theorem_constants(cfg.problem, oracle, sigma_sq, batch=s.batch)

    try:
        slope = fit_rate(stats, cfg.fit_window)
        slope_text = f"fitted slope: {_fmt(slope)}"
    except ValueError as exc:
        slope_text = f"fit unavailable: {exc}"

    directory = os.path.dirname(cfg.prefix)
    if directory:
        os.makedirs(directory, exist_ok=True)
    trace_path = cfg.prefix + "_trace.csv"
    summary_path = cfg.prefix + "_summary.txt"
    _write_csv(trace_path, stats)
    lines = _summary_lines(cfg, oracle, sigma_sq, constants, report, stats,
                           slope_text)
    with open(summary_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"wrote {trace_path} and {summary_path}", file=stream)
    return 0


def validate_only(config_path: str, stream=None) -> int:
    """Print the validation report and constants preview without running trials."""
    stream = stream if stream is not None else sys.stdout
    try:
        cfg = parse_config(config_path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    s = cfg.solver
    batch = s.batch if s.batch is not None else BatchSchedule.constant(1)
    report = validate(s.step, batch, s.iterations, lam=s.lam)
    for line in report.lines(include_batch=s.batch is not None):
        print(line, file=stream)
    try:
        oracle = resolve_oracle(cfg.problem)
    except OracleError as exc:
        print(f"oracle failure: {exc}", file=sys.stderr)
        return 2
    probes = default_probes(cfg.problem, oracle, seed=s.seed)
    sigma_sq = estimate_sigma_sq(cfg.problem.family, probes)
    constants = theorem_constants(cfg.problem, oracle, sigma_sq, batch=s.batch)
    print(f"sigma_sq_hat = {_fmt(sigma_sq)}", file=stream)
    print(f"M = {_fmt(constants.M)}; M1 = {_fmt(constants.M1)}; "
          f"M2 = {_fmt(constants.M2)}; M3 = {_fmt(constants.M3)}", file=stream)
    if constants.B is not None:
        print(f"B = {_fmt(constants.B)}", file=stream)
    ok, reasons = method_conditions_ok(report, s.method)
    print(f"conditions for {s.method}: {'satisfied' if ok else 'NOT satisfied'}",
          file=stream)
    for r in reasons:
        print(f"  - {r}", file=stream)
    return 0 if ok else 4


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="stochfp",
        description="Stochastic fixed-point experiment runner",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--trials", type=int, default=None,
                       help="override the configured trial count")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the configured master seed")
    p_run.add_argument("--out", type=str, default=None,
                       help="override the configured output prefix")
    p_val = sub.add_parser("validate", help="validate schedules without running")
    p_val.add_argument("config")
    args = parser.parse_args(argv)
    if args.command == "run":
        return run_experiment(args.config, trials=args.trials, seed=args.seed,
                              out_prefix=args.out)
    return validate_only(args.config)
