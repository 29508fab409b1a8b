"""``maxagg <subcommand> [--config FILE] [--key value ...]``.

Configuration comes from an optional flat ``key = value`` file followed by
``--key value`` overrides; later settings win. Exit codes: 0 success,
1 configuration error, 2 degenerate simulation, 3 no self-similar branch,
4 non-convergence.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import boxmodel, diagnostics, experiments, mildsolver, selfsimilar
from .core import Params, make_gaussian_initial
from .csvio import fmt, write_csv
from .errors import BracketFailure, ConvergenceFailure, DegenerateState, InvalidArgument, NoBranchError, NonConvergence

logger = logging.getLogger("maxagg")

MODES = ("simulate", "selfsimilar", "scan", "verify", "experiment")
EXIT_OK, EXIT_CONFIG, EXIT_DEGENERATE, EXIT_NO_BRANCH, EXIT_NONCONVERGENCE = range(5)


class ConfigError(InvalidArgument):
    pass


@dataclass
class ExperimentConfig:
    mode: str = "simulate"
    k0: float | None = None
    M_b: int = 200
    steps: int = 25000
    center: float = 0.5
    dispersion: float = 0.3
    profile: str | None = None
    perturb_cell: int | None = None
    perturb: float = 0.0
    schedule: tuple[int, ...] = ()
    out: str = "maxagg_out"
    birth: str = "verbatim"
    regime: str = "auto"
    # self-similar
    G_half: float | None = None
    D: float = 1.0
    delta: float = 1e-6
    rk_tol: float = 1e-10
    branch_tol: float = 1e-8
    scan_min: float = 0.2
    scan_max: float = 4.0
    scan_step: float = 0.05
    # mild solutions
    T: float = 1.1
    picard_n: int = 400
    picard_tol: float = 1e-10
    max_iter: int = 200
    # experiments
    name: str | None = None
    workers: int = 1
    steps_scale: float = 1.0

    def validate(self) -> "ExperimentConfig":
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.k0 is not None and not self.k0 > 0:
            raise ConfigError("k0 must be positive")
        if self.steps < 0:
            raise ConfigError("steps must be nonnegative")
        if self.M_b < 1:
            raise ConfigError("M_b must be positive")
        if self.birth not in boxmodel.BIRTH_RULES:
            raise ConfigError(f"birth must be one of {boxmodel.BIRTH_RULES}")
        if self.regime not in ("auto", "unscaled", "rescaled", "both"):
            raise ConfigError("regime must be auto, unscaled, rescaled or both")
        if self.profile is not None and not Path(self.profile).is_file():
            raise ConfigError(f"profile file not found: {self.profile}")
        if any(j < 0 for j in self.schedule):
            raise ConfigError("schedule entries must be nonnegative")
        if self.steps_scale <= 0:
            raise ConfigError("steps_scale must be positive")
        return self


def _parse_optional(conv):
    def parse(text):
        return None if text.strip().lower() in ("", "none", "null") else conv(text)
    return parse


def _parse_schedule(text) -> tuple[int, ...]:
    parts = [p for p in text.replace(";", ",").replace(" ", ",").split(",") if p]
    return tuple(int(p) for p in parts)


_CONVERTERS = {
    "float": float, "int": int, "str": str,
    "float | None": _parse_optional(float), "int | None": _parse_optional(int),
    "str | None": _parse_optional(str), "tuple[int, ...]": _parse_schedule,
}
_FIELDS = {f.name: f for f in fields(ExperimentConfig)}
_ALIASES = {name.lower(): name for name in _FIELDS} | {"birth_rule": "birth", "output": "out", "out_dir": "out"}


def _canonical(key: str) -> str:
    k = key.strip().lstrip("-").replace("-", "_")
    name = _ALIASES.get(k.lower())
    if name is None:
        raise ConfigError(f"unknown config key {key!r}")
    return name


def _coerce(name: str, text: str):
    try:
        return _CONVERTERS[str(_FIELDS[name].type)](text.strip())
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {text!r}") from exc


def read_config_file(path: Path) -> list[tuple[str, str]]:
    if not Path(path).is_file():
        raise ConfigError(f"config file not found: {path}")
    pairs = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = line.split("=", 1)
        pairs.append((key, value))
    return pairs


def _override_pairs(tokens: list[str]) -> list[tuple[str, str]]:
    pairs, k = [], 0
    while k < len(tokens):
        tok = tokens[k]
        if not tok.startswith("--"):
            raise ConfigError(f"unexpected argument {tok!r}")
        if "=" in tok:
            key, value = tok.split("=", 1)
            k += 1
        elif k + 1 < len(tokens):
            key, value = tok, tokens[k + 1]
            k += 2
        else:
            raise ConfigError(f"missing value for {tok}")
        pairs.append((key, value))
    return pairs


def build_config(mode: str, config_file: str | None = None, overrides: list[str] = ()) -> ExperimentConfig:
    cfg = ExperimentConfig(mode=mode)
    pairs = read_config_file(Path(config_file)) if config_file else []
    pairs += _override_pairs(list(overrides))
    for key, value in pairs:
        name = _canonical(key)
        if name == "mode":
            raise ConfigError("mode is given by the subcommand")
        setattr(cfg, name, _coerce(name, value))
    return cfg.validate()


def _require_k0(cfg: ExperimentConfig) -> float:
    if cfg.k0 is None:
        raise ConfigError("k0 is required")
    return cfg.k0


def _schedule(cfg: ExperimentConfig) -> tuple[int, ...]:
    return tuple(sorted({j for j in cfg.schedule if j <= cfg.steps} | {0, cfg.steps}))


def cmd_simulate(cfg: ExperimentConfig) -> int:
    k0 = _require_k0(cfg)
    spec = experiments.RunSpec(
        label="", k0=k0, schedule=_schedule(cfg), center=cfg.center, dispersion=cfg.dispersion,
        M_b=cfg.M_b, birth=cfg.birth, seed=cfg.profile, perturb_cell=cfg.perturb_cell, perturb=cfg.perturb,
    )
    try:
        d = experiments.initial_density(spec)
    except InvalidArgument as exc:
        raise ConfigError(str(exc)) from exc
    report = boxmodel.run(d, Params(k0), cfg.steps, spec.schedule, birth_rule=cfg.birth)
    out = Path(cfg.out)
    experiments.write_run(report, out)
    final = report.final
    shape = selfsimilar.shape_classify(boxmodel.rescaled_profile(final), rel_noise=experiments.SHAPE_NOISE)
    print(f"steps={report.termination} t={fmt(final.t)} N={fmt(final.N)} mass={fmt(final.mass)} shape={shape.value}")
    if len(report.snapshots) >= 2:
        stat = diagnostics.regime_stationarity(list(report.snapshots.values()), k0, window=2, regime=cfg.regime)
        print(" ".join(f"stationarity_{k}={fmt(v)}" for k, v in stat.items()))
    if report.error is not None:
        print(f"degenerate state: {report.error}", file=sys.stderr)
        return EXIT_DEGENERATE
    return EXIT_OK


def _summary_row(p: selfsimilar.Profile, shape) -> tuple:
    return (p.k0, p.G_half, p.N, p.m, p.G1, p.tail_exp, shape.value)


SUMMARY_HEADER = ("k0", "G_half", "N", "m", "G1", "tail_exp", "shape")


def cmd_selfsimilar(cfg: ExperimentConfig) -> int:
    out = Path(cfg.out)
    shoot_kw = dict(delta=cfg.delta, rk_tol=cfg.rk_tol)
    if cfg.k0 is not None:
        try:
            pair = selfsimilar.find_branches(cfg.k0, tol=cfg.branch_tol, **shoot_kw)
        except NoBranchError as exc:
            print(f"no self-similar branch: {exc}", file=sys.stderr)
            return EXIT_NO_BRANCH
        if pair.sub_shape is selfsimilar.Shape.TRIVIAL:
            items = [("trivial", pair.subcritical, pair.sub_shape)]
        else:
            items = [("subcritical", pair.subcritical, pair.sub_shape), ("supercritical", pair.supercritical, pair.super_shape)]
    elif cfg.G_half is not None:
        p = selfsimilar.shoot(selfsimilar.ShootConfig(D=cfg.D, G_half=cfg.G_half, **shoot_kw))
        shape = selfsimilar.shape_classify(p)
        items = [(shape.value.lower(), p, shape)]
    else:
        raise ConfigError("selfsimilar needs k0, or G_half (with D)")
    rows = []
    for branch, p, shape in items:
        experiments.write_profile(p, out / f"profile_{branch}.csv")
        row = _summary_row(p, shape)
        rows.append(row)
        print(" ".join(f"{k}={fmt(v)}" for k, v in zip(SUMMARY_HEADER, row)))
    write_csv(out / "summary.csv", SUMMARY_HEADER, rows)
    return EXIT_OK


def cmd_scan(cfg: ExperimentConfig) -> int:
    n = int(round((cfg.scan_max - cfg.scan_min) / cfg.scan_step))
    if n < 0:
        raise ConfigError("scan_max must not be below scan_min")
    values = np.round(cfg.scan_min + cfg.scan_step * np.arange(n + 1), 12)
    rows = selfsimilar.scan_moment_curve(values, D=cfg.D, delta=cfg.delta, rk_tol=cfg.rk_tol)
    path = write_csv(Path(cfg.out) / "moment_curve.csv", ("G_half", "N", "error"), ((r.G_half, r.N, r.error) for r in rows))
    print(f"wrote {path} ({len(rows)} rows)")
    return EXIT_OK


def cmd_verify(cfg: ExperimentConfig) -> int:
    k0 = _require_k0(cfg)
    if not 1.0 < cfg.T <= 1.5:
        raise ConfigError("verify needs 1 < T <= 1.5")
    steps = int(round((cfg.T - 1.0) * cfg.M_b))
    if abs(steps - (cfg.T - 1.0) * cfg.M_b) > 1e-8:
        raise ConfigError(f"T - 1 must be a multiple of 1/M_b = {1.0 / cfg.M_b}")
    if cfg.picard_n % cfg.M_b:
        raise ConfigError("picard_n must be a multiple of M_b")
    d = make_gaussian_initial(cfg.center, cfg.dispersion, cfg.M_b)
    out = Path(cfg.out)
    try:
        grid, rep = mildsolver.picard_solve(d, cfg.T, k0, tol=cfg.picard_tol, max_iter=cfg.max_iter, n=cfg.picard_n)
    except NonConvergence as exc:
        write_csv(out / "residuals.csv", ("iteration", "residual"), enumerate(exc.residual_history, 1))
        print(f"non-convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    box = boxmodel.run(d, Params(k0), steps, birth_rule=cfg.birth)
    if box.error is not None:
        print(f"degenerate state: {box.error}", file=sys.stderr)
        return EXIT_DEGENERATE
    l1 = diagnostics.l1_box_vs_mild(grid, box.final)
    header = ("T", "k0", "M_b", "picard_n", "l1", "iterations", "converged", "final_residual", "trace_error", "mass_min", "mass_max")
    row = (cfg.T, k0, cfg.M_b, cfg.picard_n, l1, rep.iterates_used, rep.converged,
           rep.residual_history[-1] if rep.residual_history else 0.0, rep.trace_error, rep.mass_min, rep.mass_max)
    write_csv(out / "verify.csv", header, [row])
    write_csv(out / "residuals.csv", ("iteration", "residual"), enumerate(rep.residual_history, 1))
    x = box.final.x
    write_csv(out / "comparison.csv", ("x", "box_G", "mild_g"), zip(x, box.final.G, grid.slice_at(grid.K, x)))
    print(f"T={fmt(cfg.T)} k0={fmt(k0)} l1={fmt(l1)} iterations={rep.iterates_used}")
    return EXIT_OK


def cmd_experiment(cfg: ExperimentConfig) -> int:
    if cfg.name not in experiments.EXPERIMENTS:
        raise ConfigError(f"experiment name must be one of {experiments.EXPERIMENTS}")
    rows = experiments.run_experiment(cfg.name, Path(cfg.out), workers=cfg.workers, steps_scale=cfg.steps_scale)
    for cid, value, threshold, passed in rows:
        status = "n/a" if passed is None else "PASS" if passed else "FAIL"
        print(f"{status} {cid} value={fmt(value)} threshold={fmt(threshold)}")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate, "selfsimilar": cmd_selfsimilar, "scan": cmd_scan,
    "verify": cmd_verify, "experiment": cmd_experiment,
}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="maxagg", description=__doc__.splitlines()[0])
    parser.add_argument("subcommand", choices=MODES)
    parser.add_argument("--config", help="flat key = value file; --key value overrides follow it")
    parser.add_argument("-v", "--verbose", action="store_true")
    args, rest = parser.parse_known_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = build_config(args.subcommand, args.config, rest)
        return COMMANDS[cfg.mode](cfg)
    except InvalidArgument as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DegenerateState as exc:
        print(f"degenerate state: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (BracketFailure, ConvergenceFailure) as exc:
        print(f"no converged branch: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except NonConvergence as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
