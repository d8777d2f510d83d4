"""Dispatch of experiment commands onto the model operations, one row per (k, parameter)."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from typing import Optional

import numpy as np

from src import __version__
from src.experiments.config import ExperimentConfig, validate
from src.experiments.templates import render, uses_delta
from src.model.fock import build_planar_region, bulk_rule, fock_report, fock_space
from src.model.geometry import convergence_check, dense_rule
from src.model.regions import (
    build_measure,
    build_region,
    parse_point,
    probe_count_for,
    probe_grid,
    relative_density,
)
from src.model.sections import make_space, peak_tail_closed_form, peak_tail_mass, random_section
from src.model.spectra import (
    ball_mass_sup,
    berezin_sup,
    carleson_constant,
    exceptional_mass_ratio,
    kernel_lower_bound,
    norming_constant,
)
from src.utils.errors import ParseError
from src.utils.logger import get_module_logger, log_function_call

runner_logger = get_module_logger("runner")

DEFAULT_REGION = {"type": "all"}
DEFAULT_MEASURE = {"type": "volume", "region": {"type": "all"}}


@dataclass
class ResultRow:
    command: str
    k: int
    R: Optional[float] = None
    eps: Optional[float] = None
    delta: Optional[float] = None
    inf_ratio: Optional[float] = None
    lambda_min: Optional[float] = None
    lambda_max: Optional[float] = None
    norming_constant: Optional[float] = None
    carleson_constant: Optional[float] = None
    berezin_sup: Optional[float] = None
    ball_mass_sup: Optional[float] = None
    tail_mass: Optional[float] = None
    leak: Optional[float] = None
    exceptional_ratio: Optional[float] = None
    kernel_bound: Optional[float] = None
    total_mass: Optional[float] = None
    quad_change: Optional[float] = None
    seed: Optional[int] = None
    quad_radial: Optional[int] = None
    quad_azimuthal: Optional[int] = None
    config_digest: str = ""
    version: str = __version__

    def to_record(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _region(config: ExperimentConfig, k, delta=None):
    document = render(config.region or DEFAULT_REGION, k, delta, "$.region")
    return build_region(document, "$.region")


def _measure(config: ExperimentConfig, k):
    document = render(config.measure or DEFAULT_MEASURE, k, None, "$.measure")
    return build_measure(document, "$.measure")


def _probes(config: ExperimentConfig, k, R):
    return probe_grid(config.probe_count or probe_count_for(k, R))


def _quad_change(config: ExperimentConfig, g) -> float:
    """Relative change of V(g) when the dense rule's orders are doubled."""
    _, change = convergence_check(lambda z0, z1: g.mask(z0, z1).astype(float),
                                  config.quad_radial, config.quad_azimuthal)
    return change


def _row(config: ExperimentConfig, k, **values) -> ResultRow:
    values.setdefault("quad_radial", config.quad_radial)
    values.setdefault("quad_azimuthal", config.quad_azimuthal)
    return ResultRow(command=config.command, k=k, seed=config.seed,
                     config_digest=config.digest, **values)


# ---------------------------------------------------------------------------
# One function per command; each maps (config, rule, k, parameter) to a row


def _density(config, rule, k, _):
    report = relative_density(_region(config, k), k, config.R, _probes(config, k, config.R), rule)
    return _row(config, k, R=config.R, inf_ratio=report.inf_ratio)


def _norming(config, rule, k, _):
    g = _region(config, k)
    result = norming_constant(k, g, rule)
    return _row(config, k, lambda_min=result.lambda_min, lambda_max=result.lambda_max,
                norming_constant=result.norming_constant, total_mass=result.total_mass,
                quad_change=_quad_change(config, g))


def _carleson(config, rule, k, _):
    result = carleson_constant(k, _measure(config, k), rule)
    return _row(config, k, lambda_min=result.lambda_min, lambda_max=result.lambda_max,
                carleson_constant=result.carleson_constant, total_mass=result.total_mass)


def _berezin(config, rule, k, _):
    value = berezin_sup(k, _measure(config, k), _probes(config, k, config.R), rule)
    return _row(config, k, R=config.R, berezin_sup=value)


def _peak(config, rule, k, _):
    center = parse_point(config.point, "$.point")
    return _row(config, k, R=config.R, tail_mass=peak_tail_mass(k, center, config.R, rule))


def _lemma32(config, rule, k, _):
    space = make_space(k)
    rng = np.random.default_rng([config.seed, k])
    ratios = [exceptional_mass_ratio(k, random_section(space, rng), config.R, config.eps, rule)
              for _ in range(config.samples)]
    return _row(config, k, R=config.R, eps=config.eps, exceptional_ratio=max(ratios))


def _lemma34(config, rule, k, _):
    return _row(config, k, eps=config.eps, kernel_bound=kernel_lower_bound(k, config.eps))


def _equivalence(config, rule, k, _):
    values = {"R": config.R}
    if config.region is not None:
        g = _region(config, k)
        values["inf_ratio"] = relative_density(g, k, config.R, _probes(config, k, config.R), rule).inf_ratio
        result = norming_constant(k, g, rule)
        values.update(lambda_min=result.lambda_min, lambda_max=result.lambda_max,
                      norming_constant=result.norming_constant,
                      total_mass=result.total_mass, quad_change=_quad_change(config, g))
    if config.measure is not None:
        mu = _measure(config, k)
        probes = _probes(config, k, config.R)
        result = carleson_constant(k, mu, rule)
        values.update(carleson_constant=result.carleson_constant,
                      total_mass=result.total_mass,
                      berezin_sup=berezin_sup(k, mu, probes, rule),
                      ball_mass_sup=ball_mass_sup(k, mu, probes, rule))
        values.setdefault("lambda_max", result.lambda_max)
    return _row(config, k, **values)


def _sweep(config, rule, k, value):
    if config.sweep_axis == "R":
        g = _region(config, k)
        report = relative_density(g, k, value, _probes(config, k, value), rule)
        result = norming_constant(k, g, rule)
        return _row(config, k, R=value, inf_ratio=report.inf_ratio,
                    norming_constant=result.norming_constant, lambda_min=result.lambda_min,
                    total_mass=result.total_mass, quad_change=_quad_change(config, g),
                    tail_mass=peak_tail_closed_form(k, value))
    g = _region(config, k, value)
    report = relative_density(g, k, config.R, _probes(config, k, config.R), rule)
    result = norming_constant(k, g, rule)
    return _row(config, k, R=config.R, delta=value, inf_ratio=report.inf_ratio,
                norming_constant=result.norming_constant, lambda_min=result.lambda_min,
                total_mass=result.total_mass, quad_change=_quad_change(config, g))


def _fock(config, rule, N, _):
    space = fock_space(N)
    planar = bulk_rule(space, config.quad_radial, config.quad_azimuthal)
    g = build_planar_region(render(config.region, N, None, "$.region"), "$.region")
    report = fock_report(space, g, planar)
    return _row(config, N, lambda_min=report.lambda_min, lambda_max=report.lambda_max,
                norming_constant=report.norming_constant, leak=report.leak,
                quad_radial=planar.radial_order, quad_azimuthal=planar.azimuthal_order)


COMMAND_HANDLERS = {
    "density": _density,
    "norming": _norming,
    "carleson": _carleson,
    "berezin": _berezin,
    "peak": _peak,
    "lemma32": _lemma32,
    "lemma34": _lemma34,
    "equivalence": _equivalence,
    "sweep": _sweep,
    "fock": _fock,
}


def tasks_for(config: ExperimentConfig):
    """(k, parameter) pairs in output order."""
    if config.command == "sweep":
        return [(k, value) for k in config.k_list for value in config.sweep_values]
    return [(k, None) for k in config.k_list]


def plan(config: ExperimentConfig) -> dict:
    """Validate the config and every rendered template without computing anything."""
    validate(config)
    tasks = tasks_for(config)
    for k, value in tasks:
        delta = value if config.command == "sweep" and config.sweep_axis == "delta" else None
        if config.command == "fock":
            build_planar_region(render(config.region, k, None, "$.region"), "$.region")
            continue
        if config.region is not None:
            if uses_delta(config.region) and delta is None:
                raise ParseError("$.region", "template uses {delta}; run it as a delta sweep")
            _region(config, k, delta)
        if config.measure is not None:
            _measure(config, k)
    return {
        "command": config.command,
        "tasks": [{"k": k, "value": value} for k, value in tasks],
        "config_digest": config.digest,
        "version": __version__,
        "config": config.to_document(),
    }


def run(config: ExperimentConfig):
    """Rows for every task, in config order regardless of completion order."""
    plan(config)
    log_function_call(runner_logger, "run", command=config.command, k_list=config.k_list,
                      threads=config.threads)
    handler = COMMAND_HANDLERS[config.command]
    rule = None if config.command in ("fock", "lemma34") else dense_rule(config.quad_radial, config.quad_azimuthal)
    tasks = tasks_for(config)

    def execute(task):
        k, value = task
        try:
            return handler(config, rule, k, value)
        except Exception as error:
            runner_logger.error(f"{config.command} failed at k={k}: {error}")
            raise

    if config.threads == 1:
        rows = [execute(task) for task in tasks]
    else:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            rows = list(pool.map(execute, tasks))
    runner_logger.info(f"{config.command}: {len(rows)} rows")
    return rows
