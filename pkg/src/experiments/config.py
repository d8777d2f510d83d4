"""Experiment configuration: a JSON document plus command-line overrides."""

import json
from dataclasses import asdict, dataclass, field
from typing import List, Optional

from src import __version__
from src.utils.errors import ConfigError, ParseError, ValidationError
from src.utils.numerics import stable_digest
from src.utils.settings import get_default_quad, get_threads

COMMANDS = ("density", "norming", "carleson", "berezin", "peak", "lemma32", "lemma34",
            "equivalence", "sweep", "fock")
FORMATS = ("csv", "json")
SWEEP_AXES = ("R", "delta")


@dataclass
class ExperimentConfig:
    command: str
    k_list: List[int] = field(default_factory=lambda: [4])
    R: float = 2.0
    eps: float = 0.1
    region: Optional[dict] = None
    measure: Optional[dict] = None
    point: object = field(default_factory=lambda: [0.0, 0.0])
    quad_radial: int = 128
    quad_azimuthal: int = 256
    probe_count: Optional[int] = None
    samples: int = 4
    sweep_axis: str = "R"
    sweep_values: List[float] = field(default_factory=list)
    seed: int = 0
    output_path: Optional[str] = None
    format: str = "csv"
    threads: int = 1

    def to_document(self) -> dict:
        return asdict(self)

    @property
    def digest(self) -> str:
        """First 16 hex digits of sha256 over the canonical JSON of everything that shapes the values."""
        document = self.to_document()
        for key in ("output_path", "format", "threads"):
            document.pop(key)
        document["version"] = __version__
        canonical = json.dumps(document, sort_keys=True, separators=(",", ":"))
        return stable_digest(canonical)


def parse_quad(text: str):
    """"128x256" -> (128, 256)."""
    try:
        radial, azimuthal = (int(part) for part in str(text).lower().split("x"))
    except ValueError:
        raise ConfigError(f"quadrature must look like RADIALxAZIMUTHAL, got {text!r}")
    if radial < 1 or azimuthal < 1:
        raise ConfigError(f"quadrature orders must be positive, got {text!r}")
    return radial, azimuthal


def parse_int_list(text: str, name: str) -> List[int]:
    try:
        values = [int(part) for part in str(text).split(",") if part.strip()]
    except ValueError:
        raise ConfigError(f"--{name} expects comma-separated integers, got {text!r}")
    if not values:
        raise ConfigError(f"--{name} is empty")
    return values


def parse_float_list(text: str, name: str) -> List[float]:
    try:
        values = [float(part) for part in str(text).split(",") if part.strip()]
    except ValueError:
        raise ConfigError(f"--{name} expects comma-separated numbers, got {text!r}")
    if not values:
        raise ConfigError(f"--{name} is empty")
    return values


def read_config_file(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as handle:
            document = json.load(handle)
    except OSError as error:
        raise ConfigError(f"cannot read config {path}: {error}")
    except json.JSONDecodeError as error:
        raise ParseError("$", f"invalid JSON at line {error.lineno} column {error.colno}: {error.msg}")
    if not isinstance(document, dict):
        raise ParseError("$", "config must be a JSON object")
    return document


def _number(document, key, kinds=(int, float)):
    value = document[key]
    if isinstance(value, bool) or not isinstance(value, kinds):
        raise ParseError(f"$.{key}", f"expected {'an integer' if kinds == (int,) else 'a number'}, got {value!r}")
    return value


def _int_list(document, key):
    value = document[key]
    if not isinstance(value, list) or not value or not all(
            isinstance(v, int) and not isinstance(v, bool) for v in value):
        raise ParseError(f"$.{key}", f"expected a non-empty list of integers, got {value!r}")
    return list(value)


def from_document(document: dict) -> ExperimentConfig:
    """Typed config from a JSON document; unknown keys and wrong types are parse errors."""
    known = set(ExperimentConfig.__dataclass_fields__) | {"quad"}
    for key in document:
        if key not in known:
            raise ParseError(f"$.{key}", "unknown configuration key")
    if "command" not in document:
        raise ParseError("$.command", "missing")
    values = {"command": document["command"]}
    if "k_list" in document:
        values["k_list"] = _int_list(document, "k_list")
    for key in ("R", "eps"):
        if key in document:
            values[key] = float(_number(document, key))
    for key in ("quad_radial", "quad_azimuthal", "samples", "seed", "threads"):
        if key in document:
            values[key] = _number(document, key, (int,))
    if document.get("probe_count") is not None:
        values["probe_count"] = _number(document, "probe_count", (int,))
    if "quad" in document:
        values["quad_radial"], values["quad_azimuthal"] = parse_quad(document["quad"])
    for key in ("region", "measure"):
        if document.get(key) is not None:
            if not isinstance(document[key], dict):
                raise ParseError(f"$.{key}", "expected an object")
            values[key] = document[key]
    if "point" in document:
        values["point"] = document["point"]
    if "sweep_axis" in document:
        values["sweep_axis"] = document["sweep_axis"]
    if "sweep_values" in document:
        sweep = document["sweep_values"]
        if not isinstance(sweep, list) or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in sweep):
            raise ParseError("$.sweep_values", "expected a list of numbers")
        values["sweep_values"] = [float(v) for v in sweep]
    for key in ("output_path", "format"):
        if document.get(key) is not None:
            if not isinstance(document[key], str):
                raise ParseError(f"$.{key}", "expected a string")
            values[key] = document[key]
    return ExperimentConfig(**values)


def apply_overrides(config: ExperimentConfig, args) -> ExperimentConfig:
    """Command-line flags win over the config file."""
    if getattr(args, "k", None):
        config.k_list = parse_int_list(args.k, "k")
    if getattr(args, "R", None) is not None:
        config.R = float(args.R)
    if getattr(args, "eps", None) is not None:
        config.eps = float(args.eps)
    if getattr(args, "quad", None):
        config.quad_radial, config.quad_azimuthal = parse_quad(args.quad)
    if getattr(args, "seed", None) is not None:
        config.seed = int(args.seed)
    if getattr(args, "probes", None) is not None:
        config.probe_count = int(args.probes)
    if getattr(args, "samples", None) is not None:
        config.samples = int(args.samples)
    if getattr(args, "sweep", None):
        config.sweep_axis = args.sweep
    if getattr(args, "values", None):
        config.sweep_values = parse_float_list(args.values, "values")
    if getattr(args, "out", None):
        config.output_path = args.out
    if getattr(args, "format", None):
        config.format = args.format
    if getattr(args, "threads", None) is not None:
        config.threads = int(args.threads)
    return config


def default_config(command: str) -> ExperimentConfig:
    radial, azimuthal = parse_quad(get_default_quad())
    return ExperimentConfig(command=command, quad_radial=radial, quad_azimuthal=azimuthal,
                            threads=get_threads())


def validate(config: ExperimentConfig) -> ExperimentConfig:
    """Cross-field checks; raises ConfigError or ValidationError naming the field."""
    if config.command not in COMMANDS:
        raise ParseError("$.command", f"expected one of {', '.join(COMMANDS)}, got {config.command!r}")
    if config.format not in FORMATS:
        raise ConfigError(f"format must be csv or json, got {config.format!r}")
    if any(k < 0 for k in config.k_list):
        raise ValidationError(f"$.k_list: degrees must be >= 0, got {config.k_list}")
    if config.command not in ("fock", "norming", "carleson", "berezin") and any(k < 1 for k in config.k_list):
        raise ValidationError(f"$.k_list: {config.command} needs k >= 1")
    if not config.R > 0.0:
        raise ValidationError(f"$.R: must be positive, got {config.R}")
    if not config.eps > 0.0:
        raise ValidationError(f"$.eps: must be positive, got {config.eps}")
    if config.quad_radial < 1 or config.quad_azimuthal < 1:
        raise ConfigError("quadrature orders must be positive")
    if config.probe_count is not None and config.probe_count < 1:
        raise ConfigError(f"probe count must be >= 1, got {config.probe_count}")
    if config.samples < 1:
        raise ConfigError(f"samples must be >= 1, got {config.samples}")
    if config.threads < 1:
        raise ConfigError(f"threads must be >= 1, got {config.threads}")
    if config.command == "sweep":
        if config.sweep_axis not in SWEEP_AXES:
            raise ParseError("$.sweep_axis", f"expected R or delta, got {config.sweep_axis!r}")
        if not config.sweep_values:
            raise ParseError("$.sweep_values", "sweep needs at least one value")
        if config.region is None:
            raise ParseError("$.region", "sweep needs a region template")
    if config.command == "fock" and config.region is None:
        config.region = {"type": "bulk"}
    if config.command == "equivalence" and config.region is None and config.measure is None:
        raise ParseError("$.region", "equivalence needs a region or a measure template")
    return config
