"""
Configuration Management

Load and validate experiment configurations from YAML (JSON documents are
accepted by the same loader).

Implements:
- ProblemConfig / MethodConfig / ReferenceConfig / OutputConfig sections
- ExperimentConfig.from_yaml(), from_dict(), validate()
- apply_overrides(): dotted `key=value` overrides from the command line

References:
- configs/default.yaml: Desk-scale defaults
- docs/theory.md §6: Experiments
"""

import math
import types
import typing
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

MODES = ("sparse_grid", "fixed_anova", "adaptive")
MIN_REFERENCE_COUNT = 1000


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


@dataclass
class ProblemConfig:
    """Benchmark discretization and parameter box."""

    n: int = 64
    partition: list = field(default_factory=lambda: [2, 2])
    nu: float = 0.5
    bounds: list = field(default_factory=lambda: [0.01, 1.0])
    convection_angle_deg: float = 30.0
    forcing: float = 1.0
    freeze_sd_at_anchor: bool = False

    @property
    def dimension(self) -> int:
        return int(self.partition[0]) * int(self.partition[1])

    @property
    def velocity(self) -> tuple[float, float]:
        """Angle measured clockwise from vertical: w = (sin θ, cos θ)."""
        theta = math.radians(self.convection_angle_deg)
        return (math.sin(theta), math.cos(theta))


@dataclass
class MethodConfig:
    """Run mode and tolerances."""

    mode: str = "adaptive"
    family: str = "gauss_legendre"
    eps_rb: list = field(default_factory=lambda: [1e-3])
    eps_a: float | None = None
    eps_a_ratio: float = 0.5
    eps_p: float | None = None
    eps_p_ratio: float = 0.5
    p0: int = 3
    l0: int = 2
    l_max: int = 3
    p_increment: int = 2
    p_max: int = 15
    cap_order_by_parent: bool = False
    level: int = 3
    p_fixed: int = 9
    sparse_levels: int = 3
    alpha: float = 0.0
    direct_below: float = 1e-6

    def tolerances(self, eps_rb: float) -> tuple[float, float]:
        """(ε_A, ε_p) for one ε_RB of the ladder."""
        eps_a = self.eps_a if self.eps_a is not None else self.eps_a_ratio * eps_rb
        eps_p = self.eps_p if self.eps_p is not None else self.eps_p_ratio * eps_rb
        return eps_a, eps_p


@dataclass
class ReferenceConfig:
    """Quasi-Monte-Carlo reference moments."""

    count: int = 10000
    sequence: str = "halton"
    full_solve_limit: int = 10000
    eps_ref: float = 1e-6
    chunk: int = 1000


@dataclass
class OutputConfig:
    directory: str = "results"
    dump_matrices: bool = False
    export_points: bool = False
    export_basis: bool = False


@dataclass
class ExperimentConfig:
    """
    Master configuration object.

    Attributes:
        problem: Grid, partition, ν, Γ, convection angle
        method: Mode, node family, tolerance ladder, orders
        reference: QMC reference settings
        output: Artifact directory and optional exports
        deterministic: Write zero timing columns so CSVs are byte-reproducible

    Methods:
        from_yaml(path): Load configuration from a YAML/JSON file
        from_dict(data): Build from a parsed mapping, rejecting unknown keys
        validate(): Check configuration validity
    """

    problem: ProblemConfig = field(default_factory=ProblemConfig)
    method: MethodConfig = field(default_factory=MethodConfig)
    reference: ReferenceConfig = field(default_factory=ReferenceConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    deterministic: bool = False

    @classmethod
    def from_yaml(cls, path: str | Path, overrides: list[str] | None = None) -> "ExperimentConfig":
        """
        Load configuration from a YAML file.

        Args:
            path: Path to YAML (or JSON) config file
            overrides: Dotted `section.key=value` strings applied before parsing

        Raises:
            FileNotFoundError: If config file doesn't exist
            ConfigError: If the document is malformed or has unknown keys
        """
        config_path = Path(path)
        if not config_path.exists():
            raise FileNotFoundError(f"Config file not found: {path}")
        try:
            with open(config_path) as f:
                data = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"{path}: malformed document: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        apply_overrides(data, overrides or [])
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        return _build(cls, data, prefix="")

    def to_dict(self) -> dict:
        return asdict(self)

    def validate(self) -> bool:
        """
        Validate configuration values.

        Returns:
            True if valid

        Raises:
            ConfigError: Naming the first invalid field
        """
        p, m, r = self.problem, self.method, self.reference
        _check(p.n >= 2, "problem.n", f"must be ≥ 2, got {p.n}")
        _check(len(p.partition) == 2, "problem.partition", "must have two entries")
        for k, blocks in enumerate(p.partition):
            _check(
                blocks >= 1 and p.n % blocks == 0,
                f"problem.partition[{k}]",
                f"{blocks} must be ≥ 1 and divide n={p.n}",
            )
        _check(p.nu > 0, "problem.nu", f"must be positive, got {p.nu}")
        _check(
            len(p.bounds) == 2 and 0 < p.bounds[0] <= p.bounds[1],
            "problem.bounds",
            f"must be [a, b] with 0 < a ≤ b, got {p.bounds}",
        )

        _check(m.mode in MODES, "method.mode", f"must be one of {MODES}, got '{m.mode}'")
        _check(
            m.family in ("gauss_legendre", "clenshaw_curtis"),
            "method.family",
            f"unknown node family '{m.family}'",
        )
        _check(len(m.eps_rb) >= 1, "method.eps_rb", "needs at least one tolerance")
        for k, eps in enumerate(m.eps_rb):
            _check(eps > 0, f"method.eps_rb[{k}]", f"must be positive, got {eps}")
        for name in ("eps_a", "eps_p"):
            value = getattr(m, name)
            _check(value is None or value > 0, f"method.{name}", f"must be positive, got {value}")
        for name in ("eps_a_ratio", "eps_p_ratio"):
            _check(getattr(m, name) > 0, f"method.{name}", "must be positive")
        _check(m.p0 >= 1 and m.p0 % 2 == 1, "method.p0", f"must be odd and ≥ 1, got {m.p0}")
        _check(m.l0 >= 1, "method.l0", f"must be ≥ 1, got {m.l0}")
        _check(m.l_max >= m.l0, "method.l_max", f"must be ≥ l0={m.l0}, got {m.l_max}")
        _check(m.p_increment >= 1, "method.p_increment", "must be ≥ 1")
        _check(m.p_max >= m.p0, "method.p_max", f"must be ≥ p0={m.p0}")
        _check(m.level >= 1, "method.level", f"must be ≥ 1, got {m.level}")
        _check(m.p_fixed >= 1, "method.p_fixed", f"must be ≥ 1, got {m.p_fixed}")
        _check(m.sparse_levels >= 0, "method.sparse_levels", "must be ≥ 0")
        _check(0.0 <= m.alpha <= 1.0, "method.alpha", f"must lie in [0, 1], got {m.alpha}")

        _check(
            r.count >= MIN_REFERENCE_COUNT,
            "reference.count",
            f"must be ≥ {MIN_REFERENCE_COUNT}, got {r.count}",
        )
        _check(
            r.sequence == "halton",
            "reference.sequence",
            f"only 'halton' is supported, got '{r.sequence}'",
        )
        _check(r.eps_ref > 0, "reference.eps_ref", "must be positive")
        _check(r.chunk >= 1, "reference.chunk", "must be ≥ 1")
        return True

    def __repr__(self) -> str:
        return (
            f"ExperimentConfig(mode={self.method.mode}, n={self.problem.n}, "
            f"partition={self.problem.partition}, ν={self.problem.nu}, "
            f"ε_RB={self.method.eps_rb})"
        )


def _check(condition: bool, key: str, message: str) -> None:
    if not condition:
        raise ConfigError(f"{key}: {message}")


def apply_overrides(data: dict, overrides: list[str]) -> dict:
    """
    Apply `section.key=value` overrides in place; values are parsed as YAML.

    Example:
        >>> apply_overrides({}, ["method.eps_rb=[1e-3, 1e-4]"])
        {'method': {'eps_rb': [0.001, 0.0001]}}
    """
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"Override '{item}' must look like section.key=value")
        key, raw = item.split("=", 1)
        parts = key.strip().split(".")
        target = data
        for part in parts[:-1]:
            target = target.setdefault(part, {})
            if not isinstance(target, dict):
                raise ConfigError(f"Override '{key}': '{part}' is not a section")
        try:
            target[parts[-1]] = yaml.safe_load(raw)
        except yaml.YAMLError as e:
            raise ConfigError(f"Override '{key}': cannot parse value '{raw}'") from e
    return data


def _coerce(value, annotation, key: str):
    """Coerce YAML scalars to the annotated type; YAML 1.1 reads '1e-3' as text."""
    origin = typing.get_origin(annotation)
    if origin in (typing.Union, types.UnionType):
        args = [a for a in typing.get_args(annotation) if a is not type(None)]
        if value is None:
            return None
        return _coerce(value, args[0], key)
    if annotation is float:
        try:
            return float(value)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"{key}: expected a number, got {value!r}") from e
    if annotation is int:
        if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        try:
            return int(value)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"{key}: expected an integer, got {value!r}") from e
    if annotation is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{key}: expected true/false, got {value!r}")
        return value
    if annotation is str:
        return str(value)
    if annotation is list:
        if not isinstance(value, list):
            value = [value]
        return [_number(v, f"{key}[{k}]") for k, v in enumerate(value)]
    return value


def _number(value, key: str):
    if isinstance(value, bool):
        raise ConfigError(f"{key}: expected a number, got {value!r}")
    if isinstance(value, int | float):
        return value
    try:
        return float(value)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{key}: expected a number, got {value!r}") from e


def _build(cls, data: dict, prefix: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{prefix.rstrip('.') or 'config'}: expected a mapping")
    hints = typing.get_type_hints(cls)
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"Unknown key '{prefix}{unknown[0]}'")
    kwargs = {}
    for name, value in data.items():
        annotation = hints[name]
        key = f"{prefix}{name}"
        if isinstance(annotation, type) and hasattr(annotation, "__dataclass_fields__"):
            kwargs[name] = _build(annotation, value, prefix=f"{key}.")
        else:
            kwargs[name] = _coerce(value, annotation, key)
    return cls(**kwargs)
