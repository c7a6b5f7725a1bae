from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Dict, List, Mapping, Optional, Tuple

from .errors import ConfigError
from .numerics.grid import Grid
from .numerics.lowrank import DENSE_CAP

ENV_CONFIG = "GPBOARD_CONFIG"

# Order is the order records appear in a suite report.
CHECK_NAMES: Tuple[str, ...] = (
    "enumerate",
    "golden",
    "theta",
    "ledger",
    "trace",
    "definetti",
    "nls",
    "factorize",
    "moves",
    "resum",
    "mild",
    "strichartz",
)

# Caps enforced by validate()
K_CAP = 4
R_CAP = 10


@dataclass
class GridConfig:
    # Spatial dimension (1, 2 or 3)
    d: int = 1
    # Points per axis; a power of two >= 8
    n: int = 64
    # Periodic box length
    length: float = 2 * math.pi

    def build(self) -> Grid:
        return Grid(self.d, self.n, self.length)


@dataclass
class Tolerances:
    # Identities whose numerical error is quadrature or round-off
    quadrature: float = 1e-6
    # Exact algebra (tree vs. direct construction, trace-norm oracle)
    exact: float = 1e-10
    # Partial-trace compatibility of mixtures
    admissibility: float = 1e-12
    # Mild-form residual of the NLS mixture
    mild: float = 1e-5
    # Split-step against the plane-wave closed form
    plane_wave: float = 1e-8


@dataclass
class RunConfig:
    checks: List[str] = field(default_factory=lambda: list(CHECK_NAMES))
    # Enumeration sweep: every k <= k_max, r <= r_max
    k_max: int = 3
    r_max: int = 5
    enumeration_cap: int = 10**7
    # Random trees for the term-count law
    theta_samples: int = 100
    theta_r_max: int = 6
    # (k, r) cases for the quadrature checks
    move_cases: List[List[int]] = field(default_factory=lambda: [[1, 3], [1, 4], [2, 3]])
    resum_cases: List[List[int]] = field(default_factory=lambda: [[1, 3], [2, 2]])
    factorize_k_max: int = 2
    factorize_r_max: int = 3
    grid: GridConfig = field(default_factory=GridConfig)
    tolerances: Tolerances = field(default_factory=Tolerances)
    # Time horizon of the move/resummation integrals
    t: float = 0.5
    # Simplex quadrature: Gauss-Legendre order per level and depth cap
    quad_order: int = 8
    max_depth: int = 4
    # Nodes evaluated per batch
    chunk: int = 512
    # NLS coupling, split-step size and horizon of the mild checks
    lam: float = 1.0
    nls_dt: float = 1e-4
    mild_t: float = 0.1
    # Ledger constants; T defaults to 0.9 / (2 C M^4)
    ledger_T: Optional[float] = None
    ledger_M: float = 1.0
    ledger_C: float = 1.0
    ledger_k_max: int = 3
    ledger_r_max: int = 10
    trace_samples: int = 50
    trace_n: int = 32
    chebyshev_order: int = 20
    seed: int = 0
    workers: int = 1
    json_out: Optional[str] = None
    csv_out: Optional[str] = None

    def validate(self) -> "RunConfig":
        unknown = [c for c in self.checks if c not in CHECK_NAMES]
        if unknown:
            raise ConfigError(f"unknown check(s) {unknown}; choose from {list(CHECK_NAMES)}")
        if not 1 <= self.k_max <= K_CAP or not 1 <= self.r_max <= R_CAP:
            raise ConfigError(f"k_max must be in 1..{K_CAP} and r_max in 1..{R_CAP}")
        for name in ("move_cases", "resum_cases"):
            for case in getattr(self, name):
                if len(case) != 2:
                    raise ConfigError(f"{name} entries are [k, r] pairs (got {case})")
                k, r = case
                if not 1 <= k <= K_CAP or not 1 <= r <= self.max_depth:
                    raise ConfigError(
                        f"{name} case {case} outside k <= {K_CAP}, r <= {self.max_depth}"
                    )
        if self.factorize_r_max > self.max_depth:
            raise ConfigError("factorize_r_max exceeds max_depth")
        if not 1 <= self.factorize_k_max <= K_CAP or not 1 <= self.ledger_k_max <= K_CAP:
            raise ConfigError(f"factorize_k_max and ledger_k_max must be in 1..{K_CAP}")
        if not 1 <= self.theta_r_max <= R_CAP or not 1 <= self.ledger_r_max <= R_CAP:
            raise ConfigError(f"theta_r_max and ledger_r_max must be in 1..{R_CAP}")
        if self.chebyshev_order < 1 or self.max_depth < 1:
            raise ConfigError("chebyshev_order and max_depth must be >= 1")
        for name in ("quadrature", "exact", "admissibility", "mild", "plane_wave"):
            if not getattr(self.tolerances, name) > 0:
                raise ConfigError(f"tolerance {name} must be positive")
        try:
            self.grid.build()
            Grid(1, self.trace_n)
        except ValueError as exc:
            raise ConfigError(f"invalid grid: {exc}") from exc
        positive = (
            "quad_order",
            "chunk",
            "nls_dt",
            "ledger_M",
            "ledger_C",
            "theta_samples",
            "trace_samples",
            "workers",
        )
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.t < 0 or self.mild_t < 0:
            raise ConfigError("time horizons must be nonnegative")
        problems = self.dense_problems()
        if problems:
            raise ConfigError("; ".join(problems))
        return self

    def dense_problems(self) -> List[str]:
        """Checks whose dense slot matrices would not fit ``DENSE_CAP`` on this grid."""
        size = self.grid.n**self.grid.d
        problems: List[str] = []
        if "factorize" in self.checks:
            slots = self.factorize_k_max + self.factorize_r_max
            if size**2 * slots > DENSE_CAP:
                problems.append(f"factorize needs {slots} dense {size}x{size} matrices")
        for name, cases in (("moves", self.move_cases), ("resum", self.resum_cases)):
            if name not in self.checks:
                continue
            for k, r in cases:
                if k < 2:
                    continue
                maps = 1 if name == "moves" else math.prod(k + c - 1 for c in range(1, r + 1))
                nodes = 2 * maps * self.quad_order**r
                if size**2 * nodes > DENSE_CAP:
                    problems.append(
                        f"{name} case [{k}, {r}] needs {nodes} dense {size}x{size} slot matrices"
                    )
        return problems

    def horizon_T(self) -> float:
        if self.ledger_T is not None:
            return self.ledger_T
        return 0.9 / (2 * self.ledger_C * self.ledger_M**4)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


_OPTIONAL = {"ledger_T": (int, float), "json_out": (str,), "csv_out": (str,)}


def _check_type(name: str, value: Any, default: Any) -> Any:
    if name in _OPTIONAL:
        if value is None or (isinstance(value, _OPTIONAL[name]) and not isinstance(value, bool)):
            return value
        raise ConfigError(f"field {name!r} has wrong type {type(value).__name__}")
    if isinstance(default, bool) or isinstance(value, bool):
        if isinstance(default, bool) and isinstance(value, bool):
            return value
        raise ConfigError(f"field {name!r} has wrong type {type(value).__name__}")
    if isinstance(default, float) and isinstance(value, (int, float)):
        return float(value)
    if isinstance(default, int) and isinstance(value, int):
        return value
    if isinstance(default, list) and isinstance(value, list):
        return value
    raise ConfigError(f"field {name!r} has wrong type {type(value).__name__}")


def _build(cls: Any, data: Mapping[str, Any], where: str) -> Any:
    if not isinstance(data, Mapping):
        raise ConfigError(f"{where or 'config'} must be a JSON object")
    obj = cls()
    known = {f.name for f in fields(cls)}
    extra = sorted(set(data) - known)
    if extra:
        raise ConfigError(f"unknown key(s) {extra} in {where or 'config'}")
    for key, value in data.items():
        current = getattr(obj, key)
        if isinstance(current, GridConfig):
            setattr(obj, key, _build(GridConfig, value, "grid"))
        elif isinstance(current, Tolerances):
            setattr(obj, key, _build(Tolerances, value, "tolerances"))
        else:
            setattr(obj, key, _check_type(key, value, current))
    return obj


def config_from_dict(data: Mapping[str, Any]) -> RunConfig:
    cfg: RunConfig = _build(RunConfig, data, "")
    return cfg


def resolve_config_path(explicit: Optional[str] = None) -> Optional[str]:
    """``--config`` wins over the environment variable."""
    if explicit:
        return explicit
    return os.environ.get(ENV_CONFIG) or None


def load_config(path: Optional[str] = None) -> RunConfig:
    resolved = resolve_config_path(path)
    if resolved is None:
        return RunConfig()
    try:
        with open(resolved, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {resolved}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {resolved} is not valid JSON: {exc}") from exc
    return config_from_dict(data)


__all__ = [
    "ENV_CONFIG",
    "CHECK_NAMES",
    "GridConfig",
    "Tolerances",
    "RunConfig",
    "config_from_dict",
    "resolve_config_path",
    "load_config",
]
