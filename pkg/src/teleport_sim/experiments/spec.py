"""Experiment configuration: a TOML file whose keys mirror ``ExperimentSpec``."""

from __future__ import annotations

import itertools
import math
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..nongauss import NG_KINDS, PLACEMENTS, TARGETS, NgOpSpec
from .models import INPUT_KINDS
from .optimize import SQUEEZE_DB

PROTOCOLS = ("cvbsm", "hbsm", "hbsm-incomplete", "direct")
ROUTES = ("cf", "fock")
OPTIMIZE = "optimize"


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class NgConfig:
    kind: str
    placement: str = "before"
    tc: float | str | None = None
    ts: float | str | None = None
    target: str = "both"

    def spec(self) -> NgOpSpec:
        seed = lambda v: 0.5 if v == OPTIMIZE else v
        return NgOpSpec(self.kind, self.placement, seed(self.tc), seed(self.ts), self.target)

    @property
    def optimized(self) -> tuple[str, ...]:
        return tuple(n for n in ("tc", "ts") if getattr(self, n) == OPTIMIZE)


@dataclass(frozen=True)
class BlochConfig:
    n_theta: int = 8
    n_phi: int = 8


@dataclass(frozen=True)
class ExperimentSpec:
    protocol: str
    input: str
    alpha: float | list[float]
    total_loss_db: float | list[float] = 0.0
    squeeze_db: float | list[float] | str = 3.0
    g: float | str = 1.0
    figure: str = "custom"
    t1_db: float | None = None
    t2_db: float | None = None
    route: str = "cf"
    adaptive_cutoff: bool = False
    ng: NgConfig | None = None
    bloch: BlochConfig = field(default_factory=BlochConfig)

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"protocol must be one of {PROTOCOLS}")
        if self.input not in INPUT_KINDS:
            raise ConfigError(f"input must be one of {INPUT_KINDS}")
        if self.route not in ROUTES:
            raise ConfigError(f"route must be one of {ROUTES}")
        if self.route == "fock" and self.protocol != "cvbsm":
            raise ConfigError("route = 'fock' only applies to cvbsm")
        if isinstance(self.squeeze_db, str) and self.squeeze_db != OPTIMIZE:
            raise ConfigError("squeeze_db must be a number, a list, or 'optimize'")
        for s in _as_list(self.squeeze_db):
            if s != OPTIMIZE and not 0 <= s <= SQUEEZE_DB.hi:
                raise ConfigError(f"squeeze_db {s} outside [0, {SQUEEZE_DB.hi}]")
        if isinstance(self.g, str) and self.g != OPTIMIZE:
            raise ConfigError("g must be a number or 'optimize'")
        if self.ng is not None and self.protocol not in ("hbsm", "hbsm-incomplete"):
            raise ConfigError("non-Gaussian operations apply to the H-BSM resource only")

    @property
    def optimized(self) -> tuple[str, ...]:
        out = []
        if self.squeeze_db == OPTIMIZE:
            out.append("squeeze_db")
        if self.g == OPTIMIZE:
            out.append("g")
        if self.ng is not None:
            out.extend(self.ng.optimized)
        return tuple(out)

    def points(self) -> list[dict[str, float]]:
        """Grid points in (alpha, squeeze, loss) order, loss varying fastest."""
        squeeze = [3.0] if self.squeeze_db == OPTIMIZE else _as_list(self.squeeze_db)
        if self.protocol == "direct":
            squeeze = [math.nan]
        return [
            {"alpha": a, "squeeze_db": s, "total_loss_db": l}
            for a, s, l in itertools.product(_as_list(self.alpha), squeeze, _as_list(self.total_loss_db))
        ]


def _as_list(v) -> list:
    return list(v) if isinstance(v, (list, tuple)) else [v]


def _build(cls, table: dict[str, Any], where: str):
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(table) - known)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")
    try:
        return cls(**table)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def spec_from_dict(data: dict[str, Any]) -> ExperimentSpec:
    data = dict(data)
    if "ng" in data:
        ng = data["ng"]
        if not isinstance(ng, dict):
            raise ConfigError("[ng] must be a table")
        if ng.get("kind") not in NG_KINDS:
            raise ConfigError(f"ng.kind must be one of {NG_KINDS}")
        if ng.get("placement", "before") not in PLACEMENTS or ng.get("target", "both") not in TARGETS:
            raise ConfigError("invalid ng placement or target")
        data["ng"] = _build(NgConfig, ng, "[ng]")
        try:
            data["ng"].spec()
        except ValueError as exc:
            raise ConfigError(f"[ng]: {exc}") from exc
    if "bloch" in data:
        data["bloch"] = _build(BlochConfig, data["bloch"], "[bloch]")
    return _build(ExperimentSpec, data, "config")


def load_spec(path: str | Path) -> ExperimentSpec:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return spec_from_dict(data)
