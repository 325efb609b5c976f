"""Run configuration: a YAML file validated by pydantic models.

Example::

    schema_version: 1
    model: half-normal
    sampler:
      T: 5000
      N: 1000
      chains: 4
      seed: 7
    output:
      dir: runs/half-normal
      event_log: true

``model`` is a catalog name or an inline Gaussian
(``{type: gaussian, mean: [...], cov: [[...]]}``). ``constraints``, when
given, replaces the catalog's constraints. Unknown keys are rejected.
"""

from __future__ import annotations

from pathlib import Path
from typing import Annotated, Literal, Optional, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .boundary import Kernel
from .integrator import StepControl

SCHEMA_VERSION = 1


class ConfigError(Exception):
    """Invalid configuration; ``messages`` holds one line per problem."""

    def __init__(self, messages: list[str]):
        self.messages = list(messages)
        super().__init__("\n".join(self.messages))


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


# -- model and constraints --------------------------------------------------

class GaussianSpec(_Strict):
    type: Literal["gaussian"]
    mean: list[float]
    cov: list[list[float]]

    @model_validator(mode="after")
    def _shapes(self):
        d = len(self.mean)
        c = np.asarray(self.cov, dtype=float)
        if d == 0 or c.shape != (d, d):
            raise ValueError(f"cov must be {d}x{d} to match mean")
        if not np.allclose(c, c.T):
            raise ValueError("cov must be symmetric")
        if np.linalg.eigvalsh(c).min() <= 0:
            raise ValueError("cov must be positive definite")
        return self


class LinearSpec(_Strict):
    type: Literal["linear"]
    a: list[float]
    b: float


class NormSpec(_Strict):
    type: Literal["l1", "l2"]
    A: list[list[float]]
    b: list[float]
    v: float = Field(gt=0)

    @model_validator(mode="after")
    def _shapes(self):
        rows = {len(r) for r in self.A}
        if len(rows) != 1:
            raise ValueError("rows of A must have equal length")
        if len(self.A) != len(self.b):
            raise ValueError("A and b must have the same number of rows")
        return self


ConstraintSpec = Annotated[Union[LinearSpec, NormSpec], Field(discriminator="type")]


class StartSpec(_Strict):
    """Initial point: the catalog's, an explicit ``q0``, or a random feasible search."""

    mode: Literal["catalog", "given", "feasible-search"] = "catalog"
    q0: Optional[list[float]] = None
    center: Optional[list[float]] = None
    scale: float = Field(1.0, gt=0)
    max_tries: int = Field(100_000, ge=1)

    @model_validator(mode="after")
    def _need_q0(self):
        if self.mode == "given" and self.q0 is None:
            raise ValueError("mode 'given' needs q0")
        return self


# -- sampler ----------------------------------------------------------------

class StepSpec(_Strict):
    abs_tol: float = Field(1e-4, gt=0)
    rel_tol: float = Field(1e-4, gt=0)
    h_init: float = Field(0.1, gt=0)
    h_min: float = Field(1e-9, gt=0)
    h_max: float = Field(10.0, gt=0)

    @model_validator(mode="after")
    def _order(self):
        if not self.h_min < self.h_max:
            raise ValueError("need h_min < h_max")
        return self

    def build(self) -> StepControl:
        return StepControl(self.abs_tol, self.rel_tol, self.h_init, self.h_min, self.h_max)


class SamplerSpec(_Strict):
    T: float = Field(10_000.0, gt=0)
    burn_in_fraction: float = Field(0.5, ge=0, lt=1)
    N: int = Field(1000, ge=2)
    lam: float = Field(0.5, gt=0)
    kernel: Kernel = Kernel.SPARSE_RANDOMIZED
    seed: int = Field(0, ge=0, lt=2**64)
    chains: int = Field(1, ge=1)
    refresh: bool = True
    adapt: bool = True
    init_scale: Literal["curvature", "unit"] = "curvature"
    max_events_per_unit_time: int = Field(10_000, ge=1)
    n_batches: int = Field(25, ge=2)
    step: StepSpec = Field(default_factory=StepSpec)


class OutputSpec(_Strict):
    dir: str = "ngrhmc-out"
    formats: list[Literal["csv", "json"]] = Field(default_factory=lambda: ["csv", "json"])
    event_log: bool = False
    dense_trace: bool = False
    trace_stride: int = Field(10, ge=1)

    @field_validator("formats")
    @classmethod
    def _unique(cls, v):
        if len(set(v)) != len(v):
            raise ValueError("formats must not repeat")
        return v


class RunConfig(_Strict):
    schema_version: Literal[1] = SCHEMA_VERSION
    model: Union[str, GaussianSpec]
    constraints: Optional[list[ConstraintSpec]] = None
    start: StartSpec = Field(default_factory=StartSpec)
    sampler: SamplerSpec = Field(default_factory=SamplerSpec)
    output: OutputSpec = Field(default_factory=OutputSpec)

    def echo(self) -> dict:
        """JSON-ready copy that validates back to an equal config."""
        return self.model_dump(mode="json")


# -- loading ----------------------------------------------------------------

def _node_line(root, loc) -> Optional[int]:
    """1-based line of the YAML node addressed by a pydantic error location."""
    node = root
    line = None
    for key in loc:
        if node is None:
            break
        if _is_tag(key):
            continue
        line = node.start_mark.line + 1
        if isinstance(node, yaml.MappingNode):
            nxt = None
            for k, v in node.value:
                if k.value == key:
                    nxt = v
                    line = k.start_mark.line + 1
                    break
            node = nxt
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int):
            node = node.value[key] if key < len(node.value) else None
        else:
            continue
    if node is not None:
        line = node.start_mark.line + 1
    return line


_UNION_TAGS = {"str", "GaussianSpec", "LinearSpec", "NormSpec", "linear", "l1", "l2"}


def _is_tag(part) -> bool:
    """Pydantic inserts union member names into error locations; they are not keys."""
    return isinstance(part, str) and (part in _UNION_TAGS or part.startswith("function-"))


def _format_errors(exc: ValidationError, root, source: str) -> list[str]:
    out = []
    for err in exc.errors():
        loc = tuple(err["loc"])
        path = ".".join(str(p) for p in loc if not _is_tag(p))
        line = _node_line(root, loc) if root is not None else None
        where = f"{source}:{line}" if line else source
        out.append(f"{where}: {path or '<root>'}: {err['msg']}")
    return out


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    """Validate YAML text; raises :class:`ConfigError` with line-addressed messages."""
    try:
        root = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError([f"{source}: YAML syntax error: {exc}"]) from None
    if not isinstance(data, dict):
        raise ConfigError([f"{source}: top level must be a mapping"])
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_errors(exc, root, source)) from None


def load_config(path) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError([f"{p}: cannot read config: {exc.strerror}"]) from None
    return parse_config(text, str(p))


def config_from_dict(data: dict) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_errors(exc, None, "<dict>")) from None
