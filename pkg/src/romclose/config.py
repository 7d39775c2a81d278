"""Pipeline configuration: one JSON document with a section per stage."""

import copy
import hashlib
import json
import math
from pathlib import Path
from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigInvalid, IoFailure, UpstreamMissing


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class InitialConditionSpec(_Section):
    kind: Literal["sin_bump", "step_profile", "custom"] = "sin_bump"
    params: dict = Field(default_factory=dict)


class FomSection(_Section):
    n_points: int = Field(512, ge=3)
    domain_length: float = Field(2 * math.pi, gt=0)
    boundary: Literal["periodic", "dirichlet"] = "periodic"
    viscosity: float = Field(0.01, gt=0)
    dt: float = Field(1e-3, gt=0)
    n_steps: int = Field(20000, ge=1)
    snapshot_stride: int = Field(20, ge=1)
    initial_condition: InitialConditionSpec = Field(default_factory=InitialConditionSpec)

    @model_validator(mode="after")
    def _enough_snapshots(self):
        if self.n_steps // self.snapshot_stride + 1 < 2:
            raise ValueError("n_steps // snapshot_stride + 1 must be at least 2")
        return self


class PodSection(_Section):
    R: int = Field(20, ge=1)
    centering: bool = True


class RomSection(_Section):
    r: int = Field(4, ge=1)
    dt: float = Field(1e-3, gt=0)
    n_steps: int = Field(20000, ge=1)


class ClosureSection(_Section):
    ridge_lambda: Union[Literal["auto"], float] = "auto"

    @field_validator("ridge_lambda")
    @classmethod
    def _non_negative(cls, v):
        if v != "auto" and v < 0:
            raise ValueError("ridge_lambda must be 'auto' or >= 0")
        return v


class OutputSection(_Section):
    directory: str = "romclose-out"
    formats: list[Literal["csv", "json"]] = Field(default_factory=lambda: ["csv", "json"])


class ToySection(_Section):
    A3: Optional[list[list[float]]] = None
    B3: Optional[list[list[list[float]]]] = None
    a0: Optional[list[float]] = None
    dt: float = Field(1e-2, gt=0)
    n_steps: int = Field(2000, ge=1)
    ridge_lambda: Union[Literal["auto"], float] = "auto"


class PipelineConfig(_Section):
    fom: FomSection = Field(default_factory=FomSection)
    pod: PodSection = Field(default_factory=PodSection)
    rom: RomSection = Field(default_factory=RomSection)
    closure: ClosureSection = Field(default_factory=ClosureSection)
    output: OutputSection = Field(default_factory=OutputSection)
    toy: Optional[ToySection] = None

    @model_validator(mode="after")
    def _ranks(self):
        if self.rom.r > self.pod.R:
            raise ValueError(f"rom.r={self.rom.r} exceeds pod.R={self.pod.R}")
        return self

    def digest(self):
        """Hash of every numerical setting (the output section is excluded)."""
        payload = self.model_dump(mode="json", exclude={"output"})
        text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


def _loc(err):
    return ".".join(str(p) for p in err["loc"]) or "<root>"


def validate_config(data):
    try:
        return PipelineConfig.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        raise ConfigInvalid(first["msg"], path=_loc(first)) from None


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(data, assignments):
    """Apply ``KEY=VALUE`` strings (dotted keys, JSON values) to a dict."""
    data = copy.deepcopy(data)
    for item in assignments or ():
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ConfigInvalid(f"override {item!r} is not KEY=VALUE", path="--set")
        node = data
        parts = key.split(".")
        for part in parts[:-1]:
            child = node.get(part)
            if child is None:
                child = node[part] = {}
            if not isinstance(child, dict):
                raise ConfigInvalid(f"cannot descend into scalar {part!r}", path=key)
            node = child
        node[parts[-1]] = _parse_value(value)
    return data


def load_config(path, overrides=None):
    path = Path(path)
    if not path.exists():
        raise UpstreamMissing(f"config file {path} does not exist")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoFailure(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"not valid JSON ({exc.msg} at line {exc.lineno})",
                            path=str(path)) from None
    if not isinstance(data, dict):
        raise ConfigInvalid("config must be a JSON object", path="<root>")
    return validate_config(apply_overrides(data, overrides))


def default_config_dict():
    return PipelineConfig().model_dump(mode="json", exclude_none=True)
