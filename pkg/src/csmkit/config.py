"""Run configuration and its flat ``key = value`` file format.

Example::

    # csmkit run configuration
    epsilon = 1e-6
    rho = 0.5
    tau_conn = 0.005
    deskew_enabled = false

Blank lines and ``#`` comments are ignored; unknown keys are an error.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path

from csmkit import errors
from csmkit.errors import CsmError
from csmkit.metrics import EPSILON, RHO
from csmkit.boundaries import TAU_CONN
from csmkit.preprocess import PreprocessConfig
from csmkit.vdl import BAND_FRACTION, VdlWeights

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


@dataclass(frozen=True)
class RunConfig:
    # preprocessing
    deskew_min_angle: float = math.radians(0.5)
    deskew_max_angle: float = math.radians(30.0)
    resample_max_points: int = 160
    rdp_epsilon: float = 0.002
    target_height: float = 1.0
    segmentation_tolerance: int = 3
    deskew_enabled: bool = True
    # metrics
    epsilon: float = EPSILON
    rho: float = RHO
    tau_conn: float = TAU_CONN
    convert_eoc: bool = False
    # VDL diagnostic
    band_fraction: float = BAND_FRACTION
    w_cen: float = 2.0
    w_top: float = 1.0
    w_bot: float = 1.0
    y_up: bool = True
    # run control
    exclude: str | None = None
    workers: int = 1
    render_height: float = 100.0
    highlight_cursive: bool = False

    def __post_init__(self):
        self.preprocess  # validates the preprocessing block
        if self.epsilon <= 0:
            raise CsmError(errors.CONFIG_ERROR, "epsilon must be > 0")
        if not 0 < self.rho <= 1:
            raise CsmError(errors.CONFIG_ERROR, "rho must be in (0, 1]")
        if self.tau_conn < 0:
            raise CsmError(errors.CONFIG_ERROR, "tau_conn must be >= 0")
        if not 0 < self.band_fraction <= 0.5:
            raise CsmError(errors.CONFIG_ERROR, "band_fraction must be in (0, 0.5]")
        if min(self.w_cen, self.w_top, self.w_bot) < 0:
            raise CsmError(errors.CONFIG_ERROR, "VDL weights must be >= 0")
        if self.workers < 1:
            raise CsmError(errors.CONFIG_ERROR, "workers must be >= 1")
        if self.render_height <= 0:
            raise CsmError(errors.CONFIG_ERROR, "render_height must be > 0")

    @property
    def preprocess(self) -> PreprocessConfig:
        names = {f.name for f in dataclasses.fields(PreprocessConfig)}
        return PreprocessConfig(**{k: v for k, v in dataclasses.asdict(self).items() if k in names})

    @property
    def vdl_weights(self) -> VdlWeights:
        return VdlWeights(self.w_cen, self.w_top, self.w_bot)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _convert(name: str, kind, raw: str, line: int):
    text = raw.strip()
    try:
        if kind is bool:
            low = text.lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ValueError(text)
        if kind is int:
            return int(text)
        if kind is float:
            value = float(text)
            if not math.isfinite(value):
                raise ValueError(text)
            return value
        return text or None
    except ValueError:
        raise CsmError(errors.CONFIG_ERROR, f"bad value {raw.strip()!r} for {name}", line=line) from None


_KINDS = {"float": float, "int": int, "bool": bool, "str | None": str}


def parse_config(text: str, base: RunConfig = RunConfig()) -> RunConfig:
    kinds = {f.name: _KINDS[f.type] for f in dataclasses.fields(RunConfig)}
    values = {}
    for n, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CsmError(errors.CONFIG_ERROR, f"expected key = value, got {line!r}", line=n)
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in kinds:
            raise CsmError(errors.CONFIG_ERROR, f"unknown key {key!r}", line=n)
        if key in values:
            raise CsmError(errors.CONFIG_ERROR, f"duplicate key {key!r}", line=n)
        values[key] = _convert(key, kinds[key], raw, n)
    return dataclasses.replace(base, **values)


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    return parse_config(Path(path).read_text(encoding="utf-8"))


def dump_config(config: RunConfig) -> str:
    lines = []
    for key, value in config.to_dict().items():
        if value is None:
            continue
        if isinstance(value, bool):
            value = str(value).lower()
        lines.append(f"{key} = {value!r}" if isinstance(value, float) else f"{key} = {value}")
    return "\n".join(lines) + "\n"
