"""Model parameter records.

Field names follow the parameter table verbatim (``SA``, ``Dep_t``, ``G_max`` ...)
so that scenario files, overrides and code all use the same keys. ``None``
marks a disabled mechanism (a dash in the table).
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace
from typing import Any, Optional


class ConfigError(ValueError):
    """Invalid parameter or scenario configuration."""

    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


PARAM_KEYS = (
    "p", "SA", "RA", "SO", "SO_min", "SO_max", "Dep_t",
    "D_w", "D_d", "proj_a", "proj_r", "L_w", "L_d",
    "G_f", "G_w", "G_min", "G_max", "S_f", "S_w", "S_min", "S_max",
)

GROWTH_KEYS = ("G_f", "G_w", "G_min", "G_max")
SHRINK_KEYS = ("S_f", "S_w", "S_min", "S_max")
ILLUMINATION_KEYS = ("L_w", "L_d")
INT_KEYS = {"p", "SO_min", "SO_max", "D_w", "L_w", *GROWTH_KEYS, *SHRINK_KEYS}


@dataclass(frozen=True)
class GrowthShrinkParams:
    G_f: Optional[int] = None
    G_w: Optional[int] = None
    G_min: Optional[int] = None
    G_max: Optional[int] = None
    S_f: Optional[int] = None
    S_w: Optional[int] = None
    S_min: Optional[int] = None
    S_max: Optional[int] = None

    @property
    def growth_enabled(self) -> bool:
        return self.G_f is not None

    @property
    def shrink_enabled(self) -> bool:
        return self.S_f is not None


@dataclass(frozen=True)
class ModelParams:
    p: int = 0
    SA: float = 45.0
    RA: float = 45.0
    SO: Optional[float] = 5.0
    SO_min: Optional[int] = None
    SO_max: Optional[int] = None
    Dep_t: float = 5.0
    D_w: int = 3
    D_d: float = 0.1
    proj_a: Optional[float] = None
    proj_r: Optional[float] = None
    L_w: Optional[int] = None
    L_d: Optional[float] = None
    G_f: Optional[int] = None
    G_w: Optional[int] = None
    G_min: Optional[int] = None
    G_max: Optional[int] = None
    S_f: Optional[int] = None
    S_w: Optional[int] = None
    S_min: Optional[int] = None
    S_max: Optional[int] = None

    def __post_init__(self):
        self.validate()

    @property
    def growth_enabled(self) -> bool:
        return self.G_f is not None

    @property
    def shrink_enabled(self) -> bool:
        return self.S_f is not None

    @property
    def illumination_enabled(self) -> bool:
        return self.L_w is not None

    @property
    def so_ranged(self) -> bool:
        return self.SO_min is not None

    @property
    def growth_shrink(self) -> GrowthShrinkParams:
        return GrowthShrinkParams(**{k: getattr(self, k) for k in GROWTH_KEYS + SHRINK_KEYS})

    def validate(self) -> None:
        if self.p < 0:
            raise ConfigError("population must be >= 0", "p")
        for key in ("SA", "RA"):
            v = getattr(self, key)
            if not 0 < v <= 180:
                raise ConfigError("angle must lie in (0, 180]", key)
        if self.so_ranged or self.SO_max is not None:
            if self.SO is not None:
                raise ConfigError("give either SO or SO_min/SO_max, not both", "SO")
            if self.SO_min is None or self.SO_max is None:
                raise ConfigError("ranged sensor offset needs both bounds", "SO_min")
            if self.SO_min < 1:
                raise ConfigError("must be >= 1", "SO_min")
            if self.SO_min > self.SO_max:
                raise ConfigError("SO_min > SO_max", "SO_min")
        else:
            if self.SO is None:
                raise ConfigError("sensor offset missing", "SO")
            if self.SO < 1:
                raise ConfigError("must be >= 1", "SO")
        if self.Dep_t < 0:
            raise ConfigError("must be >= 0", "Dep_t")
        _check_window(self.D_w, "D_w", minimum=3)
        if not 0.0 <= self.D_d <= 1.0:
            raise ConfigError("must lie in [0, 1]", "D_d")
        if self.proj_a is not None and self.proj_a < 0:
            raise ConfigError("attractant projection must be >= 0", "proj_a")
        if self.proj_r is not None and self.proj_r > 0:
            raise ConfigError("repellent projection must be <= 0", "proj_r")
        _check_group(self, ILLUMINATION_KEYS, "illumination")
        if self.L_w is not None:
            _check_window(self.L_w, "L_w", minimum=1)
            if not 0.0 <= self.L_d <= 1.0:
                raise ConfigError("must lie in [0, 1]", "L_d")
        for prefix, keys in (("G", GROWTH_KEYS), ("S", SHRINK_KEYS)):
            _check_group(self, keys, "growth" if prefix == "G" else "shrinkage")
            if getattr(self, f"{prefix}_f") is None:
                continue
            if getattr(self, f"{prefix}_f") < 1:
                raise ConfigError("frequency must be >= 1", f"{prefix}_f")
            _check_window(getattr(self, f"{prefix}_w"), f"{prefix}_w", minimum=3)
            lo, hi = getattr(self, f"{prefix}_min"), getattr(self, f"{prefix}_max")
            if lo < 0:
                raise ConfigError("must be >= 0", f"{prefix}_min")
            if lo > hi:
                raise ConfigError(f"{prefix}_min > {prefix}_max", f"{prefix}_min")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ModelParams":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown parameter(s) {sorted(unknown)}")
        return cls(**{k: _coerce(k, v) for k, v in data.items()})

    def with_overrides(self, **changes: Any) -> "ModelParams":
        # Switching between fixed and ranged SO clears the other form.
        if "SO" in changes and changes["SO"] is not None:
            changes.setdefault("SO_min", None)
            changes.setdefault("SO_max", None)
        if changes.get("SO_min") is not None or changes.get("SO_max") is not None:
            changes.setdefault("SO", None)
        unknown = set(changes) - set(PARAM_KEYS)
        if unknown:
            raise ConfigError(f"unknown parameter(s) {sorted(unknown)}")
        return replace(self, **{k: _coerce(k, v) for k, v in changes.items()})


def _coerce(key: str, value: Any) -> Any:
    if value is None:
        return None
    if isinstance(value, bool):
        raise ConfigError("expected a number, got a boolean", key)
    if not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {type(value).__name__}", key)
    if key in INT_KEYS:
        if float(value) != int(value):
            raise ConfigError("expected an integer", key)
        return int(value)
    return float(value)


def _check_window(value, key: str, minimum: int) -> None:
    if value is None or value < minimum or value % 2 == 0:
        raise ConfigError(f"window must be odd and >= {minimum}, got {value}", key)


def _check_group(params: ModelParams, keys, name: str) -> None:
    present = [k for k in keys if getattr(params, k) is not None]
    if present and len(present) != len(keys):
        missing = [k for k in keys if getattr(params, k) is None]
        raise ConfigError(f"{name} partially configured; missing {missing}", missing[0])
