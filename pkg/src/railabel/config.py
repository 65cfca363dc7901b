"""Service configuration: JSON file plus APP_* environment overrides.

Every scalar key in the config file can be overridden by an environment
variable named ``APP_`` + the key upper-cased, e.g. ``APP_CLOCK_SKEW_SECONDS``
or ``APP_DISPLAY_TIMEZONE``. Environment values win over file values.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from zoneinfo import ZoneInfo

from .errors import InvalidRequest

ENV_PREFIX = "APP_"

_SCALAR_KEYS = {
    "display_timezone": str,
    "clock_skew_seconds": float,
    "token_lifetime_hours": float,
    "map_tile_url": str,
    "group_assignment": str,
    "group_seed": int,
    "round_cap_seconds": float,
    "close_grace_seconds": float,
    "scenario": str,
    "locale": str,
}


@dataclass
class AppConfig:
    users: list[dict] = field(default_factory=list)
    display_timezone: str = "Europe/Berlin"
    clock_skew_seconds: float = 300.0
    token_lifetime_hours: float = 12.0
    map_tile_url: str = "https://tile.openstreetmap.org/{z}/{x}/{y}.png"
    group_assignment: str = "alternate"
    group_seed: int | None = None
    round_cap_seconds: float = 600.0
    close_grace_seconds: float = 2.0
    scenario: str = "default"
    locale: str = "de"

    def validate(self) -> None:
        try:
            ZoneInfo(self.display_timezone)
        except Exception as exc:
            raise InvalidRequest(
                f"unknown display_timezone: {self.display_timezone!r}"
            ) from exc
        if self.group_assignment not in ("alternate", "random"):
            raise InvalidRequest(
                f"group_assignment must be alternate or random, "
                f"got {self.group_assignment!r}"
            )
        if self.clock_skew_seconds < 0 or self.round_cap_seconds <= 0:
            raise InvalidRequest("time settings must be positive")


def default_users() -> list[dict]:
    """Demo accounts used by the example config and the packaged scenario."""
    return [
        {
            "username": "driver",
            "password": "rails-demo",
            "display_name": "Train Driver",
            "role": "train_driver",
        },
        {
            "username": "foreman",
            "password": "workshop-demo",
            "display_name": "Workshop Foreman",
            "role": "workshop_foreman",
        },
        {
            "username": "experimenter",
            "password": "study-demo",
            "display_name": "Experimenter",
            "role": "experimenter",
        },
    ]


def load_config(
    path: Path | str | None = None, env: dict[str, str] | None = None
) -> AppConfig:
    env = os.environ if env is None else env
    raw: dict = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text("utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidRequest(f"cannot read config {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise InvalidRequest("config root must be an object")
    config = AppConfig()
    if "users" in raw:
        config.users = list(raw["users"])
    else:
        config.users = default_users()
    for key, cast in _SCALAR_KEYS.items():
        if key in raw:
            setattr(config, key, _cast(key, cast, raw[key]))
        env_name = ENV_PREFIX + key.upper()
        if env_name in env:
            setattr(config, key, _cast(env_name, cast, env[env_name]))
    config.validate()
    return config


def _cast(name: str, cast: type, value: object):
    try:
        return cast(value)
    except (TypeError, ValueError) as exc:
        raise InvalidRequest(f"bad value for {name}: {value!r}") from exc
