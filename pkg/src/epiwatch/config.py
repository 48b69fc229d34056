"""Service configuration: storage, bind address, credentials, tunables.

Only two environment variables are honored: EPIWATCH_CONFIG (path of the
config file) and EPIWATCH_BIND (host:port override). Everything else comes
from the YAML file or the defaults below.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import yaml

from .errors import ConfigInvalid

CONFIG_ENV = "EPIWATCH_CONFIG"
BIND_ENV = "EPIWATCH_BIND"

DEFAULT_DIGEST_KEY = "epiwatch-dev-key"


def builtin_aliases() -> dict[str, dict[str, str]]:
    text = resources.files("epiwatch.fixtures").joinpath("aliases.yaml").read_text()
    return yaml.safe_load(text)


@dataclass(frozen=True)
class Credential:
    token: str
    source: str           # facility / hospital / lab identifier
    role: str             # "facility" | "hospital" | "admin"


@dataclass
class Config:
    storage_path: Path = Path("./store")
    host: str = "127.0.0.1"
    port: int = 8000
    digest_key: bytes = DEFAULT_DIGEST_KEY.encode()
    age_band_edges: tuple[int, ...] = (6, 18, 31, 46, 60)
    # Suspect discard rule: one conclusive negative discards after the
    # window elapses with no positive; this many negatives discard at once.
    discard_negatives_immediate: int = 2
    discard_window_days: int = 14
    staleness_horizon_minutes: int = 60
    max_payload_bytes: int = 512 * 1024 * 1024
    mandatory_case_columns: tuple[str, ...] = ("report_date", "category", "city", "district")
    credentials: list[Credential] = field(default_factory=list)
    aliases: dict[str, dict[str, str]] = field(default_factory=lambda: builtin_aliases())
    region_table_path: Path | None = None
    hospital_registry_path: Path | None = None

    def credential_for(self, token: str) -> Credential | None:
        for cred in self.credentials:
            if cred.token == token:
                return cred
        return None


def load_config(path: str | Path | None = None) -> Config:
    """Build a Config from a YAML file (or defaults when path is None)."""
    if path is None:
        path = os.environ.get(CONFIG_ENV)
    raw: dict = {}
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigInvalid(f"config file not found: {p}")
        loaded = yaml.safe_load(p.read_text())
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ConfigInvalid("config root must be a mapping")
        raw = loaded

    cfg = Config()

    storage = raw.get("storage", {})
    if "path" in storage:
        cfg.storage_path = Path(storage["path"])
    server = raw.get("server", {})
    if "bind" in server:
        cfg.host, cfg.port = _parse_bind(server["bind"])
    privacy = raw.get("privacy", {})
    if "digest_key" in privacy:
        cfg.digest_key = str(privacy["digest_key"]).encode()

    rules = raw.get("rules", {})
    if "age_band_edges" in rules:
        edges = tuple(int(e) for e in rules["age_band_edges"])
        if list(edges) != sorted(set(edges)) or not edges or edges[0] <= 0:
            raise ConfigInvalid("age_band_edges must be strictly increasing positive ints")
        cfg.age_band_edges = edges
    if "discard_negatives_immediate" in rules:
        cfg.discard_negatives_immediate = int(rules["discard_negatives_immediate"])
    if "discard_window_days" in rules:
        cfg.discard_window_days = int(rules["discard_window_days"])
    if "staleness_horizon_minutes" in rules:
        cfg.staleness_horizon_minutes = int(rules["staleness_horizon_minutes"])
    if "mandatory_case_columns" in rules:
        cfg.mandatory_case_columns = tuple(rules["mandatory_case_columns"])

    if "max_payload_bytes" in raw:
        cfg.max_payload_bytes = int(raw["max_payload_bytes"])

    for entry in raw.get("credentials", []) or []:
        try:
            cred = Credential(token=str(entry["token"]), source=str(entry["source"]),
                              role=str(entry.get("role", "facility")))
        except KeyError as exc:
            raise ConfigInvalid(f"credential entry missing {exc}") from exc
        if cred.role not in ("facility", "hospital", "admin"):
            raise ConfigInvalid(f"unknown credential role {cred.role!r}")
        cfg.credentials.append(cred)

    for section, table in (raw.get("aliases", {}) or {}).items():
        cfg.aliases.setdefault(section, {}).update(
            {str(k).lower(): str(v) for k, v in table.items()})

    fixtures = raw.get("fixtures", {})
    if "region_table" in fixtures:
        cfg.region_table_path = Path(fixtures["region_table"])
    if "hospital_registry" in fixtures:
        cfg.hospital_registry_path = Path(fixtures["hospital_registry"])

    bind_env = os.environ.get(BIND_ENV)
    if bind_env:
        cfg.host, cfg.port = _parse_bind(bind_env)
    return cfg


def _parse_bind(value: str) -> tuple[str, int]:
    host, _, port = str(value).rpartition(":")
    if not host or not port.isdigit():
        raise ConfigInvalid(f"bind address must be host:port, got {value!r}")
    return host, int(port)
