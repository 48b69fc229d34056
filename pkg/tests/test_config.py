"""Config loading, env overrides, and tunables flowing through."""

from datetime import date, datetime, timezone

import pytest

from epiwatch import aggregate
from epiwatch.config import BIND_ENV, Config, load_config
from epiwatch.errors import ConfigInvalid
from epiwatch.store import Store


def test_defaults():
    cfg = load_config(None)
    assert cfg.port == 8000
    assert cfg.staleness_horizon_minutes == 60
    assert cfg.discard_window_days == 14
    assert cfg.age_band_edges == (6, 18, 31, 46, 60)
    assert cfg.aliases["category"]["suspek"] == "suspect"


def test_yaml_roundtrip(tmp_path):
    path = tmp_path / "epiwatch.yaml"
    path.write_text("""
storage:
  path: /tmp/somewhere
server:
  bind: 0.0.0.0:9000
rules:
  age_band_edges: [18, 60]
  staleness_horizon_minutes: 120
  discard_window_days: 10
credentials:
  - token: abc
    source: rs-1
    role: hospital
aliases:
  category:
    odp: suspect
""")
    cfg = load_config(path)
    assert str(cfg.storage_path) == "/tmp/somewhere"
    assert (cfg.host, cfg.port) == ("0.0.0.0", 9000)
    assert cfg.age_band_edges == (18, 60)
    assert cfg.staleness_horizon_minutes == 120
    assert cfg.credential_for("abc").source == "rs-1"
    assert cfg.aliases["category"]["odp"] == "suspect"
    assert cfg.aliases["category"]["suspek"] == "suspect"  # builtin preserved


def test_bind_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv(BIND_ENV, "127.0.0.2:7777")
    cfg = load_config(None)
    assert (cfg.host, cfg.port) == ("127.0.0.2", 7777)


def test_invalid_configs(tmp_path):
    bad_edges = tmp_path / "a.yaml"
    bad_edges.write_text("rules:\n  age_band_edges: [30, 10]\n")
    with pytest.raises(ConfigInvalid):
        load_config(bad_edges)
    bad_role = tmp_path / "b.yaml"
    bad_role.write_text("credentials:\n  - token: t\n    source: s\n    role: emperor\n")
    with pytest.raises(ConfigInvalid):
        load_config(bad_role)
    with pytest.raises(ConfigInvalid):
        load_config(tmp_path / "missing.yaml")


def test_custom_age_bands_flow_through(tmp_path):
    cfg = Config(storage_path=tmp_path / "s", age_band_edges=(50,))
    store = Store.open(cfg)
    header = ("civil_id,name,dob,sex,city,district,subdistrict,"
              "report_date,category,symptom_status,status,death_protocol")
    store.ingest_cases(
        (header + "\n3173000000000001,AA,1990-01-01,L,3173,3173010,,"
         "2021-03-10,konfirmasi,,,\n").encode(),
        "src", "f.csv", datetime(2021, 3, 20, tzinfo=timezone.utc))
    ct = aggregate.crosstab_age_sex(store, date(2021, 3, 25))
    assert set(ct["matrix"]) == {"0-49", "50+", "unknown"}
    assert ct["matrix"]["0-49"]["male"] == 1


def test_custom_discard_rules_flow_through(tmp_path):
    cfg = Config(storage_path=tmp_path / "s", discard_window_days=5)
    store = Store.open(cfg)
    assert store.rules.window_days == 5
