"""Bundled administrative-region table and lookups."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import ConfigInvalid
from .model import UNKNOWN_REGION, RegionCode


@dataclass(frozen=True)
class RegionTable:
    """City/district hierarchy; district codes are unique across cities."""

    cities: dict[str, str]              # city_code -> city_name
    districts: dict[str, tuple[str, str]]  # district_code -> (city_code, district_name)
    version: str

    def district_codes(self) -> list[str]:
        return sorted(self.districts)

    def city_of(self, district_code: str) -> str | None:
        row = self.districts.get(district_code)
        return row[0] if row else None

    def resolve(self, city: str, district: str, subdistrict: str | None = None) -> RegionCode | None:
        """Map feed-supplied city/district strings (codes or names) onto a
        RegionCode, or None when they do not belong together.

        The literal token ``UNKNOWN`` (any case) at both levels is the
        explicit unknown-region sentinel.
        """
        if city.strip().upper() == UNKNOWN_REGION:
            return RegionCode.unknown()
        city_code = self._city_code(city)
        district_code = self._district_code(district)
        if city_code is None or district_code is None:
            return None
        if self.districts[district_code][0] != city_code:
            return None
        sub = (subdistrict or "").strip() or None
        return RegionCode(city_code, district_code, sub)

    def _city_code(self, value: str) -> str | None:
        v = value.strip()
        if v in self.cities:
            return v
        lowered = v.lower()
        for code, name in self.cities.items():
            if name.lower() == lowered:
                return code
        return None

    def _district_code(self, value: str) -> str | None:
        v = value.strip()
        if v in self.districts:
            return v
        lowered = v.lower()
        for code, (_, name) in self.districts.items():
            if name.lower() == lowered:
                return code
        return None


def load_region_table(path: Path | None = None) -> RegionTable:
    """Load the bundled region fixture, or an override file with the same
    columns. Lines starting with ``#`` carry the table version."""
    if path is None:
        text = resources.files("epiwatch.fixtures").joinpath("regions_jakarta.csv").read_text()
    else:
        text = Path(path).read_text()
    version = ""
    lines = []
    for line in text.splitlines():
        if line.startswith("#"):
            version = line.lstrip("# ").strip()
        elif line.strip():
            lines.append(line)
    reader = csv.DictReader(lines)
    required = {"city_code", "city_name", "district_code", "district_name"}
    if reader.fieldnames is None or not required.issubset(reader.fieldnames):
        raise ConfigInvalid(f"region table must have columns {sorted(required)}")
    cities: dict[str, str] = {}
    districts: dict[str, tuple[str, str]] = {}
    for row in reader:
        cities[row["city_code"]] = row["city_name"]
        if row["district_code"] in districts:
            raise ConfigInvalid(f"duplicate district code {row['district_code']}")
        districts[row["district_code"]] = (row["city_code"], row["district_name"])
    return RegionTable(cities=cities, districts=districts, version=version)
