"""Hospital bed-capacity board.

Hospitals submit per-ward capacity snapshots; the newest report per
(hospital, ward) wins regardless of arrival order, with equal timestamps
tie-broken by reporter id so convergence is total. Reports older than the
staleness horizon are flagged, never hidden.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import IntEnum
from importlib import resources
from pathlib import Path

from .errors import (
    ConfigInvalid,
    OccupiedExceedsTotal,
    SupersededTimestamp,
    UnauthorizedReporter,
    UnknownHospital,
)


class WardType(IntEnum):
    ICU_NEG_VENT = 1
    ICU_NEG_NOVENT = 2
    ICU_STD_VENT = 3
    ICU_STD_NOVENT = 4
    ISO_NEG = 5
    ISO_STD = 6
    PICU = 7
    NICU = 8
    PERINATOLOGY = 9
    OT_COVID = 10
    HD_COVID = 11


WARD_NAMES = {w: w.name.lower() for w in WardType}
WARD_BY_NAME = {name: w for w, name in WARD_NAMES.items()}


@dataclass(frozen=True, slots=True)
class BedReport:
    hospital: str
    ward: WardType
    total_beds: int
    occupied_beds: int
    reported_at: datetime      # timezone-aware
    reporter: str

    @property
    def available(self) -> int:
        return self.total_beds - self.occupied_beds

    def order_key(self) -> tuple[float, str]:
        return (self.reported_at.timestamp(), self.reporter)


@dataclass(frozen=True)
class Hospital:
    hospital_id: str
    name: str
    city: str


def load_hospital_registry(path: Path | None = None) -> dict[str, Hospital]:
    if path is None:
        text = resources.files("epiwatch.fixtures").joinpath("hospitals.csv").read_text()
    else:
        text = Path(path).read_text()
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    reader = csv.DictReader(lines)
    required = {"hospital_id", "name", "city"}
    if reader.fieldnames is None or not required.issubset(reader.fieldnames):
        raise ConfigInvalid(f"hospital registry must have columns {sorted(required)}")
    out: dict[str, Hospital] = {}
    for row in reader:
        out[row["hospital_id"]] = Hospital(row["hospital_id"], row["name"], row["city"])
    return out


class BedBoard:
    def __init__(self, hospitals: dict[str, Hospital], staleness_horizon_minutes: int = 60):
        self.hospitals = hospitals
        self.horizon_seconds = staleness_horizon_minutes * 60
        self._latest: dict[tuple[str, int], BedReport] = {}
        self.audit: list[tuple[BedReport, str]] = []   # (report, outcome)

    def validate(self, report: BedReport, authorized_for: str = "*") -> None:
        if report.hospital not in self.hospitals:
            raise UnknownHospital(report.hospital)
        if authorized_for not in ("*", report.hospital):
            raise UnauthorizedReporter(
                f"{report.reporter} may report for {authorized_for}, not {report.hospital}")
        if report.total_beds < 0 or report.occupied_beds < 0 or report.occupied_beds > report.total_beds:
            raise OccupiedExceedsTotal(
                f"occupied {report.occupied_beds} of total {report.total_beds}")
        if report.reported_at.tzinfo is None:
            raise ConfigInvalid("bed report timestamps must carry a timezone")

    def submit(self, report: BedReport, authorized_for: str = "*") -> str:
        """Apply one report; returns "applied" or raises SupersededTimestamp.

        Every submission lands in the audit trail either way.
        """
        self.validate(report, authorized_for)
        key = (report.hospital, int(report.ward))
        current = self._latest.get(key)
        if current is not None and report.order_key() <= current.order_key():
            self.audit.append((report, "superseded"))
            raise SupersededTimestamp(
                f"{report.hospital}/{WARD_NAMES[report.ward]} already has a report "
                f"from {current.reported_at.isoformat()}")
        self._latest[key] = report
        self.audit.append((report, "applied"))
        return "applied"

    def latest(self, hospital: str, ward: WardType) -> BedReport | None:
        return self._latest.get((hospital, int(ward)))

    def hospital_board(self, hospital: str, now: datetime) -> list[dict]:
        """One row per ward type; wards never reported are explicit no-data."""
        if hospital not in self.hospitals:
            raise UnknownHospital(hospital)
        rows = []
        for ward in WardType:
            report = self._latest.get((hospital, int(ward)))
            if report is None:
                rows.append({"ward": WARD_NAMES[ward], "no_data": True})
            else:
                rows.append({
                    "ward": WARD_NAMES[ward],
                    "no_data": False,
                    "total": report.total_beds,
                    "occupied": report.occupied_beds,
                    "available": report.available,
                    "reported_at": report.reported_at.isoformat(),
                    "stale": self.is_stale(report, now),
                })
        return rows

    def is_stale(self, report: BedReport, now: datetime) -> bool:
        return (now - report.reported_at).total_seconds() > self.horizon_seconds

    def province_capacity(self, now: datetime) -> dict:
        """Latest-report sums per ward plus the stale-hospital list."""
        per_ward: dict[str, dict] = {}
        stale_hospitals: set[str] = set()
        for ward in WardType:
            total = occupied = 0
            reported = False
            for hospital in self.hospitals:
                report = self._latest.get((hospital, int(ward)))
                if report is None:
                    continue
                reported = True
                total += report.total_beds
                occupied += report.occupied_beds
                if self.is_stale(report, now):
                    stale_hospitals.add(hospital)
            entry = {
                "total": total,
                "occupied": occupied,
                "available": total - occupied,
            }
            entry["remaining_fraction"] = (
                (total - occupied) / total if total > 0 else None
            )
            entry["reported"] = reported
            per_ward[WARD_NAMES[ward]] = entry
        return {"wards": per_ward, "stale_hospitals": sorted(stale_hospitals)}

    def find_available(self, ward: WardType, min_beds: int, now: datetime) -> list[dict]:
        """Hospitals with enough free beds: fresh first, most beds first,
        ties by hospital id. An empty list is a valid answer."""
        rows = []
        for hospital in self.hospitals:
            report = self._latest.get((hospital, int(ward)))
            if report is None or report.available < min_beds:
                continue
            stale = self.is_stale(report, now)
            rows.append({
                "hospital": hospital,
                "name": self.hospitals[hospital].name,
                "city": self.hospitals[hospital].city,
                "available": report.available,
                "stale": stale,
                "reported_at": report.reported_at.isoformat(),
            })
        rows.sort(key=lambda r: (r["stale"], -r["available"], r["hospital"]))
        return rows


def parse_bed_csv(payload: bytes, default_reporter: str = "") -> tuple[list[BedReport], list[tuple[int, str, str]]]:
    """Bed-report feed: hospital_id, ward, total_beds, occupied_beds,
    reported_at (ISO-8601 with timezone), reporter. Returns (reports,
    rejects as (line, field, rule))."""
    text = payload.decode("utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    reader = csv.DictReader(lines)
    if reader.fieldnames is None:
        return [], [(1, "", "MissingHeader")]
    reports: list[BedReport] = []
    rejects: list[tuple[int, str, str]] = []
    for i, row in enumerate(reader):
        line = i + 2
        ward_name = (row.get("ward") or "").strip().lower()
        if ward_name not in WARD_BY_NAME:
            rejects.append((line, "ward", "UnknownWard"))
            continue
        try:
            total = int(row.get("total_beds", ""))
            occupied = int(row.get("occupied_beds", ""))
        except ValueError:
            rejects.append((line, "total_beds", "BadCount"))
            continue
        at_raw = (row.get("reported_at") or "").strip()
        try:
            reported_at = datetime.fromisoformat(at_raw)
        except ValueError:
            rejects.append((line, "reported_at", "BadTimestamp"))
            continue
        if reported_at.tzinfo is None:
            rejects.append((line, "reported_at", "MissingTimezone"))
            continue
        reports.append(BedReport(
            hospital=(row.get("hospital_id") or "").strip(),
            ward=WARD_BY_NAME[ward_name],
            total_beds=total,
            occupied_beds=occupied,
            reported_at=reported_at.astimezone(timezone.utc),
            reporter=(row.get("reporter") or default_reporter).strip(),
        ))
    return reports, rejects
