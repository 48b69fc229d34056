"""Bed board: last-write-wins convergence, rollups, referral search."""

import itertools
import random
from datetime import datetime, timedelta, timezone

import pytest

from epiwatch.bedboard import (
    BedBoard,
    BedReport,
    WardType,
    load_hospital_registry,
    parse_bed_csv,
)
from epiwatch.errors import (
    OccupiedExceedsTotal,
    SupersededTimestamp,
    UnauthorizedReporter,
    UnknownHospital,
)

NOW = datetime(2021, 3, 25, 2, 0, tzinfo=timezone.utc)  # 09:00 Jakarta
HOSPITALS = load_hospital_registry()


def board(horizon=60):
    return BedBoard(HOSPITALS, staleness_horizon_minutes=horizon)


def report(hospital="RS0001", ward=WardType.ICU_NEG_VENT, total=10, occupied=4,
           at=NOW, reporter="op-1"):
    return BedReport(hospital, ward, total, occupied, at, reporter)


class TestSubmit:
    def test_apply_and_read(self):
        b = board()
        b.submit(report())
        row = [r for r in b.hospital_board("RS0001", NOW) if r["ward"] == "icu_neg_vent"][0]
        assert row["available"] == 6 and not row["no_data"]

    def test_occupied_exceeds_total(self):
        b = board()
        with pytest.raises(OccupiedExceedsTotal):
            b.submit(report(total=10, occupied=12))

    def test_unauthorized_reporter(self):
        b = board()
        with pytest.raises(UnauthorizedReporter):
            b.submit(report(hospital="RS0002"), authorized_for="RS0001")

    def test_unknown_hospital(self):
        b = board()
        with pytest.raises(UnknownHospital):
            b.submit(report(hospital="RS9999"))

    def test_newer_first_then_older_superseded(self):
        b = board()
        b.submit(report(at=NOW, occupied=2))
        with pytest.raises(SupersededTimestamp):
            b.submit(report(at=NOW - timedelta(hours=1), occupied=9))
        row = b.latest("RS0001", WardType.ICU_NEG_VENT)
        assert row.occupied_beds == 2
        assert [o for _, o in b.audit] == ["applied", "superseded"]

    def test_equal_timestamp_ties_by_reporter(self):
        b = board()
        b.submit(report(reporter="op-b", occupied=1))
        with pytest.raises(SupersededTimestamp):
            b.submit(report(reporter="op-a", occupied=9))
        b2 = board()
        b2.submit(report(reporter="op-a", occupied=9))
        b2.submit(report(reporter="op-b", occupied=1))
        assert (b.latest("RS0001", WardType.ICU_NEG_VENT).occupied_beds
                == b2.latest("RS0001", WardType.ICU_NEG_VENT).occupied_beds == 1)


class TestConvergence:
    def test_all_permutations_converge(self):
        rng = random.Random(20210325)
        for trial in range(120):
            k = rng.randint(1, 4)
            # (timestamp, reporter) pairs are distinct: the tie-break orders
            # reports totally only when reporters differ at equal times
            stamps = rng.sample([(m, f"op-{r}") for m in range(6) for r in range(1, 4)], k)
            reports = []
            for minute, reporter in stamps:
                reports.append(report(
                    total=rng.randint(5, 30),
                    occupied=rng.randint(0, 5),
                    at=NOW + timedelta(minutes=minute),
                    reporter=reporter,
                ))
            final_states = set()
            for perm in itertools.permutations(reports):
                b = board()
                for r in perm:
                    try:
                        b.submit(r)
                    except SupersededTimestamp:
                        pass
                latest = b.latest("RS0001", WardType.ICU_NEG_VENT)
                final_states.add((latest.total_beds, latest.occupied_beds,
                                  latest.reported_at, latest.reporter))
            assert len(final_states) == 1, trial
            winner = max(reports, key=lambda r: r.order_key())
            assert next(iter(final_states))[2] == winner.reported_at


class TestProvinceCapacity:
    def test_simple_arithmetic(self):
        b = board()
        b.submit(report(total=10, occupied=4))
        cap = b.province_capacity(NOW)
        entry = cap["wards"]["icu_neg_vent"]
        assert entry == {"total": 10, "occupied": 4, "available": 6,
                         "remaining_fraction": 0.6, "reported": True}

    def test_group_by_sum_oracle(self):
        rng = random.Random(7)
        b = board(horizon=60)
        oracle: dict[int, list[tuple[int, int]]] = {}
        for hospital in HOSPITALS:
            for ward in WardType:
                if rng.random() < 0.6:
                    total, occupied = rng.randint(0, 40), 0
                    occupied = rng.randint(0, total) if total else 0
                    b.submit(BedReport(hospital, ward, total, occupied, NOW, "op"))
                    oracle.setdefault(int(ward), []).append((total, occupied))
        cap = b.province_capacity(NOW)
        for ward in WardType:
            rows = oracle.get(int(ward), [])
            entry = cap["wards"][ward.name.lower()]
            assert entry["total"] == sum(t for t, _ in rows)
            assert entry["occupied"] == sum(o for _, o in rows)

    def test_stale_hospitals_flagged(self):
        b = board(horizon=60)
        b.submit(report(at=NOW - timedelta(hours=3)))
        cap = b.province_capacity(NOW)
        assert cap["stale_hospitals"] == ["RS0001"]
        # flagged, never hidden
        assert cap["wards"]["icu_neg_vent"]["total"] == 10


class TestHospitalBoard:
    def test_no_reports_all_no_data(self):
        b = board()
        rows = b.hospital_board("RS0003", NOW)
        assert all(r["no_data"] for r in rows)

    def test_zero_and_no_data_distinguishable(self):
        b = board()
        b.submit(report(hospital="RS0003", total=0, occupied=0))
        rows = {r["ward"]: r for r in b.hospital_board("RS0003", NOW)}
        assert rows["icu_neg_vent"]["no_data"] is False
        assert rows["icu_neg_vent"]["available"] == 0
        assert rows["iso_std"]["no_data"] is True

    def test_read_your_writes(self):
        b = board()
        b.submit(report(occupied=3))
        b.submit(report(occupied=5, at=NOW + timedelta(minutes=10)))
        row = [r for r in b.hospital_board("RS0001", NOW) if r["ward"] == "icu_neg_vent"][0]
        assert row["occupied"] == 5


class TestFindAvailable:
    def published_snapshot_board(self):
        b = board()
        data = {
            "RS0001": 4, "RS0002": 8, "RS0003": 0, "RS0004": 7,
            "RS0005": 0, "RS0006": 0,
        }
        for hospital, available in data.items():
            total = available + 5
            b.submit(BedReport(hospital, WardType.ICU_NEG_VENT, total,
                               total - available, NOW, "op"))
        return b

    def test_published_snapshot_ranking(self):
        b = self.published_snapshot_board()
        rows = b.find_available(WardType.ICU_NEG_VENT, 1, NOW)
        assert [r["hospital"] for r in rows] == ["RS0002", "RS0004", "RS0001"]
        assert [r["available"] for r in rows] == [8, 7, 4]

    def test_min_beds_filters(self):
        b = self.published_snapshot_board()
        assert [r["hospital"] for r in b.find_available(WardType.ICU_NEG_VENT, 8, NOW)] \
            == ["RS0002"]
        assert b.find_available(WardType.ICU_NEG_VENT, 99, NOW) == []

    def test_stale_rank_below_fresh(self):
        b = board(horizon=60)
        b.submit(BedReport("RS0001", WardType.PICU, 20, 0, NOW - timedelta(hours=4), "op"))
        b.submit(BedReport("RS0002", WardType.PICU, 5, 3, NOW, "op"))
        rows = b.find_available(WardType.PICU, 1, NOW)
        assert [r["hospital"] for r in rows] == ["RS0002", "RS0001"]

    def test_ranking_matches_sort_oracle(self):
        rng = random.Random(3)
        b = board(horizon=60)
        for hospital in HOSPITALS:
            total = rng.randint(0, 30)
            occupied = rng.randint(0, total) if total else 0
            at = NOW - timedelta(minutes=rng.choice([0, 30, 120]))
            b.submit(BedReport(hospital, WardType.ISO_NEG, total, occupied, at, "op"))
        rows = b.find_available(WardType.ISO_NEG, 1, NOW)
        oracle = sorted(rows, key=lambda r: (r["stale"], -r["available"], r["hospital"]))
        assert rows == oracle


class TestBedCsv:
    def test_parse_and_reject(self):
        payload = (
            "hospital_id,ward,total_beds,occupied_beds,reported_at,reporter\n"
            "RS0001,icu_neg_vent,10,4,2021-03-25T08:00:00+07:00,op-1\n"
            "RS0001,warp_core,1,0,2021-03-25T08:00:00+07:00,op-1\n"
            "RS0001,picu,x,0,2021-03-25T08:00:00+07:00,op-1\n"
            "RS0001,picu,4,0,2021-03-25T08:00:00,op-1\n"
        ).encode()
        reports, rejects = parse_bed_csv(payload)
        assert len(reports) == 1
        assert [r[2] for r in rejects] == ["UnknownWard", "BadCount", "MissingTimezone"]
