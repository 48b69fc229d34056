"""Event-sourced store: replay, lanes, linkage merges, review queue, audit."""

import random
from datetime import date, datetime, timezone
from pathlib import Path

import numpy as np
import pytest

import epiwatch.store as store_mod
from epiwatch import aggregate
from epiwatch.config import Config
from epiwatch.errors import StorageCorrupt
from epiwatch.store import Store, person_key

AT = datetime(2021, 3, 20, 10, 0, tzinfo=timezone.utc)

CASE_HEADER = ("civil_id,name,dob,sex,city,district,subdistrict,"
               "report_date,category,symptom_status,status,death_protocol")
SPEC_HEADER = "specimen_id,civil_id,collection_date,result_date,result,lab"


def case_row(i, **kw):
    v = {
        "civil_id": f"31710000000{i:05d}", "name": f"ORANG {i}", "dob": "1985-02-03",
        "sex": "L" if i % 2 else "P", "city": "3173", "district": "3173010",
        "subdistrict": "", "report_date": "2021-03-10", "category": "suspek",
        "symptom_status": "", "status": "", "death_protocol": "",
    }
    v.update(kw)
    return ",".join(v[c] for c in CASE_HEADER.split(","))


def case_csv(*rows):
    return (CASE_HEADER + "\n" + "\n".join(rows) + "\n").encode()


def spec_csv(*rows):
    return (SPEC_HEADER + "\n" + "\n".join(rows) + "\n").encode()


@pytest.fixture()
def store(tmp_path):
    return Store.open(Config(storage_path=tmp_path / "store"))


def snapshot_state(s: Store) -> dict:
    """Observable store state with persons canonicalized: person keys are
    opaque, so lanes may assign indexes in a different order as long as the
    per-person facts and every aggregate agree."""
    probe_days = [date(2021, 3, d) for d in (1, 5, 10, 15, 25, 31)]
    persons = sorted(
        (
            int(s.p_nik[i]), s.p_name[i], int(s.p_dob[i]), int(s.p_sex[i]),
            int(s.p_rid[i]), int(s.s_cat[i]), int(s.s_status[i]),
            int(s.s_confirmed[i]), int(s.s_outcome[i]), int(s.p_first_seen[i]),
        )
        for i in range(len(s.p_nik))
    )
    return {
        "persons": persons,
        "summaries": [aggregate.cumulative_summary(s, d) for d in probe_days],
        "categories": [aggregate.category_breakdown(s, d) for d in probe_days],
    }


class TestLaneEquivalence:
    def test_bulk_and_general_agree(self, tmp_path, monkeypatch):
        rng = random.Random(2021)
        rows = []
        for i in range(1, 120):
            kw = {}
            cat = rng.choice(["suspek", "kontak erat", "pelaku perjalanan", "konfirmasi",
                              "discarded", "probable"])
            kw["category"] = cat
            kw["report_date"] = f"2021-03-{rng.randint(1, 19):02d}"
            if rng.random() < 0.7:
                kw["status"] = rng.choice(
                    ["selesai isolasi", "isolasi di rumah", "isolasi di rs",
                     "dirawat", "sembuh", "meninggal", "isolasi mandiri"])
            if rng.random() < 0.4:
                kw["symptom_status"] = rng.choice(["tanpa gejala", "bergejala"])
            if rng.random() < 0.1:
                kw["civil_id"] = ""
            rows.append(case_row(i, **kw))
        payload = case_csv(*rows)

        fast = Store.open(Config(storage_path=tmp_path / "fast"))
        rep_fast = fast.ingest_cases(payload, "src", "f.csv", AT)

        # force every row down the general (row-at-a-time) lane
        monkeypatch.setattr(store_mod, "unique_mask",
                            lambda h1, h2: np.zeros(len(h1), dtype=bool))
        slow = Store.open(Config(storage_path=tmp_path / "slow"))
        rep_slow = slow.ingest_cases(payload, "src", "f.csv", AT)
        monkeypatch.undo()

        assert rep_fast.accepted == rep_slow.accepted
        assert rep_fast.new_persons == rep_slow.new_persons
        assert snapshot_state(fast) == snapshot_state(slow)
        assert not fast.verify() and not slow.verify()

    def test_lanes_agree_across_sequential_batches(self, tmp_path, monkeypatch):
        # later batches mix new persons with re-reports of existing ones, so
        # the fast lane's store-membership checks are load-bearing here
        rng = random.Random(777)
        batches = []
        for b in range(3):
            rows = []
            for _ in range(60):
                i = rng.randint(1, 90)
                kw = {"report_date": f"2021-03-{rng.randint(1, 20):02d}",
                      "category": rng.choice(["suspek", "konfirmasi", "kontak erat"])}
                if rng.random() < 0.5:
                    kw["status"] = rng.choice(
                        ["selesai isolasi", "isolasi di rumah", "dirawat", "sembuh"])
                rows.append(case_row(i, **kw))
            batches.append(case_csv(*rows))

        fast = Store.open(Config(storage_path=tmp_path / "fast"))
        for b, payload in enumerate(batches):
            fast.ingest_cases(payload, "src", f"{b}.csv", AT)

        monkeypatch.setattr(store_mod, "unique_mask",
                            lambda h1, h2: np.zeros(len(h1), dtype=bool))
        slow = Store.open(Config(storage_path=tmp_path / "slow"))
        for b, payload in enumerate(batches):
            slow.ingest_cases(payload, "src", f"{b}.csv", AT)
        monkeypatch.undo()

        assert snapshot_state(fast) == snapshot_state(slow)
        assert not fast.verify() and not slow.verify()

    def test_specimen_lanes_agree(self, tmp_path, monkeypatch):
        rows = []
        for i in range(1, 60):
            res = ["positif", "negatif", "inconclusive"][i % 3]
            rows.append(f"S{i:04d},31720000000{i:05d},2021-03-0{1 + i % 5},2021-03-1{i % 5},{res},labZ")
        payload = spec_csv(*rows)
        fast = Store.open(Config(storage_path=tmp_path / "fast"))
        fast.ingest_specimens(payload, "labZ", "s.csv", AT)
        monkeypatch.setattr(store_mod, "unique_mask",
                            lambda h1, h2: np.zeros(len(h1), dtype=bool))
        slow = Store.open(Config(storage_path=tmp_path / "slow"))
        slow.ingest_specimens(payload, "labZ", "s.csv", AT)
        monkeypatch.undo()
        assert snapshot_state(fast) == snapshot_state(slow)

        def fc_by_nik(st):
            return sorted(
                (int(st.p_nik[i]), int(st.fc_coll[i]), int(st.fc_res[i]), int(st.fc_pos[i]))
                for i in range(len(st.p_nik)))

        assert fc_by_nik(fast) == fc_by_nik(slow)


class TestMergeSemantics:
    def test_same_nik_merges_with_conflict(self, store):
        payload = case_csv(
            case_row(1, district="3173010", report_date="2021-03-10"),
            case_row(1, district="3173020", report_date="2021-03-12"),
        )
        rep = store.ingest_cases(payload, "src", "f.csv", AT)
        assert rep.new_persons == 1 and rep.merged_into_existing == 1
        assert rep.conflicts >= 1
        rid = int(store.p_rid[0])
        assert store._districts[rid] == "3173020"  # later report wins
        assert store.conflicts_path.exists()

    def test_nonempty_beats_empty(self, store):
        store.ingest_cases(case_csv(case_row(1, sex="", report_date="2021-03-12")),
                           "src", "f1.csv", AT)
        store.ingest_cases(case_csv(case_row(1, sex="P", report_date="2021-03-10")),
                           "src", "f2.csv", AT)
        assert int(store.p_sex[0]) == 2  # female filled despite older report

    def test_first_seen_never_moves_forward(self, store):
        store.ingest_cases(case_csv(case_row(1, report_date="2021-03-12")), "src", "a.csv", AT)
        store.ingest_cases(case_csv(case_row(1, report_date="2021-03-05")), "src", "b.csv", AT)
        assert int(store.p_first_seen[0]) == date(2021, 3, 5).toordinal()

    def test_fuzzy_row_joins_then_gains_nik(self, store):
        store.ingest_cases(case_csv(case_row(1, civil_id="")), "src", "a.csv", AT)
        assert int(store.p_nik[0]) == 0
        store.ingest_cases(case_csv(case_row(1)), "src", "b.csv", AT)
        assert store.person_count() == 1
        assert int(store.p_nik[0]) == int(case_row(1).split(",")[0])

    def test_one_person_per_nik_after_random_merges(self, tmp_path):
        rng = random.Random(555)
        s = Store.open(Config(storage_path=tmp_path / "s"))
        for batch in range(6):
            rows = [case_row(rng.randint(1, 30),
                             report_date=f"2021-03-{rng.randint(1, 19):02d}")
                    for _ in range(rng.randint(1, 40))]
            s.ingest_cases(case_csv(*rows), f"src{batch % 2}", "x.csv", AT)
        niks = s.p_nik.view
        nonzero = niks[niks != 0]
        assert len(nonzero) == len(set(nonzero.tolist()))
        assert not s.verify()


class TestOutOfOrder:
    def test_backdated_positive_refolds(self, store):
        store.ingest_cases(case_csv(case_row(1, report_date="2021-03-10")), "src", "a.csv", AT)
        store.ingest_specimens(spec_csv(
            "S1,3171000000000001,2021-03-04,2021-03-05,positif,labA"), "labA", "b.csv", AT)
        assert int(store.s_confirmed[0]) == date(2021, 3, 5).toordinal()
        # view before the report date already shows the confirmation
        s = aggregate.cumulative_summary(store, date(2021, 3, 6))
        assert s["confirmed"] == 1
        # replaying the person reproduces the live state
        assert store.rebuild_person(0) == store._state_of(0)

    def test_rebuild_matches_after_many_events(self, store):
        store.ingest_cases(case_csv(
            case_row(1, report_date="2021-03-08", status="isolasi di rumah"),
            case_row(1, report_date="2021-03-12", status="dirawat"),
        ), "src", "a.csv", AT)
        store.ingest_specimens(spec_csv(
            "S1,3171000000000001,2021-03-09,2021-03-10,negatif,labA",
            "S2,3171000000000001,2021-03-10,2021-03-11,positif,labA",
        ), "labA", "b.csv", AT)
        assert store.rebuild_person(0) == store._state_of(0)
        assert not store.verify()


class TestDurability:
    def test_restart_preserves_everything(self, tmp_path):
        cfg = Config(storage_path=tmp_path / "s")
        s1 = Store.open(cfg)
        s1.ingest_cases(case_csv(*[case_row(i) for i in range(1, 40)]), "src", "a.csv", AT)
        s1.ingest_specimens(spec_csv(
            "S1,3171000000000001,2021-03-09,2021-03-10,positif,labA"), "labA", "b.csv", AT)
        before = snapshot_state(s1)
        watermark = s1.watermark
        del s1  # no graceful shutdown; acknowledged data must be durable

        s2 = Store.open(cfg)
        assert s2.watermark == watermark
        assert snapshot_state(s2) == before

    def test_corrupt_payload_refuses_start(self, tmp_path):
        cfg = Config(storage_path=tmp_path / "s")
        s1 = Store.open(cfg)
        s1.ingest_cases(case_csv(case_row(1)), "src", "a.csv", AT)
        s1.ingest_cases(case_csv(case_row(2)), "src", "b.csv", AT)
        second_payload = sorted((tmp_path / "s" / "log").glob("*.parquet"))[-1]
        blob = bytearray(second_payload.read_bytes())
        blob[len(blob) // 2] ^= 0xFF
        second_payload.write_bytes(bytes(blob))
        with pytest.raises(StorageCorrupt) as err:
            Store.open(cfg)
        assert err.value.sequence == 2

    def test_orphan_payload_is_uncommitted_tail(self, tmp_path):
        cfg = Config(storage_path=tmp_path / "s")
        s1 = Store.open(cfg)
        s1.ingest_cases(case_csv(case_row(1)), "src", "a.csv", AT)
        (tmp_path / "s" / "log" / "000000001.parquet").write_bytes(b"partial write")
        s2 = Store.open(cfg)  # must not raise
        assert s2.watermark == s1.watermark

    def test_missing_payload_is_corruption(self, tmp_path):
        cfg = Config(storage_path=tmp_path / "s")
        s1 = Store.open(cfg)
        s1.ingest_cases(case_csv(case_row(1)), "src", "a.csv", AT)
        next(iter((tmp_path / "s" / "log").glob("*.parquet"))).unlink()
        with pytest.raises(StorageCorrupt):
            Store.open(cfg)


class TestReviewQueue:
    def seed_ambiguous(self, store):
        # two distinct-nik persons sharing the fallback key, then an id-less row
        store.ingest_cases(case_csv(
            case_row(1, name="SAMA NAMA", dob="1980-01-01", sex="L"),
            case_row(2, name="SAMA NAMA", dob="1980-01-01", sex="L"),
        ), "src", "a.csv", AT)
        rep = store.ingest_cases(case_csv(
            case_row(3, civil_id="", name="SAMA NAMA", dob="1980-01-01", sex="L",
                     report_date="2021-03-14"),
        ), "src", "b.csv", AT)
        return rep

    def test_ambiguous_row_parks(self, store):
        rep = self.seed_ambiguous(store)
        assert rep.parked == 1
        rows = store.review_queue_rows()
        assert len(rows) == 1
        assert rows[0]["candidates"] == [person_key(0), person_key(1)]
        assert store.person_count() == 2  # parked row created nobody

    def test_resolsection_to_existing(self, store):
        self.seed_ambiguous(store)
        qid = store.review_queue_rows()[0]["queue_id"]
        store.resolve_parked(qid, person_key(1), AT)
        assert store.person_count() == 2
        assert not store.review_queue_rows()
        # the parked report applied to person 1
        assert int(store.s_last_ord[1]) == date(2021, 3, 14).toordinal()

    def test_resolution_to_new_person(self, store):
        self.seed_ambiguous(store)
        qid = store.review_queue_rows()[0]["queue_id"]
        store.resolve_parked(qid, "new", AT)
        assert store.person_count() == 3

    def test_resolution_survives_replay(self, store, tmp_path):
        self.seed_ambiguous(store)
        qid = store.review_queue_rows()[0]["queue_id"]
        store.resolve_parked(qid, person_key(0), AT)
        again = Store.open(store.config)
        assert not again.review_queue_rows()
        assert again.person_count() == store.person_count()
        assert snapshot_state(again) == snapshot_state(store)

    def test_double_resolution_rejected(self, store):
        self.seed_ambiguous(store)
        qid = store.review_queue_rows()[0]["queue_id"]
        store.resolve_parked(qid, "new", AT)
        with pytest.raises(KeyError):
            store.resolve_parked(qid, "new", AT)


class TestAdminUnlink:
    def test_unlink_frees_the_civil_id(self, store):
        store.ingest_cases(case_csv(case_row(1)), "src", "a.csv", AT)
        store.admin_unlink(person_key(0), AT)
        assert int(store.p_nik[0]) == 0
        rep = store.ingest_cases(case_csv(case_row(1, report_date="2021-03-15")),
                                 "src", "b.csv", AT)
        assert rep.new_persons == 1
        assert store.person_count() == 2
        assert not store.verify()

    def test_unlink_survives_replay(self, store):
        store.ingest_cases(case_csv(case_row(1)), "src", "a.csv", AT)
        store.admin_unlink(person_key(0), AT)
        store.ingest_cases(case_csv(case_row(1, report_date="2021-03-15")), "src", "b.csv", AT)
        again = Store.open(store.config)
        assert again.person_count() == 2
        assert int(again.p_nik[0]) == 0


class TestIngestReportArithmetic:
    def test_conservation_and_disposition(self, store):
        rows = [case_row(i) for i in range(1, 10)]
        rows.append(case_row(1, report_date="2021-03-11"))  # merge
        rows.append(case_row(99, report_date="bad"))        # reject
        rows.append(rows[0])                                # exact duplicate row
        rep = store.ingest_cases(case_csv(*rows), "src", "f.csv", AT)
        assert rep.accepted + rep.rejected == rep.total == 12
        assert rep.rejected == 1
        assert rep.duplicates == 1
        assert rep.new_persons + rep.merged_into_existing + rep.duplicates + rep.parked \
            == rep.accepted

    def test_empty_batch(self, store):
        rep = store.ingest_cases((CASE_HEADER + "\n").encode(), "src", "f.csv", AT)
        assert rep.total == rep.accepted == rep.rejected == 0
        assert rep.new_persons == 0


class TestOrderInsensitivity:
    def test_permuted_batch_same_partition_and_aggregates(self, tmp_path):
        rng = random.Random(314)
        rows = []
        for i in range(1, 40):
            kw = {"report_date": f"2021-03-{rng.randint(1, 19):02d}"}
            if rng.random() < 0.3:
                kw["civil_id"] = ""
            if rng.random() < 0.3:          # force shared fallback triples
                kw["name"] = "NAMA SAMA"
                kw["dob"] = "1980-01-01"
                kw["sex"] = "L"
            rows.append(case_row(rng.randint(1, 15), **kw))
        base = None
        for trial in range(4):
            rng.shuffle(rows)
            s = Store.open(Config(storage_path=tmp_path / f"p{trial}"))
            rep = s.ingest_cases(case_csv(*rows), "src", "f.csv", AT)
            niks = sorted(s.p_nik.view[s.p_nik.view != 0].tolist())
            shape = (
                s.person_count(), rep.parked, niks,
                aggregate.category_breakdown(s, date(2021, 3, 25)),
                aggregate.cumulative_summary(s, date(2021, 3, 25)),
            )
            if base is None:
                base = shape
            else:
                assert shape == base, trial


class TestIdempotence:
    def test_reingesting_identical_batch_changes_nothing(self, store):
        payload = case_csv(*[case_row(i) for i in range(1, 15)])
        store.ingest_cases(payload, "src", "a.csv", AT)
        before = snapshot_state(store)
        watermark = store.watermark
        rep = store.ingest_cases(payload, "src", "a.csv", AT)
        assert rep.duplicates == rep.total == rep.accepted
        assert store.watermark == watermark
        assert snapshot_state(store) == before

    def test_partial_row_retransmit_is_noop(self, store):
        rows = [case_row(i) for i in range(1, 10)]
        store.ingest_cases(case_csv(*rows), "src", "a.csv", AT)
        before = snapshot_state(store)
        # same rows inside a different batch shape
        rep = store.ingest_cases(case_csv(rows[2], rows[5]), "src", "b.csv", AT)
        assert rep.duplicates == 2
        assert snapshot_state(store) == before

    def test_replayed_specimen_batch_identical_aggregates(self, store):
        store.ingest_cases(case_csv(*[case_row(i) for i in range(1, 6)]), "src", "a.csv", AT)
        specimens = spec_csv(
            "S1,3171000000000001,2021-03-09,2021-03-10,positif,labA",
            "S2,3171000000000002,2021-03-09,2021-03-11,negatif,labA")
        store.ingest_specimens(specimens, "labA", "s.csv", AT)
        before = snapshot_state(store)
        rep = store.ingest_specimens(specimens, "labA", "s.csv", AT)
        assert rep.duplicates == rep.total
        assert snapshot_state(store) == before


class TestEventAfterTerminal:
    def test_logged_not_applied(self, store):
        store.ingest_cases(case_csv(
            case_row(1, category="konfirmasi", status="meninggal")), "src", "a.csv", AT)
        rep = store.ingest_specimens(spec_csv(
            "S1,3171000000000001,2021-03-11,2021-03-12,negatif,labA"), "labA", "b.csv", AT)
        assert rep.ignored_after_terminal == 1
        assert int(store.s_status[0]) == 7  # still dead
