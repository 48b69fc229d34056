"""Event-sourced store: append-only log, derived state, watermarks.

Every accepted feed row becomes a logged event; derived state (persons,
case states, delta streams, indexes, bed board) is a pure function of the
log prefix and is rebuilt by replay on startup. Acknowledged ingests are
fsynced before the call returns, so a crash never loses acknowledged data.

Case batches apply through two lanes with identical semantics: a vectorized
lane for rows that provably form new singleton persons, and a general lane
(batch union-find linkage, per-person fold) for everything else. Aggregate
queries read per-watermark caches; cache (re)builds serialize with writers
on the store lock, cached results are read lock-free.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from dataclasses import dataclass, field
from datetime import date, datetime, timezone
from pathlib import Path

import numpy as np
import polars as pl

from . import casestate, ingest, linkage
from .bedboard import BedBoard, BedReport, WardType, load_hospital_registry, parse_bed_csv
from .casestate import CaseState, DiscardRules, EventKind, fold_events, step_event
from .config import Config
from .errors import StorageCorrupt
from .indexes import GrowArray, PairIndex, StringColumn, first_distinct_mask, unique_mask
from .model import CaseStatus, EpiCategory, Sex, civil_id_pseudonym
from .regions import RegionTable, load_region_table

EPOCH_ISO = "1970-01-01T00:00:00+00:00"
UNKNOWN_RID = -1


def person_key(pidx: int) -> str:
    return f"P{pidx:08d}"


def parse_person_key(key: str) -> int:
    if not key.startswith("P") or not key[1:].isdigit():
        raise ValueError(f"bad person key {key!r}")
    return int(key[1:])


@dataclass
class IngestReport:
    kind: str
    total: int = 0
    accepted: int = 0
    rejected: int = 0
    rejects: list[dict] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    duplicates: int = 0
    parked: int = 0
    new_persons: int = 0
    merged_into_existing: int = 0
    ignored_after_terminal: int = 0
    conflicts: int = 0
    watermark: int = 0

    def as_dict(self) -> dict:
        return {
            "kind": self.kind, "total": self.total, "accepted": self.accepted,
            "rejected": self.rejected, "rejects": self.rejects[:1000],
            "warnings": self.warnings, "duplicates": self.duplicates,
            "parked": self.parked, "new_persons": self.new_persons,
            "merged_into_existing": self.merged_into_existing,
            "ignored_after_terminal": self.ignored_after_terminal,
            "conflicts": self.conflicts, "watermark": self.watermark,
        }


class EventLog:
    """Framed append-only log on disk.

    A frame is a parquet (or json) payload plus a json header written after
    the payload is durable; the header is the commit point. Payload files
    without headers are uncommitted tails and are ignored. A committed frame
    whose payload is missing or fails its digest refuses the whole store.
    """

    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.frame_count = 0

    def _frame_base(self, frame_no: int) -> Path:
        return self.root / f"{frame_no:09d}"

    def append(self, header: dict, payload_bytes: bytes, payload_suffix: str) -> None:
        frame_no = self.frame_count
        base = self._frame_base(frame_no)
        payload_path = base.with_suffix(payload_suffix)
        header = dict(header)
        header["frame"] = frame_no
        header["payload"] = payload_path.name
        header["payload_digest"] = hashlib.blake2b(payload_bytes, digest_size=16).hexdigest()
        with open(payload_path, "wb") as fh:
            fh.write(payload_bytes)
            fh.flush()
            os.fsync(fh.fileno())
        header_path = base.with_suffix(".json")
        with open(header_path, "w") as fh:
            json.dump(header, fh)
            fh.flush()
            os.fsync(fh.fileno())
        self.frame_count += 1

    def frames(self):
        """Yield (header, payload_bytes) for every committed frame, checking
        continuity and digests; raises StorageCorrupt on damage."""
        headers = sorted(self.root.glob("*.json"))
        expected_seq = 1
        for i, header_path in enumerate(headers):
            try:
                header = json.loads(header_path.read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise StorageCorrupt(expected_seq, f"unreadable header {header_path.name}: {exc}")
            if header.get("frame") != i:
                raise StorageCorrupt(expected_seq, f"frame gap at {header_path.name}")
            if header.get("seq_first") != expected_seq:
                raise StorageCorrupt(expected_seq, f"sequence gap at frame {i}")
            payload_path = self.root / header["payload"]
            try:
                payload = payload_path.read_bytes()
            except OSError as exc:
                raise StorageCorrupt(expected_seq, f"missing payload for frame {i}: {exc}")
            digest = hashlib.blake2b(payload, digest_size=16).hexdigest()
            if digest != header["payload_digest"]:
                raise StorageCorrupt(expected_seq, f"payload digest mismatch in frame {i}")
            expected_seq += int(header["n"])
            self.frame_count = i + 1
            yield header, payload


# Closed-form status of a single case row (report event + optional status
# event on the same day), indexed by status_event * 4 + status_aux.
def _status_tables() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    nonconf = np.full(64, int(CaseStatus.HOME_ISOLATION), dtype=np.int8)
    conf = np.full(64, int(CaseStatus.SELF_ISOLATION), dtype=np.int8)
    outcome = np.zeros(64, dtype=bool)  # statuses that set outcome date when confirmed
    for kind, aux_values in (
        (EventKind.ISOLATION_START, (1, 2, 3)),
        (EventKind.ISOLATION_END, (0,)),
        (EventKind.ADMITTED, (0,)),
        (EventKind.DISCHARGED, (0,)),
        (EventKind.RECOVERED, (0,)),
        (EventKind.DIED, (0, 1, 2)),
    ):
        for aux in aux_values:
            state_n, _ = casestate.apply_event(
                CaseState(category=int(EpiCategory.SUSPECT), status=int(CaseStatus.HOME_ISOLATION)),
                (0, 0, int(kind), aux))
            state_c, _ = casestate.apply_event(
                CaseState(category=int(EpiCategory.CONFIRMED), status=int(CaseStatus.SELF_ISOLATION),
                          confirmed_ord=0),
                (0, 0, int(kind), aux))
            nonconf[int(kind) * 4 + aux] = state_n.status
            conf[int(kind) * 4 + aux] = state_c.status
            outcome[int(kind) * 4 + aux] = state_c.status in (
                int(CaseStatus.DEAD), int(CaseStatus.RECOVERED))
    return nonconf, conf, outcome


_NONCONF_STATUS, _CONF_STATUS, _CONF_OUTCOME = _status_tables()

_CASE_PAYLOAD_COLUMNS = list(ingest._empty_case_frame().columns)


@dataclass
class ParkedEvent:
    queue_id: int
    kind: str                  # "case"
    row: dict
    candidates: list[int]
    resolved: bool = False
    resolution: str = ""


class Store:
    """Derived state plus the log writer. All mutations hold the lock."""

    def __init__(self, config: Config):
        self.config = config
        self.lock = threading.RLock()
        self.region_table: RegionTable = load_region_table(config.region_table_path)
        self.hospitals = load_hospital_registry(config.hospital_registry_path)
        self.beds = BedBoard(self.hospitals, config.staleness_horizon_minutes)
        self.rules = DiscardRules(
            negatives_immediate=config.discard_negatives_immediate,
            window_days=config.discard_window_days,
        )
        storage = Path(config.storage_path)
        storage.mkdir(parents=True, exist_ok=True)
        self.log = EventLog(storage / "log")
        self.rejects_path = storage / "rejects.csv"
        self.conflicts_path = storage / "conflicts.csv"

        # region registry: district code -> compact id
        self._districts = self.region_table.district_codes()
        self._district_rid = {code: i for i, code in enumerate(self._districts)}

        self.seq = 0
        self.generated_at = EPOCH_ISO
        self._sources: dict[str, int] = {}
        self._source_names: list[str] = []

        # person columns
        self.p_nik = GrowArray(np.uint64)
        self.p_name = StringColumn()
        self.p_dob = GrowArray(np.int32)
        self.p_sex = GrowArray(np.int8)
        self.p_rid = GrowArray(np.int16)
        self.p_sub = StringColumn()
        self.p_first_seen = GrowArray(np.int32)
        self.p_last_upd = GrowArray(np.float64)
        self.p_fuzzy1 = GrowArray(np.uint64)   # live fuzzy key halves (0,0 = none)
        self.p_fuzzy2 = GrowArray(np.uint64)
        # per-field provenance: (report_ord, source id)
        self.prov = {
            f: (GrowArray(np.int32), GrowArray(np.int32))
            for f in ("name", "dob", "sex", "region", "subdistrict")
        }

        # case-state columns
        self.s_cat = GrowArray(np.int8)
        self.s_status = GrowArray(np.int8)
        self.s_sym = GrowArray(np.int8)
        self.s_confirmed = GrowArray(np.int32)
        self.s_outcome = GrowArray(np.int32)
        self.s_protocol = GrowArray(np.int8)
        self.s_negcount = GrowArray(np.int8)
        self.s_lastneg = GrowArray(np.int32)
        self.s_armed = GrowArray(np.bool_)
        self.s_last_ord = GrowArray(np.int32)
        self.s_last_seq = GrowArray(np.int64)
        self.s_gen = GrowArray(np.uint32)

        # events (for re-folds and rebuild)
        self.ev_person = GrowArray(np.int32)
        self.ev_ord = GrowArray(np.int32)
        self.ev_seq = GrowArray(np.int64)
        self.ev_kind = GrowArray(np.int8)
        self.ev_aux = GrowArray(np.int8)

        # delta streams
        self.cb_day = GrowArray(np.int32)
        self.cb_cat = GrowArray(np.int8)
        self.cb_status = GrowArray(np.int8)
        self.cb_sign = GrowArray(np.int8)
        self.cb_person = GrowArray(np.int32)
        self.cb_gen = GrowArray(np.uint32)
        self.sy_day = GrowArray(np.int32)
        self.sy_sym = GrowArray(np.int8)
        self.sy_sign = GrowArray(np.int8)
        self.sy_person = GrowArray(np.int32)
        self.sy_gen = GrowArray(np.uint32)

        # specimens (conclusive only) and per-person first-conclusive result
        self.sp_person = GrowArray(np.int32)
        self.sp_coll = GrowArray(np.int32)
        self.sp_res = GrowArray(np.int32)
        self.sp_pos = GrowArray(np.bool_)
        self.fc_coll = GrowArray(np.int32)
        self.fc_res = GrowArray(np.int32)
        self.fc_seq = GrowArray(np.int64)
        self.fc_pos = GrowArray(np.int8)   # -1 none, 0 negative, 1 positive

        # indexes
        self.nik_idx = PairIndex()
        self.fuzzy_idx = PairIndex()
        self.content_idx = PairIndex()
        self.sid_idx = PairIndex()
        self.batch_digests: dict[str, int] = {}   # digest -> total rows

        self.national: dict[int, tuple[int, int, int, int]] = {}
        self.review_queue: dict[int, ParkedEvent] = {}
        self.unlink_blocks: dict[int, set[int]] = {}   # nik -> persons it may not auto-relink
        self.ignored_after_terminal = 0
        self._agg_cache: dict = {}
        self._agg_cache_seq = -1

    # ------------------------------------------------------------------
    # lifecycle

    @classmethod
    def open(cls, config: Config) -> "Store":
        store = cls(config)
        store.replay()
        return store

    def replay(self) -> None:
        with self.lock:
            for header, payload in self.log.frames():
                self._apply_frame(header, payload)
                self.seq = header["seq_first"] + header["n"] - 1
                self.generated_at = header["recorded_at"]

    def _apply_frame(self, header: dict, payload: bytes) -> None:
        kind = header["kind"]
        self.batch_digests[header["batch_digest"]] = header.get("total_rows", header["n"])
        if kind == "cases":
            frame = pl.read_parquet(payload) if header["n"] else ingest._empty_case_frame()
            self._apply_cases(frame, header["seq_first"], header["recorded_at"])
        elif kind == "specimens":
            frame = pl.read_parquet(payload) if header["n"] else ingest._empty_specimen_frame()
            self._apply_specimens(frame, header["seq_first"], header["recorded_at"])
        elif kind == "national":
            frame = pl.read_parquet(payload) if header["n"] else ingest._empty_national_frame()
            self._apply_national(frame)
        elif kind == "beds":
            self._apply_beds(json.loads(payload))
        elif kind == "admin":
            self._apply_admin(json.loads(payload), header["seq_first"])
        else:
            raise StorageCorrupt(header["seq_first"], f"unknown frame kind {kind}")
        self._agg_cache.clear()
        self._agg_cache_seq = -1

    # ------------------------------------------------------------------
    # shared helpers

    def _source_id(self, source: str) -> int:
        sid = self._sources.get(source)
        if sid is None:
            sid = len(self._source_names)
            self._sources[source] = sid
            self._source_names.append(source)
        return sid

    def _rid_of(self, district_code: str) -> int:
        return self._district_rid.get(district_code, UNKNOWN_RID)

    def _append_rejects(self, rejects, source_file: str) -> None:
        if not rejects:
            return
        new_file = not self.rejects_path.exists()
        with open(self.rejects_path, "a") as fh:
            if new_file:
                fh.write("line,field,rule,source_file\n")
            for r in rejects:
                fh.write(f"{r.line},{r.field},{r.rule},{source_file}\n")

    def _append_conflicts(self, rows: list[tuple[str, str, str, str]]) -> None:
        if not rows:
            return
        new_file = not self.conflicts_path.exists()
        with open(self.conflicts_path, "a") as fh:
            if new_file:
                fh.write("person_key,field,kept,discarded\n")
            for person, fieldname, kept, discarded in rows:
                fh.write(f"{person},{fieldname},{json.dumps(kept)},{json.dumps(discarded)}\n")

    def _log_frame(self, kind: str, n: int, total_rows: int, source: str, source_file: str,
                   recorded_at: str, batch_digest: str, payload_bytes: bytes,
                   payload_suffix: str) -> int:
        seq_first = self.seq + 1
        header = {
            "kind": kind, "seq_first": seq_first, "n": n, "total_rows": total_rows,
            "source": source, "source_file": source_file, "recorded_at": recorded_at,
            "batch_digest": batch_digest,
        }
        self.log.append(header, payload_bytes, payload_suffix)
        self.seq += n
        self.generated_at = recorded_at
        self.batch_digests[batch_digest] = total_rows
        self._agg_cache.clear()
        self._agg_cache_seq = -1
        return seq_first

    @staticmethod
    def _batch_digest(payload: bytes, kind: str, source: str) -> str:
        h = hashlib.blake2b(digest_size=16)
        h.update(kind.encode())
        h.update(b"\x1f")
        h.update(source.encode())
        h.update(b"\x1f")
        h.update(payload)
        return h.hexdigest()

    @staticmethod
    def _now() -> datetime:
        return datetime.now(timezone.utc)

    # ------------------------------------------------------------------
    # person/state primitives (general lane)

    def _new_person(self, nik: int, name: str, dob: int, sex: int, rid: int, sub: str,
                    first_seen: int, recorded_epoch: float,
                    fuzzy: tuple[int, int] | None) -> int:
        pidx = len(self.p_nik)
        self.p_nik.append(nik)
        self.p_name.append(name)
        self.p_dob.append(dob)
        self.p_sex.append(sex)
        self.p_rid.append(rid)
        self.p_sub.append(sub)
        self.p_first_seen.append(first_seen)
        self.p_last_upd.append(recorded_epoch)
        self.p_fuzzy1.append(fuzzy[0] if fuzzy else 0)
        self.p_fuzzy2.append(fuzzy[1] if fuzzy else 0)
        for f, (ords, srcs) in self.prov.items():
            ords.append(-1)
            srcs.append(-1)
        for arr, value in (
            (self.s_cat, 0), (self.s_status, 0), (self.s_sym, 0),
            (self.s_confirmed, -1), (self.s_outcome, -1), (self.s_protocol, 0),
            (self.s_negcount, 0), (self.s_lastneg, -1), (self.s_armed, False),
            (self.s_last_ord, -1), (self.s_last_seq, -1), (self.s_gen, 0),
            (self.fc_coll, -1), (self.fc_res, -1), (self.fc_seq, -1), (self.fc_pos, -1),
        ):
            arr.append(value)
        if nik:
            self.nik_idx.add(nik, 0, pidx)
        if fuzzy:
            self.fuzzy_idx.add(fuzzy[0], fuzzy[1], pidx)
        return pidx

    def _state_of(self, pidx: int) -> CaseState:
        return CaseState(
            category=int(self.s_cat[pidx]),
            status=int(self.s_status[pidx]),
            symptoms=int(self.s_sym[pidx]),
            confirmed_ord=int(self.s_confirmed[pidx]),
            outcome_ord=int(self.s_outcome[pidx]),
            death_protocol=int(self.s_protocol[pidx]),
            negative_count=int(self.s_negcount[pidx]),
            last_negative_ord=int(self.s_lastneg[pidx]),
            discard_armed=bool(self.s_armed[pidx]),
        )

    def _store_state(self, pidx: int, st: CaseState) -> None:
        self.s_cat[pidx] = st.category
        self.s_status[pidx] = st.status
        self.s_sym[pidx] = st.symptoms
        self.s_confirmed[pidx] = st.confirmed_ord
        self.s_outcome[pidx] = st.outcome_ord
        self.s_protocol[pidx] = st.death_protocol
        self.s_negcount[pidx] = st.negative_count
        self.s_lastneg[pidx] = st.last_negative_ord
        self.s_armed[pidx] = st.discard_armed

    def _emit_deltas(self, pidx: int, gen: int, bucket, symptom) -> None:
        for day, cat, status, sign in bucket:
            self.cb_day.append(day)
            self.cb_cat.append(cat)
            self.cb_status.append(status)
            self.cb_sign.append(sign)
            self.cb_person.append(pidx)
            self.cb_gen.append(gen)
        for day, sym, sign in symptom:
            self.sy_day.append(day)
            self.sy_sym.append(sym)
            self.sy_sign.append(sign)
            self.sy_person.append(pidx)
            self.sy_gen.append(gen)

    def _person_events(self, pidx: int) -> list[tuple[int, int, int, int]]:
        mask = self.ev_person.view == pidx
        idx = np.nonzero(mask)[0]
        events = [
            (int(self.ev_ord[i]), int(self.ev_seq[i]), int(self.ev_kind[i]), int(self.ev_aux[i]))
            for i in idx
        ]
        events.sort(key=lambda e: (e[0], e[1]))
        return events

    def _apply_person_events(self, pidx: int, packed_events: list[tuple[int, int, int, int]]) -> int:
        """Append events to a person, folding incrementally when they arrive
        in order and re-folding from the log otherwise. Returns ignored count."""
        ignored = 0
        last = (int(self.s_last_ord[pidx]), int(self.s_last_seq[pidx]))
        in_order = all((e[0], e[1]) > last for e in packed_events) and \
            all(packed_events[i][:2] < packed_events[i + 1][:2] for i in range(len(packed_events) - 1))
        for ord_day, seq, kind, aux in packed_events:
            self.ev_person.append(pidx)
            self.ev_ord.append(ord_day)
            self.ev_seq.append(seq)
            self.ev_kind.append(kind)
            self.ev_aux.append(aux)
        if in_order:
            st = self._state_of(pidx)
            gen = int(self.s_gen[pidx])
            for packed in packed_events:
                st, applied, bucket, symptom = step_event(st, packed, self.rules)
                if not applied:
                    ignored += 1
                self._emit_deltas(pidx, gen, bucket, symptom)
            self._store_state(pidx, st)
        else:
            gen = int(self.s_gen[pidx]) + 1
            self.s_gen[pidx] = gen
            result = fold_events(self._person_events(pidx), self.rules)
            ignored += result.ignored
            self._emit_deltas(pidx, gen, result.bucket_deltas, result.symptom_deltas)
            self._store_state(pidx, result.state)
        if packed_events:
            tail = max(e[:2] for e in packed_events)
            if tail > last:
                self.s_last_ord[pidx] = tail[0]
                self.s_last_seq[pidx] = tail[1]
        self.ignored_after_terminal += ignored
        return ignored

    def rebuild_person(self, pidx: int) -> CaseState:
        """Replay one person's event slice; equals the live state."""
        return casestate.rebuild(self._person_events(pidx), self.rules)

    # ------------------------------------------------------------------
    # case ingestion

    def ingest_cases(self, payload: bytes, source: str, source_file: str = "",
                     recorded_at: datetime | None = None) -> IngestReport:
        with self.lock:
            recorded_at = recorded_at or self._now()
            recorded_iso = recorded_at.isoformat()
            digest = self._batch_digest(payload, "cases", source)
            if digest in self.batch_digests:
                total = self.batch_digests[digest]
                return IngestReport(kind="cases", total=total, accepted=total,
                                    duplicates=total, watermark=self.seq)
            vb = ingest.parse_case_batch(
                payload, self.config.aliases, self.region_table, recorded_at,
                default_source=source, mandatory=self.config.mandatory_case_columns)
            report = IngestReport(kind="cases", total=vb.total_rows, warnings=vb.warnings)
            report.rejected = len(vb.rejects)
            report.rejects = [
                {"line": r.line, "field": r.field, "rule": r.rule} for r in vb.rejects]
            self._append_rejects(vb.rejects, source_file)

            frame = vb.frame
            # content-level idempotence: identical rows (per digest) are
            # accepted but apply as no-ops
            if len(frame):
                d1 = frame["d1"].to_numpy()
                d2 = frame["d2"].to_numpy()
                dup_in_store = self.content_idx.contains_many(d1, d2)
                keep = ~dup_in_store & first_distinct_mask(d1, d2)
                report.duplicates = int((~keep).sum())
                new_frame = frame.filter(pl.Series(keep))
            else:
                new_frame = frame

            payload_bytes = _frame_to_parquet(new_frame)
            seq_first = self._log_frame(
                "cases", len(new_frame), vb.total_rows, source, source_file,
                recorded_iso, digest, payload_bytes, ".parquet")
            stats = self._apply_cases(new_frame, seq_first, recorded_iso)
            report.accepted = vb.total_rows - report.rejected
            report.new_persons = stats["new_persons"]
            report.merged_into_existing = stats["merged"]
            report.parked = stats["parked"]
            report.ignored_after_terminal = stats["ignored"]
            report.conflicts = stats["conflicts"]
            report.watermark = self.seq
            return report

    def _apply_cases(self, frame: pl.DataFrame, seq_first: int, recorded_iso: str) -> dict:
        stats = {"new_persons": 0, "merged": 0, "parked": 0, "ignored": 0, "conflicts": 0}
        if not len(frame):
            return stats
        recorded_epoch = datetime.fromisoformat(recorded_iso).timestamp()
        frame = frame.with_columns(
            pl.Series("pos", np.arange(len(frame), dtype=np.int64)))

        nik = frame["civil_id"].to_numpy()
        f1 = frame["f1"].to_numpy()
        f2 = frame["f2"].to_numpy()
        has_fuzzy = frame["has_fuzzy"].to_numpy()
        has_nik = nik != 0

        nik_unique = unique_mask(nik, np.zeros(len(frame), np.uint64))
        fz_unique = unique_mask(f1, f2)
        nik_in_store = np.zeros(len(frame), dtype=bool)
        if len(self.nik_idx):
            nik_in_store = self.nik_idx.contains_many(nik, np.zeros(len(frame), np.uint64))
        fz_in_store = np.zeros(len(frame), dtype=bool)
        if len(self.fuzzy_idx):
            fz_in_store = self.fuzzy_idx.contains_many(f1, f2) & has_fuzzy

        fuzzy_free = ~has_fuzzy | (fz_unique & ~fz_in_store)
        bulk = (has_nik & nik_unique & ~nik_in_store & fuzzy_free) | (
            ~has_nik & has_fuzzy & fz_unique & ~fz_in_store)

        bulk_frame = frame.filter(pl.Series(bulk))
        rest_frame = frame.filter(pl.Series(~bulk))
        if len(bulk_frame):
            stats["new_persons"] += self._apply_cases_bulk(bulk_frame, seq_first, recorded_epoch)
        if len(rest_frame):
            g = self._apply_cases_general(rest_frame, seq_first, recorded_epoch)
            for k in stats:
                stats[k] += g[k]
        self.content_idx.extend_bulk(
            frame["d1"].to_numpy(), frame["d2"].to_numpy(),
            np.zeros(len(frame), dtype=np.int64))
        return stats

    def _apply_cases_bulk(self, frame: pl.DataFrame, seq_first: int,
                          recorded_epoch: float) -> int:
        """Vectorized lane: every row provably creates a new singleton person."""
        m = len(frame)
        base = len(self.p_nik)
        pos = frame["pos"].to_numpy()
        seqs = seq_first + pos

        nik = frame["civil_id"].to_numpy()
        report = frame["report_ord"].to_numpy()
        dob = frame["dob_ord"].to_numpy()
        sex = frame["sex"].to_numpy()
        cat = frame["category"].to_numpy().astype(np.int8)
        sym = frame["symptom"].to_numpy().astype(np.int8)
        sev = frame["status_event"].to_numpy().astype(np.int64)
        saux = frame["status_aux"].to_numpy().astype(np.int64)
        f1 = frame["f1"].to_numpy()
        f2 = frame["f2"].to_numpy()
        has_fuzzy = frame["has_fuzzy"].to_numpy()
        rid = frame.select(
            pl.col("district").replace_strict(
                {k: str(v) for k, v in self._district_rid.items()}, default="-1")
            .cast(pl.Int16).alias("rid"))["rid"].to_numpy()
        name_series = frame["name_norm"]
        sub_series = frame["subdistrict"]
        source_map = {src: self._source_id(src) for src in frame["source"].unique().to_list()}
        source_ids = frame.select(
            pl.col("source").replace_strict(
                {k: str(v) for k, v in source_map.items()}, default="-1")
            .cast(pl.Int32).alias("sid"))["sid"].to_numpy()

        self.p_nik.extend(nik)
        self.p_name.extend_series(name_series)
        self.p_dob.extend(dob)
        self.p_sex.extend(sex)
        self.p_rid.extend(rid)
        self.p_sub.extend_series(sub_series)
        self.p_first_seen.extend(report)
        self.p_last_upd.extend(np.full(m, recorded_epoch))
        self.p_fuzzy1.extend(np.where(has_fuzzy, f1, 0))
        self.p_fuzzy2.extend(np.where(has_fuzzy, f2, 0))

        prov_masks = {
            "name": (name_series != "").to_numpy(),
            "dob": dob >= 0,
            "sex": sex != int(Sex.UNKNOWN),
            "region": rid != UNKNOWN_RID,
            "subdistrict": (sub_series != "").to_numpy(),
        }
        for fieldname, mask in prov_masks.items():
            ords, srcs = self.prov[fieldname]
            ords.extend(np.where(mask, report, -1).astype(np.int32))
            srcs.extend(np.where(mask, source_ids, -1).astype(np.int32))

        confirmed_mask = cat == int(EpiCategory.CONFIRMED)
        table_key = sev * 4 + saux
        status = np.where(confirmed_mask, _CONF_STATUS[table_key], _NONCONF_STATUS[table_key])
        outcome_mask = confirmed_mask & _CONF_OUTCOME[table_key]
        died_mask = sev == int(EventKind.DIED)
        status = status.astype(np.int8)

        self.s_cat.extend(cat)
        self.s_status.extend(status)
        self.s_sym.extend(sym)
        self.s_confirmed.extend(np.where(confirmed_mask, report, -1).astype(np.int32))
        self.s_outcome.extend(
            np.where(outcome_mask | died_mask, report, -1).astype(np.int32))
        self.s_protocol.extend(np.where(died_mask, saux, 0).astype(np.int8))
        self.s_negcount.extend(np.zeros(m, np.int8))
        self.s_lastneg.extend(np.full(m, -1, np.int32))
        self.s_armed.extend(np.zeros(m, bool))
        self.s_last_ord.extend(report)
        self.s_last_seq.extend(np.where(sev > 0, seqs * 2 + 1, seqs * 2))
        self.s_gen.extend(np.zeros(m, np.uint32))
        self.fc_coll.extend(np.full(m, -1, np.int32))
        self.fc_res.extend(np.full(m, -1, np.int32))
        self.fc_seq.extend(np.full(m, -1, np.int64))
        self.fc_pos.extend(np.full(m, -1, np.int8))

        pidx = base + np.arange(m, dtype=np.int64)
        self.ev_person.extend(pidx)
        self.ev_ord.extend(report)
        self.ev_seq.extend(seqs * 2)
        self.ev_kind.extend(np.full(m, int(EventKind.REPORTED), np.int8))
        self.ev_aux.extend((cat.astype(np.int64) * 4 + sym).astype(np.int8))
        with_status = np.nonzero(sev > 0)[0]
        if len(with_status):
            self.ev_person.extend(pidx[with_status])
            self.ev_ord.extend(report[with_status])
            self.ev_seq.extend(seqs[with_status] * 2 + 1)
            self.ev_kind.extend(sev[with_status].astype(np.int8))
            self.ev_aux.extend(saux[with_status].astype(np.int8))

        self.cb_day.extend(report)
        self.cb_cat.extend(cat)
        self.cb_status.extend(status)
        self.cb_sign.extend(np.ones(m, np.int8))
        self.cb_person.extend(pidx)
        self.cb_gen.extend(np.zeros(m, np.uint32))
        conf_rows = np.nonzero(confirmed_mask)[0]
        if len(conf_rows):
            self.sy_day.extend(report[conf_rows])
            self.sy_sym.extend(sym[conf_rows])
            self.sy_sign.extend(np.ones(len(conf_rows), np.int8))
            self.sy_person.extend(pidx[conf_rows])
            self.sy_gen.extend(np.zeros(len(conf_rows), np.uint32))

        with_nik = np.nonzero(nik != 0)[0]
        if len(with_nik):
            self.nik_idx.extend_bulk(
                nik[with_nik], np.zeros(len(with_nik), np.uint64), pidx[with_nik])
        with_fz = np.nonzero(has_fuzzy)[0]
        if len(with_fz):
            self.fuzzy_idx.extend_bulk(f1[with_fz], f2[with_fz], pidx[with_fz])
        return m

    def _apply_cases_general(self, frame: pl.DataFrame, seq_first: int,
                             recorded_epoch: float) -> dict:
        """Row-at-a-time lane: merges, fuzzy resolution, review parking."""
        stats = {"new_persons": 0, "merged": 0, "parked": 0, "ignored": 0, "conflicts": 0}
        rows = frame.to_dicts()
        niks = [int(r["civil_id"]) for r in rows]
        fuzzy_keys = [
            (int(r["f1"]), int(r["f2"])) if r["has_fuzzy"] else None for r in rows]

        def nik_to_person(nik_value):
            found = self.nik_idx.lookup(nik_value, 0)
            return found[0] if found else None

        def fuzzy_to_persons(key):
            return self.fuzzy_idx.lookup(key[0], key[1])

        def person_has_nik(pidx):
            return int(self.p_nik[pidx]) != 0

        def adoption_blocked(nik_value, pidx):
            return pidx in self.unlink_blocks.get(nik_value, ())

        link = linkage.resolve_batch(niks, fuzzy_keys, nik_to_person,
                                     fuzzy_to_persons, person_has_nik,
                                     adoption_blocked)

        group_pidx: list[int] = []
        for group_rows, existing in zip(link.groups, link.group_person):
            grouped = [rows[i] for i in group_rows]
            if existing is None:
                pidx, outcome = self._create_person_from_rows(grouped, recorded_epoch)
                stats["new_persons"] += 1
                stats["merged"] += len(grouped) - 1
            else:
                pidx = existing
                outcome = self._merge_rows_into(pidx, grouped, recorded_epoch)
                stats["merged"] += len(grouped)
            stats["conflicts"] += len(outcome.conflicts)
            group_pidx.append(pidx)
            events = _rows_to_events(grouped, seq_first)
            stats["ignored"] += self._apply_person_events(pidx, events)

        for row_pos, candidates in link.parked.items():
            row = rows[row_pos]
            cand_pidx = sorted({
                group_pidx[node[1]] if node[0] == "g" else node[1]
                for node in candidates})
            queue_id = int(seq_first + row["pos"])
            self.review_queue[queue_id] = ParkedEvent(
                queue_id=queue_id, kind="case", row=row, candidates=cand_pidx)
            stats["parked"] += 1
        return stats

    def _create_person_from_rows(self, grouped: list[dict],
                                 recorded_epoch: float) -> tuple[int, linkage.MergeOutcome]:
        first = min(grouped, key=lambda r: (r["report_ord"], r["source"], r["d1"]))
        pidx = self._new_person(
            nik=0, name="", dob=-1, sex=int(Sex.UNKNOWN), rid=UNKNOWN_RID, sub="",
            first_seen=int(first["report_ord"]), recorded_epoch=recorded_epoch,
            fuzzy=None)
        outcome = self._merge_rows_into(pidx, grouped, recorded_epoch, created_new=True)
        return pidx, outcome

    def _merge_rows_into(self, pidx: int, grouped: list[dict],
                         recorded_epoch: float,
                         created_new: bool = False) -> linkage.MergeOutcome:
        """Field-precedence merge of rows into a person (see linkage.pick_value)."""
        conflict_rows: list[tuple[str, str, str, str]] = []
        fields_updated: list[str] = []

        nik_values = {int(r["civil_id"]) for r in grouped if r["civil_id"]}
        if nik_values:
            new_nik = next(iter(nik_values))
            current = int(self.p_nik[pidx])
            if current == 0:
                self.p_nik[pidx] = new_nik
                self.nik_idx.add(new_nik, 0, pidx)

        field_values = {
            "name": lambda r: r["name_norm"] or None,
            "dob": lambda r: r["dob_ord"] if r["dob_ord"] >= 0 else None,
            "sex": lambda r: r["sex"] if r["sex"] != int(Sex.UNKNOWN) else None,
            "region": lambda r: (r["city"], r["district"]) if r["district"] != "UNKNOWN" else None,
            "subdistrict": lambda r: r["subdistrict"] or None,
        }
        current_values = {
            "name": self.p_name[pidx] or None,
            "dob": int(self.p_dob[pidx]) if self.p_dob[pidx] >= 0 else None,
            "sex": int(self.p_sex[pidx]) if self.p_sex[pidx] != int(Sex.UNKNOWN) else None,
            "region": (
                (self.region_table.districts[self._districts[self.p_rid[pidx]]][0],
                 self._districts[self.p_rid[pidx]])
                if self.p_rid[pidx] != UNKNOWN_RID else None),
            "subdistrict": self.p_sub[pidx] or None,
        }
        changed_fuzzy = False
        for fieldname, getter in field_values.items():
            ords, srcs = self.prov[fieldname]
            candidates = []
            if current_values[fieldname] is not None:
                src_id = int(srcs[pidx])
                src_name = self._source_names[src_id] if src_id >= 0 else ""
                candidates.append((current_values[fieldname], int(ords[pidx]), src_name))
            for r in grouped:
                value = getter(r)
                if value is not None:
                    candidates.append((value, int(r["report_ord"]), r["source"]))
            winner, losers = linkage.pick_value(candidates)
            if winner is None:
                continue
            for value, _, _ in losers:
                conflict_rows.append(
                    (person_key(pidx), fieldname, str(winner), str(value)))
            if winner != current_values[fieldname]:
                fields_updated.append(fieldname)
                if fieldname == "name":
                    self.p_name[pidx] = winner
                    changed_fuzzy = True
                elif fieldname == "dob":
                    self.p_dob[pidx] = winner
                    changed_fuzzy = True
                elif fieldname == "sex":
                    self.p_sex[pidx] = winner
                    changed_fuzzy = True
                elif fieldname == "region":
                    self.p_rid[pidx] = self._rid_of(winner[1])
                elif fieldname == "subdistrict":
                    self.p_sub[pidx] = winner
            # provenance advances to the winning candidate
            best = max(candidates, key=lambda c: (c[1], c[2], str(c[0])))
            ords[pidx] = best[1]
            srcs[pidx] = self._source_id(best[2]) if best[2] else -1
        first_seen = min(int(r["report_ord"]) for r in grouped)
        if first_seen < int(self.p_first_seen[pidx]):
            self.p_first_seen[pidx] = first_seen
        self.p_last_upd[pidx] = recorded_epoch
        if changed_fuzzy:
            self._rebind_fuzzy(pidx)
        if conflict_rows:
            self._append_conflicts(conflict_rows)
        return linkage.MergeOutcome(
            person_key=person_key(pidx),
            created_new=created_new,
            fields_updated=tuple(fields_updated),
            conflicts=tuple((f, kept, discarded) for _, f, kept, discarded in conflict_rows),
        )

    def _rebind_fuzzy(self, pidx: int) -> None:
        old = (int(self.p_fuzzy1[pidx]), int(self.p_fuzzy2[pidx]))
        name = self.p_name[pidx]
        dob = int(self.p_dob[pidx])
        sex = int(self.p_sex[pidx])
        if name and dob >= 0 and sex != int(Sex.UNKNOWN):
            new = fuzzy_hash(name, dob, sex)
        else:
            new = (0, 0)
        if new == old:
            return
        if old != (0, 0):
            self.fuzzy_idx.remove(old[0], old[1], pidx)
        if new != (0, 0):
            self.fuzzy_idx.add(new[0], new[1], pidx)
        self.p_fuzzy1[pidx] = new[0]
        self.p_fuzzy2[pidx] = new[1]

    # ------------------------------------------------------------------
    # specimen ingestion

    def ingest_specimens(self, payload: bytes, source: str, source_file: str = "",
                         recorded_at: datetime | None = None) -> IngestReport:
        with self.lock:
            recorded_at = recorded_at or self._now()
            recorded_iso = recorded_at.isoformat()
            digest = self._batch_digest(payload, "specimens", source)
            if digest in self.batch_digests:
                total = self.batch_digests[digest]
                return IngestReport(kind="specimens", total=total, accepted=total,
                                    duplicates=total, watermark=self.seq)
            vb = ingest.parse_specimen_batch(
                payload, self.config.aliases, recorded_at, default_lab=source)
            report = IngestReport(kind="specimens", total=vb.total_rows, warnings=vb.warnings)
            rejects = list(vb.rejects)
            frame = vb.frame
            if len(frame):
                dup = self.sid_idx.contains_many(
                    frame["s1"].to_numpy(), frame["s2"].to_numpy())
                if dup.any():
                    for line in frame.filter(pl.Series(dup))["line"]:
                        rejects.append(ingest.Reject(int(line), "specimen_id", "DuplicateSpecimen"))
                    frame = frame.filter(pl.Series(~dup))
            report.rejected = len(rejects)
            report.rejects = [
                {"line": r.line, "field": r.field, "rule": r.rule} for r in rejects]
            self._append_rejects(rejects, source_file)

            payload_bytes = _frame_to_parquet(frame)
            seq_first = self._log_frame(
                "specimens", len(frame), vb.total_rows, source, source_file,
                recorded_iso, digest, payload_bytes, ".parquet")
            stats = self._apply_specimens(frame, seq_first, recorded_iso)
            report.accepted = vb.total_rows - report.rejected
            report.new_persons = stats["new_persons"]
            report.merged_into_existing = stats["merged"]
            report.ignored_after_terminal = stats["ignored"]
            report.watermark = self.seq
            return report

    def _apply_specimens(self, frame: pl.DataFrame, seq_first: int, recorded_iso: str) -> dict:
        stats = {"new_persons": 0, "merged": 0, "parked": 0, "ignored": 0, "conflicts": 0}
        if not len(frame):
            return stats
        recorded_epoch = datetime.fromisoformat(recorded_iso).timestamp()
        frame = frame.with_columns(pl.Series("pos", np.arange(len(frame), dtype=np.int64)))
        self.sid_idx.extend_bulk(
            frame["s1"].to_numpy(), frame["s2"].to_numpy(),
            np.zeros(len(frame), np.int64))

        nik = frame["civil_id"].to_numpy()
        nik_unique = unique_mask(nik, np.zeros(len(frame), np.uint64))
        nik_in_store = np.zeros(len(frame), dtype=bool)
        if len(self.nik_idx):
            nik_in_store = self.nik_idx.contains_many(nik, np.zeros(len(frame), np.uint64))
        bulk = nik_unique & ~nik_in_store

        bulk_frame = frame.filter(pl.Series(bulk))
        rest_frame = frame.filter(pl.Series(~bulk))
        if len(bulk_frame):
            stats["new_persons"] += self._apply_specimens_bulk(
                bulk_frame, seq_first, recorded_epoch)
        if len(rest_frame):
            g = self._apply_specimens_general(rest_frame, seq_first, recorded_epoch)
            for k in stats:
                stats[k] += g[k]
        return stats

    def _apply_specimens_bulk(self, frame: pl.DataFrame, seq_first: int,
                              recorded_epoch: float) -> int:
        m = len(frame)
        base = len(self.p_nik)
        pos = frame["pos"].to_numpy()
        seqs = seq_first + pos
        nik = frame["civil_id"].to_numpy()
        coll = frame["collection_ord"].to_numpy()
        res = frame["result_ord"].to_numpy()
        result = frame["result"].to_numpy()

        empty = pl.Series([""] * m, dtype=pl.Utf8)
        self.p_name.extend_series(empty)
        self.p_sub.extend_series(empty)
        self.p_nik.extend(nik)
        self.p_dob.extend(np.full(m, -1, np.int32))
        self.p_sex.extend(np.full(m, int(Sex.UNKNOWN), np.int8))
        self.p_rid.extend(np.full(m, UNKNOWN_RID, np.int16))
        self.p_first_seen.extend(coll)
        self.p_last_upd.extend(np.full(m, recorded_epoch))
        self.p_fuzzy1.extend(np.zeros(m, np.uint64))
        self.p_fuzzy2.extend(np.zeros(m, np.uint64))
        for fieldname, (ords, srcs) in self.prov.items():
            ords.extend(np.full(m, -1, np.int32))
            srcs.extend(np.full(m, -1, np.int32))

        pidx = base + np.arange(m, dtype=np.int64)
        positive = result == 1
        negative = result == 2
        conclusive = positive | negative

        cat = np.where(positive, int(EpiCategory.CONFIRMED),
                       np.where(negative, int(EpiCategory.SUSPECT), 0)).astype(np.int8)
        status = np.where(positive, int(CaseStatus.SELF_ISOLATION),
                          np.where(negative, int(CaseStatus.HOME_ISOLATION), 0)).astype(np.int8)
        self.s_cat.extend(cat)
        self.s_status.extend(status)
        self.s_sym.extend(np.zeros(m, np.int8))
        self.s_confirmed.extend(np.where(positive, res, -1).astype(np.int32))
        self.s_outcome.extend(np.full(m, -1, np.int32))
        self.s_protocol.extend(np.zeros(m, np.int8))
        self.s_negcount.extend(np.where(negative, 1, 0).astype(np.int8))
        self.s_lastneg.extend(np.where(negative, res, -1).astype(np.int32))
        self.s_armed.extend(negative)
        self.s_last_ord.extend(np.where(conclusive, res, -1).astype(np.int32))
        self.s_last_seq.extend(np.where(conclusive, seqs * 2, -1))
        self.s_gen.extend(np.zeros(m, np.uint32))

        concl_rows = np.nonzero(conclusive)[0]
        if len(concl_rows):
            self.ev_person.extend(pidx[concl_rows])
            self.ev_ord.extend(res[concl_rows])
            self.ev_seq.extend(seqs[concl_rows] * 2)
            self.ev_kind.extend(np.where(positive[concl_rows],
                                         int(EventKind.SPECIMEN_POSITIVE),
                                         int(EventKind.SPECIMEN_NEGATIVE)).astype(np.int8))
            self.ev_aux.extend(np.zeros(len(concl_rows), np.int8))

            self.cb_day.extend(res[concl_rows])
            self.cb_cat.extend(cat[concl_rows])
            self.cb_status.extend(status[concl_rows])
            self.cb_sign.extend(np.ones(len(concl_rows), np.int8))
            self.cb_person.extend(pidx[concl_rows])
            self.cb_gen.extend(np.zeros(len(concl_rows), np.uint32))
            # a lone negative schedules its discard promotion
            neg_rows = np.nonzero(negative)[0]
            if len(neg_rows):
                fire = res[neg_rows] + self.rules.window_days
                self.cb_day.extend(fire)
                self.cb_cat.extend(cat[neg_rows])
                self.cb_status.extend(status[neg_rows])
                self.cb_sign.extend(np.full(len(neg_rows), -1, np.int8))
                self.cb_person.extend(pidx[neg_rows])
                self.cb_gen.extend(np.zeros(len(neg_rows), np.uint32))
                self.cb_day.extend(fire)
                self.cb_cat.extend(np.full(len(neg_rows), int(EpiCategory.DISCARDED), np.int8))
                self.cb_status.extend(
                    np.full(len(neg_rows), int(CaseStatus.FINISHED_ISOLATION), np.int8))
                self.cb_sign.extend(np.ones(len(neg_rows), np.int8))
                self.cb_person.extend(pidx[neg_rows])
                self.cb_gen.extend(np.zeros(len(neg_rows), np.uint32))
            pos_rows = np.nonzero(positive)[0]
            if len(pos_rows):
                self.sy_day.extend(res[pos_rows])
                self.sy_sym.extend(np.zeros(len(pos_rows), np.int8))
                self.sy_sign.extend(np.ones(len(pos_rows), np.int8))
                self.sy_person.extend(pidx[pos_rows])
                self.sy_gen.extend(np.zeros(len(pos_rows), np.uint32))

            self.sp_person.extend(pidx[concl_rows])
            self.sp_coll.extend(coll[concl_rows])
            self.sp_res.extend(res[concl_rows])
            self.sp_pos.extend(positive[concl_rows])

        self.fc_coll.extend(np.where(conclusive, coll, -1).astype(np.int32))
        self.fc_res.extend(np.where(conclusive, res, -1).astype(np.int32))
        self.fc_seq.extend(np.where(conclusive, seqs, -1))
        self.fc_pos.extend(np.where(positive, 1, np.where(negative, 0, -1)).astype(np.int8))

        self.nik_idx.extend_bulk(nik, np.zeros(m, np.uint64), pidx)
        return m

    def _apply_specimens_general(self, frame: pl.DataFrame, seq_first: int,
                                 recorded_epoch: float) -> dict:
        stats = {"new_persons": 0, "merged": 0, "parked": 0, "ignored": 0, "conflicts": 0}
        for row in frame.to_dicts():
            nik = int(row["civil_id"])
            seq = seq_first + int(row["pos"])
            found = self.nik_idx.lookup(nik, 0)
            if found:
                pidx = found[0]
                stats["merged"] += 1
                self.p_last_upd[pidx] = recorded_epoch
            else:
                pidx = self._new_person(
                    nik=nik, name="", dob=-1, sex=int(Sex.UNKNOWN), rid=UNKNOWN_RID,
                    sub="", first_seen=int(row["collection_ord"]),
                    recorded_epoch=recorded_epoch, fuzzy=None)
                stats["new_persons"] += 1
            result = int(row["result"])
            if result == 3:
                continue  # inconclusive: logged, no state effect
            positive = result == 1
            self.sp_person.append(pidx)
            self.sp_coll.append(int(row["collection_ord"]))
            self.sp_res.append(int(row["result_ord"]))
            self.sp_pos.append(positive)
            candidate = (int(row["collection_ord"]), int(row["result_ord"]), seq)
            if self.fc_coll[pidx] < 0 or candidate < (
                    int(self.fc_coll[pidx]), int(self.fc_res[pidx]), int(self.fc_seq[pidx])):
                self.fc_coll[pidx], self.fc_res[pidx], self.fc_seq[pidx] = candidate
                self.fc_pos[pidx] = 1 if positive else 0
            kind = EventKind.SPECIMEN_POSITIVE if positive else EventKind.SPECIMEN_NEGATIVE
            stats["ignored"] += self._apply_person_events(
                pidx, [(int(row["result_ord"]), seq * 2, int(kind), 0)])
        return stats

    # ------------------------------------------------------------------
    # national + beds + admin

    def ingest_national(self, payload: bytes, source: str, source_file: str = "",
                        recorded_at: datetime | None = None) -> IngestReport:
        with self.lock:
            recorded_at = recorded_at or self._now()
            recorded_iso = recorded_at.isoformat()
            digest = self._batch_digest(payload, "national", source)
            if digest in self.batch_digests:
                total = self.batch_digests[digest]
                return IngestReport(kind="national", total=total, accepted=total,
                                    duplicates=total, watermark=self.seq)
            vb = ingest.parse_national_batch(payload, recorded_at)
            report = IngestReport(kind="national", total=vb.total_rows, warnings=vb.warnings)
            report.rejected = len(vb.rejects)
            report.rejects = [
                {"line": r.line, "field": r.field, "rule": r.rule} for r in vb.rejects]
            self._append_rejects(vb.rejects, source_file)
            payload_bytes = _frame_to_parquet(vb.frame)
            self._log_frame("national", len(vb.frame), vb.total_rows, source, source_file,
                            recorded_iso, digest, payload_bytes, ".parquet")
            self._apply_national(vb.frame)
            report.accepted = vb.total_rows - report.rejected
            report.watermark = self.seq
            return report

    def _apply_national(self, frame: pl.DataFrame) -> None:
        for row in frame.iter_rows(named=True):
            self.national[int(row["date_ord"])] = (
                int(row["confirmed"]), int(row["active"]),
                int(row["recovered"]), int(row["dead"]))

    def submit_bed_report(self, report: BedReport, authorized_for: str = "*",
                          recorded_at: datetime | None = None) -> str:
        """Validate, log, and apply one bed report (last-write-wins)."""
        with self.lock:
            recorded_at = recorded_at or self._now()
            self.beds.validate(report, authorized_for)
            payload = {
                "hospital": report.hospital, "ward": int(report.ward),
                "total": report.total_beds, "occupied": report.occupied_beds,
                "reported_at": report.reported_at.isoformat(),
                "reporter": report.reporter,
            }
            body = json.dumps([payload]).encode()
            digest = self._batch_digest(body, "beds", report.reporter)
            self._log_frame("beds", 1, 1, report.reporter, "", recorded_at.isoformat(),
                            digest, body, ".beds")
            try:
                return self.beds.submit(report, authorized_for)
            finally:
                self._agg_cache.clear()

    def ingest_bed_csv(self, payload: bytes, reporter: str, source_file: str = "",
                       recorded_at: datetime | None = None) -> IngestReport:
        with self.lock:
            recorded_at = recorded_at or self._now()
            reports, rejects = parse_bed_csv(payload, default_reporter=reporter)
            report = IngestReport(kind="beds", total=len(reports) + len(rejects))
            valid = []
            for r in reports:
                try:
                    self.beds.validate(r, "*")
                    valid.append(r)
                except Exception as exc:
                    rejects.append((0, "hospital", type(exc).__name__))
            report.rejected = len(rejects)
            report.rejects = [
                {"line": line, "field": f, "rule": rule} for line, f, rule in rejects]
            body = json.dumps([
                {"hospital": r.hospital, "ward": int(r.ward), "total": r.total_beds,
                 "occupied": r.occupied_beds, "reported_at": r.reported_at.isoformat(),
                 "reporter": r.reporter}
                for r in valid]).encode()
            digest = self._batch_digest(body, "beds", reporter)
            if digest in self.batch_digests:
                total = self.batch_digests[digest]
                return IngestReport(kind="beds", total=total, accepted=total,
                                    duplicates=total, watermark=self.seq)
            self._log_frame("beds", len(valid), len(valid), reporter, source_file,
                            recorded_at.isoformat(), digest, body, ".beds")
            applied = self._apply_beds(json.loads(body))
            report.accepted = report.total - report.rejected
            report.duplicates = len(valid) - applied
            report.watermark = self.seq
            return report

    def _apply_beds(self, payloads: list[dict]) -> int:
        applied = 0
        for p in payloads:
            r = BedReport(
                hospital=p["hospital"], ward=WardType(p["ward"]),
                total_beds=int(p["total"]), occupied_beds=int(p["occupied"]),
                reported_at=datetime.fromisoformat(p["reported_at"]),
                reporter=p["reporter"])
            try:
                self.beds.submit(r, "*")
                applied += 1
            except Exception:
                pass  # superseded on replay is expected; audit keeps it
        return applied

    # -- admin ----------------------------------------------------------

    def resolve_parked(self, queue_id: int, target: str,
                       recorded_at: datetime | None = None) -> dict:
        """Resolve one review-queue entry onto a person key or "new"."""
        with self.lock:
            if queue_id not in self.review_queue or self.review_queue[queue_id].resolved:
                raise KeyError(f"no unresolved review item {queue_id}")
            if target != "new":
                parse_person_key(target)
            recorded_at = recorded_at or self._now()
            body = json.dumps({"action": "resolve", "queue_id": queue_id,
                               "target": target}).encode()
            digest = self._batch_digest(body, "admin", "admin")
            self._log_frame("admin", 1, 1, "admin", "", recorded_at.isoformat(),
                            digest, body, ".admin")
            self._apply_admin(json.loads(body), self.seq)
            return {"queue_id": queue_id, "target": target}

    def admin_unlink(self, person: str, recorded_at: datetime | None = None) -> dict:
        """Detach a person's civil id so future submissions with that id
        open a fresh record; history is never split retroactively."""
        with self.lock:
            pidx = parse_person_key(person)
            if pidx >= len(self.p_nik):
                raise KeyError(f"unknown person {person}")
            recorded_at = recorded_at or self._now()
            body = json.dumps({"action": "unlink", "person": person}).encode()
            digest = self._batch_digest(body, "admin", "admin")
            self._log_frame("admin", 1, 1, "admin", "", recorded_at.isoformat(),
                            digest, body, ".admin")
            self._apply_admin(json.loads(body), self.seq)
            return {"person": person, "unlinked": True}

    def _apply_admin(self, body: dict, seq: int) -> None:
        if body["action"] == "unlink":
            pidx = parse_person_key(body["person"])
            nik = int(self.p_nik[pidx])
            if nik:
                self.nik_idx.remove(nik, 0, pidx)
                self.p_nik[pidx] = 0
                self.unlink_blocks.setdefault(nik, set()).add(pidx)
        elif body["action"] == "resolve":
            entry = self.review_queue.get(int(body["queue_id"]))
            if entry is None or entry.resolved:
                return
            row = entry.row
            recorded_epoch = 0.0
            if body["target"] == "new":
                pidx, _ = self._create_person_from_rows([row], recorded_epoch)
            else:
                pidx = parse_person_key(body["target"])
                self._merge_rows_into(pidx, [row], recorded_epoch)
            events = _rows_to_events([row], 0)
            events = [(d, int(entry.queue_id) * 2 + i, k, a)
                      for i, (d, _s, k, a) in enumerate(events)]
            self._apply_person_events(pidx, events)
            entry.resolved = True
            entry.resolution = body["target"]
        else:
            raise StorageCorrupt(seq, f"unknown admin action {body['action']}")

    def review_queue_rows(self) -> list[dict]:
        out = []
        for queue_id in sorted(self.review_queue):
            e = self.review_queue[queue_id]
            if e.resolved:
                continue
            row = e.row
            out.append({
                "queue_id": queue_id,
                "event_digest": f"{int(row['d1']):016x}{int(row['d2']):016x}",
                "name": row["name_norm"],
                "dob": _ord_iso(row["dob_ord"]),
                "sex": Sex(int(row["sex"])).name.lower(),
                "report_date": _ord_iso(row["report_ord"]),
                "candidates": [person_key(p) for p in e.candidates],
            })
        return out

    # ------------------------------------------------------------------
    # verification audit

    def verify(self, sample: int = 2000) -> list[str]:
        """Invariant audit; returns violations (empty = healthy)."""
        with self.lock:
            problems: list[str] = []
            n = len(self.p_nik)
            niks = self.p_nik.view
            nonzero = niks[niks != 0]
            if len(nonzero) != len(np.unique(nonzero)):
                problems.append("one-person-per-civil-id violated")

            # delta conservation: everyone with events sits in exactly one bucket
            live = self.cb_gen.view == self.s_gen.view[self.cb_person.view]
            net = np.zeros(n, dtype=np.int64)
            np.add.at(net, self.cb_person.view[live], self.cb_sign.view[live])
            has_state = self.s_cat.view > 0
            if not np.array_equal(net != 0, has_state):
                problems.append("bucket-delta conservation violated")
            if np.any((net != 0) & (net != 1)):
                problems.append("person occupies more than one bucket")

            # replay determinism on a deterministic sample of persons
            if n:
                rng = np.random.default_rng(20210325)
                picks = rng.choice(n, size=min(sample, n), replace=False)
                for pidx in picks:
                    events = self._person_events(int(pidx))
                    if not events:
                        continue
                    folded = fold_events(events, self.rules).state
                    if folded != self._state_of(int(pidx)):
                        problems.append(f"replay mismatch for {person_key(int(pidx))}")
                        break

            for (hospital, ward), report in self.beds._latest.items():
                if not (0 <= report.occupied_beds <= report.total_beds):
                    problems.append(f"bed invariant violated at {hospital}/{ward}")

            from . import aggregate
            try:
                aggregate.audit_identities(self)
            except AssertionError as exc:
                problems.append(f"accounting identity violated: {exc}")
            return problems

    # ------------------------------------------------------------------
    # read-side helpers

    @property
    def watermark(self) -> int:
        return self.seq

    def person_count(self) -> int:
        return len(self.p_nik)

    def person_detail(self, pidx: int) -> dict:
        nik = int(self.p_nik[pidx])
        rid = int(self.p_rid[pidx])
        return {
            "person_key": person_key(pidx),
            "civil_id_digest": (
                civil_id_pseudonym(str(nik).zfill(16), self.config.digest_key) if nik else None),
            "name_normalized": self.p_name[pidx],
            "date_of_birth": _ord_iso(int(self.p_dob[pidx])),
            "sex": Sex(int(self.p_sex[pidx])).name.lower(),
            "city": self.region_table.districts[self._districts[rid]][0] if rid >= 0 else "UNKNOWN",
            "district": self._districts[rid] if rid >= 0 else "UNKNOWN",
            "first_seen": _ord_iso(int(self.p_first_seen[pidx])),
        }


def _ord_iso(ordinal: int) -> str | None:
    return date.fromordinal(int(ordinal)).isoformat() if ordinal and ordinal > 0 else None


def fuzzy_hash(name_norm: str, dob_ord: int, sex: int) -> tuple[int, int]:
    """Must match the vectorized fuzzy-key hash in ingest."""
    blob = f"{name_norm}\x1f{dob_ord}\x1f{sex}"
    s = pl.Series([blob])
    return int(s.hash(seed=ingest.FUZZY_SEEDS[0])[0]), int(s.hash(seed=ingest.FUZZY_SEEDS[1])[0])


def _rows_to_events(grouped: list[dict], seq_first: int) -> list[tuple[int, int, int, int]]:
    """Expand canonical case rows into packed events, ordered (date, seq)."""
    events = []
    for r in grouped:
        seq = (seq_first + int(r["pos"])) * 2
        report = int(r["report_ord"])
        events.append((report, seq,
                       int(EventKind.REPORTED),
                       int(r["category"]) * 4 + int(r["symptom"])))
        if int(r["status_event"]):
            events.append((report, seq + 1, int(r["status_event"]), int(r["status_aux"])))
    events.sort(key=lambda e: (e[0], e[1]))
    return events


def _frame_to_parquet(frame: pl.DataFrame) -> bytes:
    import io

    buf = io.BytesIO()
    frame.write_parquet(buf)
    return buf.getvalue()
