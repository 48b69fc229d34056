"""Facility-feed parsing and validation.

Batches are delimited text (UTF-8, comma separated, RFC-4180 quoting, header
row in any column order). Validation is batch-tolerant: a bad line becomes a
rejection carrying its line number, it never aborts the batch. Only a
missing header or a missing mandatory column is fatal.

Validation runs vectorized (polars) and yields a canonical event frame; the
same canonical frame is what the event log persists, so replay skips
re-validation.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from datetime import date, datetime

import numpy as np
import polars as pl

from .casestate import EventKind
from .errors import MissingHeader, MissingMandatoryColumn
from .model import (
    DeathProtocol,
    EpiCategory,
    HONORIFICS,
    Sex,
    SymptomStatus,
    normalize_name,
)
from .regions import RegionTable

CASE_COLUMNS = (
    "civil_id", "name", "dob", "sex", "city", "district", "subdistrict",
    "report_date", "category", "symptom_status", "status", "death_protocol",
    "source_facility",
)
SPECIMEN_COLUMNS = ("specimen_id", "civil_id", "collection_date", "result_date", "result", "lab")
NATIONAL_COLUMNS = ("date", "confirmed", "active", "recovered", "dead")

# Hash seeds for the content digest, fuzzy key, and specimen id spaces.
DIGEST_SEEDS = (0x5EED0001, 0x5EED0002)
FUZZY_SEEDS = (0x5EED0007, 0x5EED0008)
SPECIMEN_SEEDS = (0x5EED000B, 0x5EED000C)

RESULT_CODES = {"positive": 1, "negative": 2, "inconclusive": 3}

# status label -> (event kind, aux); DIED aux comes from death_protocol
STATUS_EVENTS = {
    "finished_isolation": (int(EventKind.ISOLATION_END), 0),
    "home_isolation": (int(EventKind.ISOLATION_START), 1),
    "self_isolation": (int(EventKind.ISOLATION_START), 1),
    "hospital_isolation": (int(EventKind.ISOLATION_START), 2),
    "hospitalized": (int(EventKind.ADMITTED), 0),
    "recovered": (int(EventKind.RECOVERED), 0),
    "dead": (int(EventKind.DIED), 0),
}

_NAME_CANONICAL_RE = r"^[A-Z0-9]+( [A-Z0-9]+)*$"
_NAME_HONORIFIC_RE = r"\b(" + "|".join(sorted(HONORIFICS)) + r")\b"


@dataclass(frozen=True)
class Reject:
    line: int
    field: str
    rule: str


@dataclass
class ValidatedBatch:
    kind: str
    frame: pl.DataFrame          # canonical event columns, accepted rows only
    rejects: list[Reject]
    warnings: list[str] = field(default_factory=list)
    total_rows: int = 0


def _read_delimited(payload: bytes, expected: tuple[str, ...], mandatory: tuple[str, ...]):
    """Read a feed into an all-utf8 frame with canonical column names and a
    1-based physical line column (header is line 1)."""
    rejects: list[Reject] = []
    warnings: list[str] = []
    if not payload.strip():
        raise MissingHeader("empty payload")
    try:
        df = pl.read_csv(io.BytesIO(payload), infer_schema_length=0, row_index_name="__row")
    except Exception:
        df, ragged = _read_delimited_fallback(payload)
        rejects.extend(ragged)
    if df.width == 0:
        raise MissingHeader("no columns found")
    rename = {}
    for col in df.columns:
        if col == "__row":
            continue
        canon = col.strip().lower().replace(" ", "_")
        if canon in expected and canon not in rename.values():
            rename[col] = canon
        else:
            warnings.append(f"unknown column ignored: {col.strip()}")
    df = df.rename(rename)
    missing_mandatory = [c for c in mandatory if c not in df.columns]
    if missing_mandatory:
        raise MissingMandatoryColumn(missing_mandatory)
    for col in expected:
        if col not in df.columns:
            df = df.with_columns(pl.lit(None, dtype=pl.Utf8).alias(col))
    df = df.with_columns((pl.col("__row").cast(pl.Int64) + 2).alias("line")).drop("__row")
    return df, rejects, warnings


def _read_delimited_fallback(payload: bytes):
    """Line-tolerant parse for structurally broken files."""
    import csv

    text = payload.decode("utf-8", errors="replace")
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise MissingHeader("empty payload") from None
    rows = []
    rejects = []
    width = len(header)
    for i, row in enumerate(reader):
        if not row:
            continue
        if len(row) != width:
            rejects.append(Reject(line=i + 2, field="", rule="RaggedRow"))
            continue
        rows.append(row)
    data = {h: [r[j] for r in rows] for j, h in enumerate(header)}
    df = pl.DataFrame(data, schema={h: pl.Utf8 for h in header})
    df = df.with_columns(pl.Series("__row", np.arange(len(df), dtype=np.int64)))
    return df, rejects


def _clean(col: str) -> pl.Expr:
    return (
        pl.col(col).fill_null("").str.strip_chars()
        .str.to_lowercase().str.replace_all(r"\s+", " ")
    )


def _alias(col: str, table: dict[str, str], codes: dict[str, int]) -> pl.Expr:
    mapping = {k: str(codes[v]) for k, v in table.items() if v in codes}
    return _clean(col).replace_strict(mapping, default=None).cast(pl.Int8)


def _date_ord(col: str) -> pl.Expr:
    return pl.col(col).fill_null("").str.strip_chars().str.to_date("%Y-%m-%d", strict=False)


def _hash_pair(expr: pl.Expr, seeds: tuple[int, int]) -> tuple[pl.Expr, pl.Expr]:
    return expr.hash(seed=seeds[0]).alias("__h1"), expr.hash(seed=seeds[1]).alias("__h2")


_EPOCH_1970 = date(1970, 1, 1).toordinal()


def _to_ordinals(series: pl.Series) -> np.ndarray:
    """polars Date series -> proleptic ordinals, -1 for null."""
    days = series.cast(pl.Int32, strict=False).fill_null(-10 ** 8).to_numpy()
    out = days + _EPOCH_1970
    out[days == -10 ** 8] = -1
    return out.astype(np.int32)


def _normalize_names(df: pl.DataFrame) -> pl.DataFrame:
    """Canonical name column; python normalization only off the fast screen."""
    df = df.with_columns(
        pl.col("name").fill_null("").str.strip_chars().alias("__rawname")
    ).with_columns(
        (
            pl.col("__rawname").str.contains(_NAME_CANONICAL_RE)
            & ~pl.col("__rawname").str.contains(_NAME_HONORIFIC_RE)
        ).alias("__canonical")
    )
    needs_python = (
        (~df["__canonical"].fill_null(False)).to_numpy()
        & (df["__rawname"] != "").to_numpy())
    if not needs_python.any():
        return df.with_columns(pl.col("__rawname").alias("name_norm")).drop(
            "__rawname", "__canonical")
    name_norm = df["__rawname"].to_numpy().astype(object)
    for i in np.nonzero(needs_python)[0]:
        try:
            name_norm[i] = normalize_name(str(name_norm[i]))
        except Exception:
            name_norm[i] = ""
    return df.with_columns(pl.Series("name_norm", name_norm, dtype=pl.Utf8)).drop(
        "__rawname", "__canonical")


def parse_case_batch(
    payload: bytes,
    aliases: dict[str, dict[str, str]],
    region_table: RegionTable,
    clock: datetime,
    default_source: str,
    mandatory: tuple[str, ...] = ("report_date", "category", "city", "district"),
) -> ValidatedBatch:
    """Parse + validate a case feed into the canonical case-event frame.

    Canonical columns: line, civil_id (u64, 0=absent), name_norm, dob_ord,
    sex, city, district, subdistrict, report_ord, category, symptom,
    status_event, status_aux, source, d1, d2, f1, f2, has_fuzzy.
    """
    identity_cols = ("civil_id", "name", "dob", "sex")
    df, rejects, warnings = _read_delimited(payload, CASE_COLUMNS, mandatory)
    if "civil_id" not in df.columns and not all(c in df.columns for c in identity_cols[1:]):
        raise MissingMandatoryColumn(["civil_id (or name+dob+sex)"])
    total = len(df) + len(rejects)
    if df.is_empty():
        return ValidatedBatch("cases", _empty_case_frame(), rejects, warnings, total)

    clock_ord = clock.date().toordinal()
    cat_codes = {c.name.lower(): int(c) for c in EpiCategory}
    sex_codes = {s.name.lower(): int(s) for s in Sex}
    sym_codes = {s.name.lower(): int(s) for s in SymptomStatus}
    proto_codes = {p.name.lower(): int(p) for p in DeathProtocol}
    status_names = {name: i for i, name in enumerate(sorted(STATUS_EVENTS))}

    city_map = {}
    for code, cname in region_table.cities.items():
        city_map[code.lower()] = code
        city_map[cname.lower()] = code
    district_map = {}
    district_city = {}
    for code, (city_code, dname) in region_table.districts.items():
        district_map[code.lower()] = code
        district_map[dname.lower()] = code
        district_city[code] = city_code

    df = _normalize_names(df)
    df = df.with_columns(
        pl.col("civil_id").fill_null("").str.strip_chars().alias("__nik"),
        _date_ord("dob").alias("__dob"),
        _date_ord("report_date").alias("__report"),
        _alias("sex", aliases.get("sex", {}), sex_codes).alias("__sex"),
        _alias("category", aliases.get("category", {}), cat_codes).alias("__cat"),
        _alias("symptom_status", aliases.get("symptom", {}), sym_codes).alias("__sym"),
        _clean("status").replace_strict(
            {k: str(status_names[v]) for k, v in aliases.get("status", {}).items()},
            default=None).cast(pl.Int8).alias("__status"),
        _alias("death_protocol", aliases.get("death_protocol", {}), proto_codes).alias("__proto"),
        _clean("city").alias("__city_raw"),
        _clean("district").alias("__district_raw"),
        pl.col("subdistrict").fill_null("").str.strip_chars().alias("__sub"),
        pl.col("source_facility").fill_null("").str.strip_chars().alias("__src"),
    ).with_columns(
        (pl.col("__nik") != "").alias("__nik_present"),
        pl.col("__nik").str.contains(r"^[0-9]{16}$").alias("__nik_valid"),
        pl.col("__nik").cast(pl.UInt64, strict=False).fill_null(0).alias("__nik_u"),
        (pl.col("__city_raw") == "unknown").alias("__region_unknown"),
        pl.col("__city_raw").replace_strict(city_map, default=None).alias("__city"),
        pl.col("__district_raw").replace_strict(district_map, default=None).alias("__district"),
        pl.when(pl.col("__src") != "").then(pl.col("__src")).otherwise(pl.lit(default_source)).alias("source"),
    ).with_columns(
        pl.col("__district").replace_strict(district_city, default=None).alias("__district_city"),
    )

    nik_bad_rule = (
        pl.when(~pl.col("__nik").str.contains(r"^[0-9]*$"))
        .then(pl.lit("NonNumeric"))
        .otherwise(pl.lit("WrongLength"))
    )
    has_fallback = (
        (pl.col("name_norm") != "")
        & pl.col("__dob").is_not_null()
        & pl.col("__sex").is_not_null()
        & (pl.col("__sex") != int(Sex.UNKNOWN))
    )
    raw = lambda c: pl.col(c).fill_null("").str.strip_chars()

    rule = (
        pl.when(pl.col("__nik_present") & ~pl.col("__nik_valid"))
        .then(pl.concat_str(pl.lit("civil_id|"), nik_bad_rule))
        .when(~pl.col("__nik_present") & ~has_fallback)
        .then(pl.lit("civil_id|MissingIdentity"))
        .when(raw("report_date") == "")
        .then(pl.lit("report_date|MissingField"))
        .when(pl.col("__report").is_null())
        .then(pl.lit("report_date|BadDate"))
        .when(pl.col("__report").cast(pl.Int32) + _EPOCH_1970 > clock_ord)
        .then(pl.lit("report_date|FutureDate"))
        .when((raw("dob") != "") & pl.col("__dob").is_null())
        .then(pl.lit("dob|BadDate"))
        .when(pl.col("__dob") > pl.col("__report"))
        .then(pl.lit("dob|FutureBirthDate"))
        .when((raw("sex") != "") & pl.col("__sex").is_null())
        .then(pl.lit("sex|BadValue"))
        .when(raw("category") == "")
        .then(pl.lit("category|MissingField"))
        .when(pl.col("__cat").is_null())
        .then(pl.lit("category|UnknownCategory"))
        .when(~pl.col("__region_unknown") & (pl.col("__city_raw") == ""))
        .then(pl.lit("city|MissingField"))
        .when(~pl.col("__region_unknown") & pl.col("__city").is_null())
        .then(pl.lit("city|UnknownRegion"))
        .when(~pl.col("__region_unknown") & (pl.col("__district_raw") == ""))
        .then(pl.lit("district|MissingField"))
        .when(~pl.col("__region_unknown") & pl.col("__district").is_null())
        .then(pl.lit("district|UnknownRegion"))
        .when(~pl.col("__region_unknown") & (pl.col("__district_city") != pl.col("__city")))
        .then(pl.lit("district|RegionMismatch"))
        .when((raw("symptom_status") != "") & pl.col("__sym").is_null())
        .then(pl.lit("symptom_status|BadValue"))
        .when((raw("status") != "") & pl.col("__status").is_null())
        .then(pl.lit("status|BadValue"))
        .when((raw("death_protocol") != "") & pl.col("__proto").is_null())
        .then(pl.lit("death_protocol|BadValue"))
        .otherwise(pl.lit(""))
        .alias("__rule")
    )
    df = df.with_columns(rule)

    bad = df.filter(pl.col("__rule") != "")
    for line, tag in zip(bad["line"], bad["__rule"]):
        fieldname, rulename = tag.split("|", 1)
        rejects.append(Reject(line=int(line), field=fieldname, rule=rulename))

    ok = df.filter(pl.col("__rule") == "")
    status_event_map = {str(status_names[k]): str(v[0]) for k, v in STATUS_EVENTS.items()}
    status_aux_map = {str(status_names[k]): str(v[1]) for k, v in STATUS_EVENTS.items()}
    ok = ok.with_columns(
        pl.when(pl.col("__nik_valid")).then(pl.col("__nik_u")).otherwise(pl.lit(0, dtype=pl.UInt64)).alias("civil_id_u"),
        pl.col("__sex").fill_null(int(Sex.UNKNOWN)).alias("sex_code"),
        pl.col("__sym").fill_null(int(SymptomStatus.UNKNOWN)).alias("symptom"),
        pl.when(pl.col("__region_unknown")).then(pl.lit("UNKNOWN")).otherwise(pl.col("__city")).alias("city_code"),
        pl.when(pl.col("__region_unknown")).then(pl.lit("UNKNOWN")).otherwise(pl.col("__district")).alias("district_code"),
        pl.col("__status").cast(pl.Utf8).replace_strict(status_event_map, default="0").cast(pl.Int8).alias("status_event"),
        pl.col("__status").cast(pl.Utf8).replace_strict(status_aux_map, default="0").cast(pl.Int8).alias("status_aux"),
    ).with_columns(
        # A death row carries its burial-protocol flag; default with_protocol.
        pl.when(pl.col("status_event") == int(EventKind.DIED))
        .then(pl.col("__proto").fill_null(int(DeathProtocol.WITH_PROTOCOL)))
        .otherwise(pl.col("status_aux"))
        .alias("status_aux"),
    )

    canon = pl.concat_str(
        [
            pl.col("civil_id_u").cast(pl.Utf8), pl.col("name_norm"),
            pl.col("__dob").cast(pl.Int32, strict=False).fill_null(-1).cast(pl.Utf8),
            pl.col("sex_code").cast(pl.Utf8), pl.col("city_code"), pl.col("district_code"),
            pl.col("__sub"), pl.col("__report").cast(pl.Int32).cast(pl.Utf8),
            pl.col("__cat").cast(pl.Utf8), pl.col("symptom").cast(pl.Utf8),
            pl.col("status_event").cast(pl.Utf8), pl.col("status_aux").cast(pl.Utf8),
            pl.col("source"),
        ],
        separator="\x1f",
    )
    fuzzy = pl.concat_str(
        [pl.col("name_norm"),
         # proleptic ordinal, matching store.fuzzy_hash
         (pl.col("__dob").cast(pl.Int32, strict=False) + _EPOCH_1970).fill_null(-1).cast(pl.Utf8),
         pl.col("sex_code").cast(pl.Utf8)],
        separator="\x1f",
    )
    ok = ok.with_columns(
        canon.hash(seed=DIGEST_SEEDS[0]).alias("d1"),
        canon.hash(seed=DIGEST_SEEDS[1]).alias("d2"),
        fuzzy.hash(seed=FUZZY_SEEDS[0]).alias("f1"),
        fuzzy.hash(seed=FUZZY_SEEDS[1]).alias("f2"),
        has_fallback.alias("has_fuzzy"),
    )

    dob_ord = _to_ordinals(ok["__dob"])
    report_ord = _to_ordinals(ok["__report"])
    frame = pl.DataFrame(
        {
            "line": ok["line"].cast(pl.Int64),
            "civil_id": ok["civil_id_u"],
            "name_norm": ok["name_norm"],
            "dob_ord": pl.Series(dob_ord),
            "sex": ok["sex_code"].cast(pl.Int8),
            "city": ok["city_code"],
            "district": ok["district_code"],
            "subdistrict": ok["__sub"],
            "report_ord": pl.Series(report_ord),
            "category": ok["__cat"].cast(pl.Int8),
            "symptom": ok["symptom"].cast(pl.Int8),
            "status_event": ok["status_event"],
            "status_aux": ok["status_aux"],
            "source": ok["source"],
            "d1": ok["d1"],
            "d2": ok["d2"],
            "f1": ok["f1"],
            "f2": ok["f2"],
            "has_fuzzy": ok["has_fuzzy"],
        }
    )
    return ValidatedBatch("cases", frame, rejects, warnings, total)


def _empty_case_frame() -> pl.DataFrame:
    return pl.DataFrame(
        schema={
            "line": pl.Int64, "civil_id": pl.UInt64, "name_norm": pl.Utf8,
            "dob_ord": pl.Int32, "sex": pl.Int8, "city": pl.Utf8,
            "district": pl.Utf8, "subdistrict": pl.Utf8, "report_ord": pl.Int32,
            "category": pl.Int8, "symptom": pl.Int8, "status_event": pl.Int8,
            "status_aux": pl.Int8, "source": pl.Utf8, "d1": pl.UInt64,
            "d2": pl.UInt64, "f1": pl.UInt64, "f2": pl.UInt64, "has_fuzzy": pl.Boolean,
        }
    )


def parse_specimen_batch(
    payload: bytes,
    aliases: dict[str, dict[str, str]],
    clock: datetime,
    default_lab: str,
) -> ValidatedBatch:
    """Parse + validate a laboratory feed into canonical specimen rows.

    Canonical columns: line, specimen_id, civil_id (u64), collection_ord,
    result_ord, result, lab, s1, s2, d1, d2. Duplicate (lab, specimen_id)
    within the batch rejects the later occurrence.
    """
    mandatory = ("specimen_id", "civil_id", "collection_date", "result_date", "result")
    df, rejects, warnings = _read_delimited(payload, SPECIMEN_COLUMNS, mandatory)
    total = len(df) + len(rejects)
    if df.is_empty():
        return ValidatedBatch("specimens", _empty_specimen_frame(), rejects, warnings, total)

    clock_ord = clock.date().toordinal()
    df = df.with_columns(
        pl.col("specimen_id").fill_null("").str.strip_chars().alias("__sid"),
        pl.col("civil_id").fill_null("").str.strip_chars().alias("__nik"),
        _date_ord("collection_date").alias("__coll"),
        _date_ord("result_date").alias("__res"),
        _alias("result", aliases.get("result", {}), RESULT_CODES).alias("__result"),
        pl.col("lab").fill_null("").str.strip_chars().alias("__lab"),
    ).with_columns(
        pl.when(pl.col("__lab") != "").then(pl.col("__lab")).otherwise(pl.lit(default_lab)).alias("lab_id"),
        pl.col("__nik").str.contains(r"^[0-9]{16}$").alias("__nik_valid"),
        pl.col("__nik").cast(pl.UInt64, strict=False).fill_null(0).alias("__nik_u"),
    )

    raw = lambda c: pl.col(c).fill_null("").str.strip_chars()
    nik_bad_rule = (
        pl.when(pl.col("__nik") == "")
        .then(pl.lit("Empty"))
        .when(~pl.col("__nik").str.contains(r"^[0-9]*$"))
        .then(pl.lit("NonNumeric"))
        .otherwise(pl.lit("WrongLength"))
    )
    rule = (
        pl.when(pl.col("__sid") == "")
        .then(pl.lit("specimen_id|MissingField"))
        .when(~pl.col("__nik_valid"))
        .then(pl.concat_str(pl.lit("civil_id|"), nik_bad_rule))
        .when(raw("collection_date") == "")
        .then(pl.lit("collection_date|MissingField"))
        .when(pl.col("__coll").is_null())
        .then(pl.lit("collection_date|BadDate"))
        .when(raw("result_date") == "")
        .then(pl.lit("result_date|MissingField"))
        .when(pl.col("__res").is_null())
        .then(pl.lit("result_date|BadDate"))
        .when(pl.col("__res").cast(pl.Int32) + _EPOCH_1970 > clock_ord)
        .then(pl.lit("result_date|FutureDate"))
        .when(pl.col("__coll") > pl.col("__res"))
        .then(pl.lit("collection_date|AfterResultDate"))
        .when(pl.col("__result").is_null())
        .then(pl.lit("result|UnknownResult"))
        .otherwise(pl.lit(""))
        .alias("__rule")
    )
    sid_key = pl.concat_str([pl.col("lab_id"), pl.col("__sid")], separator="\x1f")
    df = df.with_columns(rule, sid_key.hash(seed=SPECIMEN_SEEDS[0]).alias("s1"),
                         sid_key.hash(seed=SPECIMEN_SEEDS[1]).alias("s2"))
    df = df.with_columns(
        pl.when((pl.col("__rule") == "") & ~pl.struct(["s1", "s2"]).is_first_distinct())
        .then(pl.lit("specimen_id|DuplicateSpecimen"))
        .otherwise(pl.col("__rule"))
        .alias("__rule")
    )

    bad = df.filter(pl.col("__rule") != "")
    for line, tag in zip(bad["line"], bad["__rule"]):
        fieldname, rulename = tag.split("|", 1)
        rejects.append(Reject(line=int(line), field=fieldname, rule=rulename))

    ok = df.filter(pl.col("__rule") == "")
    canon = pl.concat_str(
        [pl.col("__sid"), pl.col("__nik_u").cast(pl.Utf8),
         pl.col("__coll").cast(pl.Int32).cast(pl.Utf8),
         pl.col("__res").cast(pl.Int32).cast(pl.Utf8),
         pl.col("__result").cast(pl.Utf8), pl.col("lab_id")],
        separator="\x1f",
    )
    ok = ok.with_columns(
        canon.hash(seed=DIGEST_SEEDS[0]).alias("d1"),
        canon.hash(seed=DIGEST_SEEDS[1]).alias("d2"),
    )
    frame = pl.DataFrame(
        {
            "line": ok["line"].cast(pl.Int64),
            "specimen_id": ok["__sid"],
            "civil_id": ok["__nik_u"],
            "collection_ord": pl.Series(_to_ordinals(ok["__coll"])),
            "result_ord": pl.Series(_to_ordinals(ok["__res"])),
            "result": ok["__result"].cast(pl.Int8),
            "lab": ok["lab_id"],
            "s1": ok["s1"], "s2": ok["s2"], "d1": ok["d1"], "d2": ok["d2"],
        }
    )
    return ValidatedBatch("specimens", frame, rejects, warnings, total)


def _empty_specimen_frame() -> pl.DataFrame:
    return pl.DataFrame(
        schema={
            "line": pl.Int64, "specimen_id": pl.Utf8, "civil_id": pl.UInt64,
            "collection_ord": pl.Int32, "result_ord": pl.Int32, "result": pl.Int8,
            "lab": pl.Utf8, "s1": pl.UInt64, "s2": pl.UInt64,
            "d1": pl.UInt64, "d2": pl.UInt64,
        }
    )


def parse_national_batch(payload: bytes, clock: datetime) -> ValidatedBatch:
    """Province-comparison feed: one row per day of national aggregates."""
    df, rejects, warnings = _read_delimited(payload, NATIONAL_COLUMNS, NATIONAL_COLUMNS)
    total = len(df) + len(rejects)
    clock_ord = clock.date().toordinal()
    if df.is_empty():
        return ValidatedBatch("national", _empty_national_frame(), rejects, warnings, total)

    counts = ["confirmed", "active", "recovered", "dead"]
    df = df.with_columns(
        _date_ord("date").alias("__date"),
        *[pl.col(c).fill_null("").str.strip_chars().cast(pl.Int64, strict=False).alias(f"__{c}") for c in counts],
    )
    rule = pl.when(pl.col("__date").is_null()).then(pl.lit("date|BadDate"))
    rule = rule.when(pl.col("__date").cast(pl.Int32) + _EPOCH_1970 > clock_ord).then(pl.lit("date|FutureDate"))
    for c in counts:
        rule = rule.when(pl.col(f"__{c}").is_null() | (pl.col(f"__{c}") < 0)).then(pl.lit(f"{c}|BadCount"))
    rule = rule.otherwise(pl.lit("")).alias("__rule")
    df = df.with_columns(rule)

    bad = df.filter(pl.col("__rule") != "")
    for line, tag in zip(bad["line"], bad["__rule"]):
        fieldname, rulename = tag.split("|", 1)
        rejects.append(Reject(line=int(line), field=fieldname, rule=rulename))

    ok = df.filter(pl.col("__rule") == "")
    canon = pl.concat_str(
        [pl.col("__date").cast(pl.Int32).cast(pl.Utf8)] + [pl.col(f"__{c}").cast(pl.Utf8) for c in counts],
        separator="\x1f",
    )
    ok = ok.with_columns(canon.hash(seed=DIGEST_SEEDS[0]).alias("d1"),
                         canon.hash(seed=DIGEST_SEEDS[1]).alias("d2"))
    frame = pl.DataFrame(
        {
            "line": ok["line"].cast(pl.Int64),
            "date_ord": pl.Series(_to_ordinals(ok["__date"])),
            "confirmed": ok["__confirmed"],
            "active": ok["__active"],
            "recovered": ok["__recovered"],
            "dead": ok["__dead"],
            "d1": ok["d1"], "d2": ok["d2"],
        }
    )
    return ValidatedBatch("national", frame, rejects, warnings, total)


def _empty_national_frame() -> pl.DataFrame:
    return pl.DataFrame(
        schema={
            "line": pl.Int64, "date_ord": pl.Int32, "confirmed": pl.Int64,
            "active": pl.Int64, "recovered": pl.Int64, "dead": pl.Int64,
            "d1": pl.UInt64, "d2": pl.UInt64,
        }
    )
