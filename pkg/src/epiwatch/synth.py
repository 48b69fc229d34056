"""Deterministic synthetic data: test populations and the bundled
snapshot fixtures expanded to person-level feeds.

Everything here is a pure function of its seed (or of the bundled count
tables), so generated files are byte-identical across runs.
"""

from __future__ import annotations

import csv
from datetime import date
from importlib import resources
from pathlib import Path

import numpy as np
import polars as pl

from .regions import load_region_table

EPOCH = date(1970, 1, 1).toordinal()

CATEGORY_LABELS = {
    "suspect": "suspek",
    "probable": "probable",
    "traveler": "pelaku perjalanan",
    "close_contact": "kontak erat",
    "discarded": "discarded",
    "confirmed": "konfirmasi",
}
STATUS_LABELS = {
    "finished_isolation": "selesai isolasi",
    "home_isolation": "isolasi di rumah",
    "hospital_isolation": "isolasi di rs",
    "self_isolation": "isolasi mandiri",
    "hospitalized": "dirawat",
    "recovered": "sembuh",
    "dead": "meninggal",
}

FIXTURE_AS_OF = date(2021, 3, 25)


def _read_fixture_rows(name: str) -> list[dict]:
    text = resources.files("epiwatch.fixtures").joinpath(name).read_text()
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    return list(csv.DictReader(lines))


def _days_series(ords: np.ndarray) -> pl.Series:
    return pl.Series((ords - EPOCH).astype(np.int32)).cast(pl.Date)


def category_fixture_csv(out_path: Path) -> int:
    """Expand the bundled cumulative category snapshot into a person-level
    case feed (one row per person). Returns the row count."""
    spec = _read_fixture_rows("category_counts.csv")
    region = load_region_table()
    districts = region.district_codes()
    cities = [region.districts[d][0] for d in districts]

    total = sum(int(r["count"]) for r in spec)
    idx = np.arange(total, dtype=np.int64)

    cat_col = np.empty(total, dtype=object)
    status_col = np.empty(total, dtype=object)
    start = 0
    for r in spec:
        n = int(r["count"])
        cat_col[start:start + n] = CATEGORY_LABELS[r["category"]]
        status_col[start:start + n] = STATUS_LABELS[r["status"]]
        start += n

    base = date(2020, 3, 1).toordinal()
    span = (FIXTURE_AS_OF.toordinal() - base) + 1   # 391 days, all <= as-of
    report = base + (idx * 37) % span
    dob = date(1940, 1, 1).toordinal() + (idx * 7919) % 27000
    dcode = np.asarray(districts, dtype=object)[idx % len(districts)]
    ccode = np.asarray(cities, dtype=object)[idx % len(districts)]

    df = pl.DataFrame({
        "civil_id": ("3171" + pl.Series(idx + 1).cast(pl.Utf8).str.zfill(12)),
        "name": ("WARGA " + pl.Series(idx + 1).cast(pl.Utf8)),
        "dob": _days_series(dob),
        "sex": pl.Series(np.where(idx % 2 == 0, "L", "P")),
        "city": pl.Series(ccode, dtype=pl.Utf8),
        "district": pl.Series(dcode, dtype=pl.Utf8),
        "subdistrict": pl.Series([""] * total),
        "report_date": _days_series(report),
        "category": pl.Series(cat_col, dtype=pl.Utf8),
        "symptom_status": pl.Series([""] * total),
        "status": pl.Series(status_col, dtype=pl.Utf8),
        "death_protocol": pl.Series(
            np.where((status_col == "meninggal"),
                     np.where(idx % 2 == 0, "dengan protap", "tanpa protap"), "")),
    })
    df.write_csv(out_path)
    return total


def positivity_fixture_csv(out_path: Path) -> int:
    """Expand the bundled daily testing snapshot into a specimen feed.

    People counts key on the swab (collection) day of each person's first
    conclusive result; specimen counts key on result day. Repeat specimens
    only ever repeat their person's polarity, so person-level counts stay
    pinned while specimen-day quotas are filled exactly.
    """
    spec = _read_fixture_rows("positivity_daily.csv")
    days = [date.fromisoformat(r["date"]).toordinal() for r in spec]
    people_pos = [int(r["people_positive"]) for r in spec]
    people_neg = [int(r["people_negative"]) for r in spec]
    spec_pos = [int(r["specimens_positive"]) for r in spec]
    spec_neg = [int(r["specimens_negative"]) for r in spec]
    n_days = len(days)
    assert days == sorted(days)

    # Hall feasibility: every result-day suffix must offer enough quota for
    # the first-specimens collected in it.
    for kind, people, quota in (("positive", people_pos, spec_pos),
                                ("negative", people_neg, spec_neg)):
        for i in range(n_days):
            need = sum(people[i:])
            have = sum(quota[i:])
            if need > have:
                raise ValueError(f"{kind} fixture infeasible from day {i}")

    collections = []
    results = []
    polarity = []
    person_of = []

    next_person = 0
    # first conclusive specimen per person: collection day fixed by the
    # people table; result day assigned greedily per the specimen table
    pending: dict[bool, list[tuple[int, int]]] = {True: [], False: []}  # (coll_day_idx, person)
    person_day_pos: list[tuple[int, bool]] = []
    for di in range(n_days):
        for count, positive in ((people_pos[di], True), (people_neg[di], False)):
            for _ in range(count):
                pending[positive].append((di, next_person))
                person_day_pos.append((di, positive))
                next_person += 1

    pending[True].sort()
    pending[False].sort()
    cursor = {True: 0, False: 0}
    # assign result days in order; firsts (earliest collection first), then
    # repeats of already-assigned persons of the same polarity
    assigned_repeat_pool: dict[bool, list[int]] = {True: [], False: []}
    for di in range(n_days):
        for positive, quota in ((True, spec_pos[di]), (False, spec_neg[di])):
            remaining = quota
            pool = pending[positive]
            while remaining and cursor[positive] < len(pool) and pool[cursor[positive]][0] <= di:
                coll_di, person = pool[cursor[positive]]
                collections.append(days[coll_di])
                results.append(days[di])
                polarity.append(positive)
                person_of.append(person)
                assigned_repeat_pool[positive].append(person)
                cursor[positive] += 1
                remaining -= 1
            rp = assigned_repeat_pool[positive]
            k = 0
            while remaining:
                # repeats collected and resulted the same day keep the
                # person's first-specimen ordering untouched
                person = rp[k % len(rp)]
                collections.append(days[di])
                results.append(days[di])
                polarity.append(positive)
                person_of.append(person)
                k += 1
                remaining -= 1
    if cursor[True] != len(pending[True]) or cursor[False] != len(pending[False]):
        raise ValueError("positivity fixture: unassigned first specimens")

    total = len(collections)
    person_arr = np.asarray(person_of, dtype=np.int64)
    # guard: a repeat must never precede its person's first specimen
    first_day = np.full(next_person, 10 ** 9, dtype=np.int64)
    coll_arr = np.asarray(collections, dtype=np.int64)
    for i in range(total):
        if coll_arr[i] < first_day[person_arr[i]]:
            first_day[person_arr[i]] = coll_arr[i]
    expected = np.asarray([days[d] for d, _ in person_day_pos], dtype=np.int64)
    assert np.array_equal(first_day[: next_person], expected)

    df = pl.DataFrame({
        "specimen_id": ("SP" + pl.Series(np.arange(total) + 1).cast(pl.Utf8).str.zfill(8)),
        "civil_id": ("3172" + pl.Series(person_arr + 1).cast(pl.Utf8).str.zfill(12)),
        "collection_date": _days_series(coll_arr),
        "result_date": _days_series(np.asarray(results, dtype=np.int64)),
        "result": pl.Series(np.where(np.asarray(polarity), "positif", "negatif")),
        "lab": pl.Series(["lab-jkt-1"] * total),
    })
    df.write_csv(out_path)
    return total


def bed_fixture_csv(out_path: Path) -> int:
    """Copy the bundled bed snapshot into an importable feed file."""
    text = resources.files("epiwatch.fixtures").joinpath("beds_snapshot.csv").read_text()
    Path(out_path).write_text(text)
    return sum(1 for ln in text.splitlines() if ln.strip() and not ln.startswith("#")) - 1


NAME_POOL = (
    "ADI AGUS ANDI AYU BAMBANG BUDI CITRA DEWI DIAN EKO FITRI GALUH HADI "
    "INDAH JOKO KARTIKA LESTARI MEGA NUR PUTRI RATNA SARI SETIA SRI TONO "
    "UTAMI WATI WIBOWO YANTI YUDI ZAINAL"
).split()


def population_csv(
    out_dir: Path,
    seed: int,
    persons: int,
    days: int = 90,
    start: date = date(2021, 1, 1),
    duplicate_rate: float = 0.08,
    missing_nik_rate: float = 0.05,
    specimen_rate: float = 0.35,
) -> dict:
    """Seeded synthetic population: case feed + specimen feed.

    Duplicate rows re-report existing persons (sometimes with a changed
    district); a slice of rows carries no civil id to exercise the fuzzy
    path. Specimens confirm or clear a sample of the population.
    """
    rng = np.random.default_rng(seed)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    region = load_region_table()
    districts = np.asarray(region.district_codes(), dtype=object)
    cities = np.asarray([region.districts[d][0] for d in districts], dtype=object)

    idx = np.arange(persons, dtype=np.int64)
    nik = np.char.add("3175", np.char.zfill((idx + 1).astype("U12"), 12))
    given = rng.choice(NAME_POOL, size=persons)
    family = rng.choice(NAME_POOL, size=persons)
    names = np.char.add(np.char.add(given.astype("U16"), " "), family.astype("U16"))
    names = np.char.add(np.char.add(names, " "), (idx + 1).astype("U12"))
    dob = date(1935, 1, 1).toordinal() + rng.integers(0, 30500, persons)
    sex = rng.choice(["L", "P"], size=persons)
    dix = rng.integers(0, len(districts), persons)
    base = start.toordinal()
    report = base + rng.integers(0, days, persons)
    category = rng.choice(
        ["suspek", "kontak erat", "pelaku perjalanan", "probable", "discarded", "konfirmasi"],
        size=persons, p=[0.38, 0.38, 0.05, 0.02, 0.05, 0.12])
    status = np.where(
        rng.random(persons) < 0.75, "selesai isolasi",
        np.where(rng.random(persons) < 0.7, "isolasi di rumah", "meninggal"))
    symptom = rng.choice(["", "tanpa gejala", "bergejala"], size=persons, p=[0.4, 0.35, 0.25])
    no_nik = rng.random(persons) < missing_nik_rate

    rows = pl.DataFrame({
        "civil_id": pl.Series(np.where(no_nik, "", nik).astype(object), dtype=pl.Utf8),
        "name": pl.Series(names.astype(object), dtype=pl.Utf8),
        "dob": _days_series(dob),
        "sex": pl.Series(sex.astype(object), dtype=pl.Utf8),
        "city": pl.Series(cities[dix], dtype=pl.Utf8),
        "district": pl.Series(districts[dix], dtype=pl.Utf8),
        "subdistrict": pl.Series([""] * persons),
        "report_date": _days_series(report),
        "category": pl.Series(category.astype(object), dtype=pl.Utf8),
        "symptom_status": pl.Series(symptom.astype(object), dtype=pl.Utf8),
        "status": pl.Series(status.astype(object), dtype=pl.Utf8),
        "death_protocol": pl.Series(
            np.where(status == "meninggal",
                     np.where(rng.random(persons) < 0.8, "dengan protap", "tanpa protap"),
                     "").astype(object), dtype=pl.Utf8),
    })

    n_dup = int(persons * duplicate_rate)
    if n_dup:
        pick = rng.integers(0, persons, n_dup)
        dup = rows[pick.tolist()]
        new_dix = rng.integers(0, len(districts), n_dup)
        dup = dup.with_columns(
            pl.Series("city", cities[new_dix], dtype=pl.Utf8),
            pl.Series("district", districts[new_dix], dtype=pl.Utf8),
            _days_series(report[pick] + rng.integers(1, 10, n_dup)).alias("report_date"),
        )
        rows = pl.concat([rows, dup])

    perm = rng.permutation(len(rows)).tolist()
    rows = rows[perm]
    cases_path = out_dir / "cases.csv"
    rows.write_csv(cases_path)

    n_spec = int(persons * specimen_rate)
    pick = rng.choice(persons, size=n_spec, replace=False)
    coll = report[pick] + rng.integers(0, 4, n_spec)
    res = coll + rng.integers(0, 4, n_spec)
    result = rng.choice(["positif", "negatif", "inconclusive"], size=n_spec, p=[0.3, 0.65, 0.05])
    specs = pl.DataFrame({
        "specimen_id": ("S" + pl.Series(np.arange(n_spec) + 1).cast(pl.Utf8).str.zfill(9)),
        "civil_id": pl.Series(nik[pick].astype(object), dtype=pl.Utf8),
        "collection_date": _days_series(coll),
        "result_date": _days_series(res),
        "result": pl.Series(result.astype(object), dtype=pl.Utf8),
        "lab": pl.Series(rng.choice(["lab-a", "lab-b"], size=n_spec).astype(object), dtype=pl.Utf8),
    })
    specs_path = out_dir / "specimens.csv"
    specs.write_csv(specs_path)

    return {
        "cases": str(cases_path), "case_rows": len(rows),
        "specimens": str(specs_path), "specimen_rows": n_spec,
        "persons": persons, "seed": seed,
    }
