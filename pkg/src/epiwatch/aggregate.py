"""Published aggregates, computed from the store's delta streams and state
columns.

Every number here is a pure function of the store at one watermark. Queries
are cached per (watermark, query); any ingest invalidates the cache, so a
retro-dated correction transparently recomputes whole series and the
accounting identities hold unconditionally.
"""

from __future__ import annotations

from datetime import date

import numpy as np

from .errors import DateOutOfRange, InvertedRange, ZeroDenominator
from .model import CaseStatus, EpiCategory, Sex, SymptomStatus, age_band_labels

MIN_ORD = date(1900, 1, 1).toordinal()
MAX_ORD = date(2100, 1, 1).toordinal()

CONF = int(EpiCategory.CONFIRMED)

# dashboard bucket labels per category kind
CONFIRMED_BUCKETS = {
    int(CaseStatus.HOSPITALIZED): "hospitalized",
    int(CaseStatus.SELF_ISOLATION): "self_isolation",
    int(CaseStatus.RECOVERED): "recovered",
    int(CaseStatus.DEAD): "dead",
}
NONCONFIRMED_BUCKETS = {
    int(CaseStatus.FINISHED_ISOLATION): "finished_isolation",
    int(CaseStatus.HOME_ISOLATION): "home_isolation",
    int(CaseStatus.HOSPITAL_ISOLATION): "hospital_isolation",
    int(CaseStatus.DEAD): "dead",
}

CATEGORY_ORDER = ("suspect", "probable", "traveler", "close_contact", "discarded", "confirmed")


def render_fraction(numerator: int, denominator: int) -> float:
    """Display fraction as a percentage with one decimal, rounded
    half-away-from-zero on the exact rational."""
    if denominator <= 0:
        raise ZeroDenominator(f"{numerator}/{denominator}")
    if numerator < 0:
        raise ZeroDenominator("negative numerator")
    tenths = (2000 * numerator + denominator) // (2 * denominator)
    return tenths / 10.0


def render_fraction_str(numerator: int, denominator: int) -> str:
    tenths = (2000 * numerator + denominator) // (2 * denominator)
    return f"{tenths // 10}.{tenths % 10}"


def _check_date(d: date) -> int:
    o = d.toordinal()
    if not (MIN_ORD <= o <= MAX_ORD):
        raise DateOutOfRange(d.isoformat())
    return o


def _check_range(frm: date, to: date) -> tuple[int, int]:
    a, b = _check_date(frm), _check_date(to)
    if a > b:
        raise InvertedRange(f"{frm.isoformat()} > {to.isoformat()}")
    return a, b


def _cache(store) -> dict:
    """Per-watermark prepared arrays (live deltas sorted by day, columns)."""
    with store.lock:
        if store._agg_cache_seq == store.seq and store._agg_cache.get("ready"):
            return store._agg_cache
        c: dict = {"ready": True}

        gen = store.s_gen.view
        live = store.cb_gen.view == gen[store.cb_person.view]
        day = store.cb_day.view[live]
        order = np.argsort(day, kind="stable")
        c["cb_day"] = day[order]
        code = (store.cb_cat.view[live].astype(np.int16) * 8
                + store.cb_status.view[live]).astype(np.int16)
        c["cb_code"] = code[order]
        c["cb_sign"] = store.cb_sign.view[live][order].astype(np.int64)

        live = store.sy_gen.view == gen[store.sy_person.view]
        day = store.sy_day.view[live]
        order = np.argsort(day, kind="stable")
        c["sy_day"] = day[order]
        c["sy_sym"] = store.sy_sym.view[live][order]
        c["sy_sign"] = store.sy_sign.view[live][order].astype(np.int64)

        c["confirmed_ord"] = store.s_confirmed.view.copy()
        c["outcome_ord"] = store.s_outcome.view.copy()
        c["status"] = store.s_status.view.copy()
        c["cat"] = store.s_cat.view.copy()
        c["protocol"] = store.s_protocol.view.copy()
        c["rid"] = store.p_rid.view.copy()
        c["dob"] = store.p_dob.view.copy()
        c["sex"] = store.p_sex.view.copy()
        c["fc_coll"] = store.fc_coll.view.copy()
        c["fc_pos"] = store.fc_pos.view.copy()
        c["sp_res"] = store.sp_res.view.copy()
        c["sp_pos"] = store.sp_pos.view.copy()
        c["national"] = dict(store.national)
        c["queries"] = {}
        store._agg_cache = c
        store._agg_cache_seq = store.seq
        return c


def _memo(store, key, fn):
    c = _cache(store)
    if key not in c["queries"]:
        c["queries"][key] = fn(c)
    return c["queries"][key]


def _bucket_counts(c: dict, as_of_ord: int) -> np.ndarray:
    """(category, status) occupancy counts at end of as_of day."""
    hi = int(np.searchsorted(c["cb_day"], as_of_ord, side="right"))
    counts = np.zeros(64, dtype=np.int64)
    np.add.at(counts, c["cb_code"][:hi], c["cb_sign"][:hi])
    return counts


def _symptom_counts(c: dict, as_of_ord: int) -> np.ndarray:
    hi = int(np.searchsorted(c["sy_day"], as_of_ord, side="right"))
    counts = np.zeros(4, dtype=np.int64)
    np.add.at(counts, c["sy_sym"][:hi], c["sy_sign"][:hi])
    return counts


def cumulative_summary(store, as_of: date) -> dict:
    """Dashboard cumulative card: confirmed split by activity and symptoms."""
    as_of_ord = _check_date(as_of)

    def compute(c):
        buckets = _bucket_counts(c, as_of_ord)
        hospitalized = int(buckets[CONF * 8 + int(CaseStatus.HOSPITALIZED)])
        self_iso = int(buckets[CONF * 8 + int(CaseStatus.SELF_ISOLATION)])
        recovered = int(buckets[CONF * 8 + int(CaseStatus.RECOVERED)])
        dead = int(buckets[CONF * 8 + int(CaseStatus.DEAD)])
        sym = _symptom_counts(c, as_of_ord)
        return {
            "as_of": as_of.isoformat(),
            "confirmed": hospitalized + self_iso + recovered + dead,
            "active": hospitalized + self_iso,
            "hospitalized": hospitalized,
            "self_isolation": self_iso,
            "recovered": recovered,
            "dead": dead,
            "asymptomatic": int(sym[int(SymptomStatus.ASYMPTOMATIC)]),
            "symptomatic": int(sym[int(SymptomStatus.SYMPTOMATIC)]),
            "unknown_symptoms": int(sym[int(SymptomStatus.UNKNOWN)]),
        }

    return _memo(store, ("summary", as_of_ord), compute)


def category_breakdown(store, as_of: date) -> dict:
    """Category detail table: per category, dashboard buckets with one-decimal
    display fractions."""
    as_of_ord = _check_date(as_of)

    def compute(c):
        buckets = _bucket_counts(c, as_of_ord)
        out = {"as_of": as_of.isoformat(), "categories": {}}
        for cat in EpiCategory:
            labels = CONFIRMED_BUCKETS if cat == EpiCategory.CONFIRMED else NONCONFIRMED_BUCKETS
            rows = {}
            total = 0
            for status_code, label in labels.items():
                count = int(buckets[int(cat) * 8 + status_code])
                rows[label] = count
                total += count
            entry = {"total": total, "buckets": {}}
            for label, count in rows.items():
                entry["buckets"][label] = {
                    "count": count,
                    "percent": render_fraction(count, total) if total else None,
                }
            out["categories"][cat.name.lower()] = entry
        return out

    return _memo(store, ("categories", as_of_ord), compute)


def _day_range(a: int, b: int) -> list[str]:
    return [date.fromordinal(o).isoformat() for o in range(a, b + 1)]


def _counts_per_day(ords: np.ndarray, a: int, b: int) -> tuple[np.ndarray, np.ndarray]:
    """(per-day news within [a,b], cumulative at each day incl. history)."""
    valid = ords[ords >= 0]
    news = np.zeros(b - a + 1, dtype=np.int64)
    if len(valid):
        lo = int(valid.min())
        start = min(lo, a)
        hist = np.bincount(valid - start, minlength=b - start + 1)[: b - start + 1]
        cum_all = np.cumsum(hist)
        news = hist[a - start: b - start + 1].astype(np.int64)
        cum = cum_all[a - start: b - start + 1].astype(np.int64)
        return news, cum
    return news, np.zeros(b - a + 1, dtype=np.int64)


def daily_series(store, frm: date, to: date) -> list[dict]:
    """One point per calendar day: daily news and running cumulatives."""
    a, b = _check_range(frm, to)

    def compute(c):
        confirmed = c["confirmed_ord"]
        is_conf = c["cat"] == CONF
        recov = c["outcome_ord"][(c["status"] == int(CaseStatus.RECOVERED)) & is_conf]
        dead = c["outcome_ord"][(c["status"] == int(CaseStatus.DEAD)) & is_conf]
        new_pos, cum_pos = _counts_per_day(confirmed, a, b)
        new_rec, cum_rec = _counts_per_day(recov, a, b)
        new_dead, cum_dead = _counts_per_day(dead, a, b)
        days = _day_range(a, b)
        return [
            {
                "date": days[i],
                "new_positive": int(new_pos[i]),
                "new_recovered": int(new_rec[i]),
                "new_dead": int(new_dead[i]),
                "cumulative_positive": int(cum_pos[i]),
                "cumulative_recovered": int(cum_rec[i]),
                "cumulative_dead": int(cum_dead[i]),
            }
            for i in range(len(days))
        ]

    return _memo(store, ("daily", a, b), compute)


def cumulative_series(store, frm: date, to: date) -> list[dict]:
    """Per-day cumulative composition of confirmed cases: still hospitalized,
    self-isolating, recovered, dead."""
    a, b = _check_range(frm, to)

    def compute(c):
        tracked = {
            "hospitalized": CONF * 8 + int(CaseStatus.HOSPITALIZED),
            "self_isolation": CONF * 8 + int(CaseStatus.SELF_ISOLATION),
            "recovered": CONF * 8 + int(CaseStatus.RECOVERED),
            "dead": CONF * 8 + int(CaseStatus.DEAD),
        }
        day = c["cb_day"]
        out_rows = []
        per_day: dict[str, np.ndarray] = {}
        for label, code in tracked.items():
            mask = c["cb_code"] == code
            d = day[mask]
            s = c["cb_sign"][mask]
            series = np.zeros(b - a + 1, dtype=np.int64)
            if len(d):
                lo = int(min(d.min(), a))
                deltas = np.zeros(b - lo + 1, dtype=np.int64)
                inside = d <= b
                np.add.at(deltas, d[inside] - lo, s[inside])
                series = np.cumsum(deltas)[a - lo: b - lo + 1]
            per_day[label] = series
        days = _day_range(a, b)
        for i, iso in enumerate(days):
            row = {"date": iso}
            total = 0
            for label in tracked:
                row[label] = int(per_day[label][i])
                total += row[label]
            row["cumulative_confirmed"] = total
            row["active"] = row["hospitalized"] + row["self_isolation"]
            out_rows.append(row)
        return out_rows

    return _memo(store, ("cumulative", a, b), compute)


def positivity_table(store, frm: date, to: date) -> list[dict]:
    """Person-level counts key on the swab day of each person's first
    conclusive result; specimen-level counts key on result day."""
    a, b = _check_range(frm, to)

    def compute(c):
        tested_mask = c["fc_pos"] >= 0
        p_day = c["fc_coll"][tested_mask]
        p_pos = c["fc_pos"][tested_mask] == 1
        s_day = c["sp_res"]
        s_pos = c["sp_pos"]

        def day_counts(day_arr, pos_arr):
            n = b - a + 1
            tested = np.zeros(n, dtype=np.int64)
            positive = np.zeros(n, dtype=np.int64)
            inside = (day_arr >= a) & (day_arr <= b)
            np.add.at(tested, day_arr[inside] - a, 1)
            np.add.at(positive, day_arr[inside & pos_arr] - a, 1)
            return tested, positive

        pt, pp = day_counts(p_day, p_pos)
        st, sp = day_counts(s_day, s_pos)
        rows = []
        for i, iso in enumerate(_day_range(a, b)):
            people_tested, people_positive = int(pt[i]), int(pp[i])
            spec_tested, spec_positive = int(st[i]), int(sp[i])
            rows.append({
                "date": iso,
                "people_tested": people_tested,
                "people_positive": people_positive,
                "people_negative": people_tested - people_positive,
                "person_positivity": (
                    render_fraction(people_positive, people_tested)
                    if people_tested else None),
                "specimens_tested": spec_tested,
                "specimens_positive": spec_positive,
                "specimens_negative": spec_tested - spec_positive,
                "specimen_positivity": (
                    render_fraction(spec_positive, spec_tested)
                    if spec_tested else None),
            })
        return rows

    return _memo(store, ("positivity", a, b), compute)


def _age_band_index(dob: np.ndarray, as_of_ord: int, edges: tuple[int, ...]) -> np.ndarray:
    """Band index per person (-1 = unknown dob), completed years at as_of.

    Vectorized completed-years: year difference minus one when the (month,
    day) birthday hasn't been reached; matches model.completed_years.
    """
    out = np.full(len(dob), -1, dtype=np.int64)
    known = dob >= 0
    if not known.any():
        return out
    as_of_date = date.fromordinal(as_of_ord)
    d = dob[known].astype(np.int64)
    base = np.datetime64("1900-01-01", "D") + (d - MIN_ORD).astype("timedelta64[D]")
    months = base.astype("datetime64[M]")
    month_index = months.astype(np.int64)          # months since 1970-01
    birth_year = month_index // 12 + 1970
    birth_month = month_index % 12 + 1
    birth_day = (base - months).astype(np.int64) + 1
    not_reached = (birth_month * 100 + birth_day) > (as_of_date.month * 100 + as_of_date.day)
    years = as_of_date.year - birth_year - not_reached
    idx = np.searchsorted(np.asarray(edges), years, side="right")
    out[known] = idx
    return out


def region_counts(store, level: str, as_of: date, single_day: bool = False) -> dict:
    """Confirmed-case counts by administrative region with sex/age breakdown.
    Unknown region is an explicit bucket, never redistributed."""
    if level not in ("city", "district"):
        raise ValueError(f"unknown level {level!r}")
    as_of_ord = _check_date(as_of)
    edges = store.config.age_band_edges

    def compute(c):
        confirmed = c["confirmed_ord"]
        if single_day:
            mask = confirmed == as_of_ord
        else:
            mask = (confirmed >= 0) & (confirmed <= as_of_ord)
        rid = c["rid"][mask]
        sex = c["sex"][mask]
        band = _age_band_index(c["dob"][mask], as_of_ord, edges)
        labels = age_band_labels(edges)

        districts = store._districts
        entries = []
        total = 0
        if level == "district":
            keys = [(store.region_table.districts[code][0], code) for code in districts]
            group = rid.astype(np.int64)
            n_groups = len(districts)
        else:
            city_codes = sorted(store.region_table.cities)
            keys = [(code, None) for code in city_codes]
            city_of_rid = np.full(len(districts), -1, dtype=np.int64)
            for i, code in enumerate(districts):
                city_of_rid[i] = city_codes.index(store.region_table.districts[code][0])
            safe_rid = np.where(rid >= 0, rid.astype(np.int64), 0)
            group = np.where(rid >= 0, city_of_rid[safe_rid], -1)
            n_groups = len(keys)
        for gi in range(-1, n_groups):
            sel = group == gi
            count = int(sel.sum())
            if gi == -1:
                name = ("UNKNOWN", "UNKNOWN")
            else:
                city_code, district_code = keys[gi]
                name = (city_code, district_code)
            by_sex = {
                s.name.lower(): int((sex[sel] == int(s)).sum()) for s in Sex}
            by_age = {labels[i]: int((band[sel] == i).sum()) for i in range(len(labels))}
            by_age["unknown"] = int((band[sel] == -1).sum())
            entry = {
                "city": name[0],
                "city_name": store.region_table.cities.get(name[0], "UNKNOWN"),
                "count": count,
                "by_sex": by_sex,
                "by_age": by_age,
            }
            if level == "district":
                entry["district"] = name[1]
                entry["district_name"] = (
                    store.region_table.districts[name[1]][1]
                    if name[1] in store.region_table.districts else "UNKNOWN")
            total += count
            entries.append(entry)
        return {
            "as_of": as_of.isoformat(),
            "level": level,
            "window": "single_day" if single_day else "cumulative",
            "total": total,
            "regions": entries,
        }

    return _memo(store, ("regions", level, as_of_ord, single_day), compute)


def crosstab_age_sex(store, as_of: date) -> dict:
    """Age band x sex matrix over confirmed persons."""
    as_of_ord = _check_date(as_of)
    edges = store.config.age_band_edges

    def compute(c):
        confirmed = c["confirmed_ord"]
        mask = (confirmed >= 0) & (confirmed <= as_of_ord)
        sex = c["sex"][mask]
        band = _age_band_index(c["dob"][mask], as_of_ord, edges)
        labels = age_band_labels(edges) + ["unknown"]
        band = np.where(band < 0, len(labels) - 1, band)
        matrix = {}
        total = 0
        for bi, label in enumerate(labels):
            row = {}
            for s in Sex:
                count = int(((band == bi) & (sex == int(s))).sum())
                row[s.name.lower()] = count
                total += count
            matrix[label] = row
        return {"as_of": as_of.isoformat(), "matrix": matrix, "total": total}

    return _memo(store, ("crosstab", as_of_ord), compute)


def mortality_protocol_series(store, frm: date, to: date) -> list[dict]:
    """Per-day confirmed deaths split by burial-protocol flag."""
    a, b = _check_range(frm, to)

    def compute(c):
        is_conf_dead = (c["cat"] == CONF) & (c["status"] == int(CaseStatus.DEAD))
        day = c["outcome_ord"][is_conf_dead]
        proto = c["protocol"][is_conf_dead]
        n = b - a + 1
        with_p = np.zeros(n, dtype=np.int64)
        without_p = np.zeros(n, dtype=np.int64)
        inside = (day >= a) & (day <= b)
        np.add.at(with_p, day[inside & (proto != 2)] - a, 1)
        np.add.at(without_p, day[inside & (proto == 2)] - a, 1)
        return [
            {
                "date": iso,
                "deaths_with_protocol": int(with_p[i]),
                "deaths_without_protocol": int(without_p[i]),
            }
            for i, iso in enumerate(_day_range(a, b))
        ]

    return _memo(store, ("mortality", a, b), compute)


def national_comparison(store, frm: date, to: date) -> list[dict]:
    """Local daily news joined with the national aggregate feed; days the
    feed never covered stay explicit gaps (nulls)."""
    a, b = _check_range(frm, to)
    local = daily_series(store, frm, to)

    def compute(c):
        rows = []
        national = c["national"]
        for i, iso in enumerate(_day_range(a, b)):
            o = a + i
            row = {
                "date": iso,
                "local_new_positive": local[i]["new_positive"],
                "national_confirmed": None,
                "national_active": None,
                "national_recovered": None,
                "national_dead": None,
                "national_new_positive": None,
            }
            if o in national:
                confirmed, active, recovered, dead = national[o]
                row.update({
                    "national_confirmed": confirmed,
                    "national_active": active,
                    "national_recovered": recovered,
                    "national_dead": dead,
                })
                if (o - 1) in national:
                    row["national_new_positive"] = confirmed - national[o - 1][0]
            rows.append(row)
        return rows

    return _memo(store, ("national", a, b), compute)


def audit_identities(store) -> None:
    """Accounting identities checked after every ingest batch; raises
    AssertionError on the first violation."""
    c = _cache(store)
    top = int(c["cb_day"].max()) if len(c["cb_day"]) else date(2021, 1, 1).toordinal()
    probe = date.fromordinal(int(top))
    s = cumulative_summary(store, probe)
    assert s["confirmed"] == s["active"] + s["recovered"] + s["dead"], "confirmed partition"
    assert s["active"] == s["hospitalized"] + s["self_isolation"], "active partition"
    assert s["confirmed"] == s["asymptomatic"] + s["symptomatic"] + s["unknown_symptoms"], \
        "symptom partition"

    if s["confirmed"]:
        lo_ord = int(c["confirmed_ord"][c["confirmed_ord"] >= 0].min())
        series = daily_series(store, date.fromordinal(lo_ord), probe)
        running = 0
        for row in series:
            running += row["new_positive"]
            assert row["cumulative_positive"] == running, "daily telescoping"
        assert running == s["confirmed"], "daily total equals summary confirmed"

        regions = region_counts(store, "district", probe)
        assert regions["total"] == s["confirmed"], "region partition"
        ct = crosstab_age_sex(store, probe)
        assert ct["total"] == s["confirmed"], "crosstab partition"
