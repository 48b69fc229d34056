"""Report rendering: every aggregate as delimited text, with a matplotlib
figure written alongside unless suppressed."""

from __future__ import annotations

import csv
from datetime import date, datetime, timezone
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.dates as mdates
import matplotlib.pyplot as plt

from . import aggregate
from .bedboard import WARD_BY_NAME
from .errors import EpiwatchError
from .model import age_band_labels

REPORT_KINDS = (
    "summary", "category-breakdown", "daily-series", "cumulative-series",
    "positivity", "regions", "crosstab", "mortality-protocol",
    "national-comparison", "beds", "beds-hospital", "beds-find",
)

plt.rcParams.update({
    "figure.figsize": (10, 5),
    "figure.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
})


def _pct(value) -> str:
    return "" if value is None else f"{value:.1f}"


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _dates_axis(ax):
    ax.xaxis.set_major_formatter(mdates.DateFormatter("%d/%m"))
    ax.xaxis.set_major_locator(mdates.AutoDateLocator())


def render_report(store, kind: str, out: Path, figure: Path | None = None, *,
                  as_of: date | None = None, frm: date | None = None,
                  to: date | None = None, level: str = "district",
                  hospital: str | None = None, ward: str | None = None,
                  min_beds: int = 1, now: datetime | None = None) -> dict:
    """Write one report as CSV (and PNG when ``figure``); returns metadata."""
    out = Path(out)
    now = now or datetime.now(timezone.utc)
    as_of = as_of or _default_as_of(store)
    if to is None:
        to = as_of
    if frm is None:
        frm = date.fromordinal(max(to.toordinal() - 29, 1))

    if kind == "summary":
        data = aggregate.cumulative_summary(store, as_of)
        header = list(data.keys())
        _write_csv(out, header, [[data[k] for k in header]])
        if figure:
            _figure_summary(data, figure)
    elif kind == "category-breakdown":
        data = aggregate.category_breakdown(store, as_of)
        rows = []
        for cat, entry in data["categories"].items():
            for bucket, cell in entry["buckets"].items():
                rows.append([cat, bucket, cell["count"], _pct(cell["percent"]), entry["total"]])
        _write_csv(out, ["category", "status", "count", "percent", "category_total"], rows)
        if figure:
            _figure_categories(data, figure)
    elif kind == "daily-series":
        data = aggregate.daily_series(store, frm, to)
        header = ["date", "new_positive", "new_recovered", "new_dead",
                  "cumulative_positive", "cumulative_recovered", "cumulative_dead"]
        _write_csv(out, header, [[r[k] for k in header] for r in data])
        if figure:
            _figure_daily(data, figure)
    elif kind == "cumulative-series":
        data = aggregate.cumulative_series(store, frm, to)
        header = ["date", "hospitalized", "self_isolation", "recovered", "dead",
                  "active", "cumulative_confirmed"]
        _write_csv(out, header, [[r[k] for k in header] for r in data])
        if figure:
            _figure_cumulative(data, figure)
    elif kind == "positivity":
        data = aggregate.positivity_table(store, frm, to)
        header = ["date", "people_tested", "people_positive", "people_negative",
                  "person_positivity", "specimens_tested", "specimens_positive",
                  "specimens_negative", "specimen_positivity"]
        rows = [[r["date"], r["people_tested"], r["people_positive"], r["people_negative"],
                 _pct(r["person_positivity"]), r["specimens_tested"], r["specimens_positive"],
                 r["specimens_negative"], _pct(r["specimen_positivity"])] for r in data]
        _write_csv(out, header, rows)
        if figure:
            _figure_positivity(data, figure)
    elif kind == "regions":
        data = aggregate.region_counts(store, level, as_of)
        bands = age_band_labels(store.config.age_band_edges) + ["unknown"]
        header = ["city", "city_name", "district", "district_name", "count",
                  "male", "female", "unknown_sex"] + [f"age_{b}" for b in bands]
        rows = []
        for r in data["regions"]:
            rows.append([
                r["city"], r["city_name"], r.get("district", ""), r.get("district_name", ""),
                r["count"], r["by_sex"]["male"], r["by_sex"]["female"], r["by_sex"]["unknown"],
            ] + [r["by_age"][b] for b in bands])
        _write_csv(out, header, rows)
        if figure:
            _figure_regions(data, figure)
    elif kind == "crosstab":
        data = aggregate.crosstab_age_sex(store, as_of)
        header = ["age_band", "male", "female", "unknown"]
        rows = [[band, cell["male"], cell["female"], cell["unknown"]]
                for band, cell in data["matrix"].items()]
        _write_csv(out, header, rows)
        if figure:
            _figure_crosstab(data, figure)
    elif kind == "mortality-protocol":
        data = aggregate.mortality_protocol_series(store, frm, to)
        header = ["date", "deaths_with_protocol", "deaths_without_protocol"]
        _write_csv(out, header, [[r[k] for k in header] for r in data])
        if figure:
            _figure_mortality(data, figure)
    elif kind == "national-comparison":
        data = aggregate.national_comparison(store, frm, to)
        header = ["date", "local_new_positive", "national_new_positive",
                  "national_confirmed", "national_active", "national_recovered",
                  "national_dead"]
        rows = [[r["date"], r["local_new_positive"],
                 _opt(r["national_new_positive"]), _opt(r["national_confirmed"]),
                 _opt(r["national_active"]), _opt(r["national_recovered"]),
                 _opt(r["national_dead"])] for r in data]
        _write_csv(out, header, rows)
        if figure:
            _figure_national(data, figure)
    elif kind == "beds":
        data = store.beds.province_capacity(now)
        rows = []
        for ward_name, entry in data["wards"].items():
            pct = ("" if entry["remaining_fraction"] is None
                   else f"{entry['remaining_fraction'] * 100:.1f}")
            rows.append([ward_name, entry["total"], entry["occupied"],
                         entry["available"], pct, ""])
        for h in data["stale_hospitals"]:
            rows.append(["stale_hospital", "", "", "", "", h])
        _write_csv(out, ["ward", "total", "occupied", "available",
                         "remaining_percent", "hospital"], rows)
        if figure:
            _figure_beds(data, figure)
    elif kind == "beds-hospital":
        if not hospital:
            raise EpiwatchError("beds-hospital requires --hospital")
        data = store.beds.hospital_board(hospital, now)
        rows = []
        for r in data:
            if r["no_data"]:
                rows.append([r["ward"], "no_data", "", "", "", ""])
            else:
                rows.append([r["ward"], "reported", r["total"], r["occupied"],
                             r["available"], "stale" if r["stale"] else "fresh"])
        _write_csv(out, ["ward", "state", "total", "occupied", "available", "freshness"], rows)
        if figure:
            _figure_hospital(hospital, data, figure)
    elif kind == "beds-find":
        if not ward or ward not in WARD_BY_NAME:
            raise EpiwatchError(f"beds-find requires --ward, one of {sorted(WARD_BY_NAME)}")
        data = store.beds.find_available(WARD_BY_NAME[ward], min_beds, now)
        rows = [[r["hospital"], r["name"], r["city"], r["available"],
                 "stale" if r["stale"] else "fresh", r["reported_at"]] for r in data]
        _write_csv(out, ["hospital", "name", "city", "available", "freshness", "reported_at"],
                   rows)
        if figure:
            _figure_find(ward, data, figure)
    else:
        raise EpiwatchError(f"unknown report kind {kind!r}; choose from {REPORT_KINDS}")
    return {"kind": kind, "out": str(out), "figure": str(figure) if figure else None,
            "watermark": store.watermark}


def _opt(v):
    return "" if v is None else v


def _default_as_of(store) -> date:
    try:
        return datetime.fromisoformat(store.generated_at).date()
    except ValueError:
        return date.today()


# --- figures -----------------------------------------------------------------

def _dates(rows) -> list[date]:
    return [date.fromisoformat(r["date"]) for r in rows]


def _save(fig, path: Path) -> None:
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def _figure_summary(data: dict, path: Path) -> None:
    fig, ax = plt.subplots()
    keys = ["confirmed", "active", "hospitalized", "self_isolation", "recovered", "dead",
            "asymptomatic", "symptomatic", "unknown_symptoms"]
    ax.bar(range(len(keys)), [data[k] for k in keys], color="#32618d")
    ax.set_xticks(range(len(keys)), keys, rotation=30, ha="right")
    ax.set_title(f"Cumulative case summary as of {data['as_of']}")
    _save(fig, path)


def _figure_categories(data: dict, path: Path) -> None:
    fig, ax = plt.subplots()
    cats = list(data["categories"])
    bottoms = [0] * len(cats)
    buckets = sorted({b for c in cats for b in data["categories"][c]["buckets"]})
    for bucket in buckets:
        heights = [data["categories"][c]["buckets"].get(bucket, {}).get("count", 0) for c in cats]
        ax.bar(cats, heights, bottom=bottoms, label=bucket)
        bottoms = [b + h for b, h in zip(bottoms, heights)]
    ax.set_yscale("symlog")
    ax.legend(fontsize=7)
    ax.set_title(f"Category breakdown as of {data['as_of']}")
    plt.setp(ax.get_xticklabels(), rotation=20, ha="right")
    _save(fig, path)


def _figure_daily(rows: list[dict], path: Path) -> None:
    fig, ax = plt.subplots()
    days = _dates(rows)
    ax.bar(days, [r["new_positive"] for r in rows], label="new positive", color="#c23b3b")
    ax.plot(days, [r["new_recovered"] for r in rows], label="new recovered", color="#3b8c4b")
    ax.plot(days, [r["new_dead"] for r in rows], label="new deaths", color="#444444")
    _dates_axis(ax)
    ax.legend()
    ax.set_title("Daily new cases and outcomes")
    _save(fig, path)


def _figure_cumulative(rows: list[dict], path: Path) -> None:
    fig, ax = plt.subplots()
    days = _dates(rows)
    for key, color in (("hospitalized", "#c28f3b"), ("self_isolation", "#3b6fc2"),
                       ("recovered", "#3b8c4b"), ("dead", "#444444")):
        ax.plot(days, [r[key] for r in rows], label=key, color=color)
    _dates_axis(ax)
    ax.legend()
    ax.set_title("Cumulative composition of confirmed cases")
    _save(fig, path)


def _figure_positivity(rows: list[dict], path: Path) -> None:
    fig, ax = plt.subplots()
    days = _dates(rows)
    ax.plot(days, [r["person_positivity"] for r in rows], marker="o", label="person-level")
    ax.plot(days, [r["specimen_positivity"] for r in rows], marker="s", label="specimen-level")
    ax.set_ylabel("% positive")
    _dates_axis(ax)
    ax.legend()
    ax.set_title("Daily positivity rate")
    _save(fig, path)


def _figure_regions(data: dict, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(10, 8))
    rows = [r for r in data["regions"]]
    labels = [r.get("district_name") or r["city_name"] for r in rows]
    ax.barh(range(len(rows)), [r["count"] for r in rows], color="#32618d")
    ax.set_yticks(range(len(rows)), labels, fontsize=6)
    ax.invert_yaxis()
    ax.set_title(f"Confirmed cases by region ({data['level']}, as of {data['as_of']})")
    _save(fig, path)


def _figure_crosstab(data: dict, path: Path) -> None:
    fig, ax = plt.subplots()
    bands = list(data["matrix"])
    sexes = ["male", "female", "unknown"]
    grid = [[data["matrix"][b][s] for s in sexes] for b in bands]
    im = ax.imshow(grid, cmap="Blues", aspect="auto")
    ax.set_xticks(range(len(sexes)), sexes)
    ax.set_yticks(range(len(bands)), bands)
    for i, band in enumerate(bands):
        for j, s in enumerate(sexes):
            ax.text(j, i, str(grid[i][j]), ha="center", va="center", fontsize=7)
    fig.colorbar(im)
    ax.set_title(f"Confirmed cases by age band and sex ({data['as_of']})")
    _save(fig, path)


def _figure_mortality(rows: list[dict], path: Path) -> None:
    fig, ax = plt.subplots()
    days = _dates(rows)
    with_p = [r["deaths_with_protocol"] for r in rows]
    without_p = [r["deaths_without_protocol"] for r in rows]
    ax.bar(days, with_p, label="with protocol", color="#444444")
    ax.bar(days, without_p, bottom=with_p, label="without protocol", color="#c28f3b")
    _dates_axis(ax)
    ax.legend()
    ax.set_title("Daily deaths by burial protocol")
    _save(fig, path)


def _figure_national(rows: list[dict], path: Path) -> None:
    fig, ax = plt.subplots()
    days = _dates(rows)
    ax.plot(days, [r["local_new_positive"] for r in rows], label="Jakarta", color="#c23b3b")
    ax.plot(days, [r["national_new_positive"] for r in rows], label="national", color="#32618d")
    _dates_axis(ax)
    ax.legend()
    ax.set_title("New cases: Jakarta vs national")
    _save(fig, path)


def _figure_beds(data: dict, path: Path) -> None:
    fig, ax = plt.subplots()
    wards = list(data["wards"])
    avail = [data["wards"][w]["available"] for w in wards]
    occ = [data["wards"][w]["occupied"] for w in wards]
    ax.bar(wards, occ, label="occupied", color="#c23b3b")
    ax.bar(wards, avail, bottom=occ, label="available", color="#3b8c4b")
    plt.setp(ax.get_xticklabels(), rotation=30, ha="right")
    ax.legend()
    ax.set_title("Province bed capacity by ward type")
    _save(fig, path)


def _figure_hospital(hospital: str, rows: list[dict], path: Path) -> None:
    fig, ax = plt.subplots()
    reported = [r for r in rows if not r["no_data"]]
    wards = [r["ward"] for r in reported]
    ax.bar(wards, [r["occupied"] for r in reported], label="occupied", color="#c23b3b")
    ax.bar(wards, [r["available"] for r in reported],
           bottom=[r["occupied"] for r in reported], label="available", color="#3b8c4b")
    plt.setp(ax.get_xticklabels(), rotation=30, ha="right")
    ax.legend()
    ax.set_title(f"Bed board: {hospital}")
    _save(fig, path)


def _figure_find(ward: str, rows: list[dict], path: Path) -> None:
    fig, ax = plt.subplots()
    names = [r["name"] for r in rows]
    ax.barh(range(len(rows)), [r["available"] for r in rows],
            color=["#888888" if r["stale"] else "#3b8c4b" for r in rows])
    ax.set_yticks(range(len(rows)), names, fontsize=7)
    ax.invert_yaxis()
    ax.set_title(f"Available beds: {ward}")
    _save(fig, path)
