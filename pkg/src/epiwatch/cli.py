"""Administrative command line: import feeds, serve the API, render
reports (CSV plus figure), inspect the review queue, generate synthetic
data, and run the invariant audit."""

from __future__ import annotations

import json
import sys
from datetime import date
from pathlib import Path

import click

from .config import load_config
from .errors import EpiwatchError
from .report import REPORT_KINDS, render_report


def _open_store(config_path: str | None, store_dir: str | None):
    from .store import Store

    cfg = load_config(config_path)
    if store_dir:
        cfg.storage_path = Path(store_dir)
    return Store.open(cfg), cfg


def _parse_date_opt(value: str | None) -> date | None:
    return date.fromisoformat(value) if value else None


@click.group()
def main():
    """Epidemic surveillance platform: feeds in, published numbers out."""


@main.command("import")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--store", "store_dir", type=click.Path(), default=None,
              help="Storage directory (overrides config).")
@click.option("--kind", type=click.Choice(["cases", "specimens", "national", "beds"]),
              required=True)
@click.option("--source", default="cli", help="Facility/lab id the feed is declared for.")
@click.argument("files", nargs=-1, required=True, type=click.Path(exists=True))
def import_cmd(config_path, store_dir, kind, source, files):
    """Load one or more feed files into the store."""
    store, _ = _open_store(config_path, store_dir)
    failures = 0
    for path in files:
        payload = Path(path).read_bytes()
        try:
            if kind == "cases":
                report = store.ingest_cases(payload, source, source_file=path)
            elif kind == "specimens":
                report = store.ingest_specimens(payload, source, source_file=path)
            elif kind == "national":
                report = store.ingest_national(payload, source, source_file=path)
            else:
                report = store.ingest_bed_csv(payload, reporter=source, source_file=path)
        except EpiwatchError as exc:
            click.echo(f"{path}: FATAL {exc}", err=True)
            failures += 1
            continue
        click.echo(
            f"{path}: accepted {report.accepted}/{report.total} "
            f"(rejected {report.rejected}, duplicates {report.duplicates}, "
            f"new persons {report.new_persons}, merged {report.merged_into_existing}, "
            f"parked {report.parked}) watermark={report.watermark}")
        if report.rejects:
            for r in report.rejects[:10]:
                click.echo(f"  line {r['line']}: {r['field']} {r['rule']}", err=True)
            if report.rejected > 10:
                click.echo(f"  ... {report.rejected - 10} more (see rejects.csv)", err=True)
    sys.exit(1 if failures else 0)


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--store", "store_dir", type=click.Path(), default=None)
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
def serve(config_path, store_dir, host, port):
    """Start the HTTP API (readiness follows full log replay)."""
    import uvicorn

    from .api import create_app

    store, cfg = _open_store(config_path, store_dir)
    app = create_app(store, cfg)
    click.echo(f"replayed {store.watermark} events; serving on "
               f"{host or cfg.host}:{port or cfg.port}")
    uvicorn.run(app, host=host or cfg.host, port=port or cfg.port, log_level="warning")


@main.command()
@click.argument("kind", type=click.Choice(REPORT_KINDS))
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--store", "store_dir", type=click.Path(), default=None)
@click.option("--as-of", default=None, help="ISO date for point-in-time reports.")
@click.option("--from", "frm", default=None, help="ISO date, series start.")
@click.option("--to", default=None, help="ISO date, series end.")
@click.option("--level", type=click.Choice(["city", "district"]), default="district")
@click.option("--hospital", default=None)
@click.option("--ward", default=None)
@click.option("--min-beds", type=int, default=1)
@click.option("--out", type=click.Path(), required=True, help="CSV output path.")
@click.option("--figure/--no-figure", default=True,
              help="Also render a PNG next to the CSV (default on).")
def report(kind, config_path, store_dir, as_of, frm, to, level, hospital, ward,
           min_beds, out, figure):
    """Render one aggregate as delimited text plus a figure."""
    store, _ = _open_store(config_path, store_dir)
    out_path = Path(out)
    figure_path = out_path.with_suffix(".png") if figure else None
    try:
        meta = render_report(
            store, kind, out_path, figure_path,
            as_of=_parse_date_opt(as_of), frm=_parse_date_opt(frm),
            to=_parse_date_opt(to), level=level, hospital=hospital,
            ward=ward, min_beds=min_beds)
    except EpiwatchError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(f"wrote {meta['out']}" + (f" and {meta['figure']}" if figure else "")
               + f" at watermark {meta['watermark']}")


@main.group("review-queue")
def review_queue():
    """Inspect or resolve ambiguous-linkage events."""


@review_queue.command("list")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--store", "store_dir", type=click.Path(), default=None)
@click.option("--out", type=click.Path(), default=None, help="Write CSV instead of stdout.")
def review_list(config_path, store_dir, out):
    store, _ = _open_store(config_path, store_dir)
    rows = store.review_queue_rows()
    lines = ["queue_id,event_digest,name,dob,sex,report_date,candidates"]
    for r in rows:
        lines.append(",".join([
            str(r["queue_id"]), r["event_digest"], r["name"], r["dob"] or "",
            r["sex"], r["report_date"] or "", ";".join(r["candidates"])]))
    text = "\n".join(lines) + "\n"
    if out:
        Path(out).write_text(text)
        click.echo(f"wrote {out} ({len(rows)} open items)")
    else:
        click.echo(text, nl=False)


@review_queue.command("resolve")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--store", "store_dir", type=click.Path(), default=None)
@click.option("--id", "queue_id", type=int, required=True)
@click.option("--target", required=True,
              help='Person key (P00000123) or "new".')
def review_resolve(config_path, store_dir, queue_id, target):
    store, _ = _open_store(config_path, store_dir)
    try:
        result = store.resolve_parked(queue_id, target)
    except (KeyError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(json.dumps(result))


@main.command()
@click.option("--out", type=click.Path(), required=True)
@click.option("--seed", type=int, default=42)
@click.option("--persons", type=int, default=1000)
@click.option("--days", type=int, default=90)
@click.option("--fixtures", "fixtures_only", is_flag=True,
              help="Write the bundled snapshot fixtures (category, positivity, beds) "
                   "expanded to person-level feeds instead of a random population.")
def generate(out, seed, persons, days, fixtures_only):
    """Deterministic synthetic feeds: same seed, same bytes."""
    from . import synth

    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if fixtures_only:
        n1 = synth.category_fixture_csv(out_dir / "category_cases.csv")
        n2 = synth.positivity_fixture_csv(out_dir / "positivity_specimens.csv")
        n3 = synth.bed_fixture_csv(out_dir / "bed_reports.csv")
        click.echo(f"wrote category_cases.csv ({n1} rows), "
                   f"positivity_specimens.csv ({n2} rows), bed_reports.csv ({n3} rows)")
    else:
        meta = synth.population_csv(out_dir, seed=seed, persons=persons, days=days)
        click.echo(json.dumps(meta))


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--store", "store_dir", type=click.Path(), default=None)
@click.option("--sample", type=int, default=2000,
              help="Persons to replay-check (deterministic sample).")
def verify(config_path, store_dir, sample):
    """Run the full invariant audit; nonzero exit on any violation."""
    store, _ = _open_store(config_path, store_dir)
    problems = store.verify(sample=sample)
    if problems:
        for p in problems:
            click.echo(f"VIOLATION: {p}", err=True)
        sys.exit(1)
    click.echo(f"ok: {store.person_count()} persons, watermark {store.watermark}, "
               f"no violations")


if __name__ == "__main__":
    main()
