"""HTTP API: public read routes, authenticated ingestion, admin routes.

Read routes are open; write routes need a bearer credential whose source
matches the declared facility (admins may post for anyone). Every response
body carries the watermark and data timestamp it was computed at, and is
serialized canonically so equal watermarks yield byte-identical bodies.
"""

from __future__ import annotations

import json
from datetime import date, datetime, timezone

from fastapi import Depends, FastAPI, Header, HTTPException, Query, Request, Response

from . import aggregate
from .bedboard import WARD_BY_NAME, BedReport
from .config import Config, Credential
from .errors import (
    EpiwatchError,
    MissingHeader,
    MissingMandatoryColumn,
    OccupiedExceedsTotal,
    SupersededTimestamp,
    UnauthorizedReporter,
    UnknownHospital,
)
from .store import Store


def _parse_date(value: str | None, fallback: date) -> date:
    if value is None:
        return fallback
    try:
        return date.fromisoformat(value)
    except ValueError:
        raise HTTPException(status_code=400, detail=f"bad date {value!r}")


def create_app(store: Store, config: Config) -> FastAPI:
    app = FastAPI(title="epiwatch", version="0.1.0")

    def respond(data) -> Response:
        body = {
            "watermark": store.watermark,
            "generated_at": store.generated_at,
            "data": data,
        }
        return Response(
            content=json.dumps(body, sort_keys=True, separators=(",", ":")),
            media_type="application/json")

    def default_as_of() -> date:
        try:
            return datetime.fromisoformat(store.generated_at).date()
        except ValueError:
            return date.today()

    def credential(authorization: str | None = Header(default=None)) -> Credential:
        if not authorization or not authorization.startswith("Bearer "):
            raise HTTPException(status_code=401, detail="missing bearer credential")
        cred = config.credential_for(authorization.removeprefix("Bearer ").strip())
        if cred is None:
            raise HTTPException(status_code=401, detail="unknown credential")
        return cred

    def admin_credential(cred: Credential = Depends(credential)) -> Credential:
        if cred.role != "admin":
            raise HTTPException(status_code=403, detail="admin credential required")
        return cred

    async def read_payload(request: Request) -> bytes:
        length = request.headers.get("content-length")
        if length and int(length) > config.max_payload_bytes:
            raise HTTPException(status_code=413, detail="payload too large")
        body = await request.body()
        if len(body) > config.max_payload_bytes:
            raise HTTPException(status_code=413, detail="payload too large")
        return body

    def declared_source(cred: Credential, source: str | None) -> str:
        if source is None or source == cred.source:
            return cred.source
        if cred.role == "admin":
            return source
        raise HTTPException(
            status_code=403,
            detail=f"credential for {cred.source} may not post as {source}")

    # -- public read routes -------------------------------------------------

    @app.get("/v1/summary")
    def summary(as_of: str | None = None):
        return respond(aggregate.cumulative_summary(store, _parse_date(as_of, default_as_of())))

    @app.get("/v1/summary/national")
    def summary_national(frm: str | None = Query(default=None, alias="from"),
                         to: str | None = None):
        latest = None
        if store.national:
            top = max(store.national)
            confirmed, active, recovered, dead = store.national[top]
            latest = {
                "date": date.fromordinal(top).isoformat(),
                "confirmed": confirmed, "active": active,
                "recovered": recovered, "dead": dead,
            }
        data = {"latest": latest}
        if frm or to:
            to_d = _parse_date(to, default_as_of())
            frm_d = _parse_date(frm, date.fromordinal(to_d.toordinal() - 29))
            data["series"] = aggregate.national_comparison(store, frm_d, to_d)
        return respond(data)

    @app.get("/v1/categories")
    def categories(as_of: str | None = None):
        return respond(aggregate.category_breakdown(store, _parse_date(as_of, default_as_of())))

    def _range(frm: str | None, to: str | None) -> tuple[date, date]:
        to_d = _parse_date(to, default_as_of())
        frm_d = _parse_date(frm, date.fromordinal(to_d.toordinal() - 29))
        if frm_d > to_d:
            raise HTTPException(status_code=400, detail="from after to")
        return frm_d, to_d

    @app.get("/v1/series/daily")
    def series_daily(frm: str | None = Query(default=None, alias="from"), to: str | None = None):
        a, b = _range(frm, to)
        return respond(aggregate.daily_series(store, a, b))

    @app.get("/v1/series/cumulative")
    def series_cumulative(frm: str | None = Query(default=None, alias="from"),
                          to: str | None = None):
        a, b = _range(frm, to)
        return respond(aggregate.cumulative_series(store, a, b))

    @app.get("/v1/positivity")
    def positivity(frm: str | None = Query(default=None, alias="from"), to: str | None = None):
        a, b = _range(frm, to)
        return respond(aggregate.positivity_table(store, a, b))

    @app.get("/v1/regions/{level}")
    def regions(level: str, as_of: str | None = None, window: str = "cumulative"):
        if level not in ("city", "district"):
            raise HTTPException(status_code=404, detail="level must be city or district")
        if window not in ("cumulative", "day"):
            raise HTTPException(status_code=400, detail="window must be cumulative or day")
        return respond(aggregate.region_counts(
            store, level, _parse_date(as_of, default_as_of()), single_day=window == "day"))

    @app.get("/v1/crosstab")
    def crosstab(as_of: str | None = None):
        return respond(aggregate.crosstab_age_sex(store, _parse_date(as_of, default_as_of())))

    @app.get("/v1/mortality-protocol")
    def mortality(frm: str | None = Query(default=None, alias="from"), to: str | None = None):
        a, b = _range(frm, to)
        return respond(aggregate.mortality_protocol_series(store, a, b))

    @app.get("/v1/beds")
    def beds():
        return respond(store.beds.province_capacity(datetime.now(timezone.utc)))

    @app.get("/v1/beds/find")
    def beds_find(ward: str, min_beds: int = 1):
        if ward not in WARD_BY_NAME:
            raise HTTPException(status_code=400, detail=f"unknown ward {ward!r}")
        if min_beds < 1:
            raise HTTPException(status_code=400, detail="min_beds must be >= 1")
        return respond(store.beds.find_available(
            WARD_BY_NAME[ward], min_beds, datetime.now(timezone.utc)))

    @app.get("/v1/beds/{hospital}")
    def beds_hospital(hospital: str):
        try:
            return respond(store.beds.hospital_board(hospital, datetime.now(timezone.utc)))
        except UnknownHospital as exc:
            raise HTTPException(status_code=404, detail=str(exc))

    # -- authenticated ingestion ---------------------------------------------

    @app.post("/v1/ingest/cases")
    async def ingest_cases(request: Request, source: str | None = None,
                           source_file: str = "", cred: Credential = Depends(credential)):
        payload = await read_payload(request)
        src = declared_source(cred, source)
        try:
            report = store.ingest_cases(payload, src, source_file)
        except (MissingHeader, MissingMandatoryColumn) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return respond(report.as_dict())

    @app.post("/v1/ingest/specimens")
    async def ingest_specimens(request: Request, source: str | None = None,
                               source_file: str = "", cred: Credential = Depends(credential)):
        payload = await read_payload(request)
        src = declared_source(cred, source)
        try:
            report = store.ingest_specimens(payload, src, source_file)
        except (MissingHeader, MissingMandatoryColumn) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return respond(report.as_dict())

    @app.post("/v1/ingest/national")
    async def ingest_national(request: Request,
                              cred: Credential = Depends(admin_credential)):
        payload = await read_payload(request)
        try:
            report = store.ingest_national(payload, cred.source)
        except (MissingHeader, MissingMandatoryColumn) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return respond(report.as_dict())

    @app.post("/v1/beds/report")
    async def bed_report(request: Request, cred: Credential = Depends(credential)):
        body = await request.json()
        try:
            report = BedReport(
                hospital=body["hospital"],
                ward=WARD_BY_NAME[body["ward"]],
                total_beds=int(body["total_beds"]),
                occupied_beds=int(body["occupied_beds"]),
                reported_at=datetime.fromisoformat(body["reported_at"]),
                reporter=body.get("reporter") or cred.source,
            )
        except (KeyError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=f"bad bed report: {exc}")
        authorized_for = "*" if cred.role == "admin" else cred.source
        try:
            outcome = store.submit_bed_report(report, authorized_for)
        except OccupiedExceedsTotal as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        except UnauthorizedReporter as exc:
            raise HTTPException(status_code=403, detail=str(exc))
        except SupersededTimestamp as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except UnknownHospital as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except EpiwatchError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return respond({"outcome": outcome})

    # -- admin ----------------------------------------------------------------

    @app.get("/v1/admin/review-queue")
    def review_queue(cred: Credential = Depends(admin_credential)):
        return respond(store.review_queue_rows())

    @app.post("/v1/admin/review-queue/{queue_id}")
    def resolve_review(queue_id: int, target: str,
                       cred: Credential = Depends(admin_credential)):
        try:
            return respond(store.resolve_parked(queue_id, target))
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))

    @app.post("/v1/admin/unlink")
    def unlink(person: str, cred: Credential = Depends(admin_credential)):
        try:
            return respond(store.admin_unlink(person))
        except (KeyError, ValueError) as exc:
            raise HTTPException(status_code=404, detail=str(exc))

    return app
