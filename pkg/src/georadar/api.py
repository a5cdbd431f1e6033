"""Read-only HTTP surface over a detection engine.

GET /events        query by time span, keyword, and radius
GET /events/{id}   one event with its member tweets inlined
GET /status        window position, counters, last-shift timings

The handlers never mutate detection state, so serving concurrent queries is
safe while a replay drives the engine between requests. An optional static
directory (the map frontend build) is mounted at the root, after the API
routes so they keep precedence.
"""

from __future__ import annotations

import os

from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from fastapi.staticfiles import StaticFiles

from .engine import DetectionEngine
from .events import EventQuery


def create_app(engine: DetectionEngine, static_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="georadar", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["GET"],
        allow_headers=["*"],
    )

    @app.get("/events")
    def get_events(
        t_from: int | None = Query(default=None, alias="from"),
        t_to: int | None = Query(default=None, alias="to"),
        keyword: str | None = None,
        lat: float | None = None,
        lon: float | None = None,
        radius_m: float | None = None,
        limit: int | None = Query(default=None, ge=1),
    ) -> dict:
        try:
            q = EventQuery(
                t_from=t_from,
                t_to=t_to,
                keyword=keyword,
                lat=lat,
                lon=lon,
                radius_m=radius_m,
            )
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        records = engine.query(q)
        total = len(records)
        if limit is not None:
            records = records[:limit]
        return {"count": total, "events": [r.to_payload() for r in records]}

    @app.get("/events/{event_id}")
    def get_event(event_id: int) -> dict:
        found = engine.get_event(event_id)
        if found is None:
            raise HTTPException(status_code=404, detail=f"no event {event_id}")
        record, members = found
        return {
            "event": record.to_payload(),
            "members": [t.to_record() for t in members],
        }

    @app.get("/status")
    def get_status() -> dict:
        return engine.status()

    if static_dir is not None and os.path.isdir(static_dir):
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
