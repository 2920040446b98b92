"""HTTP rating-collection service.

Sessions move through four stages (individual -> collective -> ranking ->
closed).  Every mutation is appended to a per-session line-delimited JSON
store with an fsync'd, serialized writer; restarting the service replays
the store files to rebuild state, so any crash-truncated prefix still
yields a consistent session.  One rating submission (all four criteria)
is framed as a single store entry — partial submissions cannot exist.
"""

from __future__ import annotations

import json
import os
import secrets
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Header, Request, Response
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from streetgauge.catalog import Catalog
from streetgauge.imagery import read_srim
from streetgauge.ratings import (
    Participant,
    RankingRecord,
    RatingError,
    RatingRecord,
    rating_record_to_dict,
)
from streetgauge.scores import CRITERIA

STAGE_FLOW = ("individual", "collective", "ranking", "closed")


def load_rating_scale() -> dict:
    """The shared 1-4 scale descriptors served to rating clients."""
    with resources.files("streetgauge.data").joinpath("rating_scale.json").open() as fh:
        return json.load(fh)


class ServiceError(Exception):
    def __init__(self, status: int, detail: str):
        super().__init__(detail)
        self.status = status
        self.detail = detail


@dataclass
class SessionState:
    session_id: str
    token: str
    roster: dict[str, Participant]
    item_order: list[str]
    seed: int
    created_at: str
    stage: str = "individual"
    seq: int = 0
    # (participant_id, point_id) pairs already rated in the individual stage
    individual_done: set[tuple[str, str]] = field(default_factory=set)
    collective_done: set[str] = field(default_factory=set)
    ratings: list[RatingRecord] = field(default_factory=list)
    rankings: list[RankingRecord] = field(default_factory=list)

    def facilitators(self) -> set[str]:
        return {p.participant_id for p in self.roster.values() if p.facilitator}


def _parse_roster(entries) -> dict[str, Participant]:
    if not isinstance(entries, list) or not entries:
        raise ServiceError(400, "roster must be a non-empty list")
    roster: dict[str, Participant] = {}
    for e in entries:
        try:
            p = Participant(
                participant_id=str(e["participant_id"]),
                groups=frozenset(e["groups"]),
                facilitator=bool(e.get("facilitator", False)),
            )
        except (KeyError, TypeError) as exc:
            raise ServiceError(400, f"malformed roster entry: {e!r}") from exc
        except RatingError as exc:
            raise ServiceError(400, str(exc)) from exc
        if p.participant_id in roster:
            raise ServiceError(400, f"duplicate participant {p.participant_id!r}")
        roster[p.participant_id] = p
    return roster


class SessionManager:
    """All session state plus the append-only store behind one writer lock."""

    def __init__(self, catalog: Catalog, data_dir: str | Path):
        self.catalog = catalog
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.sessions: dict[str, SessionState] = {}
        self._write_lock = threading.Lock()
        self._replay_all()

    # ---- persistence -------------------------------------------------

    def _store_path(self, session_id: str) -> Path:
        return self.data_dir / f"session_{session_id}.jsonl"

    def _append(self, session: SessionState, entry: dict) -> None:
        """Serialize one entry to the session store; fsync before returning."""
        session.seq += 1
        entry = {
            "seq": session.seq,
            "ts": datetime.now(timezone.utc).isoformat(),
            **entry,
        }
        with self._write_lock:
            with open(self._store_path(session.session_id), "a", encoding="utf-8") as fh:
                fh.write(json.dumps(entry, sort_keys=True) + "\n")
                fh.flush()
                os.fsync(fh.fileno())

    def _replay_all(self) -> None:
        for path in sorted(self.data_dir.glob("session_*.jsonl")):
            session = self._replay(path)
            if session is not None:
                self.sessions[session.session_id] = session

    def _replay(self, path: Path) -> SessionState | None:
        session: SessionState | None = None
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                try:
                    entry = json.loads(line)
                except json.JSONDecodeError:
                    break  # truncated tail from a crash; keep the good prefix
                session = self._apply(session, entry)
        return session

    def _apply(self, session: SessionState | None, entry: dict) -> SessionState | None:
        kind = entry.get("kind")
        if kind == "created":
            session = SessionState(
                session_id=entry["session_id"],
                token=entry["token"],
                roster=_parse_roster(entry["roster"]),
                item_order=list(entry["item_order"]),
                seed=int(entry["seed"]),
                created_at=entry["ts"],
            )
            session.seq = entry["seq"]
            return session
        if session is None:
            return None
        session.seq = entry["seq"]
        if kind == "rating":
            stage = entry["stage"]
            pid = entry["participant_id"]
            point = entry["point_id"]
            rater = session.session_id if stage == "collective" else pid
            for criterion in CRITERIA:
                session.ratings.append(
                    RatingRecord(
                        participant_id=rater,
                        point_id=point,
                        criterion=criterion,
                        value=int(entry["values"][criterion]),
                        stage=stage,
                    )
                )
            if stage == "individual":
                session.individual_done.add((pid, point))
            else:
                session.collective_done.add(point)
        elif kind == "ranking":
            session.rankings.append(
                RankingRecord(
                    session_id=session.session_id,
                    most_inclusive=tuple(entry["most_inclusive"]),
                    least_inclusive=tuple(entry["least_inclusive"]),
                )
            )
        elif kind == "advance":
            session.stage = entry["stage"]
        return session

    # ---- operations ---------------------------------------------------

    def create_session(self, body: dict) -> SessionState:
        roster = _parse_roster(body.get("roster"))
        point_ids = body.get("point_ids")
        if not isinstance(point_ids, list) or not point_ids:
            raise ServiceError(400, "point_ids must be a non-empty list")
        unknown = [p for p in point_ids if p not in self.catalog.points]
        if unknown:
            raise ServiceError(400, f"unknown point ids: {unknown}")
        if len(set(point_ids)) != len(point_ids):
            raise ServiceError(400, "point_ids contains duplicates")
        seed = int(body.get("seed", 0))

        rng = np.random.default_rng(seed)
        order = [str(p) for p in point_ids]
        rng.shuffle(order)

        session = SessionState(
            session_id=secrets.token_hex(8),
            token=secrets.token_urlsafe(16),
            roster=roster,
            item_order=order,
            seed=seed,
            created_at=datetime.now(timezone.utc).isoformat(),
        )
        self.sessions[session.session_id] = session
        self._append(
            session,
            {
                "kind": "created",
                "session_id": session.session_id,
                "token": session.token,
                "roster": [
                    {
                        "participant_id": p.participant_id,
                        "groups": sorted(p.groups),
                        "facilitator": p.facilitator,
                    }
                    for p in roster.values()
                ],
                "item_order": order,
                "seed": seed,
            },
        )
        return session

    def get_session(self, session_id: str, token: str | None) -> SessionState:
        session = self.sessions.get(session_id)
        if session is None:
            raise ServiceError(404, f"no session {session_id!r}")
        if token != session.token:
            raise ServiceError(403, "missing or wrong session token")
        return session

    def next_item(self, session: SessionState, participant_id: str) -> str | None:
        if participant_id not in session.roster:
            raise ServiceError(403, f"participant {participant_id!r} not in roster")
        if session.stage == "individual":
            for point in session.item_order:
                if (participant_id, point) not in session.individual_done:
                    return point
            return None
        if session.stage == "collective":
            for point in session.item_order:
                if point not in session.collective_done:
                    return point
            return None
        return None

    def submit_rating(self, session: SessionState, body: dict) -> None:
        pid = str(body.get("participant_id", ""))
        point = str(body.get("point_id", ""))
        stage = str(body.get("stage", ""))
        values = body.get("values")
        if pid not in session.roster:
            raise ServiceError(403, f"participant {pid!r} not in roster")
        if point not in session.item_order:
            raise ServiceError(422, f"point {point!r} not part of this session")
        if stage not in ("individual", "collective"):
            raise ServiceError(422, f"unknown stage {stage!r}")
        if stage != session.stage:
            raise ServiceError(409, f"session is in stage {session.stage!r}, not {stage!r}")
        if not isinstance(values, dict) or set(values) != set(CRITERIA):
            raise ServiceError(422, f"values must rate exactly the criteria {list(CRITERIA)}")
        clean: dict[str, int] = {}
        for criterion in CRITERIA:
            v = values[criterion]
            if not isinstance(v, int) or isinstance(v, bool) or not 1 <= v <= 4:
                raise ServiceError(422, f"{criterion} value {v!r} outside 1..4")
            clean[criterion] = v
        if stage == "collective":
            if pid not in session.facilitators():
                raise ServiceError(403, "collective ratings require the facilitator role")
            if point in session.collective_done:
                raise ServiceError(409, f"point {point!r} already has a collective rating")
        else:
            if (pid, point) in session.individual_done:
                raise ServiceError(409, f"{pid!r} already rated point {point!r}")

        rater = session.session_id if stage == "collective" else pid
        records = [
            RatingRecord(
                participant_id=rater, point_id=point, criterion=c, value=clean[c], stage=stage
            )
            for c in CRITERIA
        ]
        # one framed entry for all four criteria: atomic on replay
        self._append(
            session,
            {
                "kind": "rating",
                "participant_id": pid,
                "point_id": point,
                "stage": stage,
                "values": clean,
            },
        )
        session.ratings.extend(records)
        if stage == "individual":
            session.individual_done.add((pid, point))
        else:
            session.collective_done.add(point)

    def submit_ranking(self, session: SessionState, body: dict) -> None:
        pid = str(body.get("participant_id", ""))
        if pid not in session.roster:
            raise ServiceError(403, f"participant {pid!r} not in roster")
        if session.stage != "ranking":
            raise ServiceError(409, f"session is in stage {session.stage!r}, not 'ranking'")
        most = body.get("most_inclusive")
        least = body.get("least_inclusive")
        if not isinstance(most, list) or not isinstance(least, list):
            raise ServiceError(422, "most_inclusive and least_inclusive must be lists")
        outside = [p for p in [*most, *least] if p not in session.item_order]
        if outside:
            raise ServiceError(422, f"points not in this session: {outside}")
        try:
            record = RankingRecord(
                session_id=session.session_id,
                most_inclusive=tuple(str(p) for p in most),
                least_inclusive=tuple(str(p) for p in least),
            )
        except RatingError as exc:
            raise ServiceError(422, str(exc)) from exc
        self._append(
            session,
            {
                "kind": "ranking",
                "participant_id": pid,
                "most_inclusive": list(record.most_inclusive),
                "least_inclusive": list(record.least_inclusive),
            },
        )
        session.rankings.append(record)

    def advance_stage(self, session: SessionState) -> str:
        idx = STAGE_FLOW.index(session.stage)
        if session.stage == "closed":
            raise ServiceError(409, "session already closed")
        new_stage = STAGE_FLOW[idx + 1]
        self._append(session, {"kind": "advance", "stage": new_stage})
        session.stage = new_stage
        return new_stage


def _image_pair(catalog: Catalog, point_id: str) -> list[str]:
    """Two representative frames from opposing angles of one point."""
    frames = sorted(catalog.frames_of_point(point_id), key=lambda f: f.angle_index)
    if not frames:
        return []
    if len(frames) == 1:
        return [frames[0].frame_id]
    return [frames[0].frame_id, frames[len(frames) // 2].frame_id]


def create_app(
    catalog: Catalog,
    data_dir: str | Path,
    image_dir: str | Path | None = None,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    """Build the rating-collection app around one catalog and store dir."""
    app = FastAPI(title="streetgauge rating service")
    manager = SessionManager(catalog, data_dir)
    app.state.manager = manager
    scale = load_rating_scale()

    @app.exception_handler(ServiceError)
    async def _service_error(_request: Request, exc: ServiceError):
        return JSONResponse(status_code=exc.status, content={"detail": exc.detail})

    def _descriptor(session: SessionState) -> dict:
        return {
            "session_id": session.session_id,
            "stage": session.stage,
            "created_at": session.created_at,
            "n_items": len(session.item_order),
            "item_order": session.item_order,
            "items": [
                {"point_id": p, "images": [f"/images/{fid}" for fid in _image_pair(catalog, p)]}
                for p in session.item_order
            ],
            "roster": [
                {
                    "participant_id": p.participant_id,
                    "groups": sorted(p.groups),
                    "facilitator": p.facilitator,
                }
                for p in session.roster.values()
            ],
        }

    @app.post("/sessions", status_code=201)
    async def create_session(body: dict):
        session = manager.create_session(body)
        return {**_descriptor(session), "token": session.token}

    @app.get("/sessions/{session_id}")
    async def get_session(session_id: str, x_session_token: str | None = Header(None)):
        return _descriptor(manager.get_session(session_id, x_session_token))

    @app.get("/sessions/{session_id}/next")
    async def next_item(
        session_id: str, participant_id: str, x_session_token: str | None = Header(None)
    ):
        session = manager.get_session(session_id, x_session_token)
        point = manager.next_item(session, participant_id)
        if point is None:
            return Response(status_code=204)
        return {
            "point_id": point,
            "stage": session.stage,
            "images": [f"/images/{fid}" for fid in _image_pair(catalog, point)],
            "criteria": list(CRITERIA),
            "scale": scale,
        }

    @app.post("/sessions/{session_id}/ratings", status_code=201)
    async def submit_rating(
        session_id: str, body: dict, x_session_token: str | None = Header(None)
    ):
        session = manager.get_session(session_id, x_session_token)
        manager.submit_rating(session, body)
        return {"recorded": len(CRITERIA), "stage": session.stage}

    @app.post("/sessions/{session_id}/rankings", status_code=201)
    async def submit_ranking(
        session_id: str, body: dict, x_session_token: str | None = Header(None)
    ):
        session = manager.get_session(session_id, x_session_token)
        manager.submit_ranking(session, body)
        return {"recorded": 1}

    @app.post("/sessions/{session_id}/advance")
    async def advance_stage(session_id: str, x_session_token: str | None = Header(None)):
        session = manager.get_session(session_id, x_session_token)
        return {"stage": manager.advance_stage(session)}

    @app.get("/sessions/{session_id}/export")
    async def export_session(session_id: str, x_session_token: str | None = Header(None)):
        session = manager.get_session(session_id, x_session_token)
        return {
            "session_id": session.session_id,
            "ratings": [rating_record_to_dict(r) for r in session.ratings],
            "rankings": [
                {
                    "session_id": r.session_id,
                    "most_inclusive": list(r.most_inclusive),
                    "least_inclusive": list(r.least_inclusive),
                }
                for r in session.rankings
            ],
        }

    @app.get("/scale")
    async def get_scale():
        return scale

    if image_dir is not None:
        image_root = Path(image_dir)

        @app.get("/images/{frame_id}")
        async def get_image(frame_id: str):
            if "/" in frame_id or "\\" in frame_id or ".." in frame_id:
                raise ServiceError(404, "no such image")
            png = image_root / f"{frame_id}.png"
            if png.exists():
                return Response(content=png.read_bytes(), media_type="image/png")
            srim = image_root / f"{frame_id}.srim"
            if srim.exists():
                # transcode the raw raster to PNG for browser clients
                from io import BytesIO

                from PIL import Image

                buf = BytesIO()
                Image.fromarray(read_srim(srim)).save(buf, format="PNG")
                return Response(content=buf.getvalue(), media_type="image/png")
            raise ServiceError(404, f"no image for frame {frame_id!r}")

    if ui_dir is not None:
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
