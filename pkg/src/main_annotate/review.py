"""Human verification service: browse narratives, save adjudicated annotation
sets, track per-narrative review time.

State on disk, all written atomically (temp file + rename):
  verified_dir/<narrative_id>.json         verified AnnotationSet (rater "gold")
  verified_dir/<narrative_id>.review.json  {"version", "review_seconds", "status"}

Concurrent saves to one narrative serialize on a per-narrative lock and
resolve last-write-wins; a client that sends its loaded version token gets a
409 instead when someone else saved first.
"""

from __future__ import annotations

import json
import os
import tempfile
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import tomli

from .errors import AnnotationFormatError, ConfigError
from .chat import Transcript, parse_corpus_dir, load_corpus_manifest
from .prompting import validate_annotation
from .rubric import (
    AnnotationSet,
    Story,
    element_table,
    load_annotation_dir,
    positions_from_obj,
    positions_to_obj,
    save_annotation,
    score_annotation,
)

STATUSES = ("pending", "in_progress", "verified")


class NotFound(Exception):
    pass


class VersionConflict(Exception):
    def __init__(self, narrative_id: str, current_version: int):
        super().__init__(f"{narrative_id}: version changed; reload")
        self.current_version = current_version


class ValidationFailed(Exception):
    def __init__(self, details: list[str]):
        super().__init__("; ".join(details))
        self.details = details


@dataclass
class ReviewConfig:
    corpus_dir: Path
    model_dir: Path
    verified_dir: Path
    corpus_manifest: Path | None = None
    static_dir: Path | None = None
    verified_rater_id: str = "gold"
    human_dirs: dict[str, Path] = field(default_factory=dict)


def load_review_config(path: Path) -> ReviewConfig:
    """[review] section of a TOML config file; paths relative to the file."""
    try:
        with open(path, "rb") as fh:
            doc = tomli.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config not found: {path}")
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}")
    section = doc.get("review")
    if not isinstance(section, dict):
        raise ConfigError(f"{path}: missing [review] section")
    base = Path(path).resolve().parent

    def resolve(key: str, required: bool = False) -> Path | None:
        value = section.get(key)
        if value is None:
            if required:
                raise ConfigError(f"{path}: [review] needs {key}")
            return None
        return (base / str(value)).resolve()

    humans = {
        name: (base / str(p)).resolve()
        for name, p in (section.get("human_dirs") or {}).items()
    }
    return ReviewConfig(
        corpus_dir=resolve("corpus_dir", required=True),
        model_dir=resolve("model_dir", required=True),
        verified_dir=resolve("verified_dir", required=True),
        corpus_manifest=resolve("corpus_manifest"),
        static_dir=resolve("static_dir"),
        verified_rater_id=str(section.get("verified_rater_id", "gold")),
        human_dirs=humans,
    )


@dataclass
class ReviewState:
    narrative_id: str
    status: str = "pending"
    version: int = 0
    review_seconds: float = 0.0


def _atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class ReviewStore:
    """All review state for one corpus; thread-safe per narrative."""

    def __init__(self, config: ReviewConfig):
        self.config = config
        config.verified_dir.mkdir(parents=True, exist_ok=True)
        manifest = (
            load_corpus_manifest(config.corpus_manifest)
            if config.corpus_manifest
            else {}
        )
        transcripts, failures = parse_corpus_dir(config.corpus_dir, manifest=manifest)
        if failures:
            names = ", ".join(str(path) for path, _ in failures)
            raise ConfigError(f"unparseable transcripts: {names}")
        self.transcripts: dict[str, Transcript] = {
            t.narrative_id: t for t in transcripts
        }
        self.model_sets = load_annotation_dir(config.model_dir)
        self.verified_sets = load_annotation_dir(config.verified_dir)
        self.humans = {
            name: load_annotation_dir(path)
            for name, path in config.human_dirs.items()
        }
        self.states: dict[str, ReviewState] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._global = threading.Lock()
        for nid in self.transcripts:
            self._locks[nid] = threading.Lock()
            self.states[nid] = self._load_state(nid)

    # -- state persistence ---------------------------------------------------

    def _sidecar_path(self, nid: str) -> Path:
        return self.config.verified_dir / f"{nid}.review.json"

    def _load_state(self, nid: str) -> ReviewState:
        state = ReviewState(nid)
        path = self._sidecar_path(nid)
        if path.exists():
            try:
                doc = json.loads(path.read_text(encoding="utf-8"))
                state.version = int(doc.get("version", 0))
                state.review_seconds = float(doc.get("review_seconds", 0.0))
                status = str(doc.get("status", "pending"))
                if status in STATUSES:
                    state.status = status
            except (ValueError, OSError):
                pass
        if nid in self.verified_sets:
            state.status = "verified"
        return state

    def _save_state(self, state: ReviewState) -> None:
        doc = {
            "version": state.version,
            "review_seconds": state.review_seconds,
            "status": state.status,
        }
        _atomic_write(
            self._sidecar_path(state.narrative_id),
            json.dumps(doc, indent=2) + "\n",
        )

    # -- queries -------------------------------------------------------------

    def _require(self, nid: str) -> Transcript:
        t = self.transcripts.get(nid)
        if t is None:
            raise NotFound(nid)
        return t

    def list_narratives(self) -> list[dict]:
        rows = []
        for nid in sorted(self.transcripts):
            t = self.transcripts[nid]
            model = self.model_sets.get(nid)
            verified = self.verified_sets.get(nid)
            rows.append(
                {
                    "narrative_id": nid,
                    "story": t.story.value if t.story else None,
                    "cohort": t.participant.cohort.value if t.participant.cohort else None,
                    "status": self.states[nid].status,
                    "score_model": score_annotation(model) if model else None,
                    "score_verified": score_annotation(verified) if verified else None,
                }
            )
        return rows

    def get_narrative(self, nid: str) -> dict:
        t = self._require(nid)
        model = self.model_sets.get(nid)
        verified = self.verified_sets.get(nid)
        story = t.story or Story.DOG
        doc = {
            "narrative_id": nid,
            "story": t.story.value if t.story else None,
            "cohort": t.participant.cohort.value if t.participant.cohort else None,
            "status": self.states[nid].status,
            "version": self.states[nid].version,
            "utterances": [
                {"index": u.index, "raw": u.raw_text, "clean": u.clean_text}
                for u in t.utterances
            ],
            "element_table": [
                {
                    "element": row.element.value,
                    "label": row.label,
                    "name": row.name,
                    "episode": row.episode,
                    "category": row.category.value,
                    "description": row.description,
                }
                for row in element_table(story)
            ],
            "model_positions": positions_to_obj(model.positions) if model else None,
            "verified_positions": positions_to_obj(verified.positions) if verified else None,
        }
        if self.humans:
            human_positions = {}
            for name, sets in sorted(self.humans.items()):
                if nid in sets:
                    human_positions[name] = positions_to_obj(sets[nid].positions)
            doc["human_positions"] = human_positions
            doc["disagreement_elements"] = self._disagreements(nid)
        return doc

    def _disagreements(self, nid: str) -> list[str]:
        """Elements where the configured human raters differ on presence."""
        sets = [s[nid] for s in self.humans.values() if nid in s]
        if len(sets) < 2:
            return []
        out = []
        for e in sets[0].positions:
            presence = {bool(s.positions[e]) for s in sets}
            if len(presence) > 1:
                out.append(e.value)
        return sorted(out, key=lambda code: int(code[1:]))

    # -- mutations -----------------------------------------------------------

    def put_verified(
        self, nid: str, positions_payload: object, version: int | None
    ) -> dict:
        t = self._require(nid)
        try:
            positions = positions_from_obj(positions_payload, source=nid)
        except AnnotationFormatError as exc:
            raise ValidationFailed([str(exc)])
        annotation = AnnotationSet(
            narrative_id=nid,
            rater_id=self.config.verified_rater_id,
            story=t.story,
            positions=positions,
        )
        errors = [
            f"{i.kind}: {i.detail}"
            for i in validate_annotation(annotation, t)
            if i.severity == "error"
        ]
        if errors:
            raise ValidationFailed(errors)
        with self._locks[nid]:
            state = self.states[nid]
            if version is not None and version != state.version:
                raise VersionConflict(nid, state.version)
            save_annotation(annotation, self.config.verified_dir / f"{nid}.json")
            self.verified_sets[nid] = annotation
            state.version += 1
            state.status = "verified"
            self._save_state(state)
            return {
                "status": state.status,
                "score": score_annotation(annotation),
                "version": state.version,
            }

    def heartbeat(self, nid: str, seconds: object) -> dict:
        self._require(nid)
        try:
            value = float(seconds)
        except (TypeError, ValueError):
            raise ValidationFailed(["seconds must be a number"])
        if value < 0 or value != value:  # NaN guard
            raise ValidationFailed(["seconds must be non-negative"])
        with self._locks[nid]:
            state = self.states[nid]
            state.review_seconds += value
            if state.status == "pending":
                state.status = "in_progress"
            self._save_state(state)
            return {
                "status": state.status,
                "review_seconds": state.review_seconds,
            }

    def progress(self) -> dict:
        counts = {status: 0 for status in STATUSES}
        total_seconds = 0.0
        for state in self.states.values():
            counts[state.status] += 1
            total_seconds += state.review_seconds
        return {
            "total": len(self.states),
            **counts,
            "review_seconds_total": total_seconds,
        }


def create_app(store: ReviewStore):
    """FastAPI app over a ReviewStore; also serves the built UI if configured."""
    from fastapi import FastAPI, Request
    from fastapi.exceptions import RequestValidationError
    from fastapi.responses import JSONResponse

    app = FastAPI(title="narrative review service")

    @app.exception_handler(NotFound)
    async def _not_found(request: Request, exc: NotFound):
        return JSONResponse(status_code=404, content={"detail": f"unknown narrative: {exc}"})

    @app.exception_handler(VersionConflict)
    async def _conflict(request: Request, exc: VersionConflict):
        return JSONResponse(
            status_code=409,
            content={"detail": str(exc), "version": exc.current_version},
        )

    @app.exception_handler(ValidationFailed)
    async def _invalid(request: Request, exc: ValidationFailed):
        return JSONResponse(status_code=400, content={"detail": exc.details})

    @app.exception_handler(RequestValidationError)
    async def _schema(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": [str(e) for e in exc.errors()]})

    @app.get("/api/narratives")
    async def narratives():
        return store.list_narratives()

    @app.get("/api/narratives/{nid}")
    async def narrative(nid: str):
        return store.get_narrative(nid)

    @app.put("/api/narratives/{nid}/verified")
    async def put_verified(nid: str, body: dict):
        if "positions" not in body:
            raise ValidationFailed(["body must contain positions"])
        version = body.get("version")
        if version is not None and not isinstance(version, int):
            raise ValidationFailed(["version must be an integer or null"])
        return store.put_verified(nid, body["positions"], version)

    @app.post("/api/narratives/{nid}/heartbeat")
    async def heartbeat(nid: str, body: dict):
        if "seconds" not in body:
            raise ValidationFailed(["body must contain seconds"])
        return store.heartbeat(nid, body["seconds"])

    @app.get("/api/progress")
    async def progress():
        return store.progress()

    static = store.config.static_dir
    if static and Path(static).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static), html=True), name="ui")

    return app


def serve(config: ReviewConfig, host: str, port: int) -> None:
    import uvicorn

    store = ReviewStore(config)
    app = create_app(store)
    uvicorn.run(app, host=host, port=port, log_level="info")
