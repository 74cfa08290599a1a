"""Loopback HTTP service backing the annotation UI.

Serves clip listings and frames, accepts annotation records (append-only
JSONL store, fsynced before the response goes out), and runs instruction
generation against an optional loaded checkpoint. Reads are concurrent;
writes serialize through one lock.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query
from pydantic import BaseModel

from . import skeleton
from .model import MotionToText, greedy_decode, load_checkpoint
from .skeleton import Coord, MotionClip
from .tokens import Vocabulary, decode

DEFAULT_PORT = 8787


class AnnotationIn(BaseModel):
    video_id: str
    start_s: float
    end_s: float
    instruction: str
    annotator: str | None = None


class GenerateIn(BaseModel):
    clip_id: str
    start_s: float
    end_s: float


@dataclass
class ServiceState:
    clips_dir: Path
    annotations_path: Path
    checkpoint_path: Path | None = None
    model: MotionToText | None = None
    vocab: Vocabulary | None = None
    next_id: int = 1
    lock: threading.Lock = field(default_factory=threading.Lock)

    @classmethod
    def create(
        cls,
        clips_dir: str | Path,
        annotations_path: str | Path,
        checkpoint_path: str | Path | None = None,
    ) -> "ServiceState":
        state = cls(
            clips_dir=Path(clips_dir),
            annotations_path=Path(annotations_path),
            checkpoint_path=Path(checkpoint_path) if checkpoint_path else None,
        )
        if state.checkpoint_path:
            state.model, meta = load_checkpoint(state.checkpoint_path)
            state.vocab = Vocabulary(words=tuple(meta["vocab_words"]))
        state.next_id = 1 + max(
            (rec["id"] for rec in state.stored_annotations()), default=0
        )
        return state

    def stored_annotations(self) -> list[dict]:
        if not self.annotations_path.exists():
            return []
        records = []
        for line in self.annotations_path.read_text().splitlines():
            if line.strip():
                records.append(json.loads(line))
        return records

    def list_clips(self) -> list[dict]:
        entries = []
        for path in sorted(self.clips_dir.glob("*.json")):
            clip = skeleton.load_clip(path)
            entries.append(
                {"clip_id": clip.clip_id, "duration_s": clip.duration_s, "fps": clip.fps}
            )
        return entries

    def load_clip(self, clip_id: str) -> MotionClip:
        path = self.clips_dir / f"{clip_id}.json"
        if not path.exists():
            raise HTTPException(status_code=404, detail=f"unknown clip {clip_id!r}")
        return skeleton.load_clip(path)

    def append_annotation(self, record: AnnotationIn) -> int:
        """Serialize writes; the record is durable before the id is returned."""
        with self.lock:
            record_id = self.next_id
            self.next_id += 1
            row = {"id": record_id, **record.model_dump(exclude_none=True)}
            self.annotations_path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.annotations_path, "a") as fh:
                fh.write(json.dumps(row) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
        return record_id


def _validate_annotation(record: AnnotationIn) -> None:
    problems = []
    if not record.video_id.strip():
        problems.append({"field": "video_id", "message": "video_id must be non-empty"})
    if record.start_s < 0:
        problems.append({"field": "start_s", "message": "start must be >= 0"})
    if record.start_s >= record.end_s:
        problems.append({"field": "end_s", "message": "start must precede end"})
    if not record.instruction.strip():
        problems.append({"field": "instruction", "message": "instruction must be non-empty"})
    if problems:
        raise HTTPException(status_code=400, detail=problems)


def create_app(state: ServiceState, ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="maaig annotation service")
    app.state.service = state
    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        # Serving the annotation tool from the same origin keeps fetches
        # root-relative; no CORS surface needed for this loopback tool.
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    @app.get("/clips")
    def clips() -> list[dict]:
        try:
            return state.list_clips()
        except OSError as e:
            raise HTTPException(status_code=500, detail=f"clip store unreadable: {e}")

    @app.get("/clips/{clip_id}/frames")
    def clip_frames(
        clip_id: str,
        frm: float | None = Query(None, alias="from"),
        to: float | None = None,
    ):
        clip = state.load_clip(clip_id)
        if frm is not None or to is not None:
            start = frm if frm is not None else 0.0
            end = to if to is not None else clip.duration_s
            try:
                clip = skeleton.clip_by_time(clip, start, end)
            except ValueError as e:
                raise HTTPException(status_code=400, detail=str(e))
        return {
            "clip_id": clip_id,
            "fps": clip.fps,
            "coord": clip.coord.value,
            "frames": clip.frames.tolist(),
        }

    @app.get("/annotations")
    def annotations() -> list[dict]:
        return state.stored_annotations()

    @app.post("/annotations")
    def post_annotation(record: AnnotationIn) -> dict:
        _validate_annotation(record)
        return {"id": state.append_annotation(record)}

    @app.post("/generate")
    def generate(req: GenerateIn) -> dict:
        if state.model is None or state.vocab is None:
            raise HTTPException(status_code=503, detail="no model loaded")
        clip = state.load_clip(req.clip_id)
        try:
            sub = skeleton.clip_by_time(clip, req.start_s, req.end_s)
        except ValueError as e:
            raise HTTPException(status_code=400, detail=str(e))
        if sub.coord is Coord.WORLD:
            sub = skeleton.world_to_local(sub)
        ids = greedy_decode(state.model, sub)
        return {"instruction": decode(state.vocab, ids)}

    return app


def serve(
    clips_dir: str | Path,
    annotations_path: str | Path,
    checkpoint_path: str | Path | None,
    port: int | None = None,
    host: str = "127.0.0.1",
    ui_dir: str | Path | None = None,
) -> None:
    """Run the service on loopback; MAAIG_PORT overrides the default port."""
    import uvicorn

    if port is None:
        port = int(os.environ.get("MAAIG_PORT", DEFAULT_PORT))
    state = ServiceState.create(clips_dir, annotations_path, checkpoint_path)
    if ui_dir is not None and not Path(ui_dir).is_dir():
        raise ValueError(f"UI directory {ui_dir} does not exist")
    uvicorn.run(create_app(state, ui_dir=ui_dir), host=host, port=port, log_level="warning")
