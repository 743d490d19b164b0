"""HTTP annotation service: delivers tasks, records judgments durably, and
exposes progress and raw exports.

Single-node design: judgments append to a per-project JSONL log guarded by a
lock and fsynced before the submission is acknowledged, so a killed process
never loses an acked judgment. Task delivery is sequential within a summary,
which keeps unit positions meaningful for timing analysis.
"""
from __future__ import annotations

import json
import secrets
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import numpy as np
from fastapi import Body, FastAPI, Header, HTTPException, Query, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .assign import Assignment
from .judgments import (
    CoarseJudgment,
    DuplicateJudgmentError,
    FineJudgment,
    JudgmentLog,
    ScaleSpec,
)

DEFAULT_INSTRUCTIONS_FINE = (
    "A span of text is highlighted in the summary. Decide whether all facts in "
    "the highlighted span are supported by the source document. Choose Yes if "
    "every fact is supported; choose No if any information contradicts the "
    "source or is not stated, implied, or entailed by it. Highlighted source "
    "hints may or may not be helpful; do not make a judgment based only on the "
    "hints. Read the source document and search it yourself when unsure."
)

DEFAULT_INSTRUCTIONS_COARSE = (
    "Rate the whole summary for correctness on the displayed scale, where the "
    "lowest rating means most or all of the summary is wrong or irrelevant to "
    "the source document and the highest means most or all of it is correct. "
    "A factual error is a statement that contradicts the source document or is "
    "not directly stated, heavily implied, or logically entailed by it. You "
    "may optionally add a comment to qualify your rating."
)


@dataclass
class Project:
    """One annotation round: corpus slice, assignments, and its judgment log."""

    project_id: str
    mode: str
    instructions: str
    documents: dict[str, dict]  # doc_id -> {text, sentences: [{text, span}]}
    summaries: dict[str, dict]  # summary_id -> {doc_id, system_id, text}
    units: dict[tuple[str, int], dict]  # (summary_id, unit_index) -> {text, span}
    assignments: list[Assignment]
    hints: dict[tuple[str, int], list[int]]
    slot_tokens: dict[int, str]
    scale: ScaleSpec | None
    log: JudgmentLog

    def slots(self) -> list[int]:
        return sorted({a.annotator_slot for a in self.assignments})

    def assignments_for(self, slot: int) -> list[Assignment]:
        return sorted(
            (a for a in self.assignments if a.annotator_slot == slot),
            key=lambda a: a.summary_id,
        )


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _parse_project_payload(payload: dict, data_dir: Path) -> Project:
    for key in ("project_id", "mode", "summaries", "assignments"):
        if key not in payload:
            raise ValueError(f"project payload missing {key!r}")
    project_id = str(payload["project_id"])
    if not project_id or "/" in project_id or project_id.startswith("."):
        raise ValueError(f"invalid project_id {project_id!r}")
    mode = payload["mode"]
    if mode not in ("FINE", "COARSE"):
        raise ValueError(f"mode must be FINE or COARSE, got {mode!r}")

    documents = {}
    for rec in payload.get("documents", []):
        documents[rec["doc_id"]] = {
            "text": rec["text"],
            "sentences": [
                {"text": s["text"], "span": list(s["span"])} for s in rec.get("sentences", [])
            ],
        }
    summaries = {}
    for rec in payload["summaries"]:
        if rec["doc_id"] not in documents:
            raise ValueError(
                f"summary {rec['summary_id']!r} references unknown doc {rec['doc_id']!r}"
            )
        summaries[rec["summary_id"]] = {
            "doc_id": rec["doc_id"],
            "system_id": rec.get("system_id", ""),
            "text": rec["text"],
        }

    units = {}
    for rec in payload.get("units", []):
        units[(rec["summary_id"], int(rec["unit_index"]))] = {
            "text": rec["text"],
            "span": list(rec["span"]),
        }

    assignments = [Assignment.from_record(rec) for rec in payload["assignments"]]
    for a in assignments:
        if a.summary_id not in summaries:
            raise ValueError(f"assignment references unknown summary {a.summary_id!r}")
        if a.mode != mode:
            raise ValueError(f"assignment mode {a.mode} does not match project mode {mode}")
        for u in a.unit_indices:
            if (a.summary_id, u) not in units:
                raise ValueError(f"assignment references unknown unit {(a.summary_id, u)}")

    hints = {}
    for rec in payload.get("hints", []):
        hints[(rec["summary_id"], int(rec["unit_index"]))] = [
            int(i) for i in rec["highlights"]
        ][:5]

    scale = None
    if payload.get("scale"):
        scale = ScaleSpec(float(payload["scale"]["min"]), float(payload["scale"]["max"]))
    if mode == "COARSE" and scale is None:
        scale = ScaleSpec(0, 5)

    instructions = payload.get("instructions") or (
        DEFAULT_INSTRUCTIONS_FINE if mode == "FINE" else DEFAULT_INSTRUCTIONS_COARSE
    )

    slots = sorted({a.annotator_slot for a in assignments})
    tokens = payload.get("slot_tokens") or {
        slot: secrets.token_hex(8) for slot in slots
    }
    tokens = {int(k): str(v) for k, v in (tokens.items() if isinstance(tokens, dict) else tokens)}

    project_dir = data_dir / "projects" / project_id
    project_dir.mkdir(parents=True, exist_ok=True)
    return Project(
        project_id=project_id,
        mode=mode,
        instructions=instructions,
        documents=documents,
        summaries=summaries,
        units=units,
        assignments=assignments,
        hints=hints,
        slot_tokens=tokens,
        scale=scale,
        log=JudgmentLog(project_dir / "judgments.jsonl"),
    )


def _project_to_payload(p: Project) -> dict:
    return {
        "project_id": p.project_id,
        "mode": p.mode,
        "instructions": p.instructions,
        "scale": {"min": p.scale.min, "max": p.scale.max} if p.scale else None,
        "documents": [
            {"doc_id": doc_id, **doc} for doc_id, doc in p.documents.items()
        ],
        "summaries": [
            {"summary_id": sid, **rec} for sid, rec in p.summaries.items()
        ],
        "units": [
            {"summary_id": sid, "unit_index": idx, **rec}
            for (sid, idx), rec in p.units.items()
        ],
        "assignments": [a.to_record() for a in p.assignments],
        "hints": [
            {"summary_id": sid, "unit_index": idx, "highlights": hl}
            for (sid, idx), hl in p.hints.items()
        ],
        "slot_tokens": p.slot_tokens,
    }


class ProjectStore:
    def __init__(self, data_dir: Path):
        self.data_dir = Path(data_dir)
        self._lock = threading.Lock()
        self.projects: dict[str, Project] = {}
        self._load_existing()

    def _load_existing(self) -> None:
        root = self.data_dir / "projects"
        if not root.is_dir():
            return
        for project_file in sorted(root.glob("*/project.json")):
            payload = json.loads(project_file.read_text(encoding="utf-8"))
            project = _parse_project_payload(payload, self.data_dir)
            self.projects[project.project_id] = project

    def create(self, payload: dict) -> Project:
        with self._lock:
            project = _parse_project_payload(payload, self.data_dir)
            if project.project_id in self.projects:
                raise ValueError(f"project {project.project_id!r} already exists")
            project_file = self.data_dir / "projects" / project.project_id / "project.json"
            project_file.write_text(
                json.dumps(_project_to_payload(project), ensure_ascii=False), encoding="utf-8"
            )
            self.projects[project.project_id] = project
            return project

    def get(self, project_id: str) -> Project:
        try:
            return self.projects[project_id]
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown project {project_id!r}") from None


def _check_slot(project: Project, slot: int, token: str | None) -> None:
    if slot not in project.slot_tokens:
        raise HTTPException(status_code=404, detail=f"unknown annotator slot {slot}")
    if token != project.slot_tokens[slot]:
        raise HTTPException(status_code=401, detail="bad or missing annotator token")


def _judged_keys(project: Project) -> set[tuple]:
    return {j.key for j in project.log.judgments()}


def _task_view(project: Project, a: Assignment, unit_index: int | None, position: tuple[int, int]) -> dict:
    summary = project.summaries[a.summary_id]
    doc = project.documents.get(summary["doc_id"], {"text": "", "sentences": []})
    view: dict[str, Any] = {
        "project_id": project.project_id,
        "mode": a.mode,
        "summary_id": a.summary_id,
        "annotator_slot": a.annotator_slot,
        "hint_mode": a.hint_mode,
        "instructions": project.instructions,
        "summary_text": summary["text"],
        "source_doc_id": summary["doc_id"],
        "source_text": doc["text"],
        "position": {"index": position[0], "total": position[1]},
    }
    if a.mode == "FINE":
        unit = project.units[(a.summary_id, unit_index)]
        hints: list[dict] = []
        if a.hint_mode != "NONE":
            for sent_idx in project.hints.get((a.summary_id, unit_index), []):
                if 0 <= sent_idx < len(doc["sentences"]):
                    hints.append(
                        {"sentence_index": sent_idx, "span": doc["sentences"][sent_idx]["span"]}
                    )
        view.update(
            {
                "unit_index": unit_index,
                "unit_text": unit["text"],
                "active_span": unit["span"],
                "hints": hints,
            }
        )
    else:
        view.update(
            {
                "scale": {"min": project.scale.min, "max": project.scale.max},
                "hints": [],
            }
        )
    return view


def _next_task(project: Project, slot: int) -> dict | None:
    judged = _judged_keys(project)
    for a in project.assignments_for(slot):
        if a.mode == "FINE":
            pending = [u for u in a.unit_indices if (a.summary_id, u, slot) not in judged]
            if pending:
                done = len(a.unit_indices) - len(pending)
                return _task_view(project, a, pending[0], (done, len(a.unit_indices)))
        else:
            if (a.summary_id, slot) not in judged:
                return _task_view(project, a, None, (0, 1))
    return None


def _progress(project: Project) -> dict:
    judged = _judged_keys(project)
    slots = []
    for slot in project.slots():
        total = 0
        done = 0
        times: list[int] = []
        for a in project.assignments_for(slot):
            if a.mode == "FINE":
                total += len(a.unit_indices)
                for u in a.unit_indices:
                    if (a.summary_id, u, slot) in judged:
                        done += 1
            else:
                total += 1
                done += (a.summary_id, slot) in judged
        for j in project.log.judgments():
            if isinstance(j, FineJudgment) and j.annotator_slot == slot:
                times.append(j.elapsed_ms)
        slots.append(
            {
                "slot": slot,
                "judged": done,
                "total": total,
                "median_elapsed_ms": float(np.median(times)) if times else None,
            }
        )
    return {"project_id": project.project_id, "slots": slots}


def _submit(project: Project, payload: dict) -> dict:
    kind = payload.get("kind")
    slot = int(payload.get("annotator_slot", -1))
    summary_id = payload.get("summary_id", "")
    open_assignments = {
        (a.summary_id, a.annotator_slot): a for a in project.assignments
    }
    a = open_assignments.get((summary_id, slot))
    if a is None:
        raise HTTPException(
            status_code=400, detail=f"no assignment for summary {summary_id!r} slot {slot}"
        )

    try:
        if kind == "fine":
            unit_index = int(payload["unit_index"])
            if unit_index not in a.unit_indices:
                raise HTTPException(
                    status_code=400,
                    detail=f"unit {unit_index} is not in slot {slot}'s assigned subset",
                )
            judgment: FineJudgment | CoarseJudgment = FineJudgment(
                summary_id=summary_id,
                unit_index=unit_index,
                annotator_slot=slot,
                label=int(payload["label"]),
                elapsed_ms=int(payload.get("elapsed_ms", 0)),
                hint_mode=a.hint_mode,
                submitted_at=_now(),
            )
        elif kind == "coarse":
            scale = a.scale or project.scale or ScaleSpec(0, 5)
            judgment = CoarseJudgment(
                summary_id=summary_id,
                annotator_slot=slot,
                rating=float(payload["rating"]),
                scale=scale,
                comment=payload.get("comment"),
                submitted_at=_now(),
            )
        else:
            raise HTTPException(status_code=400, detail="kind must be 'fine' or 'coarse'")
    except (KeyError, TypeError) as e:
        raise HTTPException(status_code=400, detail=f"malformed judgment payload: {e}") from e
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e)) from e

    try:
        record_id = project.log.append(judgment)
    except DuplicateJudgmentError as e:
        raise HTTPException(status_code=409, detail=str(e)) from e
    return {"ok": True, "record_id": record_id, "submitted_at": judgment.submitted_at}


def create_app(data_dir: str | Path, ui_dir: str | Path | None = None) -> FastAPI:
    """Build the annotation service over a durable data directory."""
    store = ProjectStore(Path(data_dir))
    app = FastAPI(title="faithkit annotation service")

    @app.exception_handler(ValueError)
    def _value_error(_req: Request, exc: ValueError) -> JSONResponse:
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.get("/health")
    def health() -> dict:
        return {"ok": True, "projects": sorted(store.projects)}

    @app.post("/projects", status_code=201)
    def create_project(payload: dict = Body(...)) -> dict:
        project = store.create(payload)
        return {
            "project_id": project.project_id,
            "mode": project.mode,
            "slots": project.slot_tokens,
        }

    @app.get("/projects/{project_id}/tasks/next")
    def next_task(
        project_id: str,
        slot: int = Query(...),
        token: str | None = Query(default=None),
    ) -> dict:
        project = store.get(project_id)
        _check_slot(project, slot, token)
        task = _next_task(project, slot)
        if task is None:
            return {"done": True}
        return {"done": False, "task": task}

    @app.post("/projects/{project_id}/judgments")
    def submit_judgment(
        project_id: str,
        payload: dict = Body(...),
        x_annotator_token: str | None = Header(default=None),
    ) -> dict:
        project = store.get(project_id)
        _check_slot(
            project,
            int(payload.get("annotator_slot", -1)),
            payload.get("token") or x_annotator_token,
        )
        return _submit(project, payload)

    @app.get("/projects/{project_id}/progress")
    def progress(project_id: str) -> dict:
        return _progress(store.get(project_id))

    @app.get("/projects/{project_id}/export")
    def export(project_id: str) -> dict:
        project = store.get(project_id)
        return {"project_id": project_id, "judgments": project.log.records()}

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
