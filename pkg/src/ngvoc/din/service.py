"""HTTP backend for the interactive digits-in-noise test.

Sessions are event-sourced: every mutation appends one JSON line to the
session's log file, and replaying a log reconstructs the identical state, so
a restarted server picks up where it left off. All updates to a session are
serialized behind a per-session lock; the stimulus corpus is read-only.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel, Field

from ngvoc.audio import scale_rms_db, write_wav
from ngvoc.din.corpus import UNPROCESSED, DinStimulusCorpus, load_corpus
from ngvoc.din.staircase import (
    StaircaseConfig,
    StaircaseState,
    compute_srt,
    new_staircase,
    score_response,
    staircase_next,
)
from ngvoc.synth import digit_triplet

CALIBRATION_LOUD_DB_FS = -15.0
CALIBRATION_SOFT_DB_FS = -40.0  # 25 dB below the loud reference


@dataclass
class DinServiceConfig:
    corpus_dir: Path
    data_dir: Path
    host: str = "127.0.0.1"
    port: int = 8750
    cors_origins: tuple[str, ...] = ("*",)
    trials_per_condition: int = 24
    rng_seed: int | None = None  # fixed seed makes sessions reproducible

    def __post_init__(self):
        self.corpus_dir = Path(self.corpus_dir)
        self.data_dir = Path(self.data_dir)

    @classmethod
    def from_sources(cls, file_path: str | Path | None = None, **overrides) -> "DinServiceConfig":
        """Built-in defaults, then config file values, then environment
        variables, then explicit overrides."""
        values: dict = {}
        if file_path:
            values.update(json.loads(Path(file_path).read_text()))
        env = {
            "corpus_dir": os.environ.get("NGVOC_DIN_CORPUS_DIR"),
            "data_dir": os.environ.get("NGVOC_DIN_DATA_DIR"),
            "host": os.environ.get("NGVOC_DIN_HOST"),
            "port": os.environ.get("NGVOC_DIN_PORT"),
            "cors_origins": os.environ.get("NGVOC_DIN_CORS"),
        }
        for k, v in env.items():
            if v is not None:
                values[k] = v
        values.update({k: v for k, v in overrides.items() if v is not None})
        if "corpus_dir" not in values or "data_dir" not in values:
            raise ValueError("corpus_dir and data_dir are required")
        if isinstance(values.get("cors_origins"), str):
            values["cors_origins"] = tuple(values["cors_origins"].split(","))
        values["port"] = int(values.get("port", cls.port))
        return cls(
            corpus_dir=Path(values["corpus_dir"]),
            data_dir=Path(values["data_dir"]),
            host=values.get("host", cls.host),
            port=values["port"],
            cors_origins=tuple(values.get("cors_origins", cls.cors_origins)),
            trials_per_condition=int(values.get("trials_per_condition", 24)),
            rng_seed=values.get("rng_seed"),
        )


class ParticipantMeta(BaseModel):
    age: int = Field(ge=0, le=130)
    self_reported_normal_hearing: bool
    prior_din_test: bool


class ResponseBody(BaseModel):
    trial_token: str
    digits: list[int] = Field(min_length=3, max_length=3)


@dataclass
class PendingTrial:
    token: str
    condition_index: int
    trial_index: int
    triplet: str
    snr: float
    practice: bool
    audio_consumed: bool = False


@dataclass
class Session:
    session_id: str
    meta: dict
    condition_order: list[str]
    staircases: list[StaircaseState]
    used_triplets: list[set]
    practice_done: bool = False
    pending: PendingTrial | None = None
    condition_index: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def complete(self) -> bool:
        return self.condition_index >= len(self.condition_order)

    def results(self) -> dict[str, float]:
        return {
            cond: compute_srt(stair)
            for cond, stair in zip(self.condition_order, self.staircases)
        }


class SessionStore:
    """In-memory sessions backed by append-only JSONL event logs."""

    def __init__(self, config: DinServiceConfig, corpus: DinStimulusCorpus):
        self.config = config
        self.corpus = corpus
        self.sessions: dict[str, Session] = {}
        self.tokens: dict[str, str] = {}  # token -> session_id
        self.registry_lock = threading.Lock()
        self.log_dir = config.data_dir / "sessions"
        self.log_dir.mkdir(parents=True, exist_ok=True)
        self._rng = np.random.default_rng(config.rng_seed)

    # -- event log ---------------------------------------------------------

    def _log_path(self, session_id: str) -> Path:
        return self.log_dir / f"{session_id}.jsonl"

    def append_event(self, session_id: str, event: dict) -> None:
        with open(self._log_path(session_id), "a") as fh:
            fh.write(json.dumps(event) + "\n")

    def _staircase_config(self) -> StaircaseConfig:
        return StaircaseConfig(n_trials=self.config.trials_per_condition)

    def replay(self, session_id: str) -> Session | None:
        path = self._log_path(session_id)
        if not path.exists():
            return None
        session: Session | None = None
        for line in path.read_text().splitlines():
            event = json.loads(line)
            kind = event["event"]
            if kind == "created":
                session = Session(
                    session_id=session_id,
                    meta=event["meta"],
                    condition_order=event["condition_order"],
                    staircases=[new_staircase(self._staircase_config())
                                for _ in event["condition_order"]],
                    used_triplets=[set() for _ in event["condition_order"]],
                )
            elif kind == "trial_issued":
                assert session is not None
                session.pending = PendingTrial(
                    token=event["token"],
                    condition_index=event["condition_index"],
                    trial_index=event["trial_index"],
                    triplet=event["triplet"],
                    snr=event["snr"],
                    practice=event["practice"],
                )
                if not event["practice"]:
                    session.used_triplets[event["condition_index"]].add(event["triplet"])
            elif kind == "audio_fetched":
                assert session is not None and session.pending is not None
                session.pending.audio_consumed = True
            elif kind == "response":
                assert session is not None and session.pending is not None
                pend = session.pending
                if pend.practice:
                    session.practice_done = True
                else:
                    idx = pend.condition_index
                    correct = score_response(pend.triplet,
                                             "".join(map(str, event["digits"])))
                    session.staircases[idx] = staircase_next(session.staircases[idx], correct)
                    if session.staircases[idx].complete:
                        session.condition_index = idx + 1
                session.pending = None
        return session

    # -- session access ----------------------------------------------------

    def create(self, meta: ParticipantMeta) -> Session:
        session_id = uuid.uuid4().hex
        order = list(self.corpus.conditions)
        with self.registry_lock:
            perm = self._rng.permutation(len(order))
        order = [order[int(i)] for i in perm]
        session = Session(
            session_id=session_id,
            meta=meta.model_dump(),
            condition_order=order,
            staircases=[new_staircase(self._staircase_config()) for _ in order],
            used_triplets=[set() for _ in order],
        )
        with self.registry_lock:
            self.sessions[session_id] = session
        self.append_event(session_id, {
            "event": "created",
            "meta": session.meta,
            "condition_order": order,
        })
        return session

    def get(self, session_id: str) -> Session:
        with self.registry_lock:
            session = self.sessions.get(session_id)
        if session is None:
            session = self.replay(session_id)
            if session is None:
                raise HTTPException(404, f"unknown session {session_id}")
            with self.registry_lock:
                session = self.sessions.setdefault(session_id, session)
                if session.pending is not None:
                    self.tokens[session.pending.token] = session_id
        return session

    def issue_trial(self, session: Session) -> PendingTrial:
        if session.complete:
            raise HTTPException(409, "test is complete; no more trials")
        if session.pending is not None:
            raise HTTPException(409, "a trial is already pending; submit its response first")

        token = uuid.uuid4().hex
        if not session.practice_done:
            trial = PendingTrial(token, -1, 0, self._sample_triplet(None), 0.0, True)
        else:
            idx = session.condition_index
            stair = session.staircases[idx]
            triplet = self._sample_triplet(session.used_triplets[idx])
            trial = PendingTrial(token, idx, stair.trial_index + 1, triplet,
                                 stair.current_snr, False)
            session.used_triplets[idx].add(triplet)
        session.pending = trial
        with self.registry_lock:
            self.tokens[token] = session.session_id
        self.append_event(session.session_id, {
            "event": "trial_issued",
            "token": trial.token,
            "condition_index": trial.condition_index,
            "trial_index": trial.trial_index,
            "triplet": trial.triplet,
            "snr": trial.snr,
            "practice": trial.practice,
        })
        return trial

    def _sample_triplet(self, used: set | None) -> str:
        pool = self.corpus.triplets
        if used:
            pool = [t for t in pool if t not in used] or self.corpus.triplets
        with self.registry_lock:
            return pool[int(self._rng.integers(0, len(pool)))]

    def session_for_token(self, token: str) -> Session:
        with self.registry_lock:
            session_id = self.tokens.get(token)
        if session_id is None:
            raise HTTPException(404, "unknown trial token")
        return self.get(session_id)


def _trial_payload(session: Session, trial: PendingTrial,
                   trials_per_condition: int) -> dict:
    return {
        "trial_token": trial.token,
        "practice": trial.practice,
        "condition_index": None if trial.practice else trial.condition_index + 1,
        "trial_index": trial.trial_index,
        "trials_per_condition": trials_per_condition,
        "conditions_total": len(session.condition_order),
        "audio_url": f"/api/audio/{trial.token}",
    }


def create_app(config: DinServiceConfig) -> FastAPI:
    corpus = load_corpus(config.corpus_dir)
    store = SessionStore(config, corpus)
    app = FastAPI(title="digits-in-noise service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(config.cors_origins),
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.store = store
    app.state.config = config

    calib_dir = config.data_dir / "calibration"
    calib_dir.mkdir(parents=True, exist_ok=True)
    _write_calibration_audio(calib_dir)

    @app.post("/api/sessions", status_code=201)
    def create_session(meta: ParticipantMeta):
        session = store.create(meta)
        return {
            "session_id": session.session_id,
            "condition_order": session.condition_order,
            "trials_per_condition": config.trials_per_condition,
        }

    @app.get("/api/sessions/{session_id}/calibration")
    def get_calibration(session_id: str):
        store.get(session_id)
        return {
            "loud_url": "/api/calibration/loud.wav",
            "soft_url": "/api/calibration/soft.wav",
            "separation_db": CALIBRATION_LOUD_DB_FS - CALIBRATION_SOFT_DB_FS,
        }

    @app.get("/api/calibration/{name}.wav")
    def calibration_audio(name: str):
        path = calib_dir / f"{name}.wav"
        if name not in ("loud", "soft") or not path.exists():
            raise HTTPException(404, "no such calibration reference")
        return Response(path.read_bytes(), media_type="audio/wav")

    @app.post("/api/sessions/{session_id}/trials")
    def next_trial(session_id: str):
        session = store.get(session_id)
        with session.lock:
            trial = store.issue_trial(session)
            return _trial_payload(session, trial, config.trials_per_condition)

    @app.get("/api/sessions/{session_id}/trial")
    def pending_trial(session_id: str):
        """The still-unanswered trial, if any; lets a reloaded client resume."""
        session = store.get(session_id)
        with session.lock:
            if session.pending is None:
                raise HTTPException(404, "no trial pending")
            payload = _trial_payload(session, session.pending, config.trials_per_condition)
            payload["audio_consumed"] = session.pending.audio_consumed
            return payload

    @app.get("/api/audio/{token}")
    def fetch_audio(token: str):
        session = store.session_for_token(token)
        with session.lock:
            trial = session.pending
            if trial is None or trial.token != token:
                raise HTTPException(410, "trial audio no longer available")
            if trial.audio_consumed:
                raise HTTPException(410, "trial audio already played")
            trial.audio_consumed = True
            store.append_event(session.session_id, {"event": "audio_fetched", "token": token})
            if trial.practice:
                condition = UNPROCESSED
            else:
                condition = session.condition_order[trial.condition_index]
            path = corpus.file_for(trial.triplet, condition, trial.snr)
            return Response(path.read_bytes(), media_type="audio/wav")

    @app.post("/api/sessions/{session_id}/responses")
    def submit_response(session_id: str, body: ResponseBody):
        if any(not 0 <= d <= 9 for d in body.digits):
            raise HTTPException(422, "digits must be 0-9")
        session = store.get(session_id)
        with session.lock:
            trial = session.pending
            if trial is None:
                raise HTTPException(409, "no trial pending; request one first")
            if trial.token != body.trial_token:
                raise HTTPException(409, "response does not match the pending trial")
            store.append_event(session.session_id, {
                "event": "response",
                "token": trial.token,
                "digits": body.digits,
            })
            if trial.practice:
                session.practice_done = True
            else:
                idx = trial.condition_index
                answered = "".join(str(d) for d in body.digits)
                correct = score_response(trial.triplet, answered)
                session.staircases[idx] = staircase_next(session.staircases[idx], correct)
                if session.staircases[idx].complete:
                    session.condition_index = idx + 1
            session.pending = None
            condition_complete = (not trial.practice
                                  and session.staircases[trial.condition_index].complete)
            return {
                "accepted": True,
                "practice": trial.practice,
                "condition_complete": condition_complete,
                "test_complete": session.complete,
            }

    @app.get("/api/sessions/{session_id}/results")
    def get_results(session_id: str):
        session = store.get(session_id)
        with session.lock:
            if not session.complete:
                done = sum(s.complete for s in session.staircases)
                return JSONResponse(
                    {"complete": False, "conditions_done": done,
                     "conditions_total": len(session.condition_order)},
                    status_code=409,
                )
            return {"complete": True, "srt_db": session.results()}

    return app


def _write_calibration_audio(calib_dir: Path) -> None:
    """Two fixed reference signals 25 dB apart in RMS."""
    sentence = digit_triplet((2, 7, 4), sample_rate=16000, token_duration=0.3)
    loud = scale_rms_db(sentence, CALIBRATION_LOUD_DB_FS)
    soft = scale_rms_db(sentence, CALIBRATION_SOFT_DB_FS)
    write_wav(calib_dir / "loud.wav", loud, dtype="pcm16")
    write_wav(calib_dir / "soft.wav", soft, dtype="pcm16")


def run_service(config: DinServiceConfig) -> None:
    import uvicorn

    uvicorn.run(create_app(config), host=config.host, port=config.port, log_level="warning")
