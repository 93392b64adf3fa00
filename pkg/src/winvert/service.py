"""HTTP facade over inversion and latent editing for the interactive UI.

Sessions hold inverted latents so edits compose; stored latents are never
mutated (every edit derives a new latent id) and sessions are isolated.
Previews are addressable PNG resources; pass ?inline=1 to also receive
base64 bytes in the JSON.
"""

from __future__ import annotations

import base64
import threading
import time
import uuid
from dataclasses import dataclass, field
from typing import Sequence

from fastapi import FastAPI, File, Form, Request, UploadFile
from fastapi.responses import JSONResponse, Response

from .editing import SemanticDirection, interpolate, manipulate, style_mix
from .encoder import Encoder
from .errors import ValidationError, WinvertError
from .generator import GeneratorHandle, synthesize
from .images import decode_image_bytes, encode_png, resize_image
from .train import invert
from .types import LatentCode

DEFAULT_SESSION_TIMEOUT_S = 30 * 60


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        self.status = status
        self.code = code
        self.message = message
        super().__init__(message)


@dataclass
class _Session:
    session_id: str
    latents: dict[str, tuple[LatentCode, str]] = field(default_factory=dict)
    order: list[str] = field(default_factory=list)
    created: float = field(default_factory=time.monotonic)
    last_access: float = field(default_factory=time.monotonic)
    lock: threading.Lock = field(default_factory=threading.Lock)


class SessionStore:
    def __init__(self, timeout_s: float = DEFAULT_SESSION_TIMEOUT_S):
        self.timeout_s = timeout_s
        self._sessions: dict[str, _Session] = {}
        self._lock = threading.Lock()

    def create(self) -> _Session:
        s = _Session(session_id=uuid.uuid4().hex)
        with self._lock:
            self._sessions[s.session_id] = s
        return s

    def get(self, session_id: str) -> _Session:
        with self._lock:
            s = self._sessions.get(session_id)
            now = time.monotonic()
            if s is not None and now - s.last_access > self.timeout_s:
                del self._sessions[session_id]
                s = None
            if s is None:
                raise ApiError(404, "unknown_session", f"no session {session_id}")
            s.last_access = now
            return s


def create_app(
    generator: GeneratorHandle,
    pipeline: Sequence[Encoder],
    directions: Sequence[SemanticDirection] = (),
    session_timeout_s: float = DEFAULT_SESSION_TIMEOUT_S,
) -> FastAPI:
    app = FastAPI(title="winvert editing service")
    store = SessionStore(timeout_s=session_timeout_s)
    previews: dict[str, bytes] = {}
    by_name = {d.name: d for d in directions}
    pipeline = list(pipeline)

    app.state.sessions = store
    app.state.previews = previews

    @app.exception_handler(ApiError)
    async def _api_error(_req: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status, content={"code": exc.code, "message": exc.message}
        )

    def _store_latent(session: _Session, w: LatentCode) -> dict:
        latent_id = uuid.uuid4().hex
        preview_id = uuid.uuid4().hex
        previews[preview_id] = encode_png(synthesize(generator, w))
        session.latents[latent_id] = (w, preview_id)
        session.order.append(latent_id)
        return {"latent_id": latent_id, "preview": f"/api/previews/{preview_id}.png"}

    def _get_latent(session: _Session, latent_id: str) -> LatentCode:
        entry = session.latents.get(latent_id)
        if entry is None:
            raise ApiError(404, "unknown_latent", f"no latent {latent_id} in this session")
        return entry[0]

    def _maybe_inline(result: dict, inline: bool) -> dict:
        if inline:
            pid = result["preview"].rsplit("/", 1)[-1].removesuffix(".png")
            result = {**result, "preview_b64": base64.b64encode(previews[pid]).decode()}
        return result

    @app.post("/api/sessions")
    def create_session():
        s = store.create()
        return {"session_id": s.session_id}

    @app.get("/api/sessions/{sid}")
    def session_info(sid: str):
        s = store.get(sid)
        with s.lock:
            return {
                "session_id": s.session_id,
                "latents": [
                    {
                        "latent_id": lid,
                        "preview": f"/api/previews/{s.latents[lid][1]}.png",
                    }
                    for lid in s.order
                ],
            }

    @app.post("/api/sessions/{sid}/invert")
    def handle_invert(
        sid: str,
        image: UploadFile = File(...),
        stages: int = Form(default=0),
        inline: bool = False,
    ):
        if not pipeline:
            raise ApiError(503, "pipeline_missing", "no inversion pipeline is loaded")
        s = store.get(sid)
        n_stages = stages or len(pipeline)
        if not 1 <= n_stages <= len(pipeline):
            raise ApiError(
                400,
                "bad_stages",
                f"stages must be in [1, {len(pipeline)}], got {n_stages}",
            )
        data = image.file.read()
        try:
            img = decode_image_bytes(data)
        except ValidationError as e:
            raise ApiError(400, "undecodable_image", str(e))
        side = pipeline[0].config.input_resolution
        img = resize_image(img, side, side)
        w, _render = invert(pipeline, generator, img, n_stages)
        with s.lock:
            result = _store_latent(s, w)
        return _maybe_inline({"session_id": s.session_id, **result}, inline)

    @app.post("/api/sessions/{sid}/edit")
    def handle_edit(sid: str, body: dict, inline: bool = False):
        s = store.get(sid)
        op = body.get("op")
        latent_id = body.get("latent_id")
        params = body.get("params") or {}
        with s.lock:
            w = _get_latent(s, latent_id)
            try:
                if op == "direction":
                    d = by_name.get(params.get("name"))
                    if d is None:
                        raise ApiError(
                            400, "unknown_direction", f"no direction {params.get('name')!r}"
                        )
                    out = manipulate(w, d, float(params.get("alpha", 0.0)))
                elif op == "interpolate":
                    other = _get_latent(s, params.get("other_latent_id"))
                    out = interpolate(w, other, float(params.get("lam", 0.5)))
                elif op == "mix":
                    style = _get_latent(s, params.get("style_latent_id"))
                    out = style_mix(w, style, int(params.get("keep", 0)))
                else:
                    raise ApiError(400, "unknown_op", "op must be direction|interpolate|mix")
            except WinvertError as e:
                raise ApiError(400, "bad_edit", str(e))
            result = _store_latent(s, out)
        return _maybe_inline(result, inline)

    @app.get("/api/directions")
    def list_directions():
        return [
            {"name": d.name, "alpha_range": list(d.alpha_range)} for d in directions
        ]

    @app.get("/api/previews/{preview_id}.png")
    def get_preview(preview_id: str):
        data = previews.get(preview_id)
        if data is None:
            raise ApiError(404, "unknown_preview", f"no preview {preview_id}")
        return Response(content=data, media_type="image/png")

    return app
