"""HTTP adapter for evaluating black-box image-to-LaTeX recognizers.

Any model behind a chat-completion style endpoint can be scored: the
client posts the level-appropriate prompt plus the image as base64, pulls
the first LaTeX block out of the reply, and records one EvalRecord per
input.  Batches run with bounded concurrency and results come back in
input order regardless of completion order.
"""

from __future__ import annotations

import base64
import json
import os
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import requests

from .extract import SampleLevel

DEFAULT_INSTRUCTIONS = {
    SampleLevel.LINE.value: "Transcribe the formula in this image to LaTeX.",
    SampleLevel.PARAGRAPH.value: (
        "Transcribe this image to LaTeX, keeping text and formulas interleaved "
        "exactly as they appear."
    ),
    SampleLevel.PAGE.value: (
        "Transcribe this full document page to LaTeX markup, preserving all "
        "text, formulas, and their order."
    ),
}

_MIME_BY_SUFFIX = {
    ".png": "image/png",
    ".jpg": "image/jpeg",
    ".jpeg": "image/jpeg",
    ".gif": "image/gif",
    ".webp": "image/webp",
    ".bmp": "image/bmp",
    ".svg": "image/svg+xml",
}


@dataclass
class EndpointConfig:
    base_url: str
    model_name: str = ""
    api_key_env: str = ""
    prompt_template: str = "{instruction}"
    max_retries: int = 3
    parallelism: int = 4
    timeout_s: float = 120.0
    path: str = "/v1/chat/completions"
    temperature: float = 0.0
    max_tokens: int = 4096
    backoff_base_s: float = 0.5
    instructions: dict = field(default_factory=lambda: dict(DEFAULT_INSTRUCTIONS))

    def __post_init__(self):
        if not self.base_url:
            raise ValueError("base_url must be nonempty")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")
        if self.max_retries < 1:
            raise ValueError("max_retries must be >= 1")

    @classmethod
    def from_json_file(cls, path: str | Path) -> "EndpointConfig":
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown endpoint config fields: {sorted(unknown)}")
        return cls(**obj)


@dataclass(frozen=True)
class EvalRecord:
    record_id: str
    level: SampleLevel
    gt_latex: str
    pred_latex: str
    latency_ms: int
    attempt: int
    error: str | None = None

    def to_json_dict(self) -> dict:
        return {
            "record_id": self.record_id,
            "level": self.level.value,
            "gt_latex": self.gt_latex,
            "pred_latex": self.pred_latex,
            "latency_ms": self.latency_ms,
            "attempt": self.attempt,
            "error": self.error,
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "EvalRecord":
        return cls(
            record_id=obj["record_id"],
            level=SampleLevel(obj["level"]),
            gt_latex=obj.get("gt_latex", ""),
            pred_latex=obj.get("pred_latex", ""),
            latency_ms=int(obj.get("latency_ms", 0)),
            attempt=int(obj.get("attempt", 0)),
            error=obj.get("error"),
        )


class EndpointError(Exception):
    def __init__(self, status: int | None, body_excerpt: str):
        detail = f"HTTP {status}" if status is not None else "transport error"
        super().__init__(f"{detail}: {body_excerpt}")
        self.status = status
        self.body_excerpt = body_excerpt


_FENCED_RE = re.compile(r"```(?:[a-zA-Z]+)?\s*\n?(.*?)```", re.DOTALL)
_DISPLAY_RE = re.compile(r"\$\$(.+?)\$\$|\\\[(.+?)\\\]", re.DOTALL)


def extract_latex(content: str) -> str:
    """First fenced block, else first display-math block, else the whole
    trimmed body."""
    m = _FENCED_RE.search(content)
    if m:
        return m.group(1).strip()
    m = _DISPLAY_RE.search(content)
    if m:
        return (m.group(1) or m.group(2)).strip()
    return content.strip()


def _encode_image(image_path: str | Path) -> str:
    path = Path(image_path)
    mime = _MIME_BY_SUFFIX.get(path.suffix.lower())
    if mime is None:
        raise ValueError(f"unsupported image format: {path.suffix!r}")
    data = base64.b64encode(path.read_bytes()).decode("ascii")
    return f"data:{mime};base64,{data}"


def _build_payload(cfg: EndpointConfig, level: SampleLevel, image_url: str) -> dict:
    instruction = cfg.instructions.get(
        level.value, DEFAULT_INSTRUCTIONS[SampleLevel.LINE.value]
    )
    prompt = cfg.prompt_template.format(instruction=instruction)
    return {
        "model": cfg.model_name,
        "temperature": cfg.temperature,
        "max_tokens": cfg.max_tokens,
        "messages": [
            {
                "role": "user",
                "content": [
                    {"type": "text", "text": prompt},
                    {"type": "image_url", "image_url": {"url": image_url}},
                ],
            }
        ],
    }


def recognize(
    image_path: str | Path,
    level: SampleLevel,
    cfg: EndpointConfig,
    *,
    record_id: str = "",
    gt_latex: str = "",
    sleep: Callable[[float], None] = time.sleep,
) -> EvalRecord:
    """Send one image for recognition.

    Retries with exponential backoff on transport errors and on 429/5xx
    responses, up to ``cfg.max_retries`` attempts in total.  Endpoint
    failures end up in the record's ``error`` field; they never raise.
    """
    image_url = _encode_image(image_path)
    payload = _build_payload(cfg, level, image_url)
    headers = {"Content-Type": "application/json"}
    if cfg.api_key_env:
        key = os.environ.get(cfg.api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
    url = cfg.base_url.rstrip("/") + cfg.path
    started = time.monotonic()
    attempt = 0
    failure: EndpointError | None = None
    while attempt < cfg.max_retries:
        attempt += 1
        try:
            resp = requests.post(
                url, json=payload, headers=headers, timeout=cfg.timeout_s
            )
        except requests.RequestException as exc:
            failure = EndpointError(None, str(exc)[:200])
            if attempt < cfg.max_retries:
                sleep(cfg.backoff_base_s * 2 ** (attempt - 1))
            continue
        if resp.status_code == 429 or resp.status_code >= 500:
            failure = EndpointError(resp.status_code, resp.text[:200])
            if attempt < cfg.max_retries:
                sleep(cfg.backoff_base_s * 2 ** (attempt - 1))
            continue
        if resp.status_code >= 400:
            failure = EndpointError(resp.status_code, resp.text[:200])
            break
        latency = int((time.monotonic() - started) * 1000)
        try:
            content = resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError):
            failure = EndpointError(resp.status_code, f"unparseable body: {resp.text[:160]}")
            break
        return EvalRecord(
            record_id=record_id,
            level=level,
            gt_latex=gt_latex,
            pred_latex=extract_latex(content),
            latency_ms=latency,
            attempt=attempt,
            error=None,
        )
    latency = int((time.monotonic() - started) * 1000)
    return EvalRecord(
        record_id=record_id,
        level=level,
        gt_latex=gt_latex,
        pred_latex="",
        latency_ms=latency,
        attempt=attempt,
        error=str(failure) if failure else "no attempts made",
    )


@dataclass(frozen=True)
class BatchItem:
    record_id: str
    image_path: str
    level: SampleLevel
    gt_latex: str = ""


def load_cache(path: str | Path) -> dict[str, EvalRecord]:
    """Cached predictions by record_id; errored entries do not count as
    cached, so reruns retry them."""
    cache: dict[str, EvalRecord] = {}
    p = Path(path)
    if not p.exists():
        return cache
    with open(p, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = EvalRecord.from_json_dict(json.loads(line))
            if rec.error is None:
                cache[rec.record_id] = rec
    return cache


def run_batch(
    items: Sequence[BatchItem],
    cfg: EndpointConfig,
    *,
    cache_path: str | Path | None = None,
    sleep: Callable[[float], None] = time.sleep,
) -> list[EvalRecord]:
    """Recognize a batch with at most ``cfg.parallelism`` requests in
    flight; output order matches input order."""
    cache = load_cache(cache_path) if cache_path else {}
    results: list[EvalRecord | None] = [None] * len(items)
    pending: list[tuple[int, BatchItem]] = []
    for idx, item in enumerate(items):
        hit = cache.get(item.record_id)
        if hit is not None:
            results[idx] = hit
        else:
            pending.append((idx, item))
    if pending:
        cache_lock = threading.Lock()
        cache_fh = open(cache_path, "a", encoding="utf-8") if cache_path else None

        def _one(arg: tuple[int, BatchItem]) -> tuple[int, EvalRecord]:
            idx, item = arg
            if not Path(item.image_path).exists():
                rec = EvalRecord(
                    record_id=item.record_id,
                    level=item.level,
                    gt_latex=item.gt_latex,
                    pred_latex="",
                    latency_ms=0,
                    attempt=0,
                    error=f"image not found: {item.image_path}",
                )
            else:
                rec = recognize(
                    item.image_path,
                    item.level,
                    cfg,
                    record_id=item.record_id,
                    gt_latex=item.gt_latex,
                    sleep=sleep,
                )
            if cache_fh is not None:
                with cache_lock:
                    cache_fh.write(json.dumps(rec.to_json_dict(), ensure_ascii=False) + "\n")
                    cache_fh.flush()
            return idx, rec

        try:
            with ThreadPoolExecutor(max_workers=cfg.parallelism) as pool:
                for idx, rec in pool.map(_one, pending):
                    results[idx] = rec
        finally:
            if cache_fh is not None:
                cache_fh.close()
    return [rec for rec in results if rec is not None]
