"""The two on-disk interfaces shared with the main pipeline.

Documents: one JSON object per ``*.gimc.json`` file with keys id, language,
sentences (arrays of {index, form, head, deprel}), events ({id,
sentence_index, start, end}), relations ({a, b}).

Cache: magic "EMBC", little-endian u32 input width, then records of
[u32 key length, UTF-8 key, width float32 values]. Keys follow the grammar
"<doc>|tok|<sent>|<idx>" and "<doc>|{stmt,aspE,aspC}|<eid_a>|<eid_b>" with
event ids sorted.
"""

from __future__ import annotations

import itertools
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

CACHE_MAGIC = b"EMBC"
DOCUMENT_SUFFIX = ".gimc.json"

OPEN_TAG = "<t>"
CLOSE_TAG = "</t>"
MASK_TOKEN = "<mask>"


class ExportError(Exception):
    pass


@dataclass
class Event:
    id: str
    sentence_index: int
    start: int
    end: int


@dataclass
class ParsedDocument:
    id: str
    language: str
    sentences: list[list[str]]  # surface forms only; heads are not needed here
    events: list[Event]


def read_document(path: Path) -> ParsedDocument:
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
        doc = ParsedDocument(
            id=str(data["id"]),
            language=str(data["language"]),
            sentences=[[str(tok["form"]) for tok in sent] for sent in data["sentences"]],
            events=[
                Event(
                    id=str(e["id"]),
                    sentence_index=int(e["sentence_index"]),
                    start=int(e["start"]),
                    end=int(e["end"]),
                )
                for e in data["events"]
            ],
        )
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ExportError(f"{path.name}: malformed document: {exc}") from exc
    for ev in doc.events:
        if not 0 <= ev.sentence_index < len(doc.sentences):
            raise ExportError(f"{path.name}: event {ev.id!r} sentence index out of range")
        n = len(doc.sentences[ev.sentence_index])
        if not 0 <= ev.start < ev.end <= n:
            raise ExportError(f"{path.name}: event {ev.id!r} span out of range")
    return doc


def read_corpus(path: Path) -> list[ParsedDocument]:
    path = Path(path)
    if not path.exists():
        raise ExportError(f"corpus path does not exist: {path}")
    docs = sorted(
        ((f.name, read_document(f)) for f in sorted(path.glob(f"*{DOCUMENT_SUFFIX}"))),
        key=lambda item: (item[0], item[1].id),
    )
    return [d for _, d in docs]


def event_pairs(doc: ParsedDocument) -> list[tuple[Event, Event]]:
    """All unordered event pairs in lexicographic id order."""
    by_id = {e.id: e for e in doc.events}
    return [
        (by_id[a], by_id[b]) for a, b in itertools.combinations(sorted(by_id), 2)
    ]


def token_key(doc_id: str, sentence: int, index: int) -> str:
    return f"{doc_id}|tok|{sentence}|{index}"


def statement_key(doc_id: str, kind: str, id_a: str, id_b: str) -> str:
    a, b = sorted((id_a, id_b))
    return f"{doc_id}|{kind}|{a}|{b}"


def statement_tokens(ev_a: Event, ev_b: Event, doc: ParsedDocument) -> tuple[list[str], list[tuple[int, int]]]:
    """The shared sentence, or both sentences concatenated in document order."""
    first, second = sorted([ev_a, ev_b], key=lambda e: (e.sentence_index, e.start))
    if first.sentence_index == second.sentence_index:
        tokens = list(doc.sentences[first.sentence_index])
        spans = [(first.start, first.end), (second.start, second.end)]
    else:
        left = doc.sentences[first.sentence_index]
        right = doc.sentences[second.sentence_index]
        tokens = list(left) + list(right)
        spans = [
            (first.start, first.end),
            (second.start + len(left), second.end + len(left)),
        ]
    return tokens, spans


def insert_tags(tokens: list[str], spans: list[tuple[int, int]]) -> tuple[list[str], list[tuple[int, int]]]:
    """Wrap each event span in <t>...</t>; returns new spans of the event tokens."""
    order = sorted(range(len(spans)), key=lambda k: spans[k])
    out: list[str] = []
    new_starts = [0] * len(spans)
    opens = {spans[k][0]: k for k in order}
    closes = {spans[k][1]: k for k in order}
    for pos in range(len(tokens) + 1):
        if pos in closes:
            out.append(CLOSE_TAG)
        if pos in opens:
            out.append(OPEN_TAG)
            new_starts[opens[pos]] = len(out)
        if pos < len(tokens):
            out.append(tokens[pos])
    return out, [(new_starts[k], new_starts[k] + (e - s)) for k, (s, e) in enumerate(spans)]


def write_cache(records: list[tuple[str, np.ndarray]], dim: int, path: Path) -> None:
    """Serialize records in the given order; values are written as float32."""
    parts = [CACHE_MAGIC, struct.pack("<I", dim)]
    seen = set()
    for key, vec in records:
        if key in seen:
            raise ExportError(f"duplicate cache key {key!r}")
        seen.add(key)
        arr = np.asarray(vec, dtype="<f4")
        if arr.shape != (dim,):
            raise ExportError(f"record {key!r} has shape {arr.shape}, expected ({dim},)")
        encoded = key.encode("utf-8")
        parts.append(struct.pack("<I", len(encoded)))
        parts.append(encoded)
        parts.append(arr.tobytes())
    Path(path).write_bytes(b"".join(parts))
