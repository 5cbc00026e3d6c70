"""Event-annotated, dependency-parsed documents and bilingual dictionaries.

Documents arrive pre-parsed as one ``*.gimc.json`` file each: sentences of
tokens (1-based index, surface form, head index with 0 = root, dependency
relation), event mentions as half-open token spans, and unordered causal
relations between event ids. Everything is validated on load and immutable
afterwards.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DataError

DOCUMENT_SUFFIX = ".gimc.json"


@dataclass(frozen=True)
class Token:
    index: int  # 1-based position within its sentence
    form: str
    head: int  # 0 = sentence root
    deprel: str


@dataclass(frozen=True)
class EventMention:
    id: str
    sentence_index: int
    start: int  # half-open token range, 0-based
    end: int

    @property
    def span(self) -> tuple[int, int]:
        return (self.start, self.end)


@dataclass
class Document:
    id: str
    language: str
    sentences: list[list[Token]]
    events: list[EventMention]
    gold_pairs: set[tuple[str, str]]  # unordered, stored as sorted id tuples

    def event_by_id(self, event_id: str) -> EventMention:
        for ev in self.events:
            if ev.id == event_id:
                return ev
        raise KeyError(event_id)


@dataclass(frozen=True)
class CandidatePair:
    """One unordered event-id pair with its gold label."""

    a: str  # lexicographically smaller id
    b: str
    causal: bool

    @property
    def ids(self) -> tuple[str, str]:
        return (self.a, self.b)


@dataclass
class BilingualDictionary:
    source_lang: str
    target_lang: str
    entries: dict[str, list[str]] = field(default_factory=dict)

    def translations(self, word: str) -> list[str] | None:
        return self.entries.get(word.lower())


def _reject(doc_id: str, message: str) -> DataError:
    return DataError(f"document {doc_id}: {message}")


def validate_document(doc: Document) -> None:
    """Check every structural invariant; raise DataError naming the violation."""
    for s, sentence in enumerate(doc.sentences):
        n = len(sentence)
        if n == 0:
            raise _reject(doc.id, f"sentence {s}: empty sentence")
        roots = 0
        for pos, tok in enumerate(sentence):
            if tok.index != pos + 1:
                raise _reject(
                    doc.id,
                    f"sentence {s}: field index: token at position {pos} has index {tok.index}",
                )
            if not 0 <= tok.head <= n:
                raise _reject(
                    doc.id,
                    f"sentence {s}: field head: token {tok.index} head {tok.head} outside [0, {n}]",
                )
            if tok.head == tok.index:
                raise _reject(doc.id, f"sentence {s}: self-headed token {tok.index}")
            if tok.head == 0:
                roots += 1
        if roots != 1:
            raise _reject(doc.id, f"sentence {s}: field head: {roots} root tokens, expected 1")
        # Acyclicity: walk each token to the root; with exactly one root and
        # no cycles the head graph is necessarily a tree.
        for tok in sentence:
            seen = set()
            cur = tok.index
            while cur != 0:
                if cur in seen:
                    raise _reject(
                        doc.id, f"sentence {s}: field head: cyclic dependency tree at token {tok.index}"
                    )
                seen.add(cur)
                cur = sentence[cur - 1].head

    seen_ids: set[str] = set()
    spans_by_sentence: dict[int, list[tuple[int, int, str]]] = {}
    for ev in doc.events:
        if ev.id in seen_ids:
            raise _reject(doc.id, f"field events: duplicate event id {ev.id!r}")
        seen_ids.add(ev.id)
        if not 0 <= ev.sentence_index < len(doc.sentences):
            raise _reject(doc.id, f"field events: event {ev.id!r} sentence_index out of range")
        n = len(doc.sentences[ev.sentence_index])
        if not 0 <= ev.start < ev.end <= n:
            raise _reject(
                doc.id,
                f"field events: event {ev.id!r} span [{ev.start}, {ev.end}) invalid for sentence of {n} tokens",
            )
        spans_by_sentence.setdefault(ev.sentence_index, []).append((ev.start, ev.end, ev.id))
    for s, spans in spans_by_sentence.items():
        spans.sort()
        for (s0, e0, id0), (s1, e1, id1) in zip(spans, spans[1:]):
            if s1 < e0:
                raise _reject(
                    doc.id, f"sentence {s}: field events: overlapping spans of {id0!r} and {id1!r}"
                )

    for a, b in doc.gold_pairs:
        if a == b:
            raise _reject(doc.id, f"field relations: pair ({a!r}, {b!r}) relates an event to itself")
        for eid in (a, b):
            if eid not in seen_ids:
                raise _reject(doc.id, f"field relations: unknown event id {eid!r}")


def document_from_dict(data: dict) -> Document:
    doc_id = str(data.get("id", "<missing id>"))
    try:
        sentences = [
            [
                Token(index=int(t["index"]), form=str(t["form"]), head=int(t["head"]), deprel=str(t["deprel"]))
                for t in sent
            ]
            for sent in data["sentences"]
        ]
        events = [
            EventMention(
                id=str(e["id"]),
                sentence_index=int(e["sentence_index"]),
                start=int(e["start"]),
                end=int(e["end"]),
            )
            for e in data["events"]
        ]
        pairs = set()
        for rel in data["relations"]:
            a, b = str(rel["a"]), str(rel["b"])
            key = (a, b) if a <= b else (b, a)
            if key in pairs:
                raise _reject(doc_id, f"field relations: duplicate pair ({a!r}, {b!r})")
            pairs.add(key)
        doc = Document(
            id=doc_id,
            language=str(data["language"]),
            sentences=sentences,
            events=events,
            gold_pairs=pairs,
        )
    except KeyError as exc:
        raise _reject(doc_id, f"missing field {exc.args[0]!r}") from exc
    except (TypeError, ValueError) as exc:
        raise _reject(doc_id, f"malformed field: {exc}") from exc
    validate_document(doc)
    return doc


def document_to_dict(doc: Document) -> dict:
    return {
        "id": doc.id,
        "language": doc.language,
        "sentences": [
            [{"index": t.index, "form": t.form, "head": t.head, "deprel": t.deprel} for t in sent]
            for sent in doc.sentences
        ],
        "events": [
            {"id": e.id, "sentence_index": e.sentence_index, "start": e.start, "end": e.end}
            for e in doc.events
        ],
        "relations": [{"a": a, "b": b} for a, b in sorted(doc.gold_pairs)],
    }


def load_document(path: Path | str) -> Document:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path.name}: not valid JSON: {exc}") from exc
    return document_from_dict(data)


def save_document(doc: Document, path: Path | str) -> None:
    Path(path).write_text(
        json.dumps(document_to_dict(doc), ensure_ascii=False, indent=1) + "\n", encoding="utf-8"
    )


def load_corpus(path: Path | str) -> list[Document]:
    """Load every ``*.gimc.json`` under a directory, ordered by filename then id."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"corpus path does not exist: {path}")
    docs = []
    for file in sorted(path.glob(f"*{DOCUMENT_SUFFIX}")):
        docs.append((file.name, load_document(file)))
    docs.sort(key=lambda item: (item[0], item[1].id))
    return [doc for _, doc in docs]


def candidate_pairs(doc: Document) -> list[CandidatePair]:
    """All C(n, 2) unordered event-id pairs, lexicographic, with gold labels."""
    ids = sorted(ev.id for ev in doc.events)
    return [
        CandidatePair(a=a, b=b, causal=(a, b) in doc.gold_pairs)
        for a, b in itertools.combinations(ids, 2)
    ]


def load_dictionary(
    path: Path | str, source_lang: str | None = None, target_lang: str | None = None
) -> BilingualDictionary:
    """Read a MUSE-style word list: one "source target" pair per line.

    Both sides are lowercased; repeated source words accumulate translations
    in file order. Language codes default to a ``xx-yy`` filename stem.
    """
    path = Path(path)
    if source_lang is None or target_lang is None:
        stem = path.name.split(".")[0]
        parts = stem.split("-")
        if len(parts) == 2 and all(p.isalpha() for p in parts):
            source_lang = source_lang or parts[0]
            target_lang = target_lang or parts[1]
        else:
            source_lang = source_lang or ""
            target_lang = target_lang or ""
    entries: dict[str, list[str]] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        fields = line.split()
        if len(fields) != 2:
            raise DataError(f"{path.name}: line {lineno}: expected 2 fields, got {len(fields)}")
        src, tgt = fields[0].lower(), fields[1].lower()
        entries.setdefault(src, []).append(tgt)
    return BilingualDictionary(source_lang=source_lang, target_lang=target_lang, entries=entries)
