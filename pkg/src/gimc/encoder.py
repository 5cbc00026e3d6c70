"""Token, event, sentence, statement, and aspect representations.

Two sources of raw input vectors exist behind one trainable projection:

* toy mode: a trainable embedding table indexed by a stable hash of the
  surface form (buckets 0-3 are reserved for the event tags and the mask
  token, so reserved strings never collide with corpus forms);
* cache mode: frozen vectors read from an "EMBC" cache file produced
  offline. Synthetic tokens introduced later (tags, mask, code-switched
  words) fall back to the trainable table in either mode.

All statement-level vectors are means of the projected token vectors of the
tagged statement; in cache mode the native stmt/aspE/aspC records take
precedence when present.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import CandidatePair, Document, EventMention
from .errors import DataError, NumericError
from .phrases import InformativePhrase

OPEN_TAG = "<t>"
CLOSE_TAG = "</t>"
MASK_TOKEN = "<mask>"

OPEN_BUCKET = 0
CLOSE_BUCKET = 1
MASK_BUCKET = 2
NUM_RESERVED_BUCKETS = 4  # bucket 3 held back for future sentinels

CACHE_MAGIC = b"EMBC"


@dataclass
class EncoderConfig:
    mode: str = "toy"  # "toy" | "cache"
    dim_in: int = 32
    dim: int = 32
    hash_buckets: int = 512
    seed: int = 0
    mask_token: str = MASK_TOKEN
    open_tag: str = OPEN_TAG
    close_tag: str = CLOSE_TAG

    def __post_init__(self):
        if self.dim <= 0 or self.dim_in <= 0:
            raise NumericError("encoder dims must be positive")
        if self.hash_buckets <= NUM_RESERVED_BUCKETS:
            raise NumericError(
                f"hash_buckets must exceed the {NUM_RESERVED_BUCKETS} reserved slots"
            )
        if self.mode not in ("toy", "cache"):
            raise DataError(f"unknown encoder mode {self.mode!r}")


def stable_hash64(text: str) -> int:
    """Platform-independent 64-bit hash (process hash() is salted)."""
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def token_bucket(form: str, config: EncoderConfig) -> int:
    if form == config.open_tag:
        return OPEN_BUCKET
    if form == config.close_tag:
        return CLOSE_BUCKET
    if form == config.mask_token:
        return MASK_BUCKET
    usable = config.hash_buckets - NUM_RESERVED_BUCKETS
    return NUM_RESERVED_BUCKETS + stable_hash64(form) % usable


# ---------------------------------------------------------------------------
# Embedding cache ("EMBC" binary format)
# ---------------------------------------------------------------------------


@dataclass
class EmbeddingCache:
    dim_in: int
    vectors: dict[str, np.ndarray] = field(default_factory=dict)  # float32 rows

    def __getitem__(self, key: str) -> np.ndarray:
        try:
            return self.vectors[key]
        except KeyError:
            raise DataError(f"embedding cache is missing key {key!r}") from None

    def __contains__(self, key: str) -> bool:
        return key in self.vectors


def load_cache(path: Path | str) -> EmbeddingCache:
    raw = Path(path).read_bytes()
    if raw[:4] != CACHE_MAGIC:
        raise DataError(f"{Path(path).name}: bad cache magic {raw[:4]!r}")
    (dim_in,) = struct.unpack_from("<I", raw, 4)
    offset = 8
    vectors: dict[str, np.ndarray] = {}
    while offset < len(raw):
        (key_len,) = struct.unpack_from("<I", raw, offset)
        offset += 4
        key = raw[offset : offset + key_len].decode("utf-8")
        offset += key_len
        vec = np.frombuffer(raw, dtype="<f4", count=dim_in, offset=offset).copy()
        offset += 4 * dim_in
        if key in vectors:
            raise DataError(f"embedding cache has duplicate key {key!r}")
        vectors[key] = vec
    return EmbeddingCache(dim_in=dim_in, vectors=vectors)


def save_cache(cache: EmbeddingCache, path: Path | str) -> None:
    parts = [CACHE_MAGIC, struct.pack("<I", cache.dim_in)]
    for key, vec in cache.vectors.items():
        if vec.shape != (cache.dim_in,):
            raise DataError(f"cache record {key!r} has width {vec.shape}, expected {cache.dim_in}")
        encoded = key.encode("utf-8")
        parts.append(struct.pack("<I", len(encoded)))
        parts.append(encoded)
        parts.append(np.asarray(vec, dtype="<f4").tobytes())
    Path(path).write_bytes(b"".join(parts))


def token_cache_key(doc_id: str, sentence: int, index: int) -> str:
    return f"{doc_id}|tok|{sentence}|{index}"


def statement_cache_key(doc_id: str, kind: str, id_a: str, id_b: str) -> str:
    a, b = sorted((id_a, id_b))
    return f"{doc_id}|{kind}|{a}|{b}"


def expected_cache_keys(doc: Document, pairs: list[CandidatePair]) -> set[str]:
    """Every key the pipeline reads for one document."""
    keys = set()
    for s, sentence in enumerate(doc.sentences):
        for j in range(len(sentence)):
            keys.add(token_cache_key(doc.id, s, j))
    for pair in pairs:
        for kind in ("stmt", "aspE", "aspC"):
            keys.add(statement_cache_key(doc.id, kind, pair.a, pair.b))
    return keys


# ---------------------------------------------------------------------------
# Statements
# ---------------------------------------------------------------------------

# Token provenance: ("doc", sentence, index) for corpus tokens, ("form",) for
# synthetic tokens whose vector comes from the trainable table.
Source = tuple


@dataclass
class Statement:
    """Token sequence for one event pair, before tag insertion."""

    pair: tuple[str, str]
    doc_id: str
    tokens: list[str]
    event_spans: list[tuple[int, int]]  # position-sorted, within `tokens`
    sources: list[Source]
    native: bool = True  # False once tokens were altered (code-switching)


def statement_tokens(ev_a: EventMention, ev_b: EventMention, doc: Document) -> Statement:
    """The shared sentence, or both sentences concatenated in document order."""
    first, second = sorted([ev_a, ev_b], key=lambda e: (e.sentence_index, e.start))
    pair = tuple(sorted((ev_a.id, ev_b.id)))
    if first.sentence_index == second.sentence_index:
        s = first.sentence_index
        tokens = [t.form for t in doc.sentences[s]]
        sources = [("doc", s, j) for j in range(len(tokens))]
        spans = [first.span, second.span]
    else:
        sa, sb = first.sentence_index, second.sentence_index
        offset = len(doc.sentences[sa])
        tokens = [t.form for t in doc.sentences[sa]] + [t.form for t in doc.sentences[sb]]
        sources = [("doc", sa, j) for j in range(offset)] + [
            ("doc", sb, j) for j in range(len(doc.sentences[sb]))
        ]
        spans = [first.span, (second.start + offset, second.end + offset)]
    return Statement(pair=pair, doc_id=doc.id, tokens=tokens, event_spans=spans, sources=sources)


def _tag_with_origin(
    tokens: list[str],
    spans: list[tuple[int, int]],
    open_tag: str = OPEN_TAG,
    close_tag: str = CLOSE_TAG,
) -> tuple[list[str], list[tuple[int, int]], list[int]]:
    """Insert tags; also return each output token's original index (-1 for tags)."""
    n = len(tokens)
    order = sorted(range(len(spans)), key=lambda k: spans[k])
    for k, (s, e) in enumerate(spans):
        if not 0 <= s < e <= n:
            raise DataError(f"event span [{s}, {e}) outside statement of {n} tokens")
    for ka, kb in zip(order, order[1:]):
        if spans[kb][0] < spans[ka][1]:
            raise DataError("overlapping event spans in statement")
    opens = {spans[k][0]: k for k in order}
    closes = {spans[k][1]: k for k in order}
    out: list[str] = []
    origin: list[int] = []
    new_starts: list[int] = [0] * len(spans)
    for pos in range(n + 1):
        if pos in closes:
            out.append(close_tag)
            origin.append(-1)
        if pos in opens:
            out.append(open_tag)
            origin.append(-1)
            new_starts[opens[pos]] = len(out)
        if pos < n:
            out.append(tokens[pos])
            origin.append(pos)
    new_spans = [(new_starts[k], new_starts[k] + (e - s)) for k, (s, e) in enumerate(spans)]
    return out, new_spans, origin


def insert_event_tags(
    tokens: list[str],
    spans: list[tuple[int, int]],
    open_tag: str = OPEN_TAG,
    close_tag: str = CLOSE_TAG,
) -> tuple[list[str], list[tuple[int, int]]]:
    """Wrap each event span in tags; returned spans locate the event tokens."""
    tagged, new_spans, _ = _tag_with_origin(tokens, spans, open_tag, close_tag)
    return tagged, new_spans


def strip_event_tags(tokens: list[str], open_tag: str = OPEN_TAG, close_tag: str = CLOSE_TAG) -> list[str]:
    return [t for t in tokens if t not in (open_tag, close_tag)]


# ---------------------------------------------------------------------------
# Encoding
# ---------------------------------------------------------------------------

# A gradient route for one projected token vector: ("x", sentence, index)
# shares the document token, ("bucket", b) resolves through the trainable
# table row b.
Route = tuple

# A vector context: ("mean", [routes]) for span means, ("proj", raw) for
# vectors projected straight from a frozen cache record.
VecCtx = tuple


@dataclass
class StatementCtx:
    cls: VecCtx
    asp_event: VecCtx
    asp_context: VecCtx


@dataclass
class EncodedDocument:
    config: EncoderConfig
    token_vecs: list[np.ndarray]  # per sentence, (len, dim)
    token_raw: list[np.ndarray]  # per sentence, (len, dim_in)
    token_buckets: list[np.ndarray] | None  # toy mode only
    sentence_vecs: np.ndarray  # (n_sentences, dim)
    event_vecs: dict[str, np.ndarray]
    phrase_vecs: np.ndarray  # (n_phrases, dim), span means without role embedding
    statements: list[Statement]  # one per candidate pair, in pair order
    stmt_vecs: np.ndarray  # (n_pairs, dim), h_CLS
    asp_event_vecs: np.ndarray  # h_AspE
    asp_context_vecs: np.ndarray  # h_AspC
    stmt_ctxs: list[StatementCtx]


class EncoderGradAccumulator:
    """Collects d(loss)/d(projected token vector) until finalize()."""

    def __init__(self, encoded: EncodedDocument):
        self.d_token = [np.zeros_like(x) for x in encoded.token_vecs]
        self.d_bucket: dict[int, np.ndarray] = {}
        self.proj_outer: list[tuple[np.ndarray, np.ndarray]] = []

    def add_route(self, route: Route, d: np.ndarray) -> None:
        if route[0] == "x":
            _, s, j = route
            self.d_token[s][j] += d
        else:
            b = route[1]
            acc = self.d_bucket.get(b)
            if acc is None:
                self.d_bucket[b] = d.copy()
            else:
                acc += d

    def add_vec_ctx(self, ctx: VecCtx, d: np.ndarray) -> None:
        if ctx[0] == "mean":
            routes = ctx[1]
            share = d / len(routes)
            for route in routes:
                self.add_route(route, share)
        else:
            self.proj_outer.append((d, ctx[1]))

    def finalize(self, encoded: EncodedDocument, params, d_embed: np.ndarray, d_proj: np.ndarray) -> None:
        """Fold accumulated x-level gradients into embed/projection gradients."""
        for s, dx in enumerate(self.d_token):
            if dx.size == 0:
                continue
            d_proj += dx.T @ encoded.token_raw[s]
            if encoded.token_buckets is not None:
                np.add.at(d_embed, encoded.token_buckets[s], dx @ params.proj)
        for b, db in self.d_bucket.items():
            d_proj += np.outer(db, params.embed[b])
            d_embed[b] += params.proj.T @ db
        for dvec, raw in self.proj_outer:
            d_proj += np.outer(dvec, raw)


def _route_for_source(source: Source, form: str, config: EncoderConfig) -> Route:
    if source[0] == "doc":
        return ("x", source[1], source[2])
    return ("bucket", token_bucket(form, config))


def _route_vector(route: Route, encoded_tokens: list[np.ndarray], params) -> np.ndarray:
    if route[0] == "x":
        return encoded_tokens[route[1]][route[2]]
    return params.proj @ params.embed[route[1]]


def _mean_ctx(routes: list[Route], encoded_tokens: list[np.ndarray], params) -> tuple[np.ndarray, VecCtx]:
    vec = np.zeros(params.proj.shape[0])
    for route in routes:
        vec += _route_vector(route, encoded_tokens, params)
    return vec / len(routes), ("mean", routes)


def statement_vectors(
    stmt: Statement,
    config: EncoderConfig,
    params,
    token_vecs: list[np.ndarray],
    cache: EmbeddingCache | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, StatementCtx]:
    """h_CLS, h_AspE, h_AspC for one statement, with backward contexts.

    In cache mode the exporter's native stmt/aspE/aspC records are used for
    the document's own statements; synthetic statements (code-switched) are
    always computed from their token vectors.
    """
    if config.mode == "cache" and stmt.native:
        vecs = {}
        for kind in ("stmt", "aspE", "aspC"):
            key = statement_cache_key(stmt.doc_id, kind, *stmt.pair)
            raw = np.asarray(cache[key], dtype=np.float64)
            vecs[kind] = (params.proj @ raw, ("proj", raw))
        ctx = StatementCtx(cls=vecs["stmt"][1], asp_event=vecs["aspE"][1], asp_context=vecs["aspC"][1])
        return vecs["stmt"][0], vecs["aspE"][0], vecs["aspC"][0], ctx

    tagged, tag_spans, origin = _tag_with_origin(
        stmt.tokens, stmt.event_spans, config.open_tag, config.close_tag
    )
    in_event = set()
    for s, e in stmt.event_spans:
        in_event.update(range(s, e))

    cls_routes: list[Route] = []
    ctx_routes: list[Route] = []
    for p, form in enumerate(tagged):
        orig = origin[p]
        if orig < 0:
            route = ("bucket", token_bucket(form, config))
            cls_routes.append(route)
            ctx_routes.append(route)
        else:
            route = _route_for_source(stmt.sources[orig], stmt.tokens[orig], config)
            cls_routes.append(route)
            if orig in in_event:
                ctx_routes.append(("bucket", MASK_BUCKET))
            else:
                ctx_routes.append(route)

    event_routes: list[Route] = [
        _route_for_source(stmt.sources[i], stmt.tokens[i], config) for i in sorted(in_event)
    ]

    h_cls, cls_ctx = _mean_ctx(cls_routes, token_vecs, params)
    h_asp_e, asp_e_ctx = _mean_ctx(event_routes, token_vecs, params)
    h_asp_c, asp_c_ctx = _mean_ctx(ctx_routes, token_vecs, params)
    return h_cls, h_asp_e, h_asp_c, StatementCtx(cls=cls_ctx, asp_event=asp_e_ctx, asp_context=asp_c_ctx)


def encode(
    doc: Document,
    pairs: list[CandidatePair],
    phrases: list[InformativePhrase],
    config: EncoderConfig,
    params,
    cache: EmbeddingCache | None = None,
) -> EncodedDocument:
    """Project every token and build event/sentence/statement/aspect vectors."""
    if config.mode == "cache":
        if cache is None:
            raise DataError("cache mode requires an embedding cache")
        if cache.dim_in != config.dim_in:
            raise NumericError(
                f"cache width {cache.dim_in} does not match configured dim_in {config.dim_in}"
            )
    if params.proj.shape != (config.dim, config.dim_in):
        raise NumericError(
            f"projection shape {params.proj.shape} does not match (dim, dim_in)"
            f" = ({config.dim}, {config.dim_in})"
        )

    token_vecs = []
    token_raw = []
    token_buckets: list[np.ndarray] | None = [] if config.mode == "toy" else None
    for s, sentence in enumerate(doc.sentences):
        if config.mode == "toy":
            buckets = np.array([token_bucket(t.form, config) for t in sentence], dtype=np.int64)
            raw = params.embed[buckets]
            token_buckets.append(buckets)
        else:
            raw = np.stack(
                [
                    np.asarray(cache[token_cache_key(doc.id, s, j)], dtype=np.float64)
                    for j in range(len(sentence))
                ]
            )
        token_raw.append(raw)
        token_vecs.append(raw @ params.proj.T)

    sentence_vecs = np.stack([x.mean(axis=0) for x in token_vecs]) if token_vecs else np.zeros((0, config.dim))

    event_vecs = {}
    for ev in doc.events:
        event_vecs[ev.id] = token_vecs[ev.sentence_index][ev.start : ev.end].mean(axis=0)

    phrase_vecs = (
        np.stack([token_vecs[p.sentence_index][p.start : p.end].mean(axis=0) for p in phrases])
        if phrases
        else np.zeros((0, config.dim))
    )

    statements = []
    stmt_vecs = np.zeros((len(pairs), config.dim))
    asp_event_vecs = np.zeros((len(pairs), config.dim))
    asp_context_vecs = np.zeros((len(pairs), config.dim))
    stmt_ctxs = []
    for k, pair in enumerate(pairs):
        stmt = statement_tokens(doc.event_by_id(pair.a), doc.event_by_id(pair.b), doc)
        statements.append(stmt)
        h_cls, h_asp_e, h_asp_c, ctx = statement_vectors(stmt, config, params, token_vecs, cache)
        stmt_vecs[k] = h_cls
        asp_event_vecs[k] = h_asp_e
        asp_context_vecs[k] = h_asp_c
        stmt_ctxs.append(ctx)

    encoded = EncodedDocument(
        config=config,
        token_vecs=token_vecs,
        token_raw=token_raw,
        token_buckets=token_buckets,
        sentence_vecs=sentence_vecs,
        event_vecs=event_vecs,
        phrase_vecs=phrase_vecs,
        statements=statements,
        stmt_vecs=stmt_vecs,
        asp_event_vecs=asp_event_vecs,
        asp_context_vecs=asp_context_vecs,
        stmt_ctxs=stmt_ctxs,
    )
    for arrays in (token_vecs, [sentence_vecs, phrase_vecs, stmt_vecs, asp_event_vecs, asp_context_vecs]):
        for arr in arrays:
            if not np.isfinite(arr).all():
                raise NumericError(f"non-finite vectors while encoding document {doc.id}")
    return encoded
