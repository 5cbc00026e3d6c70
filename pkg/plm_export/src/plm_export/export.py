"""Run a frozen encoder over a corpus and write the embedding cache.

For every document: one record per token, then per candidate event pair a
tagged-statement vector (stmt), the mean over the event-span word vectors
(aspE), and the statement vector of the event-masked sequence (aspC).
Documents are processed sequentially in corpus order so output bytes are
reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .encoders import build_encoder
from .formats import (
    MASK_TOKEN,
    ExportError,
    ParsedDocument,
    event_pairs,
    insert_tags,
    read_corpus,
    statement_key,
    statement_tokens,
    token_key,
    write_cache,
)


@dataclass
class ExportJob:
    corpus_path: Path
    encoder_name: str = "hash"
    output_path: Path = Path("cache.embc")
    dim: int = 32  # hash backend only; real encoders fix their own width
    device: str = "cpu"


def document_records(doc: ParsedDocument, encoder) -> list[tuple[str, np.ndarray]]:
    records: list[tuple[str, np.ndarray]] = []
    word_vecs = [encoder.word_vectors(sentence) for sentence in doc.sentences]
    for s, vecs in enumerate(word_vecs):
        for j in range(len(vecs)):
            records.append((token_key(doc.id, s, j), vecs[j]))
    for ev_a, ev_b in event_pairs(doc):
        tokens, spans = statement_tokens(ev_a, ev_b, doc)
        tagged, tag_spans = insert_tags(tokens, spans)
        stmt_vec = encoder.statement_vector(tagged)

        statement_words = encoder.word_vectors(tokens)
        span_vectors = [statement_words[i] for s, e in spans for i in range(s, e)]
        asp_event = np.mean(span_vectors, axis=0, dtype=np.float64).astype(np.float32)

        masked = list(tokens)
        for s, e in spans:
            for i in range(s, e):
                masked[i] = MASK_TOKEN
        masked_tagged, _ = insert_tags(masked, spans)
        asp_context = encoder.statement_vector(masked_tagged)

        records.append((statement_key(doc.id, "stmt", ev_a.id, ev_b.id), stmt_vec))
        records.append((statement_key(doc.id, "aspE", ev_a.id, ev_b.id), asp_event))
        records.append((statement_key(doc.id, "aspC", ev_a.id, ev_b.id), asp_context))
    return records


def export(job: ExportJob) -> dict:
    corpus = read_corpus(Path(job.corpus_path))
    encoder = build_encoder(job.encoder_name, dim=job.dim, device=job.device)
    records: list[tuple[str, np.ndarray]] = []
    for doc in corpus:
        records.extend(document_records(doc, encoder))
    write_cache(records, encoder.dim, Path(job.output_path))
    return {"documents": len(corpus), "records": len(records), "dim": encoder.dim}
