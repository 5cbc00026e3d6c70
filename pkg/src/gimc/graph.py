"""Heterogeneous interaction graph for one document.

Four node kinds (phrase, sentence, statement, event pair) and six undirected
edge sets:

* PP: phrase pairs linked through the dependency structure;
* SP: each phrase to its sentence;
* PE: each phrase whose span contains an event token of a pair, to that
  pair's node;
* SE: each sentence containing either event of a pair, to that pair's node;
* StE: each pair node to its own statement node;
* EE: pair nodes sharing at least one event.

Node indices are laid out phrases first, then sentences, statements, pairs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import CandidatePair, Document
from .encoder import EncodedDocument
from .errors import NumericError
from .phrases import ROLE_INDEX, InformativePhrase, phrase_edges

EDGE_KINDS = ("PP", "SP", "PE", "SE", "StE", "EE")

KIND_PHRASE = "phrase"
KIND_SENTENCE = "sentence"
KIND_STATEMENT = "statement"
KIND_PAIR = "pair"


@dataclass
class HeteroGraph:
    n_phrases: int
    n_sentences: int
    n_pairs: int
    kinds: list[str]
    refs: list[int]  # index into the phrase / sentence / pair lists
    edges: dict[str, set[tuple[int, int]]]
    init: np.ndarray | None = None  # (num_nodes, dim) once features are attached

    @property
    def num_nodes(self) -> int:
        return self.n_phrases + self.n_sentences + 2 * self.n_pairs

    def phrase_node(self, i: int) -> int:
        return i

    def sentence_node(self, s: int) -> int:
        return self.n_phrases + s

    def statement_node(self, k: int) -> int:
        return self.n_phrases + self.n_sentences + k

    def pair_node(self, k: int) -> int:
        return self.n_phrases + self.n_sentences + self.n_pairs + k

    def neighbor_lists(self) -> list[list[int]]:
        """Undirected adjacency with a self-loop on every node."""
        neighbors: list[set[int]] = [{i} for i in range(self.num_nodes)]
        for pairs in self.edges.values():
            for i, j in pairs:
                neighbors[i].add(j)
                neighbors[j].add(i)
        return [sorted(n) for n in neighbors]


def _edge(i: int, j: int) -> tuple[int, int]:
    return (i, j) if i < j else (j, i)


def build_topology(
    doc: Document, phrases: list[InformativePhrase], pairs: list[CandidatePair]
) -> HeteroGraph:
    g = HeteroGraph(
        n_phrases=len(phrases),
        n_sentences=len(doc.sentences),
        n_pairs=len(pairs),
        kinds=[KIND_PHRASE] * len(phrases)
        + [KIND_SENTENCE] * len(doc.sentences)
        + [KIND_STATEMENT] * len(pairs)
        + [KIND_PAIR] * len(pairs),
        refs=list(range(len(phrases)))
        + list(range(len(doc.sentences)))
        + list(range(len(pairs)))
        + list(range(len(pairs))),
        edges={kind: set() for kind in EDGE_KINDS},
    )

    by_sentence: dict[int, list[int]] = {}
    for i, p in enumerate(phrases):
        by_sentence.setdefault(p.sentence_index, []).append(i)

    for s, local_ids in by_sentence.items():
        local = [phrases[i] for i in local_ids]
        for a, b in phrase_edges(local, doc.sentences[s]):
            g.edges["PP"].add(_edge(local_ids[a], local_ids[b]))
        for i in local_ids:
            g.edges["SP"].add(_edge(g.phrase_node(i), g.sentence_node(s)))

    events = {ev.id: ev for ev in doc.events}
    for k, pair in enumerate(pairs):
        pair_node = g.pair_node(k)
        g.edges["StE"].add(_edge(pair_node, g.statement_node(k)))
        for eid in pair.ids:
            ev = events[eid]
            g.edges["SE"].add(_edge(g.sentence_node(ev.sentence_index), pair_node))
            for i, p in enumerate(phrases):
                if p.sentence_index == ev.sentence_index and p.start < ev.end and ev.start < p.end:
                    g.edges["PE"].add(_edge(g.phrase_node(i), pair_node))
        for k2 in range(k):
            if set(pairs[k2].ids) & set(pair.ids):
                g.edges["EE"].add(_edge(g.pair_node(k2), pair_node))
    return g


@dataclass
class InitCtx:
    """Backward bookkeeping for the node-init computation."""

    phrases: list[InformativePhrase]
    pairs: list[CandidatePair]
    event_spans: dict[str, tuple[int, int, int]]  # id -> (sentence, start, end)
    pair_inputs: list[np.ndarray] = field(default_factory=list)  # concat(e_a, e_b) per pair


def init_features(
    g: HeteroGraph,
    doc: Document,
    phrases: list[InformativePhrase],
    pairs: list[CandidatePair],
    encoded: EncodedDocument,
    role_table: np.ndarray,
    w_v: np.ndarray,
) -> tuple[np.ndarray, InitCtx]:
    """Initial node features: phrase span-mean + role embedding, sentence and
    statement means, and the pair projection W_v [e_a || e_b]."""
    dim = encoded.config.dim
    if role_table.shape[1] != dim:
        raise NumericError(f"role table width {role_table.shape[1]} != dim {dim}")
    if w_v.shape != (dim, 2 * dim):
        raise NumericError(f"W_v shape {w_v.shape} != ({dim}, {2 * dim})")

    H = np.zeros((g.num_nodes, dim))
    for i, p in enumerate(phrases):
        H[g.phrase_node(i)] = encoded.phrase_vecs[i] + role_table[ROLE_INDEX[p.role]]
    for s in range(g.n_sentences):
        H[g.sentence_node(s)] = encoded.sentence_vecs[s]
    ctx = InitCtx(
        phrases=phrases,
        pairs=pairs,
        event_spans={ev.id: (ev.sentence_index, ev.start, ev.end) for ev in doc.events},
    )
    for k, pair in enumerate(pairs):
        H[g.statement_node(k)] = encoded.stmt_vecs[k]
        concat = np.concatenate([encoded.event_vecs[pair.a], encoded.event_vecs[pair.b]])
        ctx.pair_inputs.append(concat)
        H[g.pair_node(k)] = w_v @ concat
    return H, ctx


def init_backward(
    g: HeteroGraph,
    ctx: InitCtx,
    d_init: np.ndarray,
    encoded: EncodedDocument,
    w_v: np.ndarray,
    d_role_table: np.ndarray,
    d_w_v: np.ndarray,
    acc,
) -> None:
    """Push node-init gradients into role/W_v gradients and the encoder accumulator."""
    dim = encoded.config.dim
    for i, p in enumerate(ctx.phrases):
        d = d_init[g.phrase_node(i)]
        d_role_table[ROLE_INDEX[p.role]] += d
        acc.d_token[p.sentence_index][p.start : p.end] += d / (p.end - p.start)
    for s in range(g.n_sentences):
        d = d_init[g.sentence_node(s)]
        n = len(encoded.token_vecs[s])
        acc.d_token[s] += d / n
    for k, pair in enumerate(ctx.pairs):
        acc.add_vec_ctx(encoded.stmt_ctxs[k].cls, d_init[g.statement_node(k)])
        d = d_init[g.pair_node(k)]
        d_w_v += np.outer(d, ctx.pair_inputs[k])
        d_concat = w_v.T @ d
        for half, eid in enumerate(pair.ids):
            s, a, b = ctx.event_spans[eid]
            d_event = d_concat[half * dim : (half + 1) * dim]
            acc.d_token[s][a:b] += d_event / (b - a)


def build_graph(
    doc: Document,
    phrases: list[InformativePhrase],
    pairs: list[CandidatePair],
    encoded: EncodedDocument,
    role_table: np.ndarray,
    w_v: np.ndarray,
) -> tuple[HeteroGraph, InitCtx]:
    g = build_topology(doc, phrases, pairs)
    g.init, ctx = init_features(g, doc, phrases, pairs, encoded, role_table, w_v)
    return g, ctx


def graph_stats(g: HeteroGraph) -> dict:
    return {
        "nodes": {
            "phrase": g.n_phrases,
            "sentence": g.n_sentences,
            "statement": g.n_pairs,
            "pair": g.n_pairs,
        },
        "edges": {kind: len(g.edges[kind]) for kind in EDGE_KINDS},
    }
