"""Code-switched positives, non-overlapping negatives, and the three
contrastive losses over statement and aspect vectors.

Each loss has the same shape: for anchor vector h and per-sample similarity
s(., .),

    L = - sum_j log[ s(h, p_j) / (s(h, p_j) + sum_k s(h, n_k)) ]

By default s(u, v) = exp(cos(u, v) / tau), which keeps every term positive;
the literal raw dot product is available behind ``raw_dot`` and rejects
non-positive terms.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import BilingualDictionary
from .encoder import Statement
from .errors import DataError, NumericError


@dataclass
class ContrastiveConfig:
    n_positives: int = 2
    k_negatives: int = 4
    temperature: float = 1.0
    normalize: bool = True
    raw_dot: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.temperature <= 0:
            raise NumericError("temperature must be positive")


@dataclass
class AnchorSet:
    """One causal anchor with its sampled positives and negatives.

    Negatives are either indices of the document's own candidate-pair
    statements or code-switched Statement copies filling a shortfall.
    """

    pair_index: int
    positives: list[Statement]
    negative_indices: list[int]
    negative_switched: list[Statement] = field(default_factory=list)


# ---------------------------------------------------------------------------
# Code-switching
# ---------------------------------------------------------------------------


def code_switch_phrase(
    tokens: list[str], dictionary: BilingualDictionary, rng: np.random.Generator
) -> list[str]:
    """Replace each word with a uniformly chosen translation; unknown words stay."""
    out = []
    for tok in tokens:
        options = dictionary.translations(tok)
        if options:
            out.append(options[int(rng.integers(len(options)))])
        else:
            out.append(tok)
    return out


def switch_statement(
    stmt: Statement,
    phrase_spans: list[tuple[int, int]],
    dictionaries: list[BilingualDictionary],
    rng: np.random.Generator,
) -> Statement:
    """Code-switch every informative phrase, one random dictionary per phrase.

    Tokens outside phrase spans are untouched; length, event spans, and tag
    positions are preserved. Switched positions lose their document
    provenance (their vectors will come from the trainable table).
    """
    if not dictionaries:
        raise DataError("no dictionaries configured for code-switching")
    tokens = list(stmt.tokens)
    sources = list(stmt.sources)
    for start, end in sorted(phrase_spans):
        dictionary = dictionaries[int(rng.integers(len(dictionaries)))]
        replaced = code_switch_phrase(tokens[start:end], dictionary, rng)
        for off, new_tok in enumerate(replaced):
            if new_tok != tokens[start + off]:
                tokens[start + off] = new_tok
                sources[start + off] = ("form",)
    return Statement(
        pair=stmt.pair,
        doc_id=stmt.doc_id,
        tokens=tokens,
        event_spans=list(stmt.event_spans),
        sources=sources,
        native=False,
    )


def generate_positives(
    stmt: Statement,
    phrase_spans: list[tuple[int, int]],
    dictionaries: list[BilingualDictionary],
    config: ContrastiveConfig,
    rng: np.random.Generator,
) -> list[Statement]:
    """n code-switched variants of the anchor statement."""
    if not dictionaries:
        raise DataError("no dictionaries configured for code-switching")
    return [switch_statement(stmt, phrase_spans, dictionaries, rng) for _ in range(config.n_positives)]


def statement_positions(stmt: Statement) -> set[tuple[int, int]]:
    """Document token positions a statement occupies."""
    return {(src[1], src[2]) for src in stmt.sources if src[0] == "doc"}


def select_negatives(
    statements: list[Statement],
    causal_flags: list[bool],
    anchor_index: int,
    phrase_spans_of: list[list[tuple[int, int]]],
    dictionaries: list[BilingualDictionary],
    config: ContrastiveConfig,
    rng: np.random.Generator,
) -> AnchorSet | None:
    """K non-causal statements with no token overlap against the anchor.

    Drawn without replacement; a shortfall is filled with code-switched
    copies of the already selected negatives. Returns None (anchor skipped)
    when no statement is eligible.
    """
    anchor_positions = statement_positions(statements[anchor_index])
    eligible = [
        k
        for k, stmt in enumerate(statements)
        if k != anchor_index
        and not causal_flags[k]
        and not (statement_positions(stmt) & anchor_positions)
    ]
    if not eligible:
        return None
    order = rng.permutation(len(eligible))
    chosen = [eligible[int(i)] for i in order[: config.k_negatives]]
    switched = []
    for i in range(config.k_negatives - len(chosen)):
        base = chosen[i % len(chosen)]
        switched.append(
            switch_statement(statements[base], phrase_spans_of[base], dictionaries, rng)
        )
    return AnchorSet(
        pair_index=anchor_index,
        positives=[],
        negative_indices=chosen,
        negative_switched=switched,
    )


# ---------------------------------------------------------------------------
# Similarity and losses
# ---------------------------------------------------------------------------


def sim(u: np.ndarray, v: np.ndarray, config: ContrastiveConfig) -> float:
    """exp(cos(u, v) / tau), or the guarded raw dot product."""
    value, _, _ = _sim_grad(u, v, config)
    return value


def _sim_grad(u: np.ndarray, v: np.ndarray, config: ContrastiveConfig) -> tuple[float, np.ndarray, np.ndarray]:
    if u.shape != v.shape:
        raise NumericError(f"similarity inputs have widths {u.shape} and {v.shape}")
    if config.raw_dot:
        value = float(u @ v)
        if value <= 0:
            raise NumericError("raw dot-product similarity produced a non-positive term")
        return value, v.copy(), u.copy()
    if config.normalize:
        nu, nv = np.linalg.norm(u), np.linalg.norm(v)
        if nu == 0 or nv == 0:
            raise NumericError("cannot normalize a zero vector in similarity")
        uh, vh = u / nu, v / nv
        c = float(uh @ vh)
        value = float(np.exp(c / config.temperature))
        scale = value / config.temperature
        du = scale * (vh - c * uh) / nu
        dv = scale * (uh - c * vh) / nv
        return value, du, dv
    c = float(u @ v)
    value = float(np.exp(c / config.temperature))
    scale = value / config.temperature
    return value, scale * v, scale * u


def contrastive_loss(
    anchor: np.ndarray,
    positives: np.ndarray,
    negatives: np.ndarray,
    config: ContrastiveConfig,
) -> tuple[float, np.ndarray, np.ndarray, np.ndarray]:
    """Loss and exact gradients w.r.t. the anchor, positives, and negatives.

    positives: (n, dim), negatives: (K, dim). Each per-positive term is
    decreasing in its positive similarity and increasing in every negative
    similarity.
    """
    n, k = len(positives), len(negatives)
    if n == 0 or k == 0:
        raise ValueError("contrastive loss needs at least one positive and one negative")
    pos = [_sim_grad(anchor, p, config) for p in positives]
    neg = [_sim_grad(anchor, q, config) for q in negatives]
    q_total = sum(v for v, _, _ in neg)
    loss = 0.0
    inv_denoms = []
    d_anchor = np.zeros_like(anchor)
    d_pos = np.zeros_like(positives, dtype=float)
    for j, (t, dt_du, dt_dv) in enumerate(pos):
        denom = t + q_total
        loss += np.log(denom) - np.log(t)
        inv_denoms.append(1.0 / denom)
        coeff = 1.0 / denom - 1.0 / t
        d_anchor += coeff * dt_du
        d_pos[j] = coeff * dt_dv
    neg_coeff = sum(inv_denoms)
    d_neg = np.zeros_like(negatives, dtype=float)
    for kk, (_, dq_du, dq_dv) in enumerate(neg):
        d_anchor += neg_coeff * dq_du
        d_neg[kk] = neg_coeff * dq_dv
    return float(loss), d_anchor, d_pos, d_neg


def loss_statement(anchor_cls, positive_cls, negative_cls, config):
    return contrastive_loss(anchor_cls, positive_cls, negative_cls, config)


def loss_aspect_event(anchor_cls, positive_asp_e, negative_asp_e, config):
    return contrastive_loss(anchor_cls, positive_asp_e, negative_asp_e, config)


def loss_aspect_context(anchor_cls, positive_asp_c, negative_asp_c, config):
    return contrastive_loss(anchor_cls, positive_asp_c, negative_asp_c, config)
