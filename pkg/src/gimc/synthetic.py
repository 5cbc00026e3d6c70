"""Deterministic synthetic fixture corpora.

Documents follow small dependency-tree templates. Causality is planted
lexically: a document's relation sentence holds two events, and the pair is
gold-causal exactly when the language's cue word sits between the events
(non-causal relation sentences carry an ordinary adverb instead). Every
language shares the same structural random stream, so corpora of different
languages are word-by-word isomorphic through the emitted dictionaries.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Document, EventMention, Token, save_document
from .encoder import stable_hash64


@dataclass
class SyntheticSpec:
    languages: list[str]
    docs_per_language: int = 8
    events_per_doc: int = 4
    cue_strength: float = 1.0
    seed: int = 0
    nouns: int = 5
    verbs: int = 3
    adverbs: int = 2
    min_extra_nouns: int = 1  # oblique padding appended to single-event sentences
    max_extra_nouns: int = 3
    relation_object: bool = False  # append an object noun to the relation sentence


def vocabulary(lang: str, spec: SyntheticSpec) -> list[str]:
    words = [f"{lang}_noun{i}" for i in range(spec.nouns)]
    words += [f"{lang}_verb{i}" for i in range(spec.verbs)]
    words += [f"{lang}_adv{i}" for i in range(spec.adverbs)]
    words.append(f"{lang}_cue")
    return words


def _structure_rng(spec: SyntheticSpec, doc_index: int) -> np.random.Generator:
    return np.random.default_rng(stable_hash64(f"synthetic:{spec.seed}:{doc_index}"))


def _noun(lang, rng, spec):
    return f"{lang}_noun{int(rng.integers(spec.nouns))}"


def _verb(lang, rng, spec):
    return f"{lang}_verb{int(rng.integers(spec.verbs))}"


def _adv(lang, rng, spec):
    return f"{lang}_adv{int(rng.integers(spec.adverbs))}"


def build_document(lang: str, doc_index: int, spec: SyntheticSpec) -> Document:
    """One document; all structural choices come from a language-independent stream."""
    rng = _structure_rng(spec, doc_index)
    n_events = spec.events_per_doc

    sentences: list[list[Token]] = []
    event_slots: list[tuple[int, int]] = []  # (sentence position in build order, token idx)
    causal_slot: tuple[int, int] | None = None

    def add_relation_sentence():
        # both event tokens sit outside retained phrases (root and xcomp), so
        # code-switching augments context words without touching event spans
        nonlocal causal_slot
        causal = bool(rng.random() < spec.cue_strength)
        link = f"{lang}_cue" if causal else _adv(lang, rng, spec)
        toks = [
            Token(1, _noun(lang, rng, spec), 2, "nsubj"),
            Token(2, _verb(lang, rng, spec), 0, "root"),
            Token(3, link, 2, "advmod"),
            Token(4, _verb(lang, rng, spec), 2, "xcomp"),
        ]
        if spec.relation_object:
            toks.append(Token(5, _noun(lang, rng, spec), 4, "obj"))
        s = len(sentences)
        sentences.append(toks)
        event_slots.append((s, 1))
        event_slots.append((s, 3))
        if causal:
            causal_slot = (len(event_slots) - 2, len(event_slots) - 1)

    def add_single_event_sentence():
        # padded with adverbs rather than nouns so that non-causal statements
        # carry vocabulary that never occurs in a causal statement
        toks = [
            Token(1, _noun(lang, rng, spec), 2, "nsubj"),
            Token(2, _verb(lang, rng, spec), 0, "root"),
            Token(3, _noun(lang, rng, spec), 2, "obj"),
            Token(4, _adv(lang, rng, spec), 2, "advmod"),
        ]
        span = max(spec.max_extra_nouns - spec.min_extra_nouns, 0) + 1
        extras = spec.min_extra_nouns + (int(rng.integers(span)) if span > 1 else 0)
        for _ in range(extras):
            toks.append(Token(len(toks) + 1, _adv(lang, rng, spec), 2, "advmod"))
        s = len(sentences)
        sentences.append(toks)
        event_slots.append((s, 1))

    def add_filler_sentence():
        sentences.append(
            [
                Token(1, _noun(lang, rng, spec), 2, "nsubj"),
                Token(2, _verb(lang, rng, spec), 0, "root"),
                Token(3, _noun(lang, rng, spec), 2, "obj"),
                Token(4, _adv(lang, rng, spec), 2, "advmod"),
            ]
        )

    if n_events >= 2:
        add_relation_sentence()
        for _ in range(n_events - 2):
            add_single_event_sentence()
    else:
        for _ in range(n_events):
            add_single_event_sentence()
    add_filler_sentence()

    events = [
        EventMention(id=f"e{i}", sentence_index=s, start=t, end=t + 1)
        for i, (s, t) in enumerate(event_slots)
    ]
    gold = set()
    if causal_slot is not None:
        a, b = f"e{causal_slot[0]}", f"e{causal_slot[1]}"
        gold.add((a, b) if a <= b else (b, a))

    return Document(
        id=f"{lang}-doc{doc_index:03d}",
        language=lang,
        sentences=sentences,
        events=events,
        gold_pairs=gold,
    )


def build_corpus(lang: str, spec: SyntheticSpec) -> list[Document]:
    return [build_document(lang, i, spec) for i in range(spec.docs_per_language)]


def dictionary_lines(source: str, target: str, spec: SyntheticSpec) -> list[str]:
    src_words = vocabulary(source, spec)
    tgt_words = vocabulary(target, spec)
    return [f"{s} {t}" for s, t in zip(src_words, tgt_words)]


def generate(spec: SyntheticSpec, out_dir: Path | str) -> dict:
    """Write per-language corpora plus dictionaries linking every language pair."""
    out_dir = Path(out_dir)
    written = {"documents": 0, "dictionaries": 0, "languages": list(spec.languages)}
    for lang in spec.languages:
        lang_dir = out_dir / lang
        lang_dir.mkdir(parents=True, exist_ok=True)
        for doc in build_corpus(lang, spec):
            save_document(doc, lang_dir / f"{doc.id}.gimc.json")
            written["documents"] += 1
    if len(spec.languages) > 1:
        dict_dir = out_dir / "dicts"
        dict_dir.mkdir(parents=True, exist_ok=True)
        for source in spec.languages:
            for target in spec.languages:
                if source == target:
                    continue
                path = dict_dir / f"{source}-{target}.txt"
                path.write_text("\n".join(dictionary_lines(source, target, spec)) + "\n", encoding="utf-8")
                written["dictionaries"] += 1
    return written
