"""Informative-phrase extraction from dependency trees.

A phrase is the contiguous projection of the subtree rooted at a dependent
bearing one of the 19 retained relations. Root-labeled tokens do not emit a
phrase (the sentence node already covers the whole sentence).
"""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import Token

# Exact-match membership; subtypes outside this list (e.g. obl:agent) are not
# folded into their base relation.
RETAINED_RELATIONS = frozenset(
    {
        "nsubj",
        "nsubj:pass",
        "obj",
        "iobj",
        "csubj",
        "obl",
        "obl:loc",
        "obl:tmod",
        "obl:npmod",
        "dislocated",
        "advcl",
        "advmod",
        "appos",
        "acl",
        "acl:relcl",
        "conj",
        "list",
        "parataxis",
        "root",
    }
)

# Stable row ids for the trainable role embedding table.
ROLE_INDEX = {label: i for i, label in enumerate(sorted(RETAINED_RELATIONS))}


@dataclass(frozen=True)
class InformativePhrase:
    sentence_index: int
    start: int  # half-open token range, 0-based
    end: int
    role: str
    root_token: int  # 0-based index of the phrase's syntactic head token

    @property
    def span(self) -> tuple[int, int]:
        return (self.start, self.end)


def _children_table(sentence: list[Token]) -> list[list[int]]:
    children: list[list[int]] = [[] for _ in sentence]
    for i, tok in enumerate(sentence):
        if tok.head > 0:
            children[tok.head - 1].append(i)
    return children


def subtree_indices(sentence: list[Token], root: int) -> list[int]:
    """All 0-based token indices in the subtree rooted at ``root`` (inclusive)."""
    children = _children_table(sentence)
    out = []
    stack = [root]
    while stack:
        i = stack.pop()
        out.append(i)
        stack.extend(children[i])
    return sorted(out)


def extract_phrases(sentence: list[Token], sentence_index: int = 0) -> list[InformativePhrase]:
    """One phrase per retained-relation dependent: the min/max projection of its subtree.

    Non-projective subtrees still take the min/max span, so a span may include
    interleaved tokens. Duplicate (span, role) combinations are dropped.
    """
    phrases = []
    seen: set[tuple[int, int, str]] = set()
    for i, tok in enumerate(sentence):
        if tok.deprel == "root" or tok.deprel not in RETAINED_RELATIONS:
            continue
        indices = subtree_indices(sentence, i)
        start, end = indices[0], indices[-1] + 1
        key = (start, end, tok.deprel)
        if key in seen:
            continue
        seen.add(key)
        phrases.append(
            InformativePhrase(
                sentence_index=sentence_index, start=start, end=end, role=tok.deprel, root_token=i
            )
        )
    phrases.sort(key=lambda p: (p.start, p.end, p.role))
    return phrases


def phrase_edges(phrases: list[InformativePhrase], sentence: list[Token]) -> list[tuple[int, int]]:
    """Unordered phrase-index pairs linked through the dependency structure.

    Phrases A and B are linked when the head of B's root token lies inside
    A's span, or vice versa.
    """

    def head_of(phrase: InformativePhrase) -> int | None:
        h = sentence[phrase.root_token].head
        return None if h == 0 else h - 1

    edges = []
    for i in range(len(phrases)):
        for j in range(i + 1, len(phrases)):
            a, b = phrases[i], phrases[j]
            hb = head_of(b)
            ha = head_of(a)
            if (hb is not None and a.start <= hb < a.end) or (
                ha is not None and b.start <= ha < b.end
            ):
                edges.append((i, j))
    return edges


def document_phrases(sentences: list[list[Token]]) -> list[InformativePhrase]:
    """Flat phrase list over all sentences, in (sentence, span) order."""
    out = []
    for s, sentence in enumerate(sentences):
        out.extend(extract_phrases(sentence, sentence_index=s))
    return out
