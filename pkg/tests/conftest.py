import numpy as np
import pytest

from gimc.corpus import Document, EventMention, Token


def make_sentence(heads_deprels, forms=None):
    """Build a token list from [(head, deprel), ...]; forms default to w0, w1, ..."""
    tokens = []
    for i, (head, deprel) in enumerate(heads_deprels):
        form = forms[i] if forms else f"w{i}"
        tokens.append(Token(index=i + 1, form=form, head=head, deprel=deprel))
    return tokens


def make_doc(doc_id="d0", language="en", sentences=(), events=(), relations=()):
    gold = set()
    for a, b in relations:
        gold.add((a, b) if a <= b else (b, a))
    return Document(
        id=doc_id,
        language=language,
        sentences=list(sentences),
        events=[EventMention(id=i, sentence_index=s, start=a, end=b) for i, s, a, b in events],
        gold_pairs=gold,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def random_tree_sentence(rng, n, retained_prob=0.5):
    """Random valid dependency tree with a mix of retained and other relations."""
    from gimc.phrases import RETAINED_RELATIONS

    retained = sorted(RETAINED_RELATIONS - {"root"})
    other = ["det", "case", "punct", "amod", "nmod", "mark", "cc", "aux"]
    order = [int(i) for i in rng.permutation(n)]
    heads = [0] * n
    deprels = [""] * n
    for pos, tok in enumerate(order):
        if pos == 0:
            heads[tok] = 0
            deprels[tok] = "root"
        else:
            parent = order[int(rng.integers(pos))]
            heads[tok] = parent + 1
            if rng.random() < retained_prob:
                deprels[tok] = retained[int(rng.integers(len(retained)))]
            else:
                deprels[tok] = other[int(rng.integers(len(other)))]
    return make_sentence(list(zip(heads, deprels)))


def random_document(rng, doc_id="rand", n_sentences=None, max_tokens=8, n_events=None):
    """Random valid document with non-overlapping single-token events."""
    n_sentences = n_sentences or int(rng.integers(1, 4))
    sentences = [random_tree_sentence(rng, int(rng.integers(2, max_tokens))) for _ in range(n_sentences)]
    n_events = n_events if n_events is not None else int(rng.integers(0, 5))
    events = []
    used = set()
    attempts = 0
    while len(events) < n_events and attempts < 100:
        attempts += 1
        s = int(rng.integers(n_sentences))
        t = int(rng.integers(len(sentences[s])))
        if (s, t) in used:
            continue
        used.add((s, t))
        events.append((f"e{len(events)}", s, t, t + 1))
    relations = []
    ids = [e[0] for e in events]
    for i in range(len(ids)):
        for j in range(i + 1, len(ids)):
            if rng.random() < 0.3:
                relations.append((ids[i], ids[j]))
    return make_doc(doc_id=doc_id, sentences=sentences, events=events, relations=relations)
