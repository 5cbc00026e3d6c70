import numpy as np
import pytest

from gimc.contrastive import (
    AnchorSet,
    ContrastiveConfig,
    code_switch_phrase,
    contrastive_loss,
    generate_positives,
    select_negatives,
    sim,
    switch_statement,
)
from gimc.corpus import BilingualDictionary
from gimc.encoder import Statement
from gimc.errors import DataError, NumericError


def en_da_dictionary():
    return BilingualDictionary(
        source_lang="en",
        target_lang="da",
        entries={
            "two": ["to"],
            "french": ["franske"],
            "military": ["militær"],
            "helicopters": ["helikoptere"],
        },
    )


def make_statement(tokens, spans, pair=("a", "b"), doc_positions=None):
    sources = []
    for i in range(len(tokens)):
        if doc_positions is not None:
            sources.append(("doc",) + doc_positions[i])
        else:
            sources.append(("doc", 0, i))
    return Statement(pair=pair, doc_id="d0", tokens=list(tokens), event_spans=list(spans), sources=sources)


# -- code switching -----------------------------------------------------------


def test_paper_code_switch_example(rng):
    out = code_switch_phrase(["two", "French", "military", "helicopters"], en_da_dictionary(), rng)
    assert out == ["to", "franske", "militær", "helikoptere"]


def test_empty_dictionary_keeps_phrase(rng):
    empty = BilingualDictionary(source_lang="en", target_lang="da")
    tokens = ["two", "French", "military", "helicopters"]
    assert code_switch_phrase(tokens, empty, rng) == tokens


def test_multi_translation_choice_is_seeded():
    d = BilingualDictionary(source_lang="en", target_lang="da", entries={"bank": ["bred", "brink"]})
    picks_a = code_switch_phrase(["bank"] * 20, d, np.random.default_rng(5))
    picks_b = code_switch_phrase(["bank"] * 20, d, np.random.default_rng(5))
    assert picks_a == picks_b
    assert set(picks_a) == {"bred", "brink"}


def test_switch_preserves_length_and_outside_tokens(rng):
    stmt = make_statement(["the", "two", "french", "crews", "crashed"], [(4, 5)])
    out = switch_statement(stmt, [(1, 3)], [en_da_dictionary()], rng)
    assert len(out.tokens) == 5
    assert out.tokens[0] == "the" and out.tokens[3] == "crews" and out.tokens[4] == "crashed"
    assert out.tokens[1:3] == ["to", "franske"]
    assert out.event_spans == [(4, 5)]
    assert out.sources[1] == ("form",) and out.sources[0] == ("doc", 0, 0)
    assert not out.native


def test_generate_positives_zero_phrases_identical(rng):
    stmt = make_statement(["crews", "crashed"], [(1, 2)])
    config = ContrastiveConfig(n_positives=3)
    for pos in generate_positives(stmt, [], [en_da_dictionary()], config, rng):
        assert pos.tokens == stmt.tokens


def test_generate_positives_requires_dictionaries(rng):
    stmt = make_statement(["crews", "crashed"], [(1, 2)])
    with pytest.raises(DataError, match="dictionar"):
        generate_positives(stmt, [], [], ContrastiveConfig(), rng)


def test_generate_positives_rng_replay():
    dict_a = en_da_dictionary()
    dict_b = BilingualDictionary(
        source_lang="en", target_lang="es", entries={"two": ["dos"], "french": ["franceses"]}
    )
    stmt = make_statement(["two", "french", "crews", "crashed"], [(3, 4)])
    spans = [(0, 2), (2, 3)]
    config = ContrastiveConfig(n_positives=4)
    positives = generate_positives(stmt, spans, [dict_a, dict_b], config, np.random.default_rng(9))

    # scripted replay of the documented rng call sequence: per phrase one
    # dictionary draw, then one draw per in-dictionary word
    replay_rng = np.random.default_rng(9)
    replayed = []
    for _ in range(4):
        tokens = list(stmt.tokens)
        for start, end in spans:
            d = [dict_a, dict_b][int(replay_rng.integers(2))]
            for i in range(start, end):
                options = d.translations(tokens[i])
                if options:
                    tokens[i] = options[int(replay_rng.integers(len(options)))]
        replayed.append(tokens)
    assert [p.tokens for p in positives] == replayed


# -- negative selection -------------------------------------------------------


def overlap_fixture(n_disjoint):
    """Anchor in sentence 0 plus n_disjoint eligible negatives elsewhere."""
    statements = [make_statement(["a0", "a1"], [(0, 1)], doc_positions=[(0, 0), (0, 1)])]
    flags = [True]
    spans = [[(0, 1)]]
    for i in range(n_disjoint):
        s = i + 1
        statements.append(
            make_statement(["n0", "n1"], [(0, 1)], pair=(f"x{i}", f"y{i}"), doc_positions=[(s, 0), (s, 1)])
        )
        flags.append(False)
        spans.append([(0, 1)])
    return statements, flags, spans


def test_all_overlapping_anchor_skipped(rng):
    statements = [
        make_statement(["a0", "a1"], [(0, 1)], doc_positions=[(0, 0), (0, 1)]),
        make_statement(["a0", "x"], [(0, 1)], pair=("c", "d"), doc_positions=[(0, 0), (1, 0)]),
    ]
    result = select_negatives(statements, [True, False], 0, [[], []], [en_da_dictionary()],
                              ContrastiveConfig(k_negatives=4), rng)
    assert result is None


def test_six_eligible_pick_four_distinct(rng):
    statements, flags, spans = overlap_fixture(6)
    result = select_negatives(statements, flags, 0, spans, [en_da_dictionary()],
                              ContrastiveConfig(k_negatives=4), rng)
    assert len(result.negative_indices) == 4
    assert len(set(result.negative_indices)) == 4
    assert result.negative_switched == []
    anchor_positions = {(0, 0), (0, 1)}
    for idx in result.negative_indices:
        positions = {(s[1], s[2]) for s in statements[idx].sources}
        assert not positions & anchor_positions


def test_shortfall_filled_with_switched_copies(rng):
    statements, flags, spans = overlap_fixture(2)
    result = select_negatives(statements, flags, 0, spans, [en_da_dictionary()],
                              ContrastiveConfig(k_negatives=4), rng)
    assert len(result.negative_indices) == 2
    assert len(result.negative_switched) == 2
    for stmt in result.negative_switched:
        assert not stmt.native
        assert len(stmt.tokens) == 2


def test_causal_statements_never_selected(rng):
    statements, flags, spans = overlap_fixture(4)
    flags[2] = True  # one of the disjoint statements becomes causal
    result = select_negatives(statements, flags, 0, spans, [en_da_dictionary()],
                              ContrastiveConfig(k_negatives=3), rng)
    assert 2 not in result.negative_indices


# -- similarity ---------------------------------------------------------------


def test_sim_identical_vectors(rng):
    u = rng.normal(size=6)
    config = ContrastiveConfig()
    assert sim(u, u, config) == pytest.approx(np.e)


def test_sim_orthogonal_vectors():
    config = ContrastiveConfig()
    assert sim(np.array([1.0, 0.0]), np.array([0.0, 2.0]), config) == pytest.approx(1.0)


def test_sim_half_cosine_low_temperature():
    config = ContrastiveConfig(temperature=0.5)
    u = np.array([1.0, 0.0])
    v = np.array([0.5, np.sqrt(3) / 2])  # cosine exactly 0.5
    assert sim(u, v, config) == pytest.approx(np.e)


def test_sim_zero_vector_rejected():
    with pytest.raises(NumericError):
        sim(np.zeros(3), np.ones(3), ContrastiveConfig())


def test_raw_dot_guard():
    config = ContrastiveConfig(raw_dot=True)
    assert sim(np.array([1.0, 1.0]), np.array([2.0, 0.0]), config) == pytest.approx(2.0)
    with pytest.raises(NumericError):
        sim(np.array([1.0, 0.0]), np.array([-1.0, 0.0]), config)


# -- losses --------------------------------------------------------------------


def test_loss_identical_positive_orthogonal_negatives():
    config = ContrastiveConfig(n_positives=1, k_negatives=2)
    anchor = np.array([1.0, 0.0, 0.0])
    positives = anchor[None, :].copy()
    negatives = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    loss, *_ = contrastive_loss(anchor, positives, negatives, config)
    assert loss == pytest.approx(-np.log(np.e / (np.e + 2.0)))
    assert loss == pytest.approx(0.55145, abs=1e-5)


def test_loss_all_orthogonal_closed_form():
    for k in (1, 2, 4):
        dim = k + 2
        anchor = np.eye(dim)[0]
        positives = np.eye(dim)[1][None, :]
        negatives = np.eye(dim)[2 : 2 + k]
        loss, *_ = contrastive_loss(anchor, positives, negatives, ContrastiveConfig())
        assert loss == pytest.approx(np.log(1 + k))


def test_loss_rejects_empty_sides(rng):
    anchor = rng.normal(size=4)
    with pytest.raises(ValueError):
        contrastive_loss(anchor, np.zeros((0, 4)), rng.normal(size=(2, 4)), ContrastiveConfig())
    with pytest.raises(ValueError):
        contrastive_loss(anchor, rng.normal(size=(2, 4)), np.zeros((0, 4)), ContrastiveConfig())


def test_loss_gradients_match_finite_differences(rng):
    config = ContrastiveConfig(n_positives=2, k_negatives=3, temperature=0.7)
    anchor = rng.normal(size=5)
    positives = rng.normal(size=(2, 5))
    negatives = rng.normal(size=(3, 5))
    loss, d_anchor, d_pos, d_neg = contrastive_loss(anchor, positives, negatives, config)
    eps = 1e-6
    for arr, grad in ((anchor, d_anchor), (positives, d_pos), (negatives, d_neg)):
        flat, gflat = arr.reshape(-1), grad.reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + eps
            up, *_ = contrastive_loss(anchor, positives, negatives, config)
            flat[i] = old - eps
            down, *_ = contrastive_loss(anchor, positives, negatives, config)
            flat[i] = old
            fd = (up - down) / (2 * eps)
            assert abs(fd - gflat[i]) <= 1e-6 * max(1.0, abs(fd), abs(gflat[i]))


def test_loss_monotone_in_similarities(rng):
    config = ContrastiveConfig()
    anchor = rng.normal(size=4)
    positives = rng.normal(size=(1, 4))
    negatives = rng.normal(size=(2, 4))
    base, *_ = contrastive_loss(anchor, positives, negatives, config)
    # nudging the positive toward the anchor lowers the loss
    closer = positives + 0.1 * (anchor - positives)
    lower, *_ = contrastive_loss(anchor, closer, negatives, config)
    assert lower < base
    # nudging one negative toward the anchor raises the loss
    worse_neg = negatives.copy()
    worse_neg[0] += 0.1 * (anchor - worse_neg[0])
    higher, *_ = contrastive_loss(anchor, positives, worse_neg, config)
    assert higher > base


def test_loss_scale_invariant_under_normalization(rng):
    config = ContrastiveConfig()
    anchor = rng.normal(size=4)
    positives = rng.normal(size=(2, 4))
    negatives = rng.normal(size=(3, 4))
    a, *_ = contrastive_loss(anchor, positives, negatives, config)
    b, *_ = contrastive_loss(7.3 * anchor, 7.3 * positives, 7.3 * negatives, config)
    assert a == pytest.approx(b, rel=1e-12)
