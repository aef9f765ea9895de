import numpy as np
import pytest
from hypothesis import given, strategies as st

from condstance.embed import (PRE_CONT, PRE_FIXED, RANDOM, EmbeddingSet, EmbeddingTable,
                              SkipgramConfig, cosine, init_table, load_embeddings, lookup,
                              save_embeddings, train_skipgram)
from condstance.encoders import StanceModel
from condstance.numcore import AdamState, adam_step
from condstance.textprep import UNK, Vocab


def cluster_corpus(seed, n=400):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        group = ["a", "b", "c"] if rng.random() < 0.5 else ["x", "y", "z"]
        out.append(list(rng.choice(group, 8)))
    return out


def pretrained(dim=4, tokens=("a", "b", "c")):
    rng = np.random.default_rng(3)
    return EmbeddingTable(rng.normal(size=(len(tokens) + 1, dim)), Vocab([UNK, *tokens]), PRE_FIXED, False)


@pytest.mark.parametrize("seed", range(5))
def test_skipgram_separates_cooccurrence_clusters(seed):
    cfg = SkipgramConfig(dim=10, window=2, min_count=1, epochs=3, seed=seed)
    table = train_skipgram(cluster_corpus(seed), cfg).table
    vec = {t: table.vectors[table.vocab.index(t)] for t in "abcxyz"}
    intra = np.mean([cosine(vec[p], vec[q]) for g in ("abc", "xyz") for p in g for q in g if p < q])
    inter = np.mean([cosine(vec[p], vec[q]) for p in "abc" for q in "xyz"])
    assert intra > inter


def test_skipgram_deterministic_and_finite():
    cfg = SkipgramConfig(dim=6, window=3, min_count=1, epochs=2, seed=11)
    a = train_skipgram(cluster_corpus(0, 60), cfg)
    b = train_skipgram(cluster_corpus(0, 60), cfg)
    assert a.table.vocab == b.table.vocab
    assert a.table.vectors.tobytes() == b.table.vectors.tobytes()
    assert a.total_pairs > 0 and np.isfinite(a.mean_loss)


def test_skipgram_degenerate_corpora():
    res = train_skipgram([["same"] * 10], SkipgramConfig(dim=3, min_count=1, epochs=1))
    assert np.all(np.isfinite(res.table.vectors))
    with pytest.raises(ValueError):
        train_skipgram([["lonely"]], SkipgramConfig(dim=3, min_count=1))


def test_skipgram_min_count_and_unk_row():
    res = train_skipgram([["a", "a", "b", "a", "c"]] * 3, SkipgramConfig(dim=3, min_count=4, epochs=1))
    assert res.table.vocab.itos == [UNK, "a"]
    assert res.table.vectors.shape == (2, 3)


def test_random_table_range_and_determinism():
    v = Vocab([UNK, "a", "b", "c"])
    t1 = init_table(v, RANDOM, 5, seed=4)
    t2 = init_table(v, RANDOM, 5, seed=4)
    assert np.array_equal(t1.vectors, t2.vectors) and t1.trainable
    assert np.all(np.abs(t1.vectors) <= 0.1)


def test_prefixed_and_precont_copy_rows():
    pre = pretrained()
    v = Vocab([UNK, "a", "b", "c", "new"])
    fixed = init_table(v, PRE_FIXED, pretrained=pre, seed=0)
    cont = init_table(v, PRE_CONT, pretrained=pre, seed=0)
    assert not fixed.trainable and cont.trainable
    for tok in ("a", "b", "c", UNK):
        assert np.array_equal(fixed.vectors[v.index(tok)], pre.vectors[pre.vocab.index(tok)])
    assert np.all(np.abs(fixed.vectors[v.index("new")]) <= 0.1)


def test_pretrained_mode_errors():
    v = Vocab([UNK, "a"])
    with pytest.raises(ValueError):
        init_table(v, PRE_CONT, seed=0)
    with pytest.raises(ValueError):
        init_table(v, PRE_FIXED, dim=7, pretrained=pretrained(dim=4), seed=0)


def one_step(mode):
    pre = pretrained()
    v = Vocab([UNK, "a", "b", "c"])
    table = init_table(v, mode, pretrained=pre, seed=0)
    m = StanceModel("BiCond", 4, 3, len(v), emb_trainable=table.trainable)
    m.init_params(np.random.default_rng(0), table.vectors)
    before = m.params["emb"].copy()
    _, grads, _ = m.loss_and_grads([(np.array([1, 2]), np.array([3, 1, 2]), 0)])
    adam_step(m.params, grads, AdamState(alpha=0.01), m.trainable)
    return before, m.params["emb"]


def test_precont_moves_and_prefixed_stays_after_a_step():
    before, after = one_step(PRE_CONT)
    assert np.any(before != after)
    before, after = one_step(PRE_FIXED)
    assert before.tobytes() == after.tobytes()


def test_lookup_and_sharing():
    t = init_table(Vocab([UNK, "trump", "x"]), RANDOM, 3, seed=1)
    rows = lookup(t, [0, 1, 1])
    np.testing.assert_array_equal(rows[0], t.vectors[0])
    np.testing.assert_array_equal(rows[1], rows[2])
    sing = EmbeddingSet(t)
    assert sing.table_for("target") is sing.table_for("tweet")
    sep = EmbeddingSet(t, init_table(t.vocab, RANDOM, 3, seed=2))
    assert sep.table_for("target") is not sep.table_for("tweet")
    with pytest.raises(IndexError):
        lookup(t, [3])


@given(row=st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=3, max_size=3))
def test_embedding_file_round_trip_exact(tmp_path_factory, row):
    path = tmp_path_factory.mktemp("emb") / "e.txt"
    t = EmbeddingTable(np.array([[0.0, 0.0, 0.0], row]), Vocab([UNK, "w"]), PRE_FIXED, False)
    save_embeddings(t, path)
    back = load_embeddings(path)
    assert back.vocab.itos == [UNK, "w"]
    assert back.vectors.tobytes() == t.vectors.tobytes()


def test_foreign_embedding_file_gets_unk_row(tmp_path):
    path = tmp_path / "w2v.txt"
    path.write_text("2 2\nhello 1 2\nworld 3 4\n", encoding="utf-8")
    t = load_embeddings(path)
    assert t.vocab.itos == [UNK, "hello", "world"]
    np.testing.assert_array_equal(t.vectors[0], [0, 0])
    path.write_text("2 2\nhello 1 2\n", encoding="utf-8")
    with pytest.raises(ValueError):
        load_embeddings(path)
