import io
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import clique_separation, two_cliques
from hinembed.embed.matrix import EmbeddingMatrix, read_embeddings, write_embeddings
from hinembed.embed.sgns import (
    SgnsConfig,
    alias_table,
    build_vocab,
    count_pairs,
    log_sigmoid,
    sgns_objective,
    train_sgns,
)
from hinembed.walks import WalkConfig, WalkCorpus, uniform_walks


def test_vocab_counts_and_noise():
    v = build_vocab(WalkCorpus.from_walks([[0, 1, 0]]))
    assert v.as_dict() == {0: 2, 1: 1}
    v = build_vocab(WalkCorpus.from_walks([[0] * 16 + [1]]))
    assert np.allclose(v.noise, [8 / 9, 1 / 9], rtol=0, atol=1e-15)
    v = build_vocab(WalkCorpus.from_walks([[3, 4, 5], [5, 4, 3]]))
    assert np.allclose(v.noise, 1 / 3)
    with pytest.raises(ValueError):
        build_vocab(WalkCorpus.from_walks([]))


@given(st.lists(st.floats(1e-6, 1.0), min_size=1, max_size=50))
def test_alias_table_reconstructs_distribution(weights):
    p = np.asarray(weights) / np.sum(weights)
    prob, alias = alias_table(p)
    n = p.size
    mass = prob / n
    np.add.at(mass, alias, (1.0 - prob) / n)
    assert np.allclose(mass, p, atol=1e-12)


def test_objective_examples():
    z = np.zeros(4)
    loss, gu, gv, gn = sgns_objective(z, z, np.zeros((1, 4)))
    assert loss == pytest.approx(2 * math.log(2), abs=1e-15)
    assert np.all(gu == 0) and np.all(gv == 0) and np.all(gn == 0)
    u = np.array([1.0, 2.0])
    loss, gu, gv, gn = sgns_objective(u, z[:2], np.zeros((1, 2)))
    # only sigma(0) = 0.5 enters: d/dv = (0.5 - 1) u, d/dn = 0.5 u
    assert np.allclose(gv, -0.5 * u) and np.allclose(gn, 0.5 * u[None])
    u = np.array([2.0, 4.0])
    v = np.array([1.0, 4.5])  # u.v = 20
    loss, *_ = sgns_objective(u, v, np.empty((0, 2)))
    assert loss < 1e-8
    with pytest.raises(ValueError):
        sgns_objective(np.zeros(3), np.zeros(2), np.zeros((1, 3)))
    with pytest.raises(ValueError):
        sgns_objective(np.zeros(3), np.zeros(3), np.zeros((1, 2)))


def central_diff(f, x, h=1e-5):
    g = np.zeros_like(x)
    for i in np.ndindex(x.shape):
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (f(xp) - f(xm)) / (2 * h)
    return g


def rel_err(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)


def check_gradients(objective, rng, dim=5):
    k = int(rng.integers(0, 6))
    u, v = rng.normal(size=dim), rng.normal(size=dim)
    neg = rng.normal(size=(k, dim))
    _, gu, gv, gn = objective(u, v, neg)
    errs = [rel_err(gu, central_diff(lambda x: objective(x, v, neg)[0], u)),
            rel_err(gv, central_diff(lambda x: objective(u, x, neg)[0], v))]
    if k:
        errs.append(rel_err(gn, central_diff(lambda x: objective(u, v, x)[0], neg)))
    return max(errs)


def test_objective_finite_differences():
    rng = np.random.default_rng(0)
    assert max(check_gradients(sgns_objective, rng) for _ in range(100)) < 1e-4


def test_log_sigmoid_stable():
    assert log_sigmoid(-800.0) == pytest.approx(-800.0)
    assert log_sigmoid(800.0) == 0.0
    assert np.isfinite(log_sigmoid(np.array([-1e4, 0.0, 1e4]))).all()


@given(st.lists(st.integers(1, 30), min_size=1, max_size=12), st.integers(1, 8))
def test_pair_count_brute_force(lengths, window):
    walks = [list(range(n)) for n in lengths]
    corpus = WalkCorpus.from_walks(walks)
    brute = sum(1 for w in walks for i in range(len(w)) for j in range(len(w))
                if j != i and abs(i - j) <= window)
    assert count_pairs(corpus, window) == brute


def test_config_validation():
    for kwargs in (dict(epochs=0), dict(dim=0), dict(window=0), dict(negatives=0),
                   dict(initial_lr=0.0), dict(subsample=-1.0)):
        with pytest.raises(ValueError):
            SgnsConfig(**kwargs)


def test_two_cliques_separate():
    g = two_cliques()
    corpus = uniform_walks(g, WalkConfig(seed=1))
    emb = train_sgns(corpus, SgnsConfig(seed=1))
    assert clique_separation(emb) >= 0.3


def test_tiny_corpus_one_epoch_and_determinism():
    corpus = WalkCorpus.from_walks([[0, 1, 2, 1], [2, 1, 0]])
    cfg = SgnsConfig(dim=8, epochs=1, seed=3)
    a = train_sgns(corpus, cfg)
    assert a.vectors.shape == (3, 8) and np.isfinite(a.vectors).all()
    b = train_sgns(corpus, cfg)
    assert np.array_equal(a.vectors, b.vectors)
    assert not np.array_equal(a.vectors, train_sgns(corpus, SgnsConfig(dim=8, epochs=1,
                                                                       seed=4)).vectors)
    assert a.nodes == ["0", "1", "2"]  # no graph attached: ids as names


def test_initialization_ranges():
    corpus = WalkCorpus.from_walks([[0, 1]])
    # a tiny learning rate leaves vectors essentially at their initial values
    emb = train_sgns(corpus, SgnsConfig(dim=50, epochs=1, initial_lr=1e-12))
    assert np.abs(emb.vectors).max() <= 0.5 / 50
    assert np.abs(emb.context).max() < 1e-12


def test_vectors_finite_and_nonzero():
    g = two_cliques(6)
    corpus = uniform_walks(g, WalkConfig(walks_per_node=3, walk_length=10, seed=2))
    emb = train_sgns(corpus, SgnsConfig(dim=16, epochs=1, seed=2))
    assert np.isfinite(emb.vectors).all()
    assert (np.abs(emb.vectors).sum(axis=1) > 0).all()
    assert len(emb) == g.num_nodes


def test_epoch_loss_non_increasing():
    g = two_cliques(8)
    corpus = uniform_walks(g, WalkConfig(walks_per_node=5, walk_length=20, seed=0))
    _, losses = train_sgns(corpus, SgnsConfig(dim=16, epochs=6, initial_lr=0.01, seed=0),
                           return_losses=True)
    assert len(losses) == 6
    for a, b in zip(losses, losses[1:]):
        assert b <= a * 1.05
    assert losses[-1] < losses[0]


def test_vocab_mismatch_rejected():
    corpus = WalkCorpus.from_walks([[0, 1, 2]])
    vocab = build_vocab(WalkCorpus.from_walks([[0, 1]]))
    with pytest.raises(ValueError):
        train_sgns(corpus, SgnsConfig(dim=4), vocab=vocab)
    with pytest.raises(ValueError):
        train_sgns(WalkCorpus.from_walks([]), SgnsConfig())


def test_hogwild_mode_statistical_contract():
    g = two_cliques()
    corpus = uniform_walks(g, WalkConfig(seed=5))
    emb = train_sgns(corpus, SgnsConfig(seed=5, workers=4))
    assert np.isfinite(emb.vectors).all()
    assert clique_separation(emb) >= 0.3


def test_subsampling_knob():
    g = two_cliques()
    corpus = uniform_walks(g, WalkConfig(walks_per_node=5, seed=5))
    emb = train_sgns(corpus, SgnsConfig(seed=5, subsample=1e-3))
    assert np.isfinite(emb.vectors).all()


@pytest.mark.parametrize("dtype", [np.float32, np.float64])
def test_embedding_file_round_trip(dtype):
    rng = np.random.default_rng(1)
    emb = EmbeddingMatrix(["A:x y", "P:p1", "V:100%"], rng.normal(size=(3, 4)).astype(dtype))
    buf = io.StringIO()
    write_embeddings(emb, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "3 4"
    assert all(len(line.split()) == 5 for line in lines[1:])
    back = read_embeddings(io.StringIO(buf.getvalue()), dtype=dtype)
    assert back.nodes == emb.nodes
    assert np.array_equal(back.vectors, emb.vectors)


def test_embedding_file_errors():
    with pytest.raises(ValueError):
        read_embeddings([])
    with pytest.raises(ValueError):
        read_embeddings(["2 2\n", "A:a 1 2\n"])
    with pytest.raises(ValueError):
        read_embeddings(["1 2\n", "A:a 1 2 3\n"])
    with pytest.raises(ValueError):
        EmbeddingMatrix(["A:a"], np.array([[np.nan]]))
