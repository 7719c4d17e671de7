import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from conftest import clique_separation, two_cliques
from hinembed import DeepWalk, Metapath2Vec, Node2Vec, Verse, build_network, synth_generate
from hinembed.corpus import SynthConfig

SMALL = dict(dim=8, walks_per_node=3, walk_length=10, epochs=1)


@pytest.fixture(scope="module")
def hin():
    recs = synth_generate(SynthConfig(num_authors=30, num_areas=2, seed=2))
    return build_network(recs, "ALL")


@pytest.mark.parametrize("est", [DeepWalk(**SMALL), Node2Vec(p=0.5, q=2.0, **SMALL),
                                 Metapath2Vec(**SMALL), Verse(dim=8, steps=2000)])
def test_params_roundtrip_and_clone(est):
    params = est.get_params()
    assert params["dim"] == 8
    twin = clone(est)
    assert twin.get_params() == params
    twin.set_params(seed=9)
    assert twin.seed == 9 and est.seed == 0


@pytest.mark.parametrize("make", [lambda: DeepWalk(**SMALL), lambda: Node2Vec(**SMALL),
                                  lambda: Verse(dim=8, steps=3000)])
def test_fit_transform_homogeneous(make):
    g = two_cliques(6)
    est = make()
    with pytest.raises(NotFittedError):
        est.transform(["A:a0"])
    X = est.fit_transform(g)
    assert X.shape == (12, 8)
    assert np.isfinite(X).all()
    tokens = ["A:a1", "A:b2"]
    assert np.array_equal(est.transform(tokens), est.embedding_.lookup(tokens))
    assert np.array_equal(est.transform([g.find("A", "a1")]), est.transform(["A:a1"]))
    with pytest.raises(KeyError):
        est.transform(["A:nope"])
    again = make().fit(g)
    assert np.array_equal(again.embedding_.vectors, est.embedding_.vectors)


def test_metapath2vec_restricts_to_schema_types(hin):
    est = Metapath2Vec(metapath="A-P-A", **SMALL).fit(hin)
    types = {t.split(":", 1)[0] for t in est.embedding_.nodes}
    assert types == {"A", "P"}
    for walk in est.walks_:
        assert [hin.node(int(u)).type for u in walk] == ["AP"[i % 2] for i in range(len(walk))]


def test_walk_embedders_record_losses(hin):
    est = DeepWalk(**SMALL).fit(hin)
    assert len(est.loss_curve_) >= 1 and np.isfinite(est.loss_curve_).all()


def test_verse_reports_steps():
    est = Verse(dim=4, steps=500).fit(two_cliques(4))
    assert est.n_steps_ == 500 and np.isfinite(est.mean_loss_)


@pytest.mark.parametrize("bad", [dict(walks_per_node=0), dict(walk_length=1)])
def test_invalid_params_raise(bad):
    with pytest.raises(ValueError):
        DeepWalk(**{**SMALL, **bad}).fit(two_cliques(4))


def test_rejects_non_graph():
    with pytest.raises((TypeError, ValueError)):
        DeepWalk().fit(np.zeros((3, 3)))


def test_trainers_separate_cliques():
    g = two_cliques(10)
    assert clique_separation(Node2Vec(dim=16, epochs=3, walk_length=20).fit(g).embedding_) >= 0.3
    assert clique_separation(Verse(dim=16).fit(g).embedding_) >= 0.3
