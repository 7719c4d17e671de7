import io
from collections import Counter

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hinembed.hetgraph import (
    GraphError,
    MetaPathSchema,
    NodeRef,
    TypedGraph,
    parse_token,
    read_edgelist,
    summarize,
    write_edgelist,
)


def test_add_node_ids_and_idempotence():
    g = TypedGraph()
    a = g.add_node("A", "alice")
    assert a == NodeRef(0, "A", "alice")
    assert g.add_node("A", "alice") == a
    p = g.add_node("P", "alice")
    assert p.id == 1 and p != a
    assert g.add_node("A", "  alice ") == a  # names are trimmed
    assert g.add_node("A", "Alice").id == 2  # but not case-folded


@pytest.mark.parametrize("node_type,name", [("", "x"), ("A", ""), ("A", "   "), ("A:B", "x"),
                                            ("A", "tab\tname")])
def test_add_node_rejects_bad_labels(node_type, name):
    with pytest.raises(GraphError):
        TypedGraph().add_node(node_type, name)


def test_add_edge_contract():
    g = TypedGraph()
    a1, p1 = g.add_node("A", "a1"), g.add_node("P", "p1")
    assert g.add_edge(a1, p1) is True
    assert g.edge_count == 1
    assert g.add_edge(p1, a1) is False
    assert g.edge_count == 1
    with pytest.raises(GraphError):
        g.add_edge(a1, a1)
    with pytest.raises(GraphError):
        g.add_edge(a1, 7)
    other = TypedGraph()
    other.add_node("A", "zz")
    with pytest.raises(GraphError):
        g.add_edge(other.find("A", "zz"), p1)


def test_neighbors_of_type_star():
    g = TypedGraph()
    a1 = g.add_node("A", "a1")
    p2 = g.add_node("P", "p2")
    p1 = g.add_node("P", "p1")
    v1 = g.add_node("V", "v1")
    for x in (p1, v1, p2):
        g.add_edge(a1, x)
    assert g.neighbors_of_type(a1, "P") == [p2, p1]  # sorted by id
    assert g.neighbors_of_type(a1, "V") == [v1]
    assert g.neighbors_of_type(p1, "V") == []
    assert g.neighbors_of_type(a1, "Q") == []
    with pytest.raises(GraphError):
        g.neighbors_of_type(99, "P")


def test_freeze_blocks_mutation():
    g = TypedGraph()
    a = g.add_node("A", "a")
    b = g.add_node("A", "b")
    g.add_edge(a, b)
    g.freeze()
    assert g.frozen
    with pytest.raises(GraphError):
        g.add_edge(a, b)
    with pytest.raises(GraphError):
        g.add_node("A", "c")
    assert g.add_node("A", "a") == a  # lookup of an existing node still works
    indptr, indices, *_ = g.csr()
    with pytest.raises(ValueError):
        indices[0] = 5


def test_summarize_examples():
    g = TypedGraph()
    a = [g.add_node("A", f"a{i}") for i in range(3)]
    g.add_edge(a[0], a[1])
    g.add_edge(a[1], a[2])
    g.add_edge(a[0], a[2])
    assert summarize(g) == {"nodes": {"A": 3}, "edges": 3}
    assert summarize(TypedGraph()) == {"nodes": {}, "edges": 0}


def test_parse_token_splits_at_first_colon():
    assert parse_token("A:x:y") == ("A", "x:y")
    with pytest.raises(GraphError):
        parse_token("nocolon")


def test_metapath_schema():
    s = MetaPathSchema.parse("A-P-A")
    assert s == MetaPathSchema.parse("A,P,A")
    assert s.symmetric and s.period == 2
    assert [s.type_at(i) for i in range(5)] == ["A", "P", "A", "P", "A"]
    s3 = MetaPathSchema.parse("A-P-V-P-A")
    assert [s3.type_at(i) for i in range(6)] == ["A", "P", "V", "P", "A", "P"]
    assert not MetaPathSchema.parse("A-P").symmetric
    with pytest.raises(GraphError):
        MetaPathSchema(("A",))
    g = TypedGraph()
    g.add_edge(g.add_node("A", "a"), g.add_node("P", "p"))
    s.validate_for(g)
    with pytest.raises(GraphError):
        MetaPathSchema.parse("A-V-A").validate_for(g)
    with pytest.raises(GraphError):
        MetaPathSchema.parse("A-P").validate_for(g)


ops = st.lists(st.tuples(st.integers(0, 14), st.integers(0, 14), st.sampled_from("APV")),
               max_size=80)


def _build(op_list):
    g = TypedGraph()
    refs = {}
    for i, j, t in op_list:
        u = refs.setdefault(i, g.add_node("APV"[i % 3], f"n{i}"))
        v = refs.setdefault(j, g.add_node("APV"[j % 3], f"n{j}"))
        if u != v:
            g.add_edge(u, v)
    return g.freeze()


@given(ops)
def test_graph_invariants_full_scan(op_list):
    g = _build(op_list)
    indptr, indices, node_type, type_indptr, type_indices = g.csr()
    adj = {u: set(indices[indptr[u]:indptr[u + 1]].tolist()) for u in range(g.num_nodes)}
    for u, nbrs in adj.items():
        assert u not in nbrs
        assert len(nbrs) == indptr[u + 1] - indptr[u]  # no duplicates
        assert list(indices[indptr[u]:indptr[u + 1]]) == sorted(nbrs)
        for v in nbrs:
            assert u in adj[v]
        # per-type sublists are exactly the typed subsequences of adj(u)
        pieces = []
        for t in g.node_types:
            typed = [n.id for n in g.neighbors_of_type(u, t)]
            assert typed == [v for v in sorted(nbrs) if g.node(v).type == t]
            c = g.type_code(t)
            assert list(type_indices[type_indptr[u, c]:type_indptr[u, c + 1]]) == typed
            pieces += typed
        assert set(pieces) == nbrs
    assert g.edge_count * 2 == sum(len(s) for s in adj.values())
    # summarize against a brute-force recount
    counts = Counter(g.node(i).type for i in range(g.num_nodes))
    assert summarize(g) == {"nodes": dict(counts), "edges": len({frozenset((u, v))
                                                                 for u in adj for v in adj[u]})}


@given(ops)
def test_edgelist_round_trip(op_list):
    g = _build(op_list)
    buf = io.StringIO()
    write_edgelist(g, buf)
    text = buf.getvalue()
    h = read_edgelist(io.StringIO(text))
    edges = lambda gr: {frozenset((gr.node(u).token, gr.node(v).token)) for u, v in gr.edges()}
    assert edges(h) == edges(g)
    buf2 = io.StringIO()
    write_edgelist(h, buf2)
    assert buf2.getvalue() == text


def test_edgelist_errors():
    with pytest.raises(GraphError, match="line 2"):
        read_edgelist(["A:a\tA:b\n", "A:a A:b\n"])
    with pytest.raises(GraphError, match="self-loop"):
        read_edgelist(["A:a\tA:a\n"])


def test_names_with_spaces_round_trip():
    g = TypedGraph()
    g.add_edge(g.add_node("A", "Jane van Doe"), g.add_node("V", "ACM SIGMOD"))
    buf = io.StringIO()
    write_edgelist(g.freeze(), buf)
    h = read_edgelist(io.StringIO(buf.getvalue()))
    assert h.find("A", "Jane van Doe") is not None
    assert np.array_equal(h.csr()[1], g.csr()[1])
