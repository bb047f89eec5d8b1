"""
Hypothesis strategies shared by the test modules
"""

from hypothesis import strategies as st

from graph_core import WeightedGraph


@st.composite
def connected_graphs(draw, min_n: int = 1, max_n: int = 12, max_weight: int = 5,
                     extra_edges: int = 10) -> WeightedGraph:
    """Random spanning tree plus a few extra edges, integer weights"""
    n = draw(st.integers(min_n, max_n))
    weights = st.integers(1, max_weight)
    edges = []
    for v in range(1, n):
        edges.append((v, draw(st.integers(0, v - 1)), draw(weights)))
    if n > 1:
        vertex = st.integers(0, n - 1)
        for u, v in draw(st.lists(st.tuples(vertex, vertex), max_size=extra_edges)):
            if u != v:
                edges.append((u, v, draw(weights)))
    return WeightedGraph.from_edges(n, edges)


@st.composite
def trees(draw, min_n: int = 1, max_n: int = 15, max_weight: int = 5) -> WeightedGraph:
    n = draw(st.integers(min_n, max_n))
    edges = [(v, draw(st.integers(0, v - 1)), draw(st.integers(1, max_weight))) for v in range(1, n)]
    return WeightedGraph.from_edges(n, edges)
