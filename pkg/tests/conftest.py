import numpy as np
import pytest

from hsplit import Euclidean, MetricTree, PoincareBall, Product
from hsplit.oracle import default_region, sample_point


def random_tree(seed, n=10):
    rng = np.random.default_rng(seed)
    names = [f"v{i}" for i in range(n)]
    edges = [[names[int(rng.integers(i))], names[i], float(rng.uniform(0.3, 2.0))]
             for i in range(1, n)]
    return MetricTree(names, edges)


def y_tree(lengths=(1.0, 1.0, 1.0)):
    a, b, c = lengths
    return MetricTree(["O", "A", "B", "C"], [["O", "A", a], ["O", "B", b], ["O", "C", c]])


SPACE_IDS = ["euclidean", "poincare", "tree", "product"]


def make_space(kind):
    if kind == "euclidean":
        return Euclidean(2)
    if kind == "poincare":
        return PoincareBall(2)
    if kind == "tree":
        return random_tree(1)
    if kind == "product":
        return Product(PoincareBall(2), random_tree(2, n=6))
    raise KeyError(kind)


@pytest.fixture(params=SPACE_IDS)
def space(request):
    return make_space(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def sampler(space, half_width=3.0, radius=0.85):
    region = default_region(space, half_width=half_width, radius=radius)
    return lambda rng: sample_point(space, region, rng)


def nx_tree_distances(tree, points):
    """Pairwise distances between tree positions via networkx on a subdivided graph.

    Every position becomes its own node, splitting the carrying edge, so the
    answer comes from Dijkstra rather than from the endpoint formula.
    """
    import networkx as nx
    G = nx.Graph()
    cuts = {}
    for k, p in enumerate(points):
        if p.is_vertex:
            continue
        cuts.setdefault((p.u, p.v), []).append((p.offset, ("p", k)))
    for u, v, length in tree.edges:
        stops = [(0.0, ("v", u))] + sorted(cuts.get((u, v), [])) + [(length, ("v", v))]
        for (s, a), (t, b) in zip(stops, stops[1:]):
            G.add_edge(a, b, weight=t - s)
    G.add_nodes_from(("v", i) for i in range(len(tree.names)))
    node = [("v", p.u) if p.is_vertex else ("p", k) for k, p in enumerate(points)]
    n = len(points)
    out = np.zeros((n, n))
    for i in range(n):
        lengths = nx.single_source_dijkstra_path_length(G, node[i])
        for j in range(n):
            out[i, j] = lengths[node[j]]
    return out


# -- acceptance reporting ---------------------------------------------------

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
