import numpy as np

from shiftheat.util import gauss_nodes, ordered_map, panel_nodes, thread_count


def test_thread_count_precedence(monkeypatch):
    monkeypatch.delenv("SHIFTHEAT_THREADS", raising=False)
    assert thread_count() == 1
    assert thread_count(3) == 3
    monkeypatch.setenv("SHIFTHEAT_THREADS", "5")
    assert thread_count(3) == 5  # environment wins


def test_ordered_map_preserves_order():
    items = list(range(40))
    out = ordered_map(lambda k: k * k, items, threads=4)
    assert out == [k * k for k in items]
    assert ordered_map(lambda k: -k, items, threads=1) == [-k for k in items]


def test_panel_nodes_integrate_polynomials():
    edges = np.linspace(0.0, 1.0, 9)
    nodes, weights, panel = panel_nodes(edges, 16)
    assert len(nodes) == 8 * 16
    assert panel[0] == 0 and panel[-1] == 7
    for p in range(6):
        exact = 1.0 / (p + 1)
        assert abs(np.sum(weights * nodes ** p) - exact) < 1e-14


def test_gauss_cache_is_stable():
    a = gauss_nodes(16)
    b = gauss_nodes(16)
    assert a is b
