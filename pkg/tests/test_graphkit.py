import json

import numpy as np
import pytest

from fpphe.errors import InvalidParameterError, ResourceCapError
from fpphe.graphkit import (Graph, ROLE_ORIGIN, ROLE_TAIL, TileParams,
                            articulation_points, build_capped_tree,
                            build_complete_tree, build_tile, build_tile_tree,
                            capped_tree_size, export_dot, graph_from_spec,
                            restrict_to_side, tile_size)


def test_complete_tree_examples():
    g = build_complete_tree(2, 0)
    assert g.vertex_count == 1 and g.edge_count == 0
    g = build_complete_tree(2, 2)
    assert g.vertex_count == 7 and g.edge_count == 6
    g = build_complete_tree(3, 1)
    assert g.vertex_count == 4 and g.edge_count == 3


def test_complete_tree_size_formula():
    for d in (2, 3, 4):
        for h in range(4):
            g = build_complete_tree(d, h)
            assert g.vertex_count == (d ** (h + 1) - 1) // (d - 1)
            assert g.edge_count == g.vertex_count - 1


def test_complete_tree_d1_is_path():
    g = build_complete_tree(1, 5)
    assert g.vertex_count == 6 and g.edge_count == 5


def test_complete_tree_invalid():
    with pytest.raises(InvalidParameterError):
        build_complete_tree(0, 2)


def test_capped_tree_examples():
    g = build_capped_tree(2, 1)
    assert g.vertex_count == 4 and g.edge_count == 6
    assert g.degree(g.landmarks["W"]) == 4
    g = build_capped_tree(3, 0)
    assert g.vertex_count == 2 and g.edge_count == 3
    g = build_capped_tree(1, 5)
    assert g.vertex_count == 7
    assert g.bfs_distances(g.landmarks["root"])[g.landmarks["W"]] == 6


def test_capped_tree_cap_degree_property():
    for d in (2, 3):
        for h in range(3):
            g = build_capped_tree(d, h)
            assert g.degree(g.landmarks["W"]) == d ** (h + 1)
            # removing W leaves the complete tree of height h
            w = g.landmarks["W"]
            inner = [e for e in g.edges if w not in e]
            assert len(inner) == build_complete_tree(d, h).edge_count


def test_capped_tree_merge_flag():
    g = build_capped_tree(3, 0, merge_parallel_edges=True)
    assert g.vertex_count == 2 and g.edge_count == 1


def test_tile_example():
    g = build_tile(TileParams(3, 1, 1, 2))
    assert g.vertex_count == 12
    assert g.degree(g.landmarks["O"]) == 2
    assert g.degree(g.landmarks["B"]) == 2
    for name in ("O", "O_up", "O_low", "W_up", "W_low", "B"):
        assert name in g.landmarks
    assert int(np.sum(g.roles == ROLE_ORIGIN)) == 1
    assert int(np.sum(g.roles == ROLE_TAIL)) == 1


def test_tile_size_formula():
    for params in (TileParams(3, 1, 1, 2), TileParams(2, 1, 1, 1),
                   TileParams(4, 2, 3, 5)):
        g = build_tile(params)
        expected = (1 + capped_tree_size(params.D, params.L)
                    + capped_tree_size(2, params.H) + (params.R - 1) + 1)
        assert g.vertex_count == expected == tile_size(params)


def test_tile_r1_direct_edge():
    g = build_tile(TileParams(2, 1, 1, 1))
    w_low, b = g.landmarks["W_low"], g.landmarks["B"]
    assert (w_low, b) in g.edges or (b, w_low) in g.edges


def test_tile_cutpoints():
    g = build_tile(TileParams(3, 2, 2, 3))
    lower = restrict_to_side(g, "lower")
    cuts = articulation_points(lower)
    assert lower.landmarks["O_low"] in cuts
    assert lower.landmarks["W_low"] in cuts
    upper = restrict_to_side(g, "upper")
    cuts = articulation_points(upper)
    assert upper.landmarks["O_up"] in cuts
    assert upper.landmarks["W_up"] in cuts


def test_tile_params_invalid():
    with pytest.raises(InvalidParameterError):
        TileParams(1, 1, 1, 1)
    with pytest.raises(InvalidParameterError):
        TileParams(2, 0, 1, 1)


def test_tile_tree_single_slot():
    p = TileParams(2, 1, 1, 1)
    g = build_tile_tree(1, 1, p)
    tile = build_tile(p)
    assert g.vertex_count == tile.vertex_count
    assert g.landmarks["o"] == 0


def test_tile_tree_counts():
    p = TileParams(2, 1, 1, 1)
    g = build_tile_tree(2, 2, p)
    junctions = 1 + 2 + 4
    tiles = 2 + 4
    assert g.vertex_count == junctions + tiles * (tile_size(p) - 2)
    assert g.edge_count == tiles * build_tile(p).edge_count


def test_tile_tree_root_degree():
    p = TileParams(3, 1, 1, 2)
    g = build_tile_tree(3, 1, p)
    tile = build_tile(p)
    assert g.degree(g.landmarks["o"]) == 3 * tile.degree(tile.landmarks["O"])


def test_tile_tree_junction_generations():
    g = build_tile_tree(2, 3, TileParams(2, 1, 1, 1))
    gens = g.generation
    assert gens[0] == 0
    for depth in range(4):
        assert int(np.sum(gens == depth)) == 2 ** depth


def test_restrict_sides():
    p = TileParams(3, 2, 2, 3)
    tile = build_tile(p)
    lower = restrict_to_side(tile, "lower")
    for name in ("O", "O_low", "W_low", "B"):
        assert name in lower.landmarks
    assert "O_up" not in lower.landmarks
    upper = restrict_to_side(tile, "upper")
    assert upper.vertex_count == 1 + capped_tree_size(p.D, p.L) + 1
    # idempotence
    again = restrict_to_side(upper, "upper")
    assert again.vertex_count == upper.vertex_count
    assert again.edges == upper.edges


def test_restrict_non_tile_rejected():
    with pytest.raises(InvalidParameterError):
        restrict_to_side(build_complete_tree(2, 2), "upper")


def test_export_dot():
    g = Graph(2, [(0, 1)])
    text = export_dot(g)
    assert text.count(" -- ") == 1
    assert "label" not in text
    text = export_dot(build_capped_tree(2, 1))
    assert text.count(" -- ") == 6
    assert 'label="W"' in text


def test_serialization_roundtrip():
    g = build_tile(TileParams(3, 1, 1, 2))
    g2 = Graph.from_json(g.to_json())
    assert g2.vertex_count == g.vertex_count
    assert g2.edges == g.edges
    assert g2.landmarks == g.landmarks
    assert np.array_equal(g2.roles, g.roles)
    assert np.array_equal(g2.generation, g.generation)


def test_serialization_rejects_wrong_magic():
    g = Graph(2, [(0, 1)])
    d = g.to_dict()
    d["format"] = "something-else"
    with pytest.raises(InvalidParameterError):
        Graph.from_dict(d)


def test_graph_from_spec_kinds():
    assert graph_from_spec({"kind": "complete-tree", "d": 2, "h": 2}).vertex_count == 7
    assert graph_from_spec({"kind": "capped-tree", "d": 2, "h": 1}).edge_count == 6
    assert graph_from_spec({"kind": "tile", "D": 3, "L": 1, "H": 1,
                            "R": 2}).vertex_count == 12
    g = graph_from_spec({"kind": "path", "length": 4})
    assert g.vertex_count == 5 and g.landmarks["B"] == 4
    with pytest.raises(InvalidParameterError):
        graph_from_spec({"kind": "nope"})


def test_builders_deterministic():
    a = build_tile(TileParams(3, 2, 2, 3))
    b = build_tile(TileParams(3, 2, 2, 3))
    assert a.edges == b.edges and a.landmarks == b.landmarks


def test_graph_invariants():
    with pytest.raises(InvalidParameterError):
        Graph(2, [(0, 0)])
    with pytest.raises(InvalidParameterError):
        Graph(2, [(0, 5)])
    with pytest.raises(InvalidParameterError):
        Graph(2, [(0, 1)], landmarks={"X": 9})


def test_vertex_cap(monkeypatch):
    monkeypatch.setenv("FPPHE_VERTEX_CAP", "10")
    with pytest.raises(ResourceCapError):
        build_tile(TileParams(4, 6, 8, 20))
