from __future__ import annotations

import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypack.surface import (
    CapacityError,
    SurfaceError,
    TriangulatedSurface,
    admissible,
    bundled,
    faces_meeting,
    icosahedron,
    octahedron,
    tetrahedron,
    validate,
)


def grid_torus(m: int = 3) -> TriangulatedSurface:
    idx = lambda i, j: (i % m) * m + (j % m)  # noqa: E731
    faces = []
    for i in range(m):
        for j in range(m):
            faces.append([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)])
            faces.append([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)])
    return TriangulatedSurface(m * m, faces)


def brute_force_witness(surface, L):
    """Most violated subset by plain itertools enumeration."""
    best = (math.inf, None)
    for r in range(1, surface.n_vertices + 1):
        for I in itertools.combinations(range(surface.n_vertices), r):
            slack = math.pi * faces_meeting(surface, I) - sum(L[i] for i in I)
            if slack < best[0] - 1e-12:
                best = (slack, I)
    return best


@pytest.mark.parametrize("make, V, E, F", [(tetrahedron, 4, 6, 4), (octahedron, 6, 12, 8), (icosahedron, 12, 30, 20)])
def test_library_counts(make, V, E, F):
    s = make()
    assert (s.n_vertices, len(s.edges), s.n_faces) == (V, E, F)
    assert s.euler_characteristic == 2
    assert validate(s) == []
    assert all(len(fs) == 2 for fs in s.edge_faces.values())


def test_torus_is_valid():
    t = grid_torus()
    assert t.euler_characteristic == 0
    assert validate(t) == []
    assert np.all(t.face_degree == 6)


def test_single_triangle_is_open():
    (d,) = validate(TriangulatedSurface(3, [[0, 1, 2]]))
    assert d.invariant == "closed surface"
    assert "one face" in d.message


def test_pinched_vertex():
    # icosahedron with its two poles identified: every edge still has two
    # faces, but the link of the merged vertex is two disjoint pentagons
    faces = np.where(icosahedron().faces == 11, 0, icosahedron().faces)
    (d,) = validate(TriangulatedSurface(11, faces))
    assert "link" in d.message and d.simplex == (1,)


def test_glued_at_a_vertex_is_not_edge_connected():
    a = tetrahedron().faces
    b = np.where(a == 0, 0, a + 3)
    (d,) = validate(TriangulatedSurface(7, np.vstack([a, b])))
    assert d.invariant == "connected"


def test_disconnected():
    a = tetrahedron().faces
    (d,) = validate(TriangulatedSurface(8, np.vstack([a, a + 4])))
    assert d.invariant == "connected"


def test_repeated_vertex_and_duplicate_face():
    (d,) = validate(TriangulatedSurface(3, [[0, 0, 1]]))
    assert "repeats" in d.message
    faces = tetrahedron().faces.tolist() + [[0, 2, 1]]
    (d,) = validate(TriangulatedSurface(4, faces))
    assert "more than once" in d.message


def test_unused_vertex():
    (d,) = validate(TriangulatedSurface(5, tetrahedron().faces))
    assert d.simplex == (5,)


def test_json_round_trip(tmp_path):
    s = icosahedron()
    path = tmp_path / "ico.json"
    path.write_text(json.dumps(s.to_json()))
    back = TriangulatedSurface.load(path)
    assert back.n_vertices == 12
    np.testing.assert_array_equal(back.faces, s.faces)
    assert min(min(f) for f in s.to_json()["faces"]) == 1


@pytest.mark.parametrize("data, needle", [
    ([], "object"),
    ({"faces": []}, "n_vertices"),
    ({"n_vertices": 4}, "faces"),
    ({"n_vertices": "4", "faces": []}, "integer"),
    ({"n_vertices": 4, "faces": [[1, 2]]}, "triples"),
    ({"n_vertices": 4, "faces": [[1, 2, 5]]}, "faces[0]"),
    ({"n_vertices": 4, "faces": [[0, 1, 2]]}, "faces[0]"),
])
def test_json_diagnostics(data, needle):
    with pytest.raises(SurfaceError, match=__import__("re").escape(needle)):
        TriangulatedSurface.from_json(data)


def test_bundled():
    assert bundled("octahedron").n_vertices == 6
    with pytest.raises(SurfaceError):
        bundled("klein bottle")


def test_relabel_preserves_structure():
    s = octahedron()
    perm = np.array([3, 0, 5, 1, 4, 2])
    r = s.relabel(perm)
    assert validate(r) == []
    assert sorted(r.face_degree.tolist()) == sorted(s.face_degree.tolist())


def test_faces_meeting():
    s = tetrahedron()
    assert faces_meeting(s, [0]) == 3
    assert faces_meeting(s, [0, 1]) == 4
    assert faces_meeting(s, range(4)) == 4
    with pytest.raises(SurfaceError):
        faces_meeting(s, [4])


# -- admissibility -------------------------------------------------------------

def test_admissible_example():
    rep = admissible(tetrahedron(), [1, 1, 1, 1])
    assert rep.admissible
    assert rep.describe().startswith("admissible")


def test_inadmissible_example():
    rep = admissible(tetrahedron(), [10, 10, 10, 10])
    assert not rep.admissible
    assert rep.subset == (0, 1, 2, 3)
    assert rep.describe().startswith("inadmissible, I={1,2,3,4}: 40 >= 4*pi")


def test_boundary_is_inadmissible():
    # equality pi*|F_I| is not enough; the inequality is strict
    rep = admissible(tetrahedron(), [math.pi] * 4)
    assert not rep.admissible
    assert rep.slack == pytest.approx(0.0, abs=1e-12)


def test_single_vertex_witness():
    rep = admissible(octahedron(), [1, 1, 1, 1, 1, 13.0])
    assert not rep.admissible and rep.subset == (5,)


def test_literal_mode():
    # sum 6 < 3*pi for every degree-3 vertex, but one vertex can still violate in subset mode
    s = tetrahedron()
    assert admissible(s, [1.5] * 4, literal=True).admissible
    rep = admissible(s, [0.1, 0.1, 0.1, 9.5])
    assert not rep.admissible and rep.subset == (3,)
    assert not admissible(s, [0.1, 0.1, 0.1, 9.5], literal=True).admissible
    assert admissible(s, [1.5] * 4, literal=True).mode == "literal"


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.01, 12.0), min_size=6, max_size=6))
def test_exhaustive_matches_brute_force(L):
    s = octahedron()
    rep = admissible(s, L)
    slack, _ = brute_force_witness(s, L)
    assert rep.slack == pytest.approx(slack, abs=1e-9)
    assert rep.admissible == (slack > 0)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(0.01, 12.0), min_size=12, max_size=12))
def test_mincut_matches_exhaustive(L):
    s = icosahedron()
    a = admissible(s, L)
    b = admissible(s, L, method="mincut")
    assert a.admissible == b.admissible
    assert a.slack == pytest.approx(b.slack, abs=1e-9)


def test_mincut_scales_past_enumeration_limit():
    # 8x8 torus: 64 vertices, far beyond subset enumeration
    t = grid_torus(8)
    L = np.full(t.n_vertices, 1.0)
    with pytest.raises(CapacityError):
        admissible(t, L)
    rep = admissible(t, L, method="mincut")
    assert rep.admissible and rep.slack == pytest.approx(6 * math.pi - 1.0)
    # inadmissible targets take a single cut, so large surfaces are cheap
    t = grid_torus(30)
    L = np.full(t.n_vertices, 1.0)
    L[17] = 6 * math.pi + 0.1
    rep = admissible(t, L, method="mincut")
    assert not rep.admissible and 17 in rep.subset


@pytest.mark.parametrize("L", [[1, 1, 1], [1, 1, 1, -1], [1, 1, 1, math.nan]])
def test_bad_targets(L):
    with pytest.raises(SurfaceError):
        admissible(tetrahedron(), L)


def test_unknown_method():
    with pytest.raises(ValueError):
        admissible(tetrahedron(), [1, 1, 1, 1], method="greedy")
