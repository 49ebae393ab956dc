"""Closed triangulated surfaces: incidence, subset face counts, admissibility."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import networkx as nx
import numpy as np

EXHAUSTIVE_LIMIT = 25
_CHUNK_BITS = 18


class SurfaceError(ValueError):
    """Malformed surface data or an out-of-range vertex index."""


class CapacityError(SurfaceError):
    """Exhaustive enumeration requested on too many vertices."""


@dataclass(frozen=True)
class Diagnostic:
    invariant: str
    message: str
    simplex: tuple | None = None

    def __str__(self):
        where = f" at {self.simplex}" if self.simplex is not None else ""
        return f"{self.invariant}: {self.message}{where}"


class TriangulatedSurface:
    """A triangulation given by its faces; vertices are ``0..n_vertices-1``.

    Construction only checks shapes and index ranges. Use :func:`validate` to
    check that the faces form a closed connected surface.
    """

    def __init__(self, n_vertices: int, faces):
        faces = np.asarray(faces, dtype=np.int64)
        if faces.ndim != 2 or faces.shape[1] != 3:
            raise SurfaceError("faces must be a list of vertex triples")
        if n_vertices <= 0:
            raise SurfaceError("n_vertices must be positive")
        if faces.size and (faces.min() < 0 or faces.max() >= n_vertices):
            raise SurfaceError(f"face index out of range 0..{n_vertices - 1}")
        self.n_vertices = int(n_vertices)
        self.faces = faces
        self.faces.setflags(write=False)

    def __repr__(self):
        return f"TriangulatedSurface(n_vertices={self.n_vertices}, n_faces={self.n_faces})"

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @cached_property
    def edge_faces(self) -> dict:
        out: dict = {}
        for f, tri in enumerate(self.faces.tolist()):
            for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
                out.setdefault((min(a, b), max(a, b)), []).append(f)
        return out

    @cached_property
    def edges(self) -> np.ndarray:
        return np.array(sorted(self.edge_faces), dtype=np.int64).reshape(-1, 2)

    @cached_property
    def vertex_faces(self) -> list:
        out = [[] for _ in range(self.n_vertices)]
        for f, tri in enumerate(self.faces.tolist()):
            for v in tri:
                out[v].append(f)
        return out

    @cached_property
    def face_degree(self) -> np.ndarray:
        return np.bincount(self.faces.ravel(), minlength=self.n_vertices)

    @property
    def euler_characteristic(self) -> int:
        return self.n_vertices - len(self.edges) + self.n_faces

    def relabel(self, perm) -> "TriangulatedSurface":
        """Surface with vertex ``v`` renamed ``perm[v]``."""
        perm = np.asarray(perm)
        return TriangulatedSurface(self.n_vertices, perm[self.faces])

    # -- file format: {"n_vertices": n, "faces": [[i, j, k], ...]}, 1-based
    def to_json(self) -> dict:
        return {"n_vertices": self.n_vertices, "faces": (self.faces + 1).tolist()}

    @classmethod
    def from_json(cls, data) -> "TriangulatedSurface":
        if not isinstance(data, dict):
            raise SurfaceError("surface file must contain a JSON object")
        try:
            n = data["n_vertices"]
            faces = data["faces"]
        except KeyError as e:
            raise SurfaceError(f"surface file missing field {e.args[0]!r}") from None
        if not isinstance(n, int) or isinstance(n, bool):
            raise SurfaceError("field 'n_vertices' must be an integer")
        if not isinstance(faces, list) or not all(
            isinstance(t, list) and len(t) == 3 and all(isinstance(v, int) and not isinstance(v, bool) for v in t)
            for t in faces
        ):
            raise SurfaceError("field 'faces' must be a list of integer triples")
        for idx, tri in enumerate(faces):
            for v in tri:
                if not 1 <= v <= n:
                    raise SurfaceError(f"faces[{idx}] has vertex {v} outside 1..{n}")
        return cls(n, np.array(faces, dtype=np.int64).reshape(-1, 3) - 1)

    @classmethod
    def load(cls, path) -> "TriangulatedSurface":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def validate(surface: TriangulatedSurface) -> list[Diagnostic]:
    """Check the closed-surface invariants; empty list means ok.

    Reports the first violated invariant only, with the offending simplex.
    """
    if surface.n_faces == 0:
        return [Diagnostic("nonempty", "surface has no faces")]
    for f, tri in enumerate(surface.faces.tolist()):
        if len(set(tri)) != 3:
            return [Diagnostic("simple faces", f"face {f} repeats a vertex", tuple(v + 1 for v in tri))]
    counts = Counter(tuple(sorted(t)) for t in surface.faces.tolist())
    for tri, c in counts.items():
        if c > 1:
            return [Diagnostic("simple faces", "face listed more than once", tuple(v + 1 for v in tri))]
    for (a, b), fs in surface.edge_faces.items():
        if len(fs) != 2:
            what = "edge in one face" if len(fs) == 1 else f"edge in {len(fs)} faces"
            return [Diagnostic("closed surface", what, (a + 1, b + 1))]
    used = np.zeros(surface.n_vertices, dtype=bool)
    used[surface.faces.ravel()] = True
    if not used.all():
        v = int(np.flatnonzero(~used)[0])
        return [Diagnostic("closed surface", "vertex in no face", (v + 1,))]
    # face adjacency graph
    g = nx.Graph()
    g.add_nodes_from(range(surface.n_faces))
    g.add_edges_from(tuple(fs) for fs in surface.edge_faces.values())
    if not nx.is_connected(g):
        comp = min(nx.connected_components(g), key=min)
        return [Diagnostic("connected", f"face adjacency graph has {nx.number_connected_components(g)} components",
                           tuple(sorted(comp))[:1])]
    # the link of every vertex must be a single cycle (no pinched vertices)
    for v in range(surface.n_vertices):
        link = nx.Graph()
        for f in surface.vertex_faces[v]:
            a, b = (u for u in surface.faces[f].tolist() if u != v)
            link.add_edge(a, b)
        if not nx.is_connected(link):
            return [Diagnostic("closed surface", "vertex link is not a single cycle", (v + 1,))]
    chi = surface.euler_characteristic
    if chi > 2 or chi % 2:
        return [Diagnostic("euler characteristic", f"V - E + F = {chi} is not an even integer <= 2")]
    return []


def _subset_indices(I, n):
    idx = sorted({int(i) for i in I})
    if any(i < 0 or i >= n for i in idx):
        raise SurfaceError(f"vertex index out of range 0..{n - 1}")
    return idx


def faces_meeting(surface: TriangulatedSurface, I) -> int:
    """Number of faces with at least one vertex in ``I`` (0-based indices)."""
    idx = _subset_indices(I, surface.n_vertices)
    mask = np.zeros(surface.n_vertices, dtype=bool)
    mask[idx] = True
    return int(mask[surface.faces].any(axis=1).sum())


@dataclass
class AdmissibilityReport:
    admissible: bool
    subset: tuple  # 0-based witness: most violated (or tightest) subset
    slack: float  # pi*|F_I| - sum over the witness; <= 0 iff inadmissible
    lhs: float
    rhs: float
    mode: str = "subset"
    method: str = "exhaustive"

    def describe(self) -> str:
        labels = ",".join(str(i + 1) for i in self.subset)
        faces = int(round(self.rhs / math.pi))
        if self.admissible:
            return (f"admissible (tightest I={{{labels}}}: {self.lhs:.10g} < {faces}*pi = {self.rhs:.10g}, "
                    f"slack {self.slack:.6g})")
        return f"inadmissible, I={{{labels}}}: {self.lhs:.10g} >= {faces}*pi = {self.rhs:.10g} (slack {self.slack:.6g})"


def _check_target(surface, L_hat):
    L = np.asarray(L_hat, dtype=float)
    if L.shape != (surface.n_vertices,):
        raise SurfaceError(f"target has {L.size} entries, surface has {surface.n_vertices} vertices")
    if not np.all(np.isfinite(L)) or np.any(L <= 0):
        raise SurfaceError("target curvatures must be positive and finite")
    return L


def _face_masks(surface):
    w = np.int64(1) << np.arange(surface.n_vertices, dtype=np.int64)
    return (w[surface.faces]).sum(axis=1)


def _exhaustive(surface, L):
    n = surface.n_vertices
    fmasks = _face_masks(surface)
    best_slack, best_key = math.inf, None
    total = 1 << n
    chunk = 1 << min(_CHUNK_BITS, n)
    bits = np.arange(n, dtype=np.int64)
    for start in range(1, total, chunk):
        I = np.arange(start, min(start + chunk, total), dtype=np.int64)
        member = ((I[:, None] >> bits) & 1).astype(bool)
        lhs = member @ L
        nf = np.zeros(len(I), dtype=np.int64)
        for fm in fmasks:
            nf += (I & fm) != 0
        slack = math.pi * nf - lhs
        m = slack.min()
        if m > best_slack:
            continue
        for pos in np.flatnonzero(slack == m):
            cand = tuple(np.flatnonzero(member[pos]).tolist())
            if m < best_slack or cand < best_key:
                best_slack, best_key = float(m), cand
    return best_key, best_slack


def _max_closure(surface, L, forced=None):
    """Maximize sum_{i in I} L_i - pi*|F_I| (with ``forced`` in I), via min cut.

    Vertices carry profit L_i, faces cost pi, and choosing a vertex forces its
    faces (maximum-weight closure).
    """
    g = nx.DiGraph()
    for v in range(surface.n_vertices):
        if v == forced:
            g.add_edge("s", ("v", v))  # no capacity attribute: infinite
        else:
            g.add_edge("s", ("v", v), capacity=float(L[v]))
    for f, tri in enumerate(surface.faces.tolist()):
        g.add_edge(("f", f), "t", capacity=math.pi)
        for v in tri:
            g.add_edge(("v", v), ("f", f))
    _, (src_side, _) = nx.minimum_cut(g, "s", "t")
    return tuple(sorted(node[1] for node in src_side if isinstance(node, tuple) and node[0] == "v"))


def _mincut(surface, L):
    # one unforced cut finds the most violated subset when there is one
    I = _max_closure(surface, L)
    if I:
        slack = math.pi * faces_meeting(surface, I) - float(L[list(I)].sum())
        if slack <= 0:
            return I, slack
    # otherwise the tightest nonempty subset needs one forced cut per vertex
    best_slack, best_key = math.inf, None
    for v in range(surface.n_vertices):
        I = _max_closure(surface, L, v)
        slack = math.pi * faces_meeting(surface, I) - float(L[list(I)].sum())
        if slack < best_slack or (slack == best_slack and I < best_key):
            best_slack, best_key = slack, I
    return best_key, best_slack


def admissible(surface: TriangulatedSurface, L_hat, *, literal: bool = False,
               method: str = "exhaustive") -> AdmissibilityReport:
    """Check ``sum_{i in I} L_i < pi * |F_I|`` for every nonempty ``I``.

    ``method="exhaustive"`` enumerates all subsets (at most
    ``EXHAUSTIVE_LIMIT`` vertices) and reports the lexicographically smallest
    most-violated subset. ``method="mincut"`` solves the same maximization as
    a maximum-weight closure problem: one min cut settles an inadmissible
    target, and an admissible one needs a further cut per vertex to find the
    tightest subset. On ties it may report a different witness.

    ``literal=True`` compares the full sum ``sum_i L_i`` against every
    ``pi * |F_I|`` instead; the binding subset is then a vertex of minimal
    face degree.
    """
    L = _check_target(surface, L_hat)
    if literal:
        deg = surface.face_degree
        v = int(np.argmin(deg))
        lhs = float(L.sum())
        rhs = math.pi * int(deg[v])
        slack = rhs - lhs
        return AdmissibilityReport(slack > 0, (v,), slack, lhs, rhs, mode="literal", method="closed form")
    if method == "exhaustive":
        if surface.n_vertices > EXHAUSTIVE_LIMIT:
            raise CapacityError(
                f"exhaustive check is limited to {EXHAUSTIVE_LIMIT} vertices "
                f"(surface has {surface.n_vertices}); use method='mincut'")
        subset, slack = _exhaustive(surface, L)
    elif method == "mincut":
        subset, slack = _mincut(surface, L)
    else:
        raise ValueError(f"unknown method {method!r}")
    lhs = float(L[list(subset)].sum())
    rhs = math.pi * faces_meeting(surface, subset)
    return AdmissibilityReport(slack > 0, subset, slack, lhs, rhs, method=method)


# -- bundled library --------------------------------------------------------

def tetrahedron() -> TriangulatedSurface:
    return TriangulatedSurface(4, [[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]])


def octahedron() -> TriangulatedSurface:
    # 0/5 poles, 1..4 equator
    faces = []
    for i in range(4):
        a, b = 1 + i, 1 + (i + 1) % 4
        faces.append([0, a, b])
        faces.append([5, b, a])
    return TriangulatedSurface(6, faces)


def icosahedron() -> TriangulatedSurface:
    # 0 top, 1..5 upper ring, 6..10 lower ring, 11 bottom
    faces = []
    for i in range(5):
        u, un = 1 + i, 1 + (i + 1) % 5
        l, ln = 6 + i, 6 + (i + 1) % 5
        faces += [[0, u, un], [u, l, un], [un, l, ln], [11, ln, l]]
    return TriangulatedSurface(12, faces)


LIBRARY = {"tetrahedron": tetrahedron, "octahedron": octahedron, "icosahedron": icosahedron}


def bundled(name: str) -> TriangulatedSurface:
    try:
        return LIBRARY[name]()
    except KeyError:
        raise SurfaceError(f"unknown bundled surface {name!r}; choose from {sorted(LIBRARY)}") from None

