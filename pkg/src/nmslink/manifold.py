"""Graph manifolds presented by their JSJ graph.

Vertices of the JSJ graph are Seifert pieces, edges are JSJ tori.  The graph
is a multigraph: parallel edges and loops are both allowed.  Gluing maps on
the tori are not modeled.
"""
from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field

from .diagnostics import Diagnostic
from .errors import NotFound
from .seifert import (SeifertPiece, has_forbidden_half_slope, is_fibering_exceptional,
                      normalize_slope, singular_slopes, uniqueness_assumed)


@dataclass(frozen=True)
class JsjEdge:
    id: str
    ends: tuple  # (piece id, piece id); equal ids for a loop

    @property
    def is_loop(self) -> bool:
        return self.ends[0] == self.ends[1]


@dataclass(frozen=True)
class GraphManifold:
    pieces: tuple
    edges: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "pieces", tuple(self.pieces))
        object.__setattr__(self, "edges", tuple(self.edges))

    def piece(self, pid) -> SeifertPiece:
        for p in self.pieces:
            if p.id == pid:
                return p
        raise NotFound(pid)

    def edge(self, eid) -> JsjEdge:
        for e in self.edges:
            if e.id == eid:
                return e
        raise NotFound(eid)

    @property
    def piece_ids(self):
        return [p.id for p in self.pieces]

    def incident_edges(self, pid):
        """Edge ids at a piece, listed once per endpoint (loops twice)."""
        out = []
        for e in self.edges:
            out.extend(e.id for end in e.ends if end == pid)
        return out

    def adjacency(self):
        adj = defaultdict(list)
        for e in self.edges:
            a, b = e.ends
            adj[a].append((b, e.id))
            if a != b:
                adj[b].append((a, e.id))
        return adj


def make_manifold(pieces, edges=()) -> GraphManifold:
    """Build a manifold from plain tuples, deriving boundary counts.

    ``pieces`` holds ``(id, genus, [(q, p), ...])`` and ``edges`` holds
    ``(id, piece_a, piece_b)``.
    """
    fixed_edges = [JsjEdge(eid, (a, b)) for eid, a, b in edges]
    ends = Counter()
    for e in fixed_edges:
        ends[e.ends[0]] += 1
        ends[e.ends[1]] += 1
    built = []
    for pid, genus, slopes in pieces:
        built.append(SeifertPiece(pid, genus, ends[pid],
                                  tuple(normalize_slope(q, p) for q, p in slopes)))
    return GraphManifold(tuple(built), tuple(fixed_edges))


def _components(nodes, edges, skip=None):
    adj = defaultdict(list)
    for e in edges:
        if e.id == skip:
            continue
        a, b = e.ends
        adj[a].append(b)
        adj[b].append(a)
    seen = {}
    comps = []
    for start in nodes:
        if start in seen:
            continue
        comp = {start}
        stack = [start]
        seen[start] = len(comps)
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v not in seen:
                    seen[v] = len(comps)
                    comp.add(v)
                    stack.append(v)
        comps.append(comp)
    return comps


def validate_manifold(w: GraphManifold):
    """List the violated structural invariants; an empty list means valid."""
    diags = []
    ids = w.piece_ids
    dup = [pid for pid, n in Counter(ids).items() if n > 1]
    if dup:
        diags.append(Diagnostic("duplicate-piece", f"duplicate piece ids {dup}"))
    if not w.pieces:
        diags.append(Diagnostic("empty", "manifold has no pieces"))
        return diags
    edup = [eid for eid, n in Counter(e.id for e in w.edges).items() if n > 1]
    if edup:
        diags.append(Diagnostic("duplicate-torus", f"duplicate torus ids {edup}"))
    known = set(ids)
    for e in w.edges:
        for end in e.ends:
            if end not in known:
                diags.append(Diagnostic("unknown-piece", f"torus {e.id} references {end!r}"))
    if any(d.code == "unknown-piece" for d in diags):
        return diags
    for p in w.pieces:
        n_ends = len(w.incident_edges(p.id))
        if p.boundary_count != n_ends:
            diags.append(Diagnostic(
                "boundary-mismatch",
                f"piece has b={p.boundary_count} but {n_ends} torus endpoints", p.id))
    if len(_components(ids, w.edges)) != 1:
        diags.append(Diagnostic("disconnected", "JSJ graph is not connected"))
    if not w.edges and (len(w.pieces) != 1 or w.pieces[0].boundary_count != 0):
        diags.append(Diagnostic("not-closed", "without tori there must be one closed piece"))
    return diags


def is_ordinary(w: GraphManifold):
    """Return ``(ordinary, diagnostics)``; one diagnostic per failing piece.

    Warnings (severity ``"warning"``) flag closed pieces of genus <= 1, where
    uniqueness of the fibering is assumed rather than checked.
    """
    diags = []
    ok = True
    for p in w.pieces:
        if has_forbidden_half_slope(p):
            ok = False
            bad = [str(s) for s in p.slopes if s.p == 2]
            diags.append(Diagnostic("half-slope", f"singular fiber with slope {bad[0]}", p.id))
        elif is_fibering_exceptional(p):
            ok = False
            if p.boundary_count == 0:
                msg = f"small Seifert space over S^2 with {p.m} singular fibers"
            else:
                msg = f"{p} does not have a unique Seifert fibering"
            diags.append(Diagnostic("non-unique-fibering", msg, p.id))
        elif uniqueness_assumed(p):
            diags.append(Diagnostic("uniqueness-assumed",
                                    "unique fibering assumed for closed genus<=1 piece",
                                    p.id, severity="warning"))
    return ok, diags


def separating_edges(w: GraphManifold) -> set:
    """Bridges of the JSJ multigraph, by edge id."""
    adj = defaultdict(list)
    for e in w.edges:
        a, b = e.ends
        if a == b:
            continue
        adj[a].append((b, e.id))
        adj[b].append((a, e.id))
    disc, low = {}, {}
    bridges = set()
    counter = 0
    for root in w.piece_ids:
        if root in disc:
            continue
        disc[root] = low[root] = counter
        counter += 1
        # iterative DFS; the parent is skipped by edge id so parallel edges count
        stack = [(root, None, iter(adj[root]))]
        while stack:
            u, via, it = stack[-1]
            advanced = False
            for v, eid in it:
                if eid == via:
                    continue
                if v in disc:
                    low[u] = min(low[u], disc[v])
                else:
                    disc[v] = low[v] = counter
                    counter += 1
                    stack.append((v, eid, iter(adj[v])))
                    advanced = True
                    break
            if not advanced:
                stack.pop()
                if stack:
                    parent = stack[-1][0]
                    low[parent] = min(low[parent], low[u])
                    if low[u] > disc[parent]:
                        bridges.add(via)
    return bridges


@dataclass(frozen=True)
class Cut:
    sides: tuple  # one frozenset per component
    separating: bool


def component_pieces_after_cut(w: GraphManifold, edge_id) -> Cut:
    w.edge(edge_id)
    comps = _components(w.piece_ids, w.edges, skip=edge_id)
    sides = tuple(frozenset(c) for c in comps)
    return Cut(sides, len(sides) > 1)


def singular_count(w: GraphManifold, pid) -> int:
    return len(singular_slopes(w.piece(pid)))


def cycle_ports(w: GraphManifold, pid):
    """Two endpoint positions at ``pid`` whose tori lie on a common cycle of G.

    Positions index into ``w.incident_edges(pid)``.  A loop is preferred since
    it is a cycle by itself.  Returns None when the piece lies on no cycle.
    """
    inc = w.incident_edges(pid)
    for i, eid in enumerate(inc):
        if w.edge(eid).is_loop:
            return (i, inc.index(eid, i + 1))
    bridges = separating_edges(w)
    for i, eid in enumerate(inc):
        if eid in bridges:
            continue
        e = w.edge(eid)
        other = e.ends[1] if e.ends[0] == pid else e.ends[0]
        # BFS from pid to `other` avoiding e; the first edge on the path closes the cycle
        adj = w.adjacency()
        first = {}
        queue = []
        for v, fid in sorted(adj[pid], key=lambda t: (t[1], t[0])):
            if fid == eid or v == pid or v in first:
                continue
            first[v] = fid
            queue.append(v)
        seen = {pid} | set(queue)
        while queue:
            u = queue.pop(0)
            if u == other:
                f = first[u]
                j = next(k for k, fid in enumerate(inc) if fid == f and k != i)
                return (i, j)
            for v, fid in sorted(adj[u], key=lambda t: (t[1], t[0])):
                if v not in seen and fid != eid:
                    seen.add(v)
                    first[v] = first[u]
                    queue.append(v)
    return None
