"""Generalized graphs, abstract Lyapunov graphs and the class 𝒮 machinery.

A generalized graph has ordinary vertices and *ends*: points incident to a
single edge that stand for boundary tori still to be glued.  Edges are kept
by id so that parallel edges are distinct.  Orientations are partial; an
abstract Lyapunov graph is a closed generalized graph with a total acyclic
orientation whose sources and sinks are all leaves.
"""
from __future__ import annotations

import heapq
from collections import Counter, defaultdict, deque
from dataclasses import dataclass, field

from .errors import AlgorithmFailure, GluingError, Infeasible, NoSaddle, NotInClassS


@dataclass
class GeneralizedGraph:
    vertices: set = field(default_factory=set)
    ends: set = field(default_factory=set)
    edges: dict = field(default_factory=dict)        # edge id -> (point, point)
    orientation: dict = field(default_factory=dict)  # edge id -> (tail, head)
    knot: dict = field(default_factory=dict)         # vertex -> knot id
    end_label: dict = field(default_factory=dict)    # end -> JSJ edge id
    jsj: dict = field(default_factory=dict)          # edge id -> JSJ edge id
    piece: dict = field(default_factory=dict)        # vertex or edge id -> piece id

    def copy(self) -> "GeneralizedGraph":
        return GeneralizedGraph(set(self.vertices), set(self.ends), dict(self.edges),
                                dict(self.orientation), dict(self.knot), dict(self.end_label),
                                dict(self.jsj), dict(self.piece))

    def add_edge(self, eid, a, b):
        if a == b:
            raise ValueError(f"edge {eid} would be a loop at {a}")
        if eid in self.edges:
            raise ValueError(f"duplicate edge id {eid}")
        self.edges[eid] = (a, b)

    def points(self):
        return self.vertices | self.ends

    def incidence(self):
        inc = defaultdict(list)
        for eid in sorted(self.edges):
            a, b = self.edges[eid]
            inc[a].append(eid)
            inc[b].append(eid)
        return inc

    def degree(self, v) -> int:
        return sum((a == v) + (b == v) for a, b in self.edges.values())

    def other(self, eid, p):
        a, b = self.edges[eid]
        return b if a == p else a

    def leaves(self):
        deg = self.degrees()
        return sorted(v for v in self.vertices if deg[v] == 1)

    def saddles(self):
        deg = self.degrees()
        return sorted(v for v in self.vertices if deg[v] == 3)

    def degrees(self) -> Counter:
        deg = Counter()
        for a, b in self.edges.values():
            deg[a] += 1
            deg[b] += 1
        return deg

    def leaf_edge(self, v):
        (eid,) = [e for e, (a, b) in self.edges.items() if v in (a, b)]
        return eid

    def leaf_kind(self, v):
        """``"source"``, ``"sink"`` or None for a leaf whose edge is unoriented."""
        o = self.orientation.get(self.leaf_edge(v))
        if o is None:
            return None
        return "source" if o[0] == v else "sink"


@dataclass(frozen=True)
class Projection:
    """π: Lyapunov edges over JSJ tori, and points/edges over pieces."""
    edges: dict
    pieces: dict

    def preimage(self, jsj_id):
        return sorted(e for e, j in self.edges.items() if j == jsj_id)


def _point_components(g: GeneralizedGraph, skip_point=None, skip_edge=None):
    adj = defaultdict(list)
    for eid, (a, b) in g.edges.items():
        if eid == skip_edge or skip_point in (a, b):
            continue
        adj[a].append(b)
        adj[b].append(a)
    seen = set()
    comps = []
    for start in sorted(g.points()):
        if start == skip_point or start in seen:
            continue
        comp = {start}
        seen.add(start)
        stack = [start]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    comp.add(v)
                    stack.append(v)
        comps.append(comp)
    return comps


def is_connected(g: GeneralizedGraph) -> bool:
    return len(_point_components(g)) == 1


def betti(g: GeneralizedGraph, per_component=False):
    """First Betti number |E| - |V ∪ ends| + 1 of a connected graph.

    For a disconnected graph pass ``per_component=True`` to get a list of
    values, one per component; otherwise ValueError is raised.
    """
    comps = _point_components(g)
    if per_component:
        out = []
        for comp in comps:
            n_e = sum(1 for a, b in g.edges.values() if a in comp)
            out.append(n_e - len(comp) + 1)
        return out
    if len(comps) != 1:
        raise ValueError(f"graph has {len(comps)} components; use per_component=True")
    return len(g.edges) - len(g.points()) + 1


@dataclass
class PieceGraph:
    piece: str
    graph: GeneralizedGraph
    leaves: list       # leaf vertices in construction order
    flanking: set      # leaves whose saddle carries two leaves
    y: int
    ports: tuple | None = None

    @property
    def saddles(self):
        return self.graph.saddles()


def _check_feasible(piece, c, n_ends):
    g, b, x, z, m = piece.genus, piece.boundary_count, c.x, c.z, c.m
    if n_ends != b:
        raise Infeasible(f"{n_ends} end labels for b={b}", "|end_labels| = b")
    checks = [
        (z + b == x - 2 * g + 2, "z+b = x-2g+2"),
        (z >= 0 and x >= 1, "x >= 1"),
        (b + z >= 2, "b+z >= 2"),
        (m <= z, "m <= z"),
        (not (b == 0 or g >= 1) or x >= 2, "x >= 2"),
        (not (g == 0 and b == 0) or m >= 4, "m >= 4"),
        (not (g == 0 and b == 1) or m >= 2, "m >= 2"),
    ]
    for ok, name in checks:
        if not ok:
            raise Infeasible(f"piece {piece.id}: counts violate {name}", name)


def build_piece_graph(piece, counts, end_labels, ports=None) -> PieceGraph:
    """The generalized graph L_i of a piece with the given counts.

    ``end_labels`` lists one JSJ edge id per boundary torus (loops twice).
    ``ports`` optionally names two positions in ``end_labels`` lying on a
    common cycle of the JSJ graph; for genus 0 they are placed at the two
    ends of the spine so that spine edges do not separate the glued graph.
    """
    end_labels = list(end_labels)
    _check_feasible(piece, counts, len(end_labels))
    pid, gen, b, x, z = piece.id, piece.genus, piece.boundary_count, counts.x, counts.z
    gr = GeneralizedGraph()
    saddles = [f"{pid}:v{j:02d}" for j in range(1, x + 1)]
    gr.vertices.update(saddles)
    leaves = [f"{pid}:l{j:02d}" for j in range(1, z + 1)]
    gr.vertices.update(leaves)
    ends = []
    seen = Counter()
    for k, lab in enumerate(end_labels):
        e = f"{pid}:e{k:02d}"
        seen[lab] += 1
        gr.ends.add(e)
        gr.end_label[e] = lab
        ends.append(e)
    for v in gr.points():
        gr.piece[v] = pid
    n_int = 0

    def link(a, b_):
        nonlocal n_int
        n_int += 1
        eid = f"{pid}:a{n_int:02d}"
        gr.add_edge(eid, a, b_)
        gr.piece[eid] = pid

    def spine():
        for u, v in zip(saddles, saddles[1:]):
            link(u, v)

    attach = defaultdict(list)  # saddle -> pendant points
    if gen >= 1:
        # a ring of pendant beads and g-1 bubbles (two vertices, doubled edge)
        pend = leaves + ends
        beads = [(s, s) for s in saddles[:len(pend)]]
        for s, p in zip(saddles, pend):
            attach[s].append(p)
        rest = saddles[len(pend):]
        for j in range(0, len(rest), 2):
            beads.append((rest[j], rest[j + 1]))
        for u, v in beads:
            if u != v:
                link(u, v)
                link(u, v)
        for (_, exit_), (entry, _) in zip(beads, beads[1:] + beads[:1]):
            link(exit_, entry)
    elif b == 0:
        spine()
        it = iter(leaves)
        attach[saddles[0]] += [next(it), next(it)]
        attach[saddles[-1]] += [next(it), next(it)]
        for s in saddles[1:-1]:
            attach[s].append(next(it))
    elif b == 1:
        spine()
        it = iter(leaves)
        attach[saddles[0]] += [next(it), next(it)]
        attach[saddles[-1]].append(ends[0])
        if x >= 2:
            attach[saddles[-1]].append(next(it))
        for s in saddles[1:-1]:
            attach[s].append(next(it))
    else:
        spine()
        i, j = ports if ports is not None else (0, 1)
        port_ends = [ends[i], ends[j]]
        others = [e for k, e in enumerate(ends) if k not in (i, j)]
        attach[saddles[0]].append(port_ends[0])
        attach[saddles[-1]].append(port_ends[1])
        for s, p in zip(saddles, leaves + others):
            attach[s].append(p)
    n_pend = 0
    flanking = set()
    for s in saddles:
        pts = attach[s]
        for p in pts:
            n_pend += 1
            eid = f"{pid}:p{n_pend:02d}"
            gr.add_edge(eid, s, p)
            gr.piece[eid] = pid
        lv = [p for p in pts if p in gr.vertices]
        if len(lv) == 2:
            flanking.update(lv)
    y = len(flanking) // 2
    if 2 * y > counts.m:
        raise Infeasible(f"piece {pid}: 2y = {2 * y} > m = {counts.m}", "2y <= m")
    return PieceGraph(pid, gr, leaves, flanking, y,
                      tuple(ports) if ports is not None else None)


def glue_graphs(piece_graphs, jsj):
    """Fuse ends carrying the same JSJ label; return ``(L, projection)``."""
    L = GeneralizedGraph()
    by_label = defaultdict(list)
    for pg in piece_graphs:
        g = pg.graph
        if set(g.vertices) & L.vertices:
            raise GluingError(f"piece graph {pg.piece} reuses vertex ids")
        L.vertices |= g.vertices
        L.ends |= g.ends
        L.edges.update(g.edges)
        L.orientation.update(g.orientation)
        L.knot.update(g.knot)
        L.end_label.update(g.end_label)
        L.piece.update(g.piece)
        for e, lab in g.end_label.items():
            by_label[lab].append(e)
    known = set()
    for je in jsj.edges:
        known.add(je.id)
        ends = sorted(by_label.get(je.id, []))
        if len(ends) != 2:
            raise GluingError(f"torus {je.id} labels {len(ends)} ends, expected 2")
        sides = sorted(L.piece[e] for e in ends)
        if sides != sorted(je.ends):
            raise GluingError(f"torus {je.id} joins {je.ends} but its ends lie in {sides}")
        stubs = []
        for e in ends:
            eid = L.leaf_edge(e)
            stubs.append((eid, L.other(eid, e)))
            del L.edges[eid]
            L.orientation.pop(eid, None)
            L.piece.pop(eid, None)
            L.ends.discard(e)
            L.end_label.pop(e)
            L.piece.pop(e, None)
        (_, s1), (_, s2) = stubs
        if s1 == s2:
            raise GluingError(f"fusing the ends of torus {je.id} would create a loop at {s1}")
        new = f"T:{je.id}"
        L.add_edge(new, s1, s2)
        L.jsj[new] = je.id
    stray = set(by_label) - known
    if stray:
        raise GluingError(f"ends labeled by unknown tori {sorted(stray)}")
    if not is_connected(L):
        raise GluingError("glued graph is not connected")
    return L, Projection(dict(L.jsj), dict(L.piece))


def in_class_S(g: GeneralizedGraph):
    """Return ``(True, None)`` or ``(False, witness)`` for the first violation.

    The witness is a pair such as ``("vertex", v)``, ``("edge", e)``,
    ``("end", e)`` or ``("leaves", kinds)``.
    """
    if g.ends:
        return False, ("end", sorted(g.ends)[0])
    if not g.vertices:
        return False, ("empty", None)
    deg = g.degrees()
    for v in sorted(g.vertices):
        if deg[v] not in (1, 3):
            return False, ("degree", v)
    if not is_connected(g):
        return False, ("disconnected", None)
    kinds = set()
    for v in g.leaves():
        k = g.leaf_kind(v)
        if k is None:
            return False, ("unoriented-leaf", v)
        kinds.add(k)
    if kinds != {"source", "sink"}:
        return False, ("leaves", sorted(kinds))
    leafset = set(g.leaves())
    if _bridges_have_leaves(g, leafset):
        return True, None
    # slow path, only to name the first offending cut point
    for v in sorted(g.vertices):
        comps = _point_components(g, skip_point=v)
        if len(comps) > 1 and any(not (c & leafset) for c in comps):
            return False, ("vertex", v)
    for eid in sorted(g.edges):
        comps = _point_components(g, skip_edge=eid)
        if len(comps) > 1 and any(not (c & leafset) for c in comps):
            return False, ("edge", eid)
    return True, None


def _bridges_have_leaves(g, leafset) -> bool:
    """True when every bridge has a leaf on both sides.

    With degrees in {1, 3} a cut vertex always carries a bridge whose far
    side is the leafless component, so bridges are the only cut points to
    inspect.  Iterative lowpoint DFS, keyed by edge id for multigraphs.
    """
    inc = g.incidence()
    root = min(g.vertices)
    total = len(leafset)
    disc, low, below = {root: 0}, {root: 0}, {}
    stack = [(root, None, iter(inc[root]))]
    while stack:
        u, via, it = stack[-1]
        for e in it:
            if e == via:
                continue
            v = g.other(e, u)
            if v in disc:
                low[u] = min(low[u], disc[v])
                continue
            disc[v] = low[v] = len(disc)
            stack.append((v, e, iter(inc[v])))
            break
        else:
            stack.pop()
            below[u] = (u in leafset) + below.get(u, 0)
            if stack:
                p = stack[-1][0]
                low[p] = min(low[p], low[u])
                below[p] = below.get(p, 0) + below[u]
                if low[u] > disc[p] and not (0 < below[u] < total):
                    return False
    return True


def orientation_problems(g: GeneralizedGraph, edges=None, fixed=None):
    """Why an oriented (sub)graph is not Lyapunov; an empty list means it is."""
    edges = sorted(g.edges) if edges is None else sorted(edges)
    problems = []
    deg, indeg, outdeg = Counter(), Counter(), Counter()
    succ = defaultdict(list)
    for e in edges:
        o = g.orientation.get(e) if fixed is None else fixed.get(e)
        if o is None:
            problems.append(f"edge {e} is not oriented")
            continue
        if set(o) != set(g.edges[e]):
            problems.append(f"edge {e} oriented between wrong points")
            continue
        t, h = o
        deg[t] += 1
        deg[h] += 1
        outdeg[t] += 1
        indeg[h] += 1
        succ[t].append(h)
    if problems:
        return problems
    for v in sorted(deg):
        if deg[v] > 1 and (indeg[v] == 0 or outdeg[v] == 0):
            problems.append(f"vertex {v} of degree {deg[v]} is a source or sink")
    # Kahn's algorithm over the points touched by `edges`
    indeg2 = Counter(indeg)
    queue = [v for v in deg if indeg2[v] == 0]
    done = 0
    while queue:
        u = queue.pop()
        done += 1
        for v in succ[u]:
            indeg2[v] -= 1
            if indeg2[v] == 0:
                queue.append(v)
    if done != len(deg):
        problems.append("orientation has an oriented cycle")
    return problems


def _sub_adj(g, edges):
    adj = defaultdict(list)
    for e in sorted(edges):
        a, b = g.edges[e]
        adj[a].append((b, e))
        adj[b].append((a, e))
    for v in adj:
        adj[v].sort()
    return adj


def _candidate_paths(g, adj, sources, sinks, budget):
    """Source-to-sink paths: BFS-shortest first, then all simple paths."""
    emitted = set()
    for src in sources:
        parent = {src: None}
        order = []
        q = deque([src])
        while q:
            u = q.popleft()
            for v, e in adj[u]:
                if v in parent:
                    continue
                parent[v] = (u, e)
                if v in sinks:
                    order.append(v)
                elif len(adj[v]) > 1:
                    q.append(v)
        for t in order:
            path = []
            v = t
            while parent[v] is not None:
                u, e = parent[v]
                path.append((u, e, v))
                v = u
            path.reverse()
            key = tuple(e for _, e, _ in path)
            emitted.add(key)
            yield path
    for src in sources:
        stack = [(src, [], {src})]
        while stack:
            budget[0] -= 1
            if budget[0] < 0:
                return
            u, path, seen = stack.pop()
            for v, e in reversed(adj[u]):
                if v in seen:
                    continue
                step = path + [(u, e, v)]
                if v in sinks:
                    key = tuple(x for _, x, _ in step)
                    if key not in emitted:
                        emitted.add(key)
                        yield step
                elif len(adj[v]) > 1:
                    stack.append((v, step, seen | {v}))


def _orient_sub(g, edges, fixed, budget):
    if len(edges) == 1:
        (e,) = edges
        return {e: fixed[e]} if e in fixed else None
    adj = _sub_adj(g, edges)
    leaves = sorted(v for v in adj if len(adj[v]) == 1)
    for v in leaves:
        if adj[v][0][1] not in fixed:
            return None
    sources = [v for v in leaves if fixed[adj[v][0][1]][0] == v]
    sinks = {v for v in leaves if fixed[adj[v][0][1]][1] == v}
    if not sources or not sinks:
        return None
    for path in _candidate_paths(g, adj, sources, sinks, budget):
        result = _try_path(g, edges, fixed, path, budget)
        if result is not None:
            return result
        if budget[0] < 0:
            return None
    return None


def _try_path(g, edges, fixed, path, budget):
    out = {}
    for u, e, v in path:
        if e in fixed and fixed[e] != (u, v):
            return None
        out[e] = (u, v)
    pos = {}
    for i, (u, _, _) in enumerate(path):
        pos.setdefault(u, i)
    pos.setdefault(path[-1][2], len(path))
    rest = set(edges) - set(out)
    adj = _sub_adj(g, rest)
    seen = set()
    for start in sorted(adj):
        if start in seen:
            continue
        comp_pts = {start}
        stack = [start]
        seen.add(start)
        comp_edges = set()
        while stack:
            u = stack.pop()
            for v, e in adj[u]:
                comp_edges.add(e)
                if v not in seen:
                    seen.add(v)
                    comp_pts.add(v)
                    stack.append(v)
        attach = sorted((p for p in comp_pts if p in pos), key=lambda p: pos[p])
        sub_fixed = {e: fixed[e] for e in comp_edges if e in fixed}
        own = [p for p in comp_pts if p not in pos and len(adj[p]) == 1]
        extra = {}
        if len(attach) == 1:
            kinds = {"source" if sub_fixed[adj[p][0][1]][0] == p else "sink" for p in own
                     if adj[p][0][1] in sub_fixed}
            roles = ["sink" if kinds == {"source"} else "source"]
        else:
            roles = ["source"] + ["sink"] * (len(attach) - 1)
        for p, role in zip(attach, roles):
            (q, e), = adj[p]
            want = (p, q) if role == "source" else (q, p)
            if extra.get(e, want) != want or sub_fixed.get(e, want) != want:
                return None
            extra[e] = want
        sub_fixed.update(extra)
        sub = _orient_sub(g, comp_edges, sub_fixed, budget)
        if sub is None:
            return None
        out.update(sub)
    if orientation_problems(g, edges, out):
        return None
    if any(out[e] != o for e, o in fixed.items() if e in out):
        return None
    return out


def orient(g: GeneralizedGraph, budget=100_000) -> GeneralizedGraph:
    """Extend the leaf orientations of a class-𝒮 graph to a Lyapunov graph.

    A source-to-sink path is oriented and removed; every remaining component
    is re-leafed at its attachment vertices (first along the path a source,
    the others sinks) and handled recursively.  Path choices are backtracked
    if validation fails.
    """
    ok, witness = in_class_S(g)
    if not ok:
        raise NotInClassS("graph is not in class S", witness)
    fixed = {g.leaf_edge(v): g.orientation[g.leaf_edge(v)] for v in g.leaves()}
    counter = [budget]
    result = _orient_sub(g, set(g.edges), fixed, counter)
    if result is None:
        raise AlgorithmFailure("orientation search exhausted on a class-S graph")
    out = g.copy()
    out.orientation = result
    problems = orientation_problems(out)
    if problems:
        raise AlgorithmFailure("; ".join(problems))
    return out


def classify(g: GeneralizedGraph, v) -> str:
    deg = g.degree(v)
    if deg == 3:
        return "saddle"
    if deg == 1:
        return g.leaf_kind(v) or "leaf"
    return "other"


def validate_lyapunov(g: GeneralizedGraph):
    problems = []
    if g.ends:
        problems.append("graph has unglued ends")
    deg = g.degrees()
    for v in sorted(g.vertices):
        if deg[v] not in (1, 3):
            problems.append(f"vertex {v} has degree {deg[v]}")
    if g.vertices and not is_connected(g):
        problems.append("graph is not connected")
    return problems + orientation_problems(g)


@dataclass(frozen=True)
class Block:
    id: str
    saddle: str
    leaves: tuple    # (leaf vertex, edge id)
    ends: tuple      # (edge id, "in" | "out")

    @property
    def n_boundary(self) -> int:
        return len(self.ends)


def blocks(g: GeneralizedGraph):
    """Cut at midpoints of saddle-saddle edges; one block per saddle."""
    deg = g.degrees()
    saddles = sorted(v for v in g.vertices if deg[v] == 3)
    if not saddles:
        raise NoSaddle("Lyapunov graph has no saddle vertex")
    inc = g.incidence()
    out = []
    for s in saddles:
        leaves, ends = [], []
        for e in inc[s]:
            t = g.other(e, s)
            if deg[t] == 1:
                leaves.append((t, e))
            else:
                o = g.orientation.get(e)
                ends.append((e, "in" if o is not None and o[1] == s else "out"))
        out.append(Block(s, s, tuple(leaves), tuple(ends)))
    return out


def block_edges(g: GeneralizedGraph):
    """Oriented saddle-saddle edges as (edge id, tail block, head block)."""
    deg = g.degrees()
    out = []
    for e in sorted(g.edges):
        a, b = g.edges[e]
        if deg[a] == 3 and deg[b] == 3:
            t, h = g.orientation[e]
            out.append((e, t, h))
    return out


def order_blocks(g: GeneralizedGraph):
    """Topological order of blocks, smallest block id first among ties."""
    bl = {b.id: b for b in blocks(g)}
    indeg = Counter()
    succ = defaultdict(list)
    for _, t, h in block_edges(g):
        succ[t].append(h)
        indeg[h] += 1
    heap = [b for b in bl if indeg[b] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        u = heapq.heappop(heap)
        order.append(bl[u])
        for v in succ[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                heapq.heappush(heap, v)
    if len(order) != len(bl):
        raise AlgorithmFailure("block graph has an oriented cycle")
    return order


def order_respects_edges(g: GeneralizedGraph, order) -> bool:
    pos = {b if isinstance(b, str) else b.id: i for i, b in enumerate(order)}
    return all(pos[t] < pos[h] for _, t, h in block_edges(g))


def _dot_id(s):
    return '"' + str(s).replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(g: GeneralizedGraph, name="L") -> str:
    """Graphviz text with stable ordering; saddles are circles, leaves
    squares, ends diamonds."""
    deg = g.degrees()
    lines = [f"digraph {_dot_id(name)} {{"]
    for v in sorted(g.points()):
        if v in g.ends:
            shape, label = "diamond", g.end_label.get(v, v)
        elif deg[v] == 3:
            shape, label = "circle", g.knot.get(v, v)
        else:
            shape, label = "square", g.knot.get(v, v)
        lines.append(f"  {_dot_id(v)} [shape={shape}, label={_dot_id(label)}];")
    for e in sorted(g.edges):
        o = g.orientation.get(e)
        a, b = o if o is not None else g.edges[e]
        attrs = [f"label={_dot_id(g.jsj[e])}"] if e in g.jsj else []
        if o is None:
            attrs.append("dir=none")
        tail = f" [{', '.join(attrs)}]" if attrs else ""
        lines.append(f"  {_dot_id(a)} -> {_dot_id(b)}{tail};")
    lines.append("}")
    return "\n".join(lines) + "\n"
