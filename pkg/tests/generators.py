"""Random and exhaustive input generators shared by the test modules."""
from __future__ import annotations

import random
from collections import Counter
from itertools import islice, permutations, product
from math import gcd

from nmslink.link import REGULAR, SINGULAR, IndexedLink, KnotRecord
from nmslink.lyagraph import GeneralizedGraph
from nmslink.manifold import GraphManifold, JsjEdge, is_ordinary, validate_manifold
from nmslink.seifert import SeifertPiece, Slope

DENOMS = (3, 4, 5, 7)


def random_slope(rng):
    p = rng.choice(DENOMS)
    while True:
        q = rng.randint(-p, 2 * p)
        if q and gcd(abs(q), p) == 1:
            return Slope(q, p)


def random_ordinary_manifold(rng, max_pieces=6, max_sing=4, max_genus=3, extra_edges=2):
    """A random ordinary graph manifold; genus-0 pieces get enough singular
    fibers to be uniquely fibered."""
    n = rng.randint(1, max_pieces)
    names = [f"M{i}" for i in range(n)]
    edges = []
    for i in range(1, n):
        edges.append((names[rng.randrange(i)], names[i]))
    for _ in range(rng.randint(0, extra_edges)):
        a, b = rng.choice(names), rng.choice(names)
        edges.append((a, b))
    jsj = tuple(JsjEdge(f"t{j}", (a, b)) for j, (a, b) in enumerate(edges))
    ends = Counter()
    for e in jsj:
        ends[e.ends[0]] += 1
        ends[e.ends[1]] += 1
    pieces = []
    for pid in names:
        b = ends[pid]
        g = rng.randint(0, max_genus) if rng.random() < 0.5 else 0
        need = 0
        if g == 0:
            need = {0: 4, 1: 2, 2: 1}.get(b, 0)
        m = rng.randint(need, max(need, max_sing))
        pieces.append(SeifertPiece(pid, g, b, tuple(random_slope(rng) for _ in range(m))))
    w = GraphManifold(tuple(pieces), jsj)
    assert not validate_manifold(w)
    assert is_ordinary(w)[0]
    return w


def sample_links(w, rng, k, pool=400, slack=3):
    """Up to ``k`` related links drawn from the start of the enumeration."""
    from nmslink.decide import _min_saddles, enumerate_links

    top = sum(_min_saddles(p) for p in w.pieces) + slack
    links = list(islice(enumerate_links(w, top), pool))
    rng.shuffle(links)
    return links[:k]


def random_link(w, rng):
    """A random base link that is often, but not always, related."""
    knots = []
    for p in w.pieces:
        g, b = p.genus, p.boundary_count
        sing = list(p.slopes)
        if rng.random() < 0.1 and sing:
            sing.pop(rng.randrange(len(sing)))
        if rng.random() < 0.05:
            sing.append(random_slope(rng))
        n_reg = rng.randint(0, 3)
        z = len(sing) + n_reg
        x = z + b + 2 * g - 2
        x = max(0, x + rng.choice((0, 0, 0, 0, -1, 1, 2)))
        j = 0
        for s in sing:
            j += 1
            idx = rng.choice((0, 2)) if rng.random() < 0.97 else 1
            knots.append(KnotRecord(f"{p.id}.k{j}", p.id, idx, SINGULAR, s))
        for _ in range(n_reg):
            j += 1
            knots.append(KnotRecord(f"{p.id}.k{j}", p.id, rng.choice((0, 2)), REGULAR))
        for _ in range(x):
            j += 1
            knots.append(KnotRecord(f"{p.id}.k{j}", p.id, 1, REGULAR))
    return IndexedLink(tuple(knots))


# ---------------------------------------------------------------------------
# exhaustive small generalized graphs with leaf orientations

def _connected(n, edges):
    if n == 0:
        return True
    adj = {i: set() for i in range(n)}
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    seen, stack = {0}, [0]
    while stack:
        u = stack.pop()
        for v in adj[u] - seen:
            seen.add(v)
            stack.append(v)
    return len(seen) == n


def _cores(k, max_edges):
    """Loopless connected multigraphs on k vertices with degrees <= 3."""
    pairs = [(a, b) for a in range(k) for b in range(a + 1, k)]
    for mults in product(range(4), repeat=len(pairs)):
        edges = [pr for pr, m in zip(pairs, mults) for _ in range(m)]
        deg = Counter()
        for a, b in edges:
            deg[a] += 1
            deg[b] += 1
        if any(deg[v] > 3 for v in range(k)):
            continue
        if 3 * k - len(edges) > max_edges:
            continue
        if _connected(k, edges):
            yield edges, deg


def _canonical(k, edges, colors):
    best = None
    for perm in permutations(range(k)):
        key = (tuple(colors[perm.index(i)] for i in range(k)),
               tuple(sorted(tuple(sorted((perm[a], perm[b]))) for a, b in edges)))
        if best is None or key < best:
            best = key
    return best


def small_graphs(max_edges=8, max_trivalent=5):
    """Every closed generalized graph with degrees in {1, 3}, at most
    ``max_edges`` edges and an orientation on each leaf edge, one per
    isomorphism class."""
    # no trivalent vertex: one edge from a source leaf to a sink leaf
    g = GeneralizedGraph(vertices={"a", "b"})
    g.add_edge("e", "a", "b")
    g.orientation["e"] = ("a", "b")
    yield g
    for k in range(1, max_trivalent + 1):
        seen = set()
        for edges, deg in _cores(k, max_edges):
            slots = [3 - deg[v] for v in range(k)]
            for sources in product(*(range(s + 1) for s in slots)):
                colors = list(zip(slots, sources))
                key = _canonical(k, edges, colors)
                if key in seen:
                    continue
                seen.add(key)
                yield _materialize(k, edges, slots, sources)


def _materialize(k, edges, slots, sources):
    g = GeneralizedGraph()
    names = [f"v{i}" for i in range(k)]
    g.vertices.update(names)
    for j, (a, b) in enumerate(edges):
        g.add_edge(f"c{j}", names[a], names[b])
    n = 0
    for v in range(k):
        for t in range(slots[v]):
            n += 1
            leaf = f"l{n:02d}"
            g.vertices.add(leaf)
            e = f"p{n:02d}"
            g.add_edge(e, names[v], leaf)
            g.orientation[e] = (leaf, names[v]) if t < sources[v] else (names[v], leaf)
    return g


def class_s_oracle(g):
    """Direct restatement of the class-𝒮 definition, independent of the
    library: delete each vertex and each edge midpoint and inspect the
    pieces."""
    deg = Counter()
    for a, b in g.edges.values():
        deg[a] += 1
        deg[b] += 1
    if g.ends or any(deg[v] not in (1, 3) for v in g.vertices):
        return False
    leaves = {v for v in g.vertices if deg[v] == 1}
    kinds = set()
    for e, (a, b) in g.edges.items():
        for v in (a, b):
            if v in leaves:
                o = g.orientation.get(e)
                if o is None:
                    return False
                kinds.add("source" if o[0] == v else "sink")
    if kinds != {"source", "sink"}:
        return False

    def pieces(drop_v=None, drop_e=None):
        verts = [v for v in g.vertices if v != drop_v]
        es = [ab for e, ab in g.edges.items() if e != drop_e and drop_v not in ab]
        parent = {v: v for v in verts}

        def find(v):
            while parent[v] != v:
                parent[v] = parent[parent[v]]
                v = parent[v]
            return v
        for a, b in es:
            parent[find(a)] = find(b)
        groups = {}
        for v in verts:
            groups.setdefault(find(v), set()).add(v)
        return list(groups.values())

    if len(pieces()) != 1:
        return False
    for v in g.vertices:
        ps = pieces(drop_v=v)
        if len(ps) > 1 and any(not (p & leaves) for p in ps):
            return False
    for e in g.edges:
        ps = pieces(drop_e=e)
        if len(ps) > 1 and any(not (p & leaves) for p in ps):
            return False
    return True


def brute_force_orientations(g):
    """All total orientations extending the leaf orientations that are
    acyclic with every non-leaf vertex having in- and out-edges."""
    free = sorted(e for e in g.edges if e not in g.orientation)
    found = []
    for bits in product((0, 1), repeat=len(free)):
        o = dict(g.orientation)
        for e, bit in zip(free, bits):
            a, b = g.edges[e]
            o[e] = (a, b) if bit == 0 else (b, a)
        if is_lyapunov_orientation(g, o):
            found.append(o)
    return found


def is_lyapunov_orientation(g, o):
    indeg, outdeg = Counter(), Counter()
    succ = {}
    for e, (t, h) in o.items():
        outdeg[t] += 1
        indeg[h] += 1
        succ.setdefault(t, []).append(h)
    for v in g.vertices:
        if indeg[v] + outdeg[v] > 1 and (indeg[v] == 0 or outdeg[v] == 0):
            return False
    # acyclic: repeatedly strip vertices with no incoming edges
    remaining = dict(indeg)
    ready = [v for v in g.vertices if remaining.get(v, 0) == 0]
    seen = 0
    while ready:
        u = ready.pop()
        seen += 1
        for v in succ.get(u, []):
            remaining[v] -= 1
            if remaining[v] == 0:
                ready.append(v)
    return seen == len(g.vertices)


def feasible_counts(rng):
    """A random (genus, b, m, x, z) satisfying the counting identity and the
    necessary inequalities."""
    while True:
        g = rng.randint(0, 3)
        b = rng.randint(0, 5)
        m = rng.randint(0, 6)
        extra = rng.randint(0, 4)
        z = m + extra
        x = z + b + 2 * g - 2
        ok = (x >= 1 and b + z >= 2 and m <= z
              and (not (b == 0 or g >= 1) or x >= 2)
              and (not (g == 0 and b == 0) or m >= 4)
              and (not (g == 0 and b == 1) or m >= 2))
        if ok:
            return g, b, m, x, z


def seeded(seed):
    return random.Random(seed)


# ---------------------------------------------------------------------------
# random valid operation histories

def random_s3(rng, depth=0):
    """A random valid S^3 expression built from the Hopf seed."""
    from nmslink.ops import HOPF, S3Expr, eval_s3

    e = HOPF
    for _ in range(rng.randint(0, depth)):
        state = eval_s3(e)
        step = random_step(rng, state, s3_only=True)
        cand = S3Expr(inner=e, step=step)
        try:
            eval_s3(cand)
        except Exception:
            continue
        e = cand
    return e


def random_step(rng, state, s3_only=False):
    """A random well-formed step against ``state`` (validity not guaranteed
    for S^3 operands that drop their last index-0/2 knot)."""
    from nmslink.ops import HOPF, OperationStep, eval_s3

    own = [k for k in state.knots if k.index in (0, 2)]
    variants = ["I", "II", "III", "IV", "V"] + ([] if s3_only else ["VI", "VII"])
    v = rng.choice(variants)
    s3 = HOPF if s3_only or rng.random() < 0.6 else random_s3(rng, 1)
    l2 = eval_s3(s3)
    others = [k for k in l2.knots if k.index in (0, 2)]
    k1 = rng.choice(own)
    k2 = rng.choice(others)
    if v == "IV":
        match = [k for k in others if k.index == 2 - k1.index]
        if not match:
            v = "V"
        else:
            k2 = rng.choice(match)
    if v in ("I",):
        return OperationStep(v, s3=s3)
    if v == "II":
        return OperationStep(v, s3=s3, other=k2.id)
    if v == "III":
        return OperationStep(v, s3=s3, own=k1.id)
    if v == "IV":
        return OperationStep(v, s3=s3, own=k1.id, other=k2.id)
    if v == "V":
        return OperationStep(v, s3=s3, own=k1.id, other=k2.id,
                             result_index=rng.choice((k1.index, k2.index)))
    if v == "VI":
        while True:
            p, q = rng.randint(1, 5), rng.randint(-5, 5)
            if gcd(p, q) == 1:
                break
        c = rng.choice((k1.index, 2 - k1.index))
        other = k1.index if c != k1.index else rng.choice((0, 2))
        core, cable = (c, other) if rng.random() < 0.5 else (other, c)
        if k1.index not in (core, cable):
            core = k1.index
        return OperationStep(v, own=k1.id, p=p, q=q, core_index=core, cable_index=cable)
    return OperationStep("VII", own=k1.id, q=rng.choice((-3, -1, 1, 3, 5)))
