"""Fat-round-handle blocks, σ assignments and FRH certificates.

Each saddle block of the Lyapunov graph corresponds to one atoroidal Seifert
block: ``pants`` = M(0,3;), ``one`` = M(0,2; q/p) (with p = 1 standing for
T^2 x I around a regular fiber) and ``two`` = M(0,1; q1/p1, q2/p2) with both
p > 1.  A certificate records the blocks, their incidences and the order in
which they are stacked; it carries no gluing matrices and no flow data.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from math import gcd

from .diagnostics import Diagnostic
from .errors import AssemblyError, Infeasible, MalformedInput
from .link import CABLED, SINGULAR, IndexedLink
from .lyagraph import (GeneralizedGraph, block_edges, blocks, classify, is_connected,
                       order_respects_edges, validate_lyapunov)
from .manifold import GraphManifold
from .seifert import Slope, singular_slopes, slope_key

FORMAT = "nms-frh-certificate/1"
PANTS, ONE, TWO = "pants", "one", "two"
SHAPES = {PANTS: (0, 3), ONE: (1, 2), TWO: (2, 1)}  # shape -> (leaves, boundary tori)
REGULAR_SLOT = Slope(0, 1)

# block types that never occur for ordinary manifolds; kept as rejection reasons
EXCLUDED = {
    "half-slope": "a block with a q/2 singular fiber",
    "nonorientable-base": "a block over a non-orientable orbifold",
}


@dataclass(frozen=True)
class FrhBlock:
    id: str
    piece: str
    shape: str
    slopes: tuple
    saddle_knot: str
    leaves: tuple            # (knot id, index, vertex)
    boundary: tuple          # (edge id, "in" | "out")
    cable: tuple | None = None

    @property
    def n_boundary(self) -> int:
        return len(self.boundary)

    @property
    def knot_count(self) -> int:
        return 1 + len(self.leaves)

    def to_json(self):
        return {
            "id": self.id,
            "piece": self.piece,
            "shape": self.shape,
            "slopes": [s.to_json() for s in self.slopes],
            "saddle_knot": self.saddle_knot,
            "leaves": [{"knot": k, "index": i, "vertex": v} for k, i, v in self.leaves],
            "boundary": [{"edge": e, "role": r} for e, r in self.boundary],
            "cable": list(self.cable) if self.cable is not None else None,
        }


def catalog_problems(b: FrhBlock):
    """Reasons a block is not a catalog entry for an ordinary manifold."""
    out = []
    if b.shape not in SHAPES:
        return [f"unknown shape {b.shape!r}"]
    n_leaves, n_tori = SHAPES[b.shape]
    if len(b.leaves) != n_leaves or b.n_boundary != n_tori:
        out.append(f"{b.shape} block needs {n_leaves} leaf knots and {n_tori} boundary tori")
    if len(b.slopes) != n_leaves:
        out.append(f"{b.shape} block needs {n_leaves} slopes")
    if any(s.p == 2 for s in b.slopes):
        out.append(EXCLUDED["half-slope"])
    if b.shape == TWO and any(s.p < 2 for s in b.slopes):
        out.append("two-leaf block needs two singular fibers")
    if b.knot_count != 4 - b.n_boundary:
        out.append(f"block holds {b.knot_count} knots, expected {4 - b.n_boundary}")
    if any(i not in (0, 2) for _, i, _ in b.leaves):
        out.append("leaf knots must have index 0 or 2")
    if b.cable is not None:
        if b.shape != ONE or b.slopes[0].p != 1:
            out.append("cable class on a block that is not T^2 x I")
        elif gcd(abs(b.cable[0]), abs(b.cable[1])) != 1:
            out.append(f"cable class {tuple(b.cable)} is not primitive")
    return out


def assign_sigma(pg, knots):
    """Bijection leaf vertex -> knot id for one piece.

    Leaves flanking a two-leaf saddle take the singular fibers first, sorted
    by slope; the remaining leaves take the remaining knots in id order.
    """
    knots = [k for k in knots if k.index != 1]
    if len(knots) != len(pg.leaves):
        raise Infeasible(f"piece {pg.piece}: {len(pg.leaves)} leaves for {len(knots)} knots",
                         "|S_i| = z_i")
    singular = sorted((k for k in knots if k.kind == SINGULAR),
                      key=lambda k: (slope_key(k.slope), k.id))
    if 2 * pg.y > len(singular):
        raise Infeasible(f"piece {pg.piece}: 2y = {2 * pg.y} > m = {len(singular)}", "2y <= m")
    flank = sorted(pg.flanking)
    sigma = dict(zip(flank, singular))
    used = {k.id for k in sigma.values()}
    rest = sorted((k for k in knots if k.id not in used), key=lambda k: k.id)
    others = [v for v in pg.leaves if v not in pg.flanking]
    sigma.update(zip(others, rest))
    return {v: k.id for v, k in sigma.items()}


def block_to_frh(L: GeneralizedGraph, block, link: IndexedLink) -> FrhBlock:
    saddle_knot = L.knot.get(block.saddle)
    leaves, slopes = [], []
    cable = None
    for v, _ in block.leaves:
        k = link.knot(L.knot[v])
        leaves.append((k.id, k.index, v))
        slopes.append(k.slope if k.kind == SINGULAR else REGULAR_SLOT)
        if k.kind == CABLED:
            cable = tuple(k.cable)
    shape = {0: PANTS, 1: ONE, 2: TWO}[len(leaves)]
    order = sorted(range(len(leaves)), key=lambda i: (slope_key(slopes[i]), leaves[i][0]))
    return FrhBlock(block.id, L.piece.get(block.saddle), shape,
                    tuple(slopes[i] for i in order), saddle_knot,
                    tuple(leaves[i] for i in order), tuple(block.ends), cable)


@dataclass
class FrhCertificate:
    lyapunov: GeneralizedGraph
    blocks: list                 # FrhBlock, sorted by id
    gluings: list                # (edge, from block, to block, jsj id or None)
    sigma: dict                  # piece -> {leaf vertex: knot id}
    order: list                  # block ids
    extra: dict = field(default_factory=dict)

    def block(self, bid) -> FrhBlock:
        for b in self.blocks:
            if b.id == bid:
                return b
        raise KeyError(bid)

    def ordered_blocks(self):
        return [self.block(b) for b in self.order]

    def piece_subgraph_betti(self, pid) -> int:
        return piece_betti(self.lyapunov, pid)

    def to_json(self):
        L = self.lyapunov
        verts = [{"id": v, "kind": classify(L, v), "knot": L.knot.get(v), "piece": L.piece.get(v)}
                 for v in sorted(L.vertices)]
        edges = []
        for e in sorted(L.edges):
            t, h = L.orientation.get(e, L.edges[e])
            edges.append({"id": e, "tail": t, "head": h, "jsj": L.jsj.get(e),
                          "piece": L.piece.get(e)})
        return {
            "format": FORMAT,
            "lyapunov": {"vertices": verts, "edges": edges},
            "blocks": [b.to_json() for b in self.blocks],
            "gluings": [{"edge": e, "from": a, "to": b, "jsj": j} for e, a, b, j in self.gluings],
            "sigma": {p: dict(sorted(s.items())) for p, s in sorted(self.sigma.items())},
            "order": list(self.order),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, ensure_ascii=False) + "\n"


def piece_betti(L: GeneralizedGraph, pid) -> int:
    verts = [v for v in L.vertices if L.piece.get(v) == pid]
    n_e = sum(1 for e in L.edges if L.piece.get(e) == pid)
    return n_e - len(verts) + 1


def piece_connected(L: GeneralizedGraph, pid) -> bool:
    sub = GeneralizedGraph(vertices={v for v in L.vertices if L.piece.get(v) == pid})
    sub.edges = {e: ab for e, ab in L.edges.items() if L.piece.get(e) == pid}
    return bool(sub.vertices) and is_connected(sub)


def _slope(obj):
    try:
        q, p = obj
        return Slope(int(q), int(p))
    except (TypeError, ValueError) as exc:
        raise MalformedInput(f"bad slope {obj!r}: {exc}") from exc


def certificate_from_json(data) -> FrhCertificate:
    try:
        if data.get("format") != FORMAT:
            raise MalformedInput(f"unknown certificate format {data.get('format')!r}")
        L = GeneralizedGraph()
        for v in data["lyapunov"]["vertices"]:
            L.vertices.add(v["id"])
            if v.get("knot") is not None:
                L.knot[v["id"]] = v["knot"]
            if v.get("piece") is not None:
                L.piece[v["id"]] = v["piece"]
        for e in data["lyapunov"]["edges"]:
            if e["id"] in L.edges or e["tail"] == e["head"]:
                raise MalformedInput(f"bad edge {e['id']!r}")
            L.edges[e["id"]] = (e["tail"], e["head"])
            L.orientation[e["id"]] = (e["tail"], e["head"])
            if e.get("jsj") is not None:
                L.jsj[e["id"]] = e["jsj"]
            if e.get("piece") is not None:
                L.piece[e["id"]] = e["piece"]
        bl = []
        for b in data["blocks"]:
            bl.append(FrhBlock(
                b["id"], b["piece"], b["shape"], tuple(_slope(s) for s in b["slopes"]),
                b["saddle_knot"],
                tuple((x["knot"], int(x["index"]), x["vertex"]) for x in b["leaves"]),
                tuple((x["edge"], x["role"]) for x in b["boundary"]),
                tuple(b["cable"]) if b.get("cable") is not None else None))
        gl = [(g["edge"], g["from"], g["to"], g.get("jsj")) for g in data["gluings"]]
        sigma = {p: dict(s) for p, s in data["sigma"].items()}
        return FrhCertificate(L, bl, gl, sigma, list(data["order"]))
    except (KeyError, TypeError, AttributeError) as exc:
        raise MalformedInput(f"malformed certificate: {exc!r}") from exc


def assemble_certificate(w: GraphManifold, l: IndexedLink, L, projection, sigma, order):
    """Collect blocks and gluings and check the per-piece invariants."""
    frh = sorted((block_to_frh(L, b, l) for b in blocks(L)), key=lambda b: b.id)
    gluings = [(e, t, h, L.jsj.get(e)) for e, t, h in block_edges(L)]
    cert = FrhCertificate(L, frh, gluings, {p: dict(s) for p, s in sigma.items()},
                          [b.id if not isinstance(b, str) else b for b in order])
    for p in w.pieces:
        mine = [b for b in frh if b.piece == p.id]
        have = Counter(s for b in mine for s in b.slopes if s.p >= 2)
        if have != Counter(singular_slopes(p)):
            raise AssemblyError(f"slope multiset mismatch in piece {p.id}", p.id)
        if piece_betti(L, p.id) != p.genus:
            raise AssemblyError(f"genus mismatch in piece {p.id}", p.id)
        internal = sum(1 for _, t, h, j in gluings if j is None and frh_piece(cert, t) == p.id)
        if sum(b.n_boundary for b in mine) - 2 * internal != p.boundary_count:
            raise AssemblyError(f"boundary count mismatch in piece {p.id}", p.id)
    return cert


def frh_piece(cert, bid):
    return cert.lyapunov.piece.get(bid)


def verify_certificate(w: GraphManifold, l: IndexedLink, c: FrhCertificate):
    """Independent check of a certificate; returns ``(ok, diagnostics)``."""
    diags = []

    def bad(code, msg, piece=None):
        diags.append(Diagnostic(code, msg, piece))

    L = c.lyapunov
    for p in validate_lyapunov(L):
        bad("lyapunov", p)
    if diags:
        return False, diags
    deg = L.degrees()
    known_pieces = set(w.piece_ids)
    for v in L.vertices:
        if L.piece.get(v) not in known_pieces:
            bad("projection", f"vertex {v} lies over no piece")
    for e, (a, b) in L.edges.items():
        if e in L.jsj:
            if e in L.piece:
                bad("projection", f"edge {e} lies over a torus and inside a piece")
        elif L.piece.get(e) is None or not (L.piece.get(a) == L.piece.get(b) == L.piece[e]):
            bad("projection", f"edge {e} is not inside a single piece")
    for je in w.edges:
        pre = [e for e, j in L.jsj.items() if j == je.id]
        if len(pre) != 1:
            bad("projection", f"torus {je.id} has {len(pre)} Lyapunov edges over it")
            continue
        a, b = L.edges[pre[0]]
        if sorted((L.piece.get(a), L.piece.get(b))) != sorted(je.ends):
            bad("projection", f"edge over torus {je.id} joins the wrong pieces")
        if deg[a] != 3 or deg[b] != 3:
            bad("projection", f"edge over torus {je.id} does not join two saddles")
    stray = set(L.jsj.values()) - {je.id for je in w.edges}
    if stray:
        bad("projection", f"edges over unknown tori {sorted(stray)}")
    if diags:
        return False, diags

    # blocks against the graph
    derived = {b.id: b for b in blocks(L)}
    ids = [b.id for b in c.blocks]
    if sorted(ids) != sorted(derived) or len(set(ids)) != len(ids):
        bad("blocks", "certificate blocks do not match the saddles of the Lyapunov graph")
        return False, diags
    used = Counter()
    for b in c.blocks:
        d = derived[b.id]
        for prob in catalog_problems(b):
            bad("catalog", f"block {b.id}: {prob}", b.piece)
        if sorted(v for v, _ in d.leaves) != sorted(v for _, _, v in b.leaves):
            bad("blocks", f"block {b.id} leaves differ from the graph", b.piece)
        if sorted(d.ends) != sorted(b.boundary):
            bad("blocks", f"block {b.id} boundary tori or roles differ from the graph", b.piece)
        if b.piece != L.piece.get(b.id):
            bad("blocks", f"block {b.id} lies in piece {L.piece.get(b.id)}", b.piece)
        knot_ids = [b.saddle_knot] + [k for k, _, _ in b.leaves]
        if L.knot.get(b.id) != b.saddle_knot:
            bad("knots", f"block {b.id} saddle knot differs from the graph label", b.piece)
        for k, i, v in b.leaves:
            if L.knot.get(v) != k:
                bad("knots", f"leaf {v} label differs from block {b.id}", b.piece)
        for kid in knot_ids:
            used[kid] += 1
            try:
                rec = l.knot(kid)
            except KeyError:
                bad("knots", f"block {b.id} uses unknown knot {kid!r}", b.piece)
                continue
            if rec.piece != b.piece:
                bad("knots", f"knot {kid} lies in {rec.piece}, block {b.id} in {b.piece}", b.piece)
            if kid == b.saddle_knot:
                if rec.index != 1:
                    bad("knots", f"saddle knot {kid} has index {rec.index}", b.piece)
        for (kid, idx, v), s in zip(b.leaves, b.slopes):
            try:
                rec = l.knot(kid)
            except KeyError:
                continue
            if rec.index != idx:
                bad("knots", f"knot {kid} has index {rec.index}, block says {idx}", b.piece)
            want = rec.slope if rec.kind == SINGULAR else REGULAR_SLOT
            if want != s:
                bad("knots", f"knot {kid} has slope {want}, block says {s}", b.piece)
            kind = L.leaf_kind(v)
            if (idx == 0 and kind != "sink") or (idx == 2 and kind != "source"):
                bad("sigma", f"leaf {v} is a {kind} but carries an index-{idx} knot", b.piece)
    for k in l.knots:
        if used[k.id] != 1:
            bad("knots", f"knot {k.id} is used {used[k.id]} times", k.piece)

    # per piece invariants
    gl_set = {(e, a, b_, j) for e, a, b_, j in c.gluings}
    want_gl = {(e, t, h, L.jsj.get(e)) for e, t, h in block_edges(L)}
    if gl_set != want_gl or len(c.gluings) != len(want_gl):
        bad("gluings", "gluings do not match the saddle-saddle edges")
    for p in w.pieces:
        mine = [b for b in c.blocks if b.piece == p.id]
        have = Counter(s for b in mine for s in b.slopes if s.p >= 2)
        if have != Counter(singular_slopes(p)):
            bad("slopes", "slope multiset mismatch", p.id)
        if not piece_connected(L, p.id):
            bad("genus", "piece subgraph is not connected", p.id)
        elif piece_betti(L, p.id) != p.genus:
            bad("genus", f"piece subgraph has β₁ = {piece_betti(L, p.id)}, genus is {p.genus}",
                p.id)
        internal = sum(1 for e, t, h, j in want_gl if j is None and L.piece.get(t) == p.id)
        if sum(b.n_boundary for b in mine) - 2 * internal != p.boundary_count:
            bad("boundary", "boundary arithmetic does not give b", p.id)
        _check_sigma(L, l, p, c.sigma.get(p.id, {}), bad)
    extra = set(c.sigma) - known_pieces
    if extra:
        bad("sigma", f"σ given for unknown pieces {sorted(extra)}")

    # order
    if sorted(c.order) != sorted(ids) or len(set(c.order)) != len(c.order):
        bad("order", "block order is not a permutation of the blocks")
    elif not order_respects_edges(L, c.order):
        bad("order", "block order is not a topological order")
    return not diags, diags


def _check_sigma(L, l, piece, sigma, bad):
    deg = L.degrees()
    leaves = sorted(v for v in L.vertices if deg[v] == 1 and L.piece.get(v) == piece.id)
    targets = sorted(k.id for k in l.in_piece(piece.id) if k.index != 1)
    if sorted(sigma) != leaves or sorted(sigma.values()) != targets:
        bad("sigma", "σ is not a bijection from leaves to index-0/2 knots", piece.id)
        return
    inc = L.incidence()
    for v, kid in sigma.items():
        if L.knot.get(v) != kid:
            bad("sigma", f"σ({v}) = {kid} but the graph says {L.knot.get(v)}", piece.id)
        (e,) = inc[v]
        s = L.other(e, v)
        flanked = sum(1 for f in inc[s] if deg[L.other(f, s)] == 1) == 2
        if flanked and l.knot(kid).kind != SINGULAR:
            bad("sigma", f"flanking leaf {v} is sent to a non-singular knot {kid}", piece.id)
