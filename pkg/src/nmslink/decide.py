"""Realization of related links and validation of presented links."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

from .diagnostics import Diagnostic, errors
from .errors import AlgorithmFailure, InvalidStep, NotRelated, UseBaseOnly
from .frh import assemble_certificate, assign_sigma, verify_certificate
from .link import REGULAR, SINGULAR, IndexedLink, KnotRecord, counts, is_jsj_related
from .lyagraph import build_piece_graph, glue_graphs, in_class_S, order_blocks, orient
from .manifold import GraphManifold, cycle_ports, validate_manifold
from .ops import fold_history


def _precheck(w, l):
    diags = validate_manifold(w)
    if diags:
        raise NotRelated("manifold is not well formed", diags)
    related, diags = is_jsj_related(w, l)
    if not related:
        raise NotRelated("link is not related to the JSJ decomposition", diags)


def piece_graphs(w: GraphManifold, l: IndexedLink):
    """Labeled piece graphs: saddles carry index-1 knots, leaves carry σ."""
    out, sigmas = [], {}
    for p in w.pieces:
        c = counts(w, l, p.id)
        ports = None
        if p.genus == 0 and p.boundary_count >= 2:
            ports = cycle_ports(w, p.id)
        pg = build_piece_graph(p, c, w.incident_edges(p.id), ports)
        g = pg.graph
        knots = l.in_piece(p.id)
        for v, kid in zip(pg.saddles, sorted(k.id for k in knots if k.index == 1)):
            g.knot[v] = kid
        sigma = assign_sigma(pg, knots)
        for v, kid in sigma.items():
            g.knot[v] = kid
            e = g.leaf_edge(v)
            s = g.other(e, v)
            g.orientation[e] = (s, v) if l.knot(kid).index == 0 else (v, s)
        out.append(pg)
        sigmas[p.id] = sigma
    return out, sigmas


def realize(w: GraphManifold, l: IndexedLink):
    """Build and verify an FRH certificate for a related base link."""
    if l.history:
        raise UseBaseOnly("realize takes a base link; use is_realizable for histories")
    _precheck(w, l)
    pgs, sigmas = piece_graphs(w, l)
    L, projection = glue_graphs(pgs, w)
    ok, witness = in_class_S(L)
    if not ok:
        raise AlgorithmFailure(f"glued graph is not in class S: {witness}")
    L = orient(L)
    order = order_blocks(L)
    cert = assemble_certificate(w, l, L, projection, sigmas, order)
    ok, diags = verify_certificate(w, l, cert)
    if not ok:
        raise AlgorithmFailure("realized certificate failed verification: "
                               + "; ".join(str(d) for d in diags))
    return cert


@dataclass
class Realizability:
    ok: bool
    certificate: object = None
    state: object = None
    diagnostics: list = field(default_factory=list)

    def __bool__(self):
        return self.ok


def is_realizable(w: GraphManifold, l: IndexedLink) -> Realizability:
    """Check a presented link: a related base plus a validating history."""
    base = l.base()
    diags = validate_manifold(w)
    if diags:
        return Realizability(False, diagnostics=diags)
    related, diags = is_jsj_related(w, base)
    if not related:
        return Realizability(False, diagnostics=diags)
    try:
        state = fold_history(w, l)
    except InvalidStep as exc:
        return Realizability(False, diagnostics=[
            Diagnostic(exc.code, f"{exc.path}: {exc}")])
    return Realizability(True, realize(w, base), state, diags)


def _min_saddles(p):
    return max(1, p.m + p.boundary_count + 2 * p.genus - 2)


def _piece_links(p, x, n_regular):
    """All index assignments for one piece, up to swapping equal knots."""
    groups = []
    for s in sorted(set(p.slopes)):
        if s.singular:
            groups.append((s, sum(1 for t in p.slopes if t == s)))
    choices = [range(c + 1) for _, c in groups] + [range(n_regular + 1)]
    for pick in product(*choices):
        knots = []
        j = 0
        for (s, c), n0 in zip(groups, pick):
            for t in range(c):
                j += 1
                knots.append(KnotRecord(f"{p.id}.s{j}", p.id, 0 if t < n0 else 2, SINGULAR, s))
        n0 = pick[-1]
        for t in range(n_regular):
            knots.append(KnotRecord(f"{p.id}.r{t + 1}", p.id, 0 if t < n0 else 2, REGULAR))
        for t in range(x):
            knots.append(KnotRecord(f"{p.id}.x{t + 1}", p.id, 1, REGULAR))
        yield knots


def _x_vectors(w, max_saddles):
    pieces = list(w.pieces)
    mins = [_min_saddles(p) for p in pieces]

    def rec(i, left):
        if i == len(pieces):
            yield ()
            return
        rest = sum(mins[i + 1:])
        for x in range(mins[i], left - rest + 1):
            for tail in rec(i + 1, left - x):
                yield (x,) + tail

    for total in range(sum(mins), max_saddles + 1):
        for vec in rec(0, total):
            if sum(vec) == total:
                yield vec


def enumerate_links(w: GraphManifold, max_saddles: int):
    """Related base links with at most ``max_saddles`` index-1 knots.

    Knots of the same kind, slope and index in one piece are interchangeable,
    so each multiset of index assignments appears once.
    """
    for vec in _x_vectors(w, max_saddles):
        per_piece = []
        for p, x in zip(w.pieces, vec):
            z = x - 2 * p.genus + 2 - p.boundary_count
            n_regular = z - p.m
            if n_regular < 0:
                break
            per_piece.append(list(_piece_links(p, x, n_regular)))
        else:
            for combo in product(*per_piece):
                l = IndexedLink(tuple(k for knots in combo for k in knots))
                related, _ = is_jsj_related(w, l)
                if related:
                    yield l


__all__ = ["realize", "is_realizable", "enumerate_links", "piece_graphs", "Realizability",
           "errors"]
