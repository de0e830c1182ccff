"""Symbolic indexed links on graph manifolds.

A link is a base list of fiber records, one per component, plus an ordered
operation history.  Base records never carry geometry: a knot is a singular
fiber (identified by its slope), a regular fiber, or, after the change of
regular fibers, a member of a cabled pair.
"""
from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from math import gcd

from .diagnostics import Diagnostic
from .errors import NotFound, UseBaseOnly
from .manifold import GraphManifold, component_pieces_after_cut, is_ordinary, separating_edges
from .seifert import Slope, singular_slopes

SINGULAR = "singular"
REGULAR = "regular"
CABLED = "cabled"
KINDS = (SINGULAR, REGULAR, CABLED)


@dataclass(frozen=True)
class KnotRecord:
    id: str
    piece: str
    index: int
    kind: str = REGULAR
    slope: Slope | None = None
    cable: tuple | None = None

    def __post_init__(self):
        if self.index not in (0, 1, 2):
            raise ValueError(f"knot {self.id}: index must be 0, 1 or 2")
        if self.kind not in KINDS:
            raise ValueError(f"knot {self.id}: unknown kind {self.kind!r}")
        if self.kind == SINGULAR and self.slope is None:
            raise ValueError(f"knot {self.id}: singular fiber needs a slope")
        if self.kind == CABLED:
            if self.cable is None or gcd(abs(self.cable[0]), abs(self.cable[1])) != 1:
                raise ValueError(f"knot {self.id}: cabled pair needs a primitive class")


@dataclass(frozen=True)
class IndexedLink:
    knots: tuple
    history: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "knots", tuple(self.knots))
        object.__setattr__(self, "history", tuple(self.history))

    def knot(self, kid) -> KnotRecord:
        for k in self.knots:
            if k.id == kid:
                return k
        raise NotFound(kid)

    def in_piece(self, pid):
        return [k for k in self.knots if k.piece == pid]

    def base(self) -> "IndexedLink":
        return IndexedLink(self.knots)


@dataclass(frozen=True)
class PieceCounts:
    x: int
    z: int
    m: int
    y: int = 0


def counts(w: GraphManifold, l: IndexedLink, pid) -> PieceCounts:
    if l.history:
        raise UseBaseOnly("counts are defined on base links only")
    piece = w.piece(pid)
    recs = l.in_piece(pid)
    x = sum(1 for k in recs if k.index == 1)
    return PieceCounts(x=x, z=len(recs) - x, m=len(singular_slopes(piece)))


def claim_diagnostics(w: GraphManifold, l: IndexedLink):
    """Necessary inequalities that every related link satisfies.

    These are consequences of the three defining conditions; they are reported
    separately so that a failure of the defining conditions can be explained
    in more familiar terms.
    """
    diags = []
    total_z = 0
    for p in w.pieces:
        c = counts(w, l, p.id)
        g, b = p.genus, p.boundary_count
        total_z += c.z

        def fire(code, msg):
            diags.append(Diagnostic(code, msg, p.id, severity="claim"))

        if b + c.z < 2:
            fire("claim.b+z>=2", f"b+z = {b + c.z} < 2")
        if c.m > c.z:
            fire("claim.m<=z", f"m = {c.m} > z = {c.z}")
        if c.x < 1:
            fire("claim.x>=1", "no index-1 knot")
        if (b == 0 or g >= 1) and c.x < 2:
            fire("claim.x>=2", f"x = {c.x} < 2 with b={b}, g={g}")
        if g == 0 and b == 0 and c.m < 4:
            fire("claim.m>=4", f"closed genus-0 piece with m = {c.m} < 4")
        if g == 0 and b == 1 and c.m < 2:
            fire("claim.m>=2", f"genus-0 piece with one boundary torus and m = {c.m} < 2")
    if total_z < 2:
        diags.append(Diagnostic("claim.sum-z>=2", f"sum of z is {total_z} < 2", severity="claim"))
    return diags


def _structure_diagnostics(w: GraphManifold, l: IndexedLink):
    diags = []
    ids = Counter(k.id for k in l.knots)
    for kid, n in ids.items():
        if n > 1:
            diags.append(Diagnostic("duplicate-knot", f"knot id {kid!r} used {n} times"))
    known = set(w.piece_ids)
    for k in l.knots:
        if k.piece not in known:
            diags.append(Diagnostic("unknown-piece", f"knot {k.id} lies in unknown piece {k.piece!r}"))
    return diags


def is_jsj_related(w: GraphManifold, l: IndexedLink):
    """Decide whether a base link is related to the JSJ decomposition of ``w``.

    Returns ``(related, diagnostics)``.  Diagnostics with severity ``error``
    name the failing condition; those with severity ``claim`` report the
    derived inequalities and can only appear alongside an error.
    """
    if l.history:
        raise UseBaseOnly("relatedness is defined on base links; use decide.is_realizable")
    diags = _structure_diagnostics(w, l)
    if diags:
        return False, diags
    ordinary, odiags = is_ordinary(w)
    if not ordinary:
        return False, [d for d in odiags if d.severity == "error"]

    # condition (1)
    indices = {k.index for k in l.knots}
    if 0 not in indices:
        diags.append(Diagnostic("condition-1", "link has no index-0 knot"))
    if 2 not in indices:
        diags.append(Diagnostic("condition-1", "link has no index-2 knot"))
    z_by_piece = Counter(k.piece for k in l.knots if k.index != 1)
    for eid in sorted(separating_edges(w)):
        cut = component_pieces_after_cut(w, eid)
        for side in cut.sides:
            if not any(z_by_piece[pid] for pid in side):
                diags.append(Diagnostic(
                    "condition-1",
                    f"side {sorted(side)} of separating torus {eid} has no index-0/2 knot"))

    # condition (2)
    for p in w.pieces:
        recs = l.in_piece(p.id)
        want = Counter(singular_slopes(p))
        have = Counter()
        for k in recs:
            if k.kind == SINGULAR:
                if k.slope is None or not k.slope.singular:
                    diags.append(Diagnostic("condition-2", f"singular fiber {k.id} has slope {k.slope}", p.id))
                    continue
                have[k.slope] += 1
                if k.index not in (0, 2):
                    diags.append(Diagnostic(
                        "condition-2", f"singular fiber {k.id} has index {k.index}", p.id))
            elif k.kind != REGULAR:
                diags.append(Diagnostic("condition-2", f"knot {k.id} is not a fiber", p.id))
        if have != want:
            missing = want - have
            extra = have - want
            parts = []
            if missing:
                parts.append("missing " + ", ".join(str(s) for s in sorted(missing.elements())))
            if extra:
                parts.append("unexpected " + ", ".join(str(s) for s in sorted(extra.elements())))
            diags.append(Diagnostic("condition-2", "singular fibers do not match: " + "; ".join(parts), p.id))

    # condition (3)
    for p in w.pieces:
        c = counts(w, l, p.id)
        g, b = p.genus, p.boundary_count
        if c.z + b != c.x - 2 * g + 2:
            diags.append(Diagnostic(
                "condition-3",
                f"condition (3) violated: {c.z}+{b} ≠ {c.x}−{2 * g}+2", p.id))

    related = not diags
    claims = claim_diagnostics(w, l)
    if related:
        if claims:
            raise AssertionError(f"claim inequalities fired on a related link: {claims}")
        _assert_summed_identity(w, l)
    return related, diags + claims


def _assert_summed_identity(w, l):
    sz = sum(counts(w, l, p.id).z for p in w.pieces)
    sx = sum(counts(w, l, p.id).x for p in w.pieces)
    sg = sum(p.genus for p in w.pieces)
    if sz + 2 * len(w.edges) != sx - 2 * sg + 2 * len(w.pieces):
        raise AssertionError("summed counting identity failed")


def knots_by_piece(l: IndexedLink):
    out = defaultdict(list)
    for k in l.knots:
        out[k.piece].append(k)
    return out


def resolve_history(w: GraphManifold, l: IndexedLink):
    """Fold the history over the base link; see ``ops.fold_history``."""
    from .ops import fold_history

    return fold_history(w, l)
