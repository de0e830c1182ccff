"""Operation A, the S^3 link grammar, torus sets and changing regular fibers.

Knot geometry is symbolic.  Every knot of a link state carries an expression
tree built from these nodes::

    ("fiber", piece, "q/p")      singular fiber
    ("regular", piece)           regular fiber
    ("torus", a, b, piece)       member of a cabled pair of (a, b) torus knots
    ("unknot",)
    ("sum", e1, e2)              connected sum
    ("meridian", e)
    ("cable", p, q, e)           (p, q)-cable of e

S^3 indexed links are generated from the seeds in ``SEEDS`` by Operation A
itself.  The seed table is deliberately a plain dict so further seeds can be
registered.
"""
from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from math import gcd

from .errors import AlgorithmFailure, InvalidClass, InvalidStep, InvalidTarget, MalformedInput
from .link import CABLED, SINGULAR, IndexedLink
from .lyagraph import GeneralizedGraph, in_class_S
from .manifold import GraphManifold
from .seifert import singular_slopes

# name -> ((knot id, index), ...); all seed knots are unknots
SEEDS = {"HopfNS": (("a", 0), ("r", 2))}

VARIANTS = ("I", "II", "III", "IV", "V", "VI", "VII", "change")
S3_VARIANTS = ("I", "II", "III", "IV", "V")
SIMPLIFY_SUMS = False


@dataclass(frozen=True)
class StateKnot:
    id: str
    index: int
    expr: tuple
    piece: str | None = None
    kind: str = "s3"


@dataclass(frozen=True)
class LinkState:
    knots: tuple
    n_steps: int = 0
    changed: bool = False

    def knot(self, kid):
        for k in self.knots:
            if k.id == kid:
                return k
        return None

    def indices(self) -> Counter:
        return Counter(k.index for k in self.knots)

    def __len__(self):
        return len(self.knots)

    def multiset(self) -> Counter:
        return Counter((k.expr, k.index) for k in self.knots)


def base_expr(k) -> tuple:
    if k.kind == SINGULAR:
        return ("fiber", k.piece, str(k.slope))
    if k.kind == CABLED:
        return ("torus", k.cable[0], k.cable[1], k.piece)
    return ("regular", k.piece)


def state_from_link(l: IndexedLink) -> LinkState:
    return LinkState(tuple(StateKnot(k.id, k.index, base_expr(k), k.piece, k.kind)
                           for k in l.knots))


def seed_state(name, prefix="") -> LinkState:
    if name not in SEEDS:
        raise InvalidStep(f"unknown seed {name!r}", "unknown-seed")
    return LinkState(tuple(StateKnot(prefix + kid, idx, ("unknot",)) for kid, idx in SEEDS[name]))


@dataclass(frozen=True)
class S3Expr:
    """Either a seed, or ``step`` applied to the S^3 link ``inner``."""
    seed: str | None = None
    inner: "S3Expr | None" = None
    step: "OperationStep | None" = None

    def to_json(self):
        if self.seed is not None:
            return {"seed": self.seed}
        return {"apply": self.step.to_json(), "to": self.inner.to_json()}


HOPF = S3Expr(seed="HopfNS")


@dataclass(frozen=True)
class OperationStep:
    variant: str
    s3: S3Expr | None = None
    own: str | None = None
    other: str | None = None
    result_index: int | None = None
    p: int | None = None
    q: int | None = None
    core_index: int | None = None
    cable_index: int | None = None
    torus_set: "TorusSet | None" = None
    cables: dict | None = None
    tag: str | None = None

    def to_json(self):
        out = {"op": self.variant}
        if self.variant == "change":
            out["torus_set"] = self.torus_set.to_json() if self.torus_set is not None else None
            out["cables"] = [{"block": b, "class": list(c)}
                             for b, c in sorted((self.cables or {}).items())]
        else:
            for key, val in (("s3", self.s3.to_json() if self.s3 is not None else None),
                             ("own", self.own), ("other", self.other),
                             ("index", self.result_index), ("p", self.p), ("q", self.q),
                             ("core", self.core_index), ("cable", self.cable_index)):
                if val is not None:
                    out[key] = val
        if self.tag is not None:
            out["tag"] = self.tag
        return out


def step_from_json(d) -> OperationStep:
    if not isinstance(d, dict) or "op" not in d:
        raise MalformedInput(f"history step must be an object with 'op': {d!r}")
    op = d["op"]
    if op == "change":
        ts = d.get("torus_set")
        cables = {}
        for c in d.get("cables", []):
            a, b = c["class"]
            cables[c["block"]] = (int(a), int(b))
        return OperationStep("change", torus_set=torus_set_from_json(ts) if ts else None,
                             cables=cables, tag=d.get("tag"))
    s3 = d.get("s3")
    return OperationStep(op, s3=s3_from_json(s3) if s3 is not None else None,
                         own=d.get("own"), other=d.get("other"), result_index=d.get("index"),
                         p=d.get("p"), q=d.get("q"), core_index=d.get("core"),
                         cable_index=d.get("cable"), tag=d.get("tag"))


def s3_from_json(d) -> S3Expr:
    if not isinstance(d, dict):
        raise MalformedInput(f"S^3 expression must be an object: {d!r}")
    if "seed" in d:
        return S3Expr(seed=d["seed"])
    try:
        return S3Expr(inner=s3_from_json(d["to"]), step=step_from_json(d["apply"]))
    except KeyError as exc:
        raise MalformedInput(f"S^3 expression needs 'apply' and 'to': {d!r}") from exc


# ---------------------------------------------------------------------------
# step validation and application

def _fail(code, msg, path=None):
    return False, code, msg if path is None else f"{path}: {msg}"


def _eval_operand(step, tag):
    """Evaluate the S^3 operand with ids prefixed by the step tag.

    The operand is evaluated standalone, so its knot ids (the ones ``other``
    refers to) are exactly those of ``eval_s3(step.s3)``.
    """
    try:
        l2 = eval_s3(step.s3)
    except InvalidStep as exc:
        raise InvalidStep(str(exc), "s3-invalid", f"{tag}.{exc.path}") from exc
    return LinkState(tuple(StateKnot(f"{tag}/{k.id}", k.index, k.expr) for k in l2.knots))


def check_step(w, state: LinkState, step: OperationStep, base=None, tag=None):
    """Return ``(ok, reason code, message)`` for one step against a state."""
    tag = tag or step.tag or f"h{state.n_steps}"
    v = step.variant
    if v not in VARIANTS:
        return _fail("unknown-variant", f"unknown operation {v!r}")
    if v == "change":
        return _check_change(w, state, step, base)
    if v in S3_VARIANTS:
        if step.s3 is None:
            return _fail("missing-param", f"operation {v} needs an S^3 link")
        try:
            l2 = _eval_operand(step, tag)
        except InvalidStep as exc:
            return False, "s3-invalid", f"{exc.path}: {exc}"
    k1 = k2 = None
    if v in ("III", "IV", "V", "VI", "VII"):
        if step.own is None:
            return _fail("missing-param", f"operation {v} needs a knot of the current link")
        k1 = state.knot(step.own)
        if k1 is None:
            return _fail("unknown-knot", f"no knot {step.own!r} in the current link")
        if k1.index not in (0, 2):
            return _fail("bad-index", f"knot {k1.id} has index {k1.index}, need 0 or 2")
    if v in ("II", "IV", "V"):
        if step.other is None:
            return _fail("missing-param", f"operation {v} needs a knot of the S^3 link")
        k2 = l2.knot(f"{tag}/{step.other}")
        if k2 is None:
            return _fail("unknown-knot", f"no knot {step.other!r} in the S^3 link")
        if k2.index not in (0, 2):
            return _fail("bad-index", f"S^3 knot {step.other} has index {k2.index}, need 0 or 2")
    if v == "IV" and k1.index != 2 - k2.index:
        return _fail("index-mismatch", f"Ind(k1)={k1.index} but 2-Ind(k2)={2 - k2.index}")
    if v == "V" and step.result_index not in (k1.index, k2.index):
        return _fail("bad-result-index",
                     f"sum index {step.result_index} is neither {k1.index} nor {k2.index}")
    if v == "VI":
        if step.p is None or step.q is None:
            return _fail("missing-param", "operation VI needs (p, q)")
        if step.p < 1:
            return _fail("bad-p", f"cable parameter p={step.p} must be at least 1")
        if gcd(step.p, step.q) != 1:
            return _fail("not-coprime", f"gcd({step.p}, {step.q}) != 1")
        c, c2 = step.core_index, step.cable_index
        if c not in (0, 2) or c2 not in (0, 2) or k1.index not in (c, c2):
            return _fail("bad-cable-index",
                         f"core/cable indices ({c}, {c2}) must be 0/2 with one equal to {k1.index}")
    if v == "VII":
        if step.q is None:
            return _fail("missing-param", "operation VII needs q")
        if step.q % 2 == 0:
            return _fail("q-even", f"(2,{step.q})-cable needs q odd")
    return True, None, None


def validate_step(w, state: LinkState, step: OperationStep, base=None):
    """Return ``(ok, reason)``; reason is a ``(code, message)`` pair or None."""
    ok, code, msg = check_step(w, state, step, base)
    return ok, None if ok else (code, msg)


def _check_change(w, state, step, base):
    if state.changed:
        return _fail("change-repeated", "fibers may be changed at most once")
    if state.n_steps > 0:
        return _fail("change-not-first", "changing regular fibers must be the first step")
    if step.torus_set is None or base is None or w is None:
        return _fail("invalid-torus-set", "changing fibers needs a torus set for the base link")
    ok, reasons = check_torus_set(w, base, step.torus_set)
    if not ok:
        return _fail("invalid-torus-set", "; ".join(reasons))
    try:
        _change_targets(step.torus_set, base, step.cables or {})
    except InvalidStep as exc:
        return False, exc.code, str(exc)
    return True, None, None


def _sum(e1, e2):
    if SIMPLIFY_SUMS:
        if e1 == ("unknot",):
            return e2
        if e2 == ("unknot",):
            return e1
    return ("sum", e1, e2)


def apply_op_a(state: LinkState, step: OperationStep, w=None, base=None, tag=None) -> LinkState:
    tag = tag or step.tag or f"h{state.n_steps}"
    ok, code, msg = check_step(w, state, step, base, tag)
    if not ok:
        raise InvalidStep(msg, code, tag)
    v = step.variant
    if v == "change":
        return apply_change_fibers(state, step.torus_set, step.cables or {}, base)
    knots = list(state.knots)
    u = StateKnot(f"{tag}/u", 1, ("unknot",))
    if v in S3_VARIANTS:
        l2 = list(_eval_operand(step, tag).knots)
    k1 = state.knot(step.own) if step.own is not None else None
    k2 = None
    if step.other is not None and v in S3_VARIANTS:
        k2 = next(k for k in l2 if k.id == f"{tag}/{step.other}")
    if v == "I":
        new = knots + l2 + [u]
    elif v == "II":
        new = knots + [k for k in l2 if k is not k2] + [u]
    elif v == "III":
        new = [k for k in knots if k is not k1] + l2 + [u]
    elif v == "IV":
        new = [k for k in knots if k is not k1] + [k for k in l2 if k is not k2] + [u]
    elif v == "V":
        s = StateKnot(f"{tag}/sum", step.result_index, _sum(k1.expr, k2.expr))
        mer = StateKnot(f"{tag}/m", 1, ("meridian", s.expr))
        new = ([k for k in knots if k is not k1] + [k for k in l2 if k is not k2] + [s, mer])
    elif v == "VI":
        core = StateKnot(f"{tag}/core", step.core_index, k1.expr)
        c1 = StateKnot(f"{tag}/c1", step.cable_index, ("cable", step.p, step.q, k1.expr))
        c2 = StateKnot(f"{tag}/c2", 1, ("cable", step.p, step.q, k1.expr))
        new = [k for k in knots if k is not k1] + [core, c1, c2]
    else:  # VII
        core = StateKnot(f"{tag}/core", 1, k1.expr)
        c1 = StateKnot(f"{tag}/c1", k1.index, ("cable", 2, step.q, k1.expr))
        new = [k for k in knots if k is not k1] + [core, c1]
    ids = Counter(k.id for k in new)
    if any(n > 1 for n in ids.values()):
        raise InvalidStep(f"step {tag} would reuse a knot id", "duplicate-id", tag)
    return LinkState(tuple(new), state.n_steps + 1, state.changed)


def eval_s3(e: S3Expr, path="s3") -> LinkState:
    """Fold an S^3 expression to its knot multiset."""
    if e is None:
        raise InvalidStep("missing S^3 expression", "missing-param", path)
    if e.seed is not None:
        try:
            return seed_state(e.seed)
        except InvalidStep as exc:
            raise InvalidStep(str(exc), exc.code, path) from exc
    if e.inner is None or e.step is None:
        raise InvalidStep("malformed S^3 expression", "missing-param", path)
    if e.step.variant == "change":
        raise InvalidStep("fibers cannot be changed in S^3", "unknown-variant", path)
    inner = eval_s3(e.inner, path + ".to")
    tag = e.step.tag or path
    ok, code, msg = check_step(None, inner, e.step, tag=tag)
    if not ok:
        raise InvalidStep(msg, code, path)
    out = apply_op_a(inner, e.step, tag=tag)
    idx = out.indices()
    if not (idx[0] and idx[2]):
        raise AlgorithmFailure(f"S^3 link at {path} lost its index-0 or index-2 knot")
    return out


def count_delta(step: OperationStep, l2_size: int | None = None) -> int:
    """Knot-count change of a step: |l2|+1, |l2|, |l2|, |l2|-1, |l2|, 2, 1."""
    v = step.variant
    if v in S3_VARIANTS:
        n = l2_size if l2_size is not None else len(eval_s3(step.s3))
        return {"I": n + 1, "II": n, "III": n, "IV": n - 1, "V": n}[v]
    return {"VI": 2, "VII": 1, "change": 0}[v]


def fold_history(w: GraphManifold, l: IndexedLink):
    """Apply the history of ``l`` to its base; raises InvalidStep on the
    first step that does not validate, with ``path`` naming it."""
    base = l.base()
    state = state_from_link(base)
    for i, step in enumerate(l.history):
        tag = step.tag or f"h{i}"
        ok, code, msg = check_step(w, state, step, base, tag)
        if not ok:
            raise InvalidStep(msg, code, f"history[{i}]")
        state = apply_op_a(state, step, w, base, tag)
        if step.variant == "change":
            state = LinkState(state.knots, state.n_steps, True)
    return state


# ---------------------------------------------------------------------------
# torus sets

@dataclass(frozen=True)
class TsBlock:
    id: str          # the saddle knot
    piece: str
    leaves: tuple    # knot ids with index 0 or 2


@dataclass(frozen=True)
class TorusSet:
    blocks: tuple
    tori: tuple      # (torus id, block, block, JSJ id or None)

    def block(self, bid):
        for b in self.blocks:
            if b.id == bid:
                return b
        raise KeyError(bid)

    def n_boundary(self, bid) -> int:
        return sum((a == bid) + (b == bid) for _, a, b, _ in self.tori)

    def shape(self, bid) -> str:
        return ("pants", "one", "two", "three")[len(self.block(bid).leaves)]

    def t2i_blocks(self, l: IndexedLink):
        """Blocks that are T^2 x I: one boundary-parallel regular leaf."""
        out = []
        for b in self.blocks:
            if len(b.leaves) == 1 and l.knot(b.leaves[0]).kind != SINGULAR:
                out.append(b.id)
        return sorted(out)

    def to_json(self):
        return {"blocks": [{"id": b.id, "piece": b.piece, "leaves": list(b.leaves)}
                           for b in self.blocks],
                "tori": [{"id": t, "blocks": [a, b], "jsj": j} for t, a, b, j in self.tori]}


def torus_set_from_json(d) -> TorusSet:
    try:
        bl = tuple(TsBlock(b["id"], b["piece"], tuple(b["leaves"])) for b in d["blocks"])
        tori = tuple((t["id"], t["blocks"][0], t["blocks"][1], t.get("jsj")) for t in d["tori"])
    except (KeyError, TypeError, IndexError) as exc:
        raise MalformedInput(f"malformed torus set: {exc!r}") from exc
    return TorusSet(bl, tori)


def torus_set_from_certificate(cert) -> TorusSet:
    """The torus set induced by a realization: one block per saddle."""
    bl = tuple(TsBlock(b.saddle_knot, b.piece, tuple(sorted(k for k, _, _ in b.leaves)))
               for b in cert.blocks)
    names = {b.id: b.saddle_knot for b in cert.blocks}
    tori = tuple((e, names[t], names[h], j) for e, t, h, j in cert.gluings)
    return _sorted_ts(TorusSet(bl, tori))


def _sorted_ts(ts):
    return TorusSet(tuple(sorted(ts.blocks, key=lambda b: b.id)),
                    tuple(sorted(ts.tori, key=lambda t: t[0])))


def check_torus_set(w: GraphManifold, l: IndexedLink, ts: TorusSet):
    """Independent check of the four torus-set conditions.

    Returns ``(ok, reasons)``.  Separation is tested by deleting each torus
    and recomputing components from scratch.
    """
    reasons = []
    try:
        knots = {k.id: k for k in l.knots}
        bids = [b.id for b in ts.blocks]
        if len(set(bids)) != len(bids):
            reasons.append("duplicate block ids")
        used = Counter()
        for b in ts.blocks:
            k = knots.get(b.id)
            if k is None or k.index != 1:
                reasons.append(f"block {b.id}: saddle knot must be an index-1 knot of the link")
            for kid in (b.id,) + tuple(b.leaves):
                used[kid] += 1
                if kid in knots and knots[kid].piece != b.piece:
                    reasons.append(f"knot {kid} is not in piece {b.piece}")
            for kid in b.leaves:
                if kid not in knots or knots[kid].index not in (0, 2):
                    reasons.append(f"block {b.id}: leaf {kid} must be an index-0/2 knot")
            n = ts.n_boundary(b.id)
            if 1 + len(b.leaves) != 4 - n:
                reasons.append(f"block {b.id} holds {1 + len(b.leaves)} knots, expected {4 - n}")
            if len(b.leaves) == 2 and not all(
                    kid in knots and knots[kid].kind == SINGULAR for kid in b.leaves):
                reasons.append(f"block {b.id}: two-leaf block must hold two singular fibers")
            for kid in b.leaves:
                if kid in knots and knots[kid].kind == SINGULAR and knots[kid].slope.p == 2:
                    reasons.append(f"block {b.id}: slope {knots[kid].slope} is not allowed")
        for kid in knots:
            if used[kid] != 1:
                reasons.append(f"knot {kid} is in {used[kid]} blocks")
        for kid in used:
            if kid not in knots:
                reasons.append(f"unknown knot {kid}")
        if reasons:
            return False, reasons
        piece_of = {b.id: b.piece for b in ts.blocks}
        tids = [t for t, _, _, _ in ts.tori]
        if len(set(tids)) != len(tids):
            reasons.append("duplicate torus ids")
        jsj_seen = Counter()
        for t, a, b, j in ts.tori:
            if a not in piece_of or b not in piece_of:
                reasons.append(f"torus {t} bounds an unknown block")
                continue
            if a == b:
                reasons.append(f"torus {t} bounds block {a} on both sides")
            if j is None:
                if piece_of[a] != piece_of[b]:
                    reasons.append(f"torus {t} crosses pieces but is not a JSJ torus")
            else:
                jsj_seen[j] += 1
                try:
                    je = w.edge(j)
                except KeyError:
                    reasons.append(f"torus {t} names unknown JSJ torus {j}")
                    continue
                if sorted((piece_of[a], piece_of[b])) != sorted(je.ends):
                    reasons.append(f"torus {t} does not sit over JSJ torus {j}")
        for je in w.edges:
            if jsj_seen[je.id] != 1:
                reasons.append(f"JSJ torus {je.id} appears {jsj_seen[je.id]} times")
        if reasons:
            return False, reasons
        for p in w.pieces:
            mine = [b for b in ts.blocks if b.piece == p.id]
            have = Counter(knots[k].slope for b in mine for k in b.leaves
                           if knots[k].kind == SINGULAR)
            if have != Counter(singular_slopes(p)):
                reasons.append(f"piece {p.id}: singular fibers do not match")
            internal = [(a, b) for t, a, b, j in ts.tori if j is None and piece_of[a] == p.id]
            comps = _comps([b.id for b in mine], internal)
            if len(comps) != 1:
                reasons.append(f"piece {p.id}: blocks are not connected")
            elif len(internal) - len(mine) + 1 != p.genus:
                reasons.append(f"piece {p.id}: β₁ = {len(internal) - len(mine) + 1} != g")
        has02 = {b.id: bool(b.leaves) for b in ts.blocks}
        pairs = [(a, b) for _, a, b, _ in ts.tori]
        for i, (t, _, _, _) in enumerate(ts.tori):
            comps = _comps(bids, pairs[:i] + pairs[i + 1:])
            if len(comps) > 1:
                for c in comps:
                    if not any(has02[x] for x in c):
                        reasons.append(f"separating torus {t} has no index-0/2 knot on one side")
                        break
    except (KeyError, AttributeError, TypeError) as exc:
        reasons.append(f"malformed torus set: {exc!r}")
    return not reasons, reasons


def _comps(nodes, pairs):
    adj = defaultdict(list)
    for a, b in pairs:
        adj[a].append(b)
        adj[b].append(a)
    seen, comps = set(), []
    for s in nodes:
        if s in seen:
            continue
        comp, stack = {s}, [s]
        seen.add(s)
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    comp.add(v)
                    stack.append(v)
        comps.append(comp)
    return comps


def _canon(n, edges, colors):
    """Canonical form of a vertex-colored multigraph on range(n).

    Color refinement followed by individualization of each vertex of the
    first non-trivial cell; the least labeling over the search tree wins.
    """
    nbrs = defaultdict(list)
    for a, b in edges:
        nbrs[a].append(b)
        nbrs[b].append(a)
    palette = sorted(set(colors))
    start = [palette.index(c) for c in colors]

    def refine(rank):
        while True:
            sig = [(rank[i], tuple(sorted(rank[j] for j in nbrs[i]))) for i in range(n)]
            order = sorted(set(sig))
            new = [order.index(s) for s in sig]
            if len(order) == len(set(rank)):
                return new
            rank = new

    best = None

    def search(rank):
        nonlocal best
        rank = refine(rank)
        cells = defaultdict(list)
        for i in range(n):
            cells[rank[i]].append(i)
        split = next((r for r in sorted(cells) if len(cells[r]) > 1), None)
        if split is None:
            seq = sorted(range(n), key=lambda i: rank[i])
            pos = {v: i for i, v in enumerate(seq)}
            key = (tuple(colors[v] for v in seq),
                   tuple(sorted(tuple(sorted((pos[a], pos[b]))) for a, b in edges)))
            if best is None or key < best:
                best = key
            return
        for v in cells[split]:
            search([2 * r + (0 if i == v or r != split else 1) for i, r in enumerate(rank)])

    search(start)
    return best


@lru_cache(maxsize=None)
def _multigraphs(n, n_edges):
    """Connected loopless multigraphs on range(n), max degree 3, up to iso."""
    return tuple(tuple(H) for H in _gen_multigraphs(n, n_edges))


def _gen_multigraphs(n, n_edges):
    pairs = [(a, b) for a in range(n) for b in range(a + 1, n)]
    seen = set()
    deg = [0] * n
    chosen = []

    # only labelings with non-increasing degrees are kept; every graph has one
    def rec(i, left):
        if left == 0:
            if (all(deg[v] >= deg[v + 1] for v in range(n - 1))
                    and len(_comps(range(n), chosen)) == 1):
                key = _canon(n, chosen, [0] * n)
                if key not in seen:
                    seen.add(key)
                    yield list(chosen)
            return
        if i == len(pairs) or sum(3 - d for d in deg) < 2 * left:
            return
        a, b = pairs[i]
        if b == a + 1 and a >= 2 and deg[a - 1] > deg[a - 2]:
            return
        top = min(3 - deg[a], 3 - deg[b], left)
        for mult in range(top, -1, -1):
            deg[a] += mult
            deg[b] += mult
            chosen.extend([(a, b)] * mult)
            yield from rec(i + 1, left - mult)
            del chosen[len(chosen) - mult:]
            deg[a] -= mult
            deg[b] -= mult

    if n == 1:
        if n_edges == 0:
            yield []
        return
    yield from rec(0, n_edges)


def _distributions(slots, items):
    """Ways to place a multiset of items into per-node slot counts.

    Items are ``("E", label)`` for ends and ``("L", singular, slope, index)``
    for leaves.  A node takes at most two leaves, and two leaves only if
    both are singular fibers.
    """
    items = sorted(items)

    def rec(u, pool):
        if u == len(slots):
            if not pool:
                yield ()
            return
        k = slots[u]
        picks = set()
        for combo in _sub_multisets(pool, k):
            if combo in picks:
                continue
            picks.add(combo)
            leaves = [it for it in combo if it[0] == "L"]
            if len(leaves) > 2 or (len(leaves) == 2 and not all(it[1] for it in leaves)):
                continue
            rest = list(pool)
            for it in combo:
                rest.remove(it)
            for tail in rec(u + 1, rest):
                yield (combo,) + tail

    yield from rec(0, items)


def _sub_multisets(pool, k):
    counts = sorted(Counter(pool).items())

    def rec(i, left):
        if left == 0:
            yield ()
            return
        if i == len(counts):
            return
        it, c = counts[i]
        for take in range(min(c, left), -1, -1):
            for tail in rec(i + 1, left - take):
                yield (it,) * take + tail

    yield from rec(0, k)


def _piece_structures(w, l, p):
    knots = l.in_piece(p.id)
    saddles = sorted(k.id for k in knots if k.index == 1)
    x = len(saddles)
    n_edges = x - 1 + p.genus
    items = [("E", e) for e in w.incident_edges(p.id)]
    for k in knots:
        if k.index != 1:
            s = k.slope if k.kind == SINGULAR else None
            items.append(("L", k.kind == SINGULAR, (s.q, s.p) if s else (), k.index))
    if n_edges < 0:
        return
    seen = set()
    for H in _multigraphs(x, n_edges):
        deg = Counter()
        for a, b in H:
            deg[a] += 1
            deg[b] += 1
        slots = [3 - deg[u] for u in range(x)]
        if sum(slots) != len(items):
            continue
        for dist in _distributions(slots, items):
            key = _canon(x, H, [tuple(sorted(d)) for d in dist])
            if key in seen:
                continue
            seen.add(key)
            yield H, dist


def _realize_structure(w, l, structures):
    """Name the blocks and tori of one choice of per-piece structures."""
    blocks, tori = [], []
    end_at = defaultdict(list)  # JSJ id -> [block]
    for p, (H, dist) in zip(w.pieces, structures):
        knots = l.in_piece(p.id)
        saddles = sorted(k.id for k in knots if k.index == 1)
        pool = defaultdict(list)
        for k in sorted(knots, key=lambda k: k.id):
            if k.index != 1:
                s = k.slope if k.kind == SINGULAR else None
                pool[("L", k.kind == SINGULAR, (s.q, s.p) if s else (),
                      k.index)].append(k.id)
        for u, items in enumerate(dist):
            leaves = []
            for it in items:
                if it[0] == "L":
                    leaves.append(pool[it].pop(0))
                else:
                    end_at[it[1]].append(saddles[u])
            blocks.append(TsBlock(saddles[u], p.id, tuple(sorted(leaves))))
        for j, (a, b) in enumerate(H, 1):
            tori.append((f"{p.id}:t{j}", saddles[a], saddles[b], None))
    for je in w.edges:
        a, b = end_at[je.id]
        if a == b:
            return None
        tori.append((je.id, a, b, je.id))
    return _sorted_ts(TorusSet(tuple(blocks), tuple(tori)))


def _glued_graph(l, ts):
    g = GeneralizedGraph()
    for b in ts.blocks:
        g.vertices.add(b.id)
        for kid in b.leaves:
            v = f"leaf:{kid}"
            g.vertices.add(v)
            e = f"to:{kid}"
            g.add_edge(e, b.id, v)
            g.orientation[e] = (b.id, v) if l.knot(kid).index == 0 else (v, b.id)
    for t, a, b, _ in ts.tori:
        g.add_edge(t, a, b)
    return g


def iter_torus_sets(w: GraphManifold, l: IndexedLink):
    """Lazily enumerate torus sets related to a base link, deduplicated."""
    per_piece = [list(_piece_structures(w, l, p)) for p in w.pieces]
    for combo in product(*per_piece):
        ts = _realize_structure(w, l, combo)
        if ts is None:
            continue
        ok, _ = in_class_S(_glued_graph(l, ts))
        if ok:
            yield ts


@dataclass
class TorusSetResult:
    sets: list = field(default_factory=list)
    truncated: bool = False


def find_torus_sets(w: GraphManifold, l: IndexedLink, limit=10_000) -> TorusSetResult:
    out = TorusSetResult()
    for ts in iter_torus_sets(w, l):
        if len(out.sets) >= limit:
            out.truncated = True
            break
        out.sets.append(ts)
    if not out.sets:
        raise AlgorithmFailure("no torus set for a related link")
    return out


def _change_targets(ts: TorusSet, base: IndexedLink, cables: dict):
    targets = set(ts.t2i_blocks(base))
    for bid, cls in sorted(cables.items()):
        if bid not in targets:
            raise InvalidTarget(f"block {bid} is not a T^2 x I block")
        a, b = cls
        if gcd(abs(a), abs(b)) != 1:
            raise InvalidClass(f"class ({a},{b}) is not primitive")
    missing = targets - set(cables)
    if missing:
        raise InvalidStep(f"no cable class for T^2 x I blocks {sorted(missing)}", "missing-cable")
    return targets


def apply_change_fibers(state: LinkState, ts: TorusSet, cables: dict, base: IndexedLink):
    """Replace the fiber pair of every T^2 x I block by an (a,b) torus-knot pair."""
    _change_targets(ts, base, cables)
    new_kind = {}
    for bid, cls in cables.items():
        blk = ts.block(bid)
        for kid in (bid,) + tuple(blk.leaves):
            new_kind[kid] = tuple(cls)
    out = []
    for k in state.knots:
        if k.id in new_kind:
            a, b = new_kind[k.id]
            out.append(StateKnot(k.id, k.index, ("torus", a, b, k.piece), k.piece, CABLED))
        else:
            out.append(k)
    return LinkState(tuple(out), state.n_steps + 1, True)


__all__ = [
    "SEEDS", "HOPF", "VARIANTS", "StateKnot", "LinkState", "S3Expr", "OperationStep",
    "TsBlock", "TorusSet", "TorusSetResult", "eval_s3", "check_step", "validate_step",
    "apply_op_a", "apply_change_fibers", "fold_history", "count_delta", "state_from_link",
    "find_torus_sets", "iter_torus_sets", "check_torus_set", "torus_set_from_certificate",
    "step_from_json", "s3_from_json", "torus_set_from_json",
]
