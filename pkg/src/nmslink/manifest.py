"""JSON manifests for manifolds and links.

Manifold::

    {"pieces": [{"id": "P", "genus": 2, "slopes": [[1, 3], [1, 4]]}],
     "tori": [{"id": "a", "ends": ["P", "Q"]}]}

Link::

    {"knots": [{"id": "k1", "piece": "P", "index": 0, "kind": "singular",
                "slope": [1, 3]}],
     "history": [{"op": "VI", "own": "k1", "p": 3, "q": 2, "core": 0, "cable": 2}]}
"""
from __future__ import annotations

import json

from .errors import InvalidSlope, MalformedInput
from .link import CABLED, KINDS, SINGULAR, IndexedLink, KnotRecord
from .manifold import GraphManifold, JsjEdge
from .ops import step_from_json
from .seifert import SeifertPiece, normalize_slope


def _need(d, key, typ, where):
    if not isinstance(d, dict) or key not in d:
        raise MalformedInput(f"{where}: missing {key!r}")
    val = d[key]
    if typ is int and isinstance(val, bool) or not isinstance(val, typ):
        raise MalformedInput(f"{where}: {key!r} must be {typ.__name__}")
    return val


def _slope(obj, where):
    if (not isinstance(obj, list) or len(obj) != 2
            or not all(isinstance(v, int) and not isinstance(v, bool) for v in obj)):
        raise MalformedInput(f"{where}: slope must be [q, p] with integers")
    try:
        return normalize_slope(*obj)
    except InvalidSlope as exc:
        raise MalformedInput(f"{where}: {exc}") from exc


def parse_manifold(data) -> GraphManifold:
    if not isinstance(data, dict):
        raise MalformedInput("manifold manifest must be a JSON object")
    pieces = _need(data, "pieces", list, "manifold")
    tori = data.get("tori", [])
    if not isinstance(tori, list):
        raise MalformedInput("manifold: 'tori' must be a list")
    edges = []
    for i, t in enumerate(tori):
        where = f"tori[{i}]"
        tid = _need(t, "id", str, where)
        ends = _need(t, "ends", list, where)
        if len(ends) != 2 or not all(isinstance(e, str) for e in ends):
            raise MalformedInput(f"{where}: 'ends' must be two piece ids")
        edges.append(JsjEdge(tid, tuple(ends)))
    ends_at = {}
    for e in edges:
        for pid in e.ends:
            ends_at[pid] = ends_at.get(pid, 0) + 1
    built = []
    for i, p in enumerate(pieces):
        where = f"pieces[{i}]"
        pid = _need(p, "id", str, where)
        genus = p.get("genus", 0)
        if isinstance(genus, bool) or not isinstance(genus, int) or genus < 0:
            raise MalformedInput(f"{where}: genus must be a non-negative integer")
        if p.get("orientable", True) is not True:
            raise MalformedInput(f"{where}: only orientable bases are supported")
        slopes = p.get("slopes", [])
        if not isinstance(slopes, list):
            raise MalformedInput(f"{where}: 'slopes' must be a list")
        built.append(SeifertPiece(pid, genus, ends_at.get(pid, 0),
                                  tuple(_slope(s, f"{where}.slopes[{j}]")
                                        for j, s in enumerate(slopes))))
    return GraphManifold(tuple(built), tuple(edges))


def serialize_manifold(w: GraphManifold):
    return {
        "pieces": [{"id": p.id, "genus": p.genus, "slopes": [s.to_json() for s in p.slopes]}
                   for p in w.pieces],
        "tori": [{"id": e.id, "ends": list(e.ends)} for e in w.edges],
    }


def parse_link(data) -> IndexedLink:
    if not isinstance(data, dict):
        raise MalformedInput("link manifest must be a JSON object")
    knots = []
    for i, k in enumerate(_need(data, "knots", list, "link")):
        where = f"knots[{i}]"
        kid = _need(k, "id", str, where)
        piece = _need(k, "piece", str, where)
        index = _need(k, "index", int, where)
        kind = k.get("kind", "regular")
        if kind not in KINDS:
            raise MalformedInput(f"{where}: unknown kind {kind!r}")
        slope = _slope(k["slope"], where) if k.get("slope") is not None else None
        cable = None
        if k.get("cable") is not None:
            c = k["cable"]
            if not isinstance(c, list) or len(c) != 2:
                raise MalformedInput(f"{where}: cable must be [a, b]")
            cable = tuple(c)
        try:
            knots.append(KnotRecord(kid, piece, index, kind, slope, cable))
        except ValueError as exc:
            raise MalformedInput(f"{where}: {exc}") from exc
    history = data.get("history", [])
    if not isinstance(history, list):
        raise MalformedInput("link: 'history' must be a list")
    try:
        steps = tuple(step_from_json(s) for s in history)
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedInput(f"link history: {exc!r}") from exc
    return IndexedLink(tuple(knots), steps)


def serialize_link(l: IndexedLink):
    knots = []
    for k in l.knots:
        d = {"id": k.id, "piece": k.piece, "index": k.index, "kind": k.kind}
        if k.kind == SINGULAR:
            d["slope"] = k.slope.to_json()
        if k.kind == CABLED:
            d["cable"] = list(k.cable)
        knots.append(d)
    return {"knots": knots, "history": [s.to_json() for s in l.history]}


def load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise MalformedInput(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise MalformedInput(f"{path}: invalid JSON ({exc})") from exc


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"
