"""Command-line front end.

Exit codes: 0 success, 1 valid input with a negative verdict, 2 malformed
input, 3 internal failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor

from .decide import enumerate_links, is_realizable, realize
from .diagnostics import errors
from .errors import AlgorithmFailure, MalformedInput, NotRelated
from .frh import certificate_from_json, verify_certificate
from .link import is_jsj_related
from .lyagraph import to_dot
from .manifest import dumps, load_json, parse_link, parse_manifold, serialize_link
from .manifold import validate_manifold
from .ops import find_torus_sets

OK, NEGATIVE, MALFORMED, INTERNAL = 0, 1, 2, 3


def _manifold(path):
    w = parse_manifold(load_json(path))
    diags = validate_manifold(w)
    if diags:
        raise MalformedInput("; ".join(d.message for d in diags))
    return w


def _link(path):
    return parse_link(load_json(path))


def _print_diags(diags, out):
    for d in diags:
        print(d, file=out)


def cmd_validate(args, out):
    w, l = _manifold(args.manifold), _link(args.link)
    related, diags = is_jsj_related(w, l.base())
    _print_diags(diags, out)
    print("related" if related else "not related", file=out)
    return OK if related else NEGATIVE


def _write(path, text):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def cmd_realize(args, out):
    w, l = _manifold(args.manifold), _link(args.link)
    try:
        cert = realize(w, l.base())
    except NotRelated as exc:
        _print_diags(exc.diagnostics, out)
        print("not related", file=out)
        return NEGATIVE
    text = cert.dumps()
    if args.out:
        _write(args.out, text)
    else:
        out.write(text)
    if args.dot:
        _write(args.dot, to_dot(cert.lyapunov))
    return OK


def cmd_verify(args, out):
    w, l = _manifold(args.manifold), _link(args.link)
    cert = certificate_from_json(load_json(args.cert))
    ok, diags = verify_certificate(w, l.base(), cert)
    _print_diags(diags, out)
    print("certificate verified" if ok else "certificate rejected", file=out)
    return OK if ok else NEGATIVE


def cmd_check_history(args, out):
    w, l = _manifold(args.manifold), _link(args.link)
    res = is_realizable(w, l)
    _print_diags(errors(res.diagnostics), out)
    if not res.ok:
        print("not realizable", file=out)
        return NEGATIVE
    print(f"realizable: {len(res.state.knots)} knots after {len(l.history)} steps", file=out)
    for k in res.state.knots:
        print(f"  {k.id}\tindex {k.index}\t{k.expr}", file=out)
    return OK


def cmd_torus_sets(args, out):
    w, l = _manifold(args.manifold), _link(args.link)
    related, diags = is_jsj_related(w, l.base())
    if not related:
        _print_diags(diags, out)
        return NEGATIVE
    res = find_torus_sets(w, l.base(), limit=args.limit)
    out.write(dumps({"truncated": res.truncated, "count": len(res.sets),
                     "sets": [ts.to_json() for ts in res.sets]}))
    return OK


def _realizes(args):
    w, l = args
    realize(w, l)
    return True


def cmd_enumerate(args, out):
    w = _manifold(args.manifold)
    links = enumerate_links(w, args.max_saddles)
    if args.limit is not None:
        links = (l for i, l in zip(range(args.limit), links))
    links = list(links)
    if args.check:
        if args.jobs > 1:
            with ProcessPoolExecutor(args.jobs) as pool:
                list(pool.map(_realizes, [(w, l) for l in links]))
        else:
            for l in links:
                realize(w, l)
    for l in links:
        if args.compact:
            out.write(json.dumps(serialize_link(l), ensure_ascii=False) + "\n")
        else:
            out.write(dumps(serialize_link(l)))
    print(f"{len(links)} links", file=sys.stderr)
    return OK


def cmd_export_dot(args, out):
    cert = certificate_from_json(load_json(args.cert))
    out.write(to_dot(cert.lyapunov))
    return OK


def build_parser():
    ap = argparse.ArgumentParser(prog="nmslink",
                                 description="Indexed links of NMS flows on graph manifolds")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check that a link is related to the JSJ decomposition")
    p.add_argument("manifold")
    p.add_argument("link")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("realize", help="build an FRH certificate")
    p.add_argument("manifold")
    p.add_argument("link")
    p.add_argument("--out", help="write the certificate here instead of stdout")
    p.add_argument("--dot", help="also write the Lyapunov graph as DOT")
    p.set_defaults(func=cmd_realize)

    p = sub.add_parser("verify", help="verify a certificate")
    p.add_argument("manifold")
    p.add_argument("link")
    p.add_argument("cert")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("check-history", help="validate a base link plus its operation history")
    p.add_argument("manifold")
    p.add_argument("link")
    p.set_defaults(func=cmd_check_history)

    p = sub.add_parser("torus-sets", help="list incompressible torus sets related to a link")
    p.add_argument("manifold")
    p.add_argument("link")
    p.add_argument("--limit", type=int, default=10_000)
    p.set_defaults(func=cmd_torus_sets)

    p = sub.add_parser("enumerate", help="list related base links")
    p.add_argument("manifold")
    p.add_argument("--max-saddles", type=int, required=True)
    p.add_argument("--limit", type=int, default=None)
    p.add_argument("--check", action="store_true", help="realize every link as well")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--compact", action="store_true", help="one link per line")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("export-dot", help="print the Lyapunov graph of a certificate as DOT")
    p.add_argument("cert")
    p.set_defaults(func=cmd_export_dot)
    return ap


def run(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return MALFORMED if exc.code else OK
    try:
        return args.func(args, out)
    except MalformedInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return MALFORMED
    except (AlgorithmFailure, AssertionError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return INTERNAL


def main():
    sys.exit(run())
