"""Command-line front end: session files, commands, deterministic output.

A session file declares a field, rings, ideals, schemes, square-zero
extensions and complexes in a small line-oriented language; commands then
run one computation each.  Output is plain text or a stable JSON schema;
identical input bytes produce identical output bytes.

Exit codes: 0 success, 1 usage/parse error, 2 assertion or invariant
failure, 3 unsupported backend (a finite-dimensional quotient was needed).
"""

from __future__ import annotations

import argparse
import json
import re
import sys

from .algebras import EmbeddedScheme, SquareZeroExtension, artinian_basis
from .classes import (
    ks_class,
    truncated_cotangent,
    universal_obstruction,
    universal_product_check,
)
from .complexes import Complex, HomComplex, ext_of_hom, free_complex, module_as_complex, tensor_complex
from .deform import (
    DeformationProblem,
    deform,
    main_theorem_report,
    obstruction_cocycle,
)
from .errors import CheckError, UnsupportedBackend, UsageError
from .groebner import reduced_groebner
from .instances import generate_problem
from .polyring import (
    Poly,
    PolyParseError,
    PolyRing,
    PrimeField,
    QQ,
    order_of,
    parse_poly,
)


class ParseError(UsageError):
    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class Session:
    """Named objects declared by one session file."""

    def __init__(self):
        self.field = None
        self.rings: dict[str, PolyRing] = {}
        self.ideals: dict[str, tuple[str, list[Poly]]] = {}
        self.schemes: dict[str, EmbeddedScheme] = {}
        self.extensions: dict[str, SquareZeroExtension] = {}
        self.complexes: dict[str, tuple[str, Complex]] = {}
        self._names = set()

    def declare(self, name: str, line: int):
        if name in self._names:
            raise ParseError(f"name {name!r} already declared", line)
        self._names.add(name)

    def lookup(self, table: dict, name: str, kind: str, line: int = 0):
        if name not in table:
            where = f"line {line}: " if line else ""
            raise UsageError(f"{where}undeclared {kind} {name!r}")
        return table[name]

    def render(self) -> str:
        """Canonical session text; parsing it back gives an equal session."""
        out = []
        if isinstance(self.field, PrimeField):
            out.append(f"field Fp {self.field.p}")
        else:
            out.append("field QQ")
        for name, ring in self.rings.items():
            out.append(
                f"ring {name} vars {' '.join(ring.names)} order {ring.order.name}"
            )
        for name, (ring_name, gens) in self.ideals.items():
            body = ", ".join(str(g) for g in gens) if gens else "0"
            out.append(f"ideal {name} in {ring_name} = {body}")
        for name, scheme in self.schemes.items():
            out.append(f"scheme {name} = {scheme.cli_ring} / {scheme.cli_ideal}")
        for name, ext in self.extensions.items():
            out.append(f"extension {name} = {ext.cli_big} over {ext.cli_small}")
        for name, (scheme_name, cx) in self.complexes.items():
            degrees = cx.degrees()
            lo, hi = degrees[0], degrees[-1]
            out.append(f"complex {name} over {scheme_name} degrees {lo}..{hi}")
            for d in degrees:
                out.append(f"  rank {d} {cx.rank(d)}")
            for d in degrees:
                if cx.rank(d + 1) and cx.rank(d):
                    rows = ", ".join(
                        "[" + ", ".join(str(e) for e in row) + "]"
                        for row in cx.diff(d)
                    )
                    out.append(f"  map {d} = [{rows}]")
        return "\n".join(out) + "\n"


_TOKEN_RE = re.compile(r"\S+")


def parse_session(text: str) -> Session:
    session = Session()
    lines = text.splitlines()
    pending_complex = None  # (name, scheme_name, lo, hi, ranks, maps, line)

    def flush_complex():
        nonlocal pending_complex
        if pending_complex is None:
            return
        name, scheme_name, lo, hi, ranks, maps, cline = pending_complex
        scheme = session.lookup(session.schemes, scheme_name, "scheme", cline)
        q = scheme.ring
        full_ranks = {d: ranks.get(d, 0) for d in range(lo, hi + 1)}
        diffs = {}
        for d, (mat, mline) in maps.items():
            rows_needed = full_ranks.get(d + 1, 0)
            cols_needed = full_ranks.get(d, 0)
            if len(mat) != rows_needed or any(len(r) != cols_needed for r in mat):
                raise ParseError(
                    f"map {d} must be a {rows_needed} x {cols_needed} matrix",
                    mline,
                )
            diffs[d] = [[q.nf(e) for e in row] for row in mat]
        try:
            cx = free_complex(q, full_ranks, diffs, check=True)
        except CheckError as exc:
            raise ParseError(f"complex {name!r} invalid: {exc}", cline) from exc
        session.complexes[name] = (scheme_name, cx)
        pending_complex = None

    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        indented = line[0].isspace()
        words = line.split()
        head = words[0]

        if pending_complex is not None and head in ("rank", "map"):
            _parse_complex_item(session, pending_complex, line, lineno)
            continue
        flush_complex()

        if head == "field":
            if session.field is not None:
                raise ParseError("field declared twice", lineno)
            if len(words) == 2 and words[1] == "QQ":
                session.field = QQ
            elif len(words) == 3 and words[1] == "Fp":
                try:
                    session.field = PrimeField(int(words[2]))
                except ValueError as exc:
                    raise ParseError(str(exc), lineno) from exc
            else:
                raise ParseError("expected 'field QQ' or 'field Fp <prime>'", lineno)
        elif head == "ring":
            if session.field is None:
                raise ParseError("declare the field before any ring", lineno)
            m = re.fullmatch(
                r"ring\s+(\w+)\s+vars\s+((?:\w+\s+)*\w+)\s+order\s+(\w+)", line.strip()
            )
            if not m:
                raise ParseError(
                    "expected 'ring <name> vars <v1> ... order (grevlex|lex)'", lineno
                )
            name, var_text, order_name = m.groups()
            session.declare(name, lineno)
            try:
                session.rings[name] = PolyRing(
                    session.field, var_text.split(), order_of(order_name)
                )
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from exc
        elif head == "ideal":
            m = re.fullmatch(r"ideal\s+(\w+)\s+in\s+(\w+)\s*=\s*(.+)", line.strip())
            if not m:
                raise ParseError("expected 'ideal <name> in <ring> = <polys>'", lineno)
            name, ring_name, body = m.groups()
            session.declare(name, lineno)
            ring = session.lookup(session.rings, ring_name, "ring", lineno)
            gens = []
            for chunk in _split_top_level(body, lineno):
                try:
                    p = parse_poly(ring, chunk)
                except PolyParseError as exc:
                    raise ParseError(str(exc), lineno) from exc
                if not p.is_zero():
                    gens.append(p)
            session.ideals[name] = (ring_name, gens)
        elif head == "scheme":
            m = re.fullmatch(r"scheme\s+(\w+)\s*=\s*(\w+)\s*/\s*(\w+)", line.strip())
            if not m:
                raise ParseError("expected 'scheme <name> = <ring> / <ideal>'", lineno)
            name, ring_name, ideal_name = m.groups()
            session.declare(name, lineno)
            ring = session.lookup(session.rings, ring_name, "ring", lineno)
            iring, gens = session.lookup(session.ideals, ideal_name, "ideal", lineno)
            if iring != ring_name:
                raise ParseError(
                    f"ideal {ideal_name!r} lives in ring {iring!r}", lineno
                )
            scheme = EmbeddedScheme(ring, gens, name=name)
            scheme.cli_ring = ring_name
            scheme.cli_ideal = ideal_name
            session.schemes[name] = scheme
        elif head == "extension":
            m = re.fullmatch(
                r"extension\s+(\w+)\s*=\s*(\w+)\s+over\s+(\w+)", line.strip()
            )
            if not m:
                raise ParseError(
                    "expected 'extension <name> = <scheme_big> over <scheme_small>'",
                    lineno,
                )
            name, big_name, small_name = m.groups()
            session.declare(name, lineno)
            big = session.lookup(session.schemes, big_name, "scheme", lineno)
            small = session.lookup(session.schemes, small_name, "scheme", lineno)
            try:
                ext = SquareZeroExtension(big, small)
            except UsageError as exc:
                raise ParseError(str(exc), lineno) from exc
            ext.cli_big = big_name
            ext.cli_small = small_name
            session.extensions[name] = ext
        elif head == "complex":
            m = re.fullmatch(
                r"complex\s+(\w+)\s+over\s+(\w+)\s+degrees\s+(-?\d+)\s*\.\.\s*(-?\d+)",
                line.strip(),
            )
            if not m:
                raise ParseError(
                    "expected 'complex <name> over <scheme> degrees <lo>..<hi>'",
                    lineno,
                )
            name, scheme_name, lo, hi = m.groups()
            session.declare(name, lineno)
            session.lookup(session.schemes, scheme_name, "scheme", lineno)
            pending_complex = (name, scheme_name, int(lo), int(hi), {}, {}, lineno)
        else:
            raise ParseError(f"unknown directive {head!r}", lineno)
    flush_complex()
    if session.field is None:
        raise ParseError("session declares no field", max(1, len(lines)))
    return session


def _parse_complex_item(session: Session, pending, line: str, lineno: int):
    name, scheme_name, lo, hi, ranks, maps, _ = pending
    scheme = session.lookup(session.schemes, scheme_name, "scheme", lineno)
    stripped = line.strip()
    m = re.fullmatch(r"rank\s+(-?\d+)\s+(\d+)", stripped)
    if m:
        d, n = int(m.group(1)), int(m.group(2))
        if not lo <= d <= hi:
            raise ParseError(f"degree {d} outside {lo}..{hi}", lineno)
        ranks[d] = n
        return
    m = re.fullmatch(r"map\s+(-?\d+)\s*=\s*(.+)", stripped)
    if m:
        d = int(m.group(1))
        if not lo <= d <= hi:
            raise ParseError(f"degree {d} outside {lo}..{hi}", lineno)
        maps[d] = (_parse_matrix(scheme.ambient, m.group(2), lineno), lineno)
        return
    raise ParseError("expected 'rank <deg> <n>' or 'map <deg> = [[...]]'", lineno)


def _parse_matrix(ring: PolyRing, text: str, lineno: int):
    text = text.strip()
    if not (text.startswith("[") and text.endswith("]")):
        raise ParseError("matrix must be [[...], [...]]", lineno)
    inner = text[1:-1].strip()
    rows = []
    if inner:
        for row_text in _split_top_level(inner, lineno):
            row_text = row_text.strip()
            if not (row_text.startswith("[") and row_text.endswith("]")):
                raise ParseError("matrix row must be [...]", lineno)
            body = row_text[1:-1].strip()
            row = []
            if body:
                for chunk in _split_top_level(body, lineno):
                    try:
                        row.append(parse_poly(ring, chunk))
                    except PolyParseError as exc:
                        raise ParseError(str(exc), lineno) from exc
            rows.append(row)
    return rows


def _split_top_level(text: str, lineno: int):
    """Split on commas that are outside any brackets or parentheses."""
    parts = []
    depth = 0
    current = []
    for ch in text:
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
            if depth < 0:
                raise ParseError("unbalanced brackets", lineno)
        if ch == "," and depth == 0:
            parts.append("".join(current))
            current = []
        else:
            current.append(ch)
    if depth != 0:
        raise ParseError("unbalanced brackets", lineno)
    tail = "".join(current).strip()
    if tail:
        parts.append(tail)
    return [p.strip() for p in parts if p.strip()]


# ---------------------------------------------------------------------------
# command execution


def _matrix_strings(mat):
    return [[str(e) for e in row] for row in mat]


def _deformation_payload(deformation):
    if deformation is None:
        return None
    cx = deformation.complex
    return {
        str(d): _matrix_strings(cx.diff(d))
        for d in cx.degrees()
        if cx.rank(d + 1) and cx.rank(d)
    }


def _problem_from_args(session: Session, args):
    if len(args) != 2:
        raise UsageError("expected: <extension> <complex>")
    ext = session.lookup(session.extensions, args[0], "extension")
    scheme_name, cx = session.lookup(session.complexes, args[1], "complex")
    scheme = session.schemes[scheme_name]
    if scheme.ring != ext.ring0:
        raise UsageError(
            f"complex {args[1]!r} lives over {scheme_name!r}, not over the "
            "small scheme of the extension"
        )
    return DeformationProblem(ext, cx)


def run(command: str, args, session: Session, flags) -> dict:
    """Execute one command against a parsed session; returns the report."""
    report = {"command": command, "inputs": list(args)}
    checks = []

    if command == "cotangent":
        if len(args) != 1:
            raise UsageError("expected: cotangent <scheme>")
        scheme = session.lookup(session.schemes, args[0], "scheme")
        lt = truncated_cotangent(scheme)
        checks.append({"name": "h0_is_kaehler", "pass": True})
        dims = {"conormal_gens": lt.conormal.gens, "ambient_rank": scheme.nvars}
        if scheme.ring.is_artinian():
            hm1, h0 = lt.h_dims()
            dims["h_minus_1"] = hm1
            dims["h_0"] = h0
            dims["ring_dim"] = scheme.ring.k_dim()
        report["dimensions"] = dims
        report["class_vanishes"] = None
        report["deformation"] = None

    elif command == "atiyah":
        if len(args) != 1:
            raise UsageError("expected: atiyah <complex>")
        from .classes import atiyah_class

        scheme_name, cx = session.lookup(session.complexes, args[0], "complex")
        scheme = session.schemes[scheme_name]
        cls = atiyah_class(cx, scheme)
        checks.append({"name": "cocycle_closed", "pass": True})
        dims = {}
        if scheme.ring.is_artinian():
            _, dim, _ = ext_of_hom(cls.hom, 1)
            dims["ext1"] = dim
        report["dimensions"] = dims
        report["class_vanishes"] = cls.is_zero_class()
        report["deformation"] = None

    elif command == "ks":
        if len(args) != 1:
            raise UsageError("expected: ks <extension>")
        ext = session.lookup(session.extensions, args[0], "extension")
        ks = ks_class(ext)
        checks.append({"name": "component_surjective", "pass": True})
        report["dimensions"] = {"ideal_dim": ext.ideal_module.k_dim()
                                 if ext.ring.is_artinian() else None}
        report["class_vanishes"] = ks.is_zero()
        report["deformation"] = None

    elif command == "obstruct":
        prob = _problem_from_args(session, args)
        cls = obstruction_cocycle(prob)
        checks.append({"name": "cocycle_closed", "pass": True})
        dims = {}
        if prob.ext.ring.is_artinian():
            dims["ext1"] = prob.ext_dim(1)
            dims["ext2"] = prob.ext_dim(2)
        report["dimensions"] = dims
        report["class_vanishes"] = cls.is_zero_class()
        report["deformation"] = None

    elif command == "deform":
        prob = _problem_from_args(session, args)
        deformation = deform(prob)
        checks.append({"name": "square_zero", "pass": True})
        if deformation is not None:
            checks.append(
                {
                    "name": "restriction_quasi_iso",
                    "pass": bool(deformation.restricts_quasi_isomorphically())
                    if prob.ext.ring.is_artinian()
                    else True,
                }
            )
        report["dimensions"] = {}
        report["class_vanishes"] = deformation is not None
        report["deformation"] = _deformation_payload(deformation)

    elif command == "verify":
        if flags.random is not None:
            return _run_random_verify(flags)
        prob = _problem_from_args(session, args)
        rep = main_theorem_report(prob)
        report["routes"] = {
            key: rep[key]
            for key in (
                "product_vanishes",
                "obstruction_vanishes",
                "deformation_exists",
                "oracle_deformable",
            )
        }
        checks.append({"name": "classes_match", "pass": rep["classes_match"]})
        checks.append({"name": "routes_agree", "pass": rep["agreement"]})
        dims = {}
        if prob.ext.ring.is_artinian():
            dims["ext1"] = prob.ext_dim(1)
            dims["ext2"] = prob.ext_dim(2)
        report["dimensions"] = dims
        report["class_vanishes"] = rep["obstruction_vanishes"]
        report["deformation"] = _deformation_payload(rep["deformation"])
        if not rep["agreement"] or not rep["classes_match"]:
            report["checks"] = checks
            raise CheckError(
                "main-theorem agreement suite failed:\n"
                + render_text(report)
            )

    elif command == "ext":
        if len(args) != 2:
            raise UsageError("expected: ext <complex> <complex|I> [--n k]")
        n = flags.n if flags.n is not None else 1
        scheme_name, cx = session.lookup(session.complexes, args[0], "complex")
        scheme = session.schemes[scheme_name]
        if args[1] == "I":
            if len(session.extensions) != 1:
                raise UsageError(
                    "'I' requires exactly one extension in the session"
                )
            ext = next(iter(session.extensions.values()))
            prob = DeformationProblem(ext, cx)
            hom = prob.hom
        else:
            scheme2, cx2 = session.lookup(session.complexes, args[1], "complex")
            if scheme2 != scheme_name:
                raise UsageError("complexes live over different schemes")
            hom = HomComplex(cx, cx2)
        pres, dim, _ = ext_of_hom(hom, n)
        report["dimensions"] = {
            f"ext{n}": dim,
            "presentation_gens": pres.gens,
            "presentation_rels": len(pres.relations),
        }
        report["class_vanishes"] = None
        report["deformation"] = None

    elif command == "universal":
        if len(args) != 1:
            raise UsageError("expected: universal <extension>")
        ext = session.lookup(session.extensions, args[0], "extension")
        uo = universal_obstruction(ext)
        ok = universal_product_check(ext, uo)
        checks.append({"name": "four_term_exactness", "pass": True})
        checks.append({"name": "cohomology_identifications", "pass": True})
        checks.append({"name": "product_equals_extension_class", "pass": bool(ok)})
        report["dimensions"] = {
            "product_ring_dim": uo.tsq0.ring.k_dim(),
            "ideal_dim": ext.ideal_module.k_dim(),
        }
        report["class_vanishes"] = uo.is_zero()
        report["deformation"] = None
        if not ok:
            report["checks"] = checks
            raise CheckError("universal product identity failed")

    else:
        raise UsageError(f"unknown command {command!r}")

    report["checks"] = checks
    return report


def _run_random_verify(flags) -> dict:
    seed = flags.seed if flags.seed is not None else 0
    count = flags.random
    records = []
    all_agree = True
    for i in range(count):
        prob = generate_problem(seed, i)
        rep = main_theorem_report(prob)
        ok = rep["agreement"] and rep["classes_match"]
        all_agree = all_agree and ok
        records.append(
            {
                "index": i,
                "field": repr(prob.ext.ring.field),
                "ring_dim": prob.ext.ring.k_dim(),
                "complex_length": len(prob.complex0.degrees()),
                "product_vanishes": rep["product_vanishes"],
                "obstruction_vanishes": rep["obstruction_vanishes"],
                "deformation_exists": rep["deformation_exists"],
                "oracle_deformable": rep["oracle_deformable"],
                "classes_match": rep["classes_match"],
                "agreement": rep["agreement"],
            }
        )
    report = {
        "command": "verify",
        "inputs": {"random": count, "seed": seed},
        "dimensions": {},
        "class_vanishes": None,
        "deformation": None,
        "checks": [{"name": "all_instances_agree", "pass": all_agree}],
        "instances": records,
    }
    if not all_agree:
        raise CheckError(
            "randomized agreement suite failed:\n" + json.dumps(records, indent=2)
        )
    return report


# ---------------------------------------------------------------------------
# rendering


def render_text(report: dict) -> str:
    lines = [f"command: {report['command']}"]
    inputs = report.get("inputs")
    if inputs:
        lines.append(f"inputs: {inputs}")
    dims = report.get("dimensions") or {}
    for k, v in dims.items():
        lines.append(f"  {k} = {v}")
    for k, v in (report.get("routes") or {}).items():
        lines.append(f"route {k}: {v}")
    if report.get("class_vanishes") is not None:
        lines.append(f"class_vanishes: {report['class_vanishes']}")
    deformation = report.get("deformation")
    if deformation is not None:
        lines.append("deformation:")
        for d, mat in deformation.items():
            lines.append(f"  d_{d} = {mat}")
    elif report["command"] in ("deform", "verify") and "instances" not in report:
        lines.append("deformation: none (obstructed)" if report.get(
            "class_vanishes") in (False, None) else "deformation: none")
    for chk in report.get("checks", []):
        status = {True: "pass", False: "FAIL", None: "skipped"}[chk["pass"]]
        lines.append(f"check {chk['name']}: {status}")
    for rec in report.get("instances", []):
        lines.append(
            "instance {index}: field={field} dim={ring_dim} len={complex_length} "
            "obstructed={obs} agree={agreement}".format(
                obs=not rec["obstruction_vanishes"], **rec
            )
        )
    return "\n".join(lines) + "\n"


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2) + "\n"
    return render_text(report)


# ---------------------------------------------------------------------------
# entry point


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="defcomplex",
        description=(
            "exact deformation calculus for complexes on affine schemes; "
            "reads a session file and runs one command"
        ),
    )
    parser.add_argument("session", help="session file in the input language")
    parser.add_argument(
        "command",
        help="cotangent | atiyah | ks | obstruct | deform | verify | ext | universal",
    )
    parser.add_argument("args", nargs="*", help="command arguments (names)")
    parser.add_argument("--format", choices=("text", "json"), default="text")
    parser.add_argument("--n", type=int, default=None, help="Ext degree for 'ext'")
    parser.add_argument("--seed", type=int, default=None, help="seed for --random")
    parser.add_argument(
        "--random", type=int, default=None, help="run N random verify instances"
    )
    return parser


def main(argv=None) -> int:
    parser = build_arg_parser()
    ns = parser.parse_args(argv)
    try:
        with open(ns.session, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        session = parse_session(text)
        report = run(ns.command, ns.args, session, ns)
    except (UsageError, PolyParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except UnsupportedBackend as exc:
        print(f"unsupported: {exc}", file=sys.stderr)
        return 3
    except (CheckError, AssertionError) as exc:
        print(f"invariant failure: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(render(report, ns.format))
    return 0


if __name__ == "__main__":
    sys.exit(main())
