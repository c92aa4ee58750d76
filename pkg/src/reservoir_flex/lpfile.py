"""CPLEX-LP-format writer and reader.

Linear programs and MILPs round-trip exactly: coefficients are printed with
shortest-exact float repr, so the re-read matrix is entrywise identical.
With ``allow_quadratic=True`` bilinear definitions ``w = c*x*y`` are written
as bracketed product rows (``q1: [ c x * y ] - w = 0``).  Note the equality
sense on product rows is this module's own dialect; CPLEX itself only
accepts inequality quadratic constraints.
"""

from __future__ import annotations

import math
import re

from .program import MathProgram, ProgramError

_NAME = r"[A-Za-z_][A-Za-z0-9_.\-]*"


def _fmt(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _expr(coeffs: dict[str, float]) -> str:
    parts = []
    for var, coef in coeffs.items():
        if coef == 0.0:
            continue
        sign = "-" if coef < 0 else "+"
        mag = abs(coef)
        if parts or sign == "-":
            parts.append(sign)
        term = var if mag == 1.0 else f"{_fmt(mag)} {var}"
        parts.append(term)
    return " ".join(parts) if parts else "0 " + next(iter(coeffs), "x")


def write_lp(program: MathProgram, allow_quadratic: bool = False) -> str:
    if program.bilinear_terms and not allow_quadratic:
        raise ProgramError(
            "program has bilinear terms; LP export needs allow_quadratic=True"
        )
    lines = ["\\ reservoir-flex LP export", "Minimize"]
    obj = _expr(program.objective)
    if program.objective_constant:
        c0 = program.objective_constant
        obj += f" {'-' if c0 < 0 else '+'} {_fmt(abs(c0))}"
    lines.append(f" obj: {obj}")
    lines.append("Subject To")
    for con in program.constraints:
        lines.append(f" {con.name}: {_expr(con.coeffs)} {con.sense} {_fmt(con.rhs)}")
    for i, t in enumerate(program.bilinear_terms, start=1):
        sign = "-" if t.c < 0 else ""
        mag = abs(t.c)
        prod = f"{t.x} * {t.y}" if mag == 1.0 else f"{_fmt(mag)} {t.x} * {t.y}"
        lines.append(f" q{i}: [ {sign}{prod} ] - {t.w} = 0")

    bound_lines = []
    for v in program.variables:
        if v.kind == "binary":
            continue
        lo, hi = v.lower, v.upper
        if lo == 0.0 and hi == math.inf:
            continue  # LP default
        if lo == hi:
            bound_lines.append(f" {v.name} = {_fmt(lo)}")
        elif lo == -math.inf and hi == math.inf:
            bound_lines.append(f" {v.name} free")
        else:
            left = "-infinity" if lo == -math.inf else _fmt(lo)
            right = "+infinity" if hi == math.inf else _fmt(hi)
            bound_lines.append(f" {left} <= {v.name} <= {right}")
    if bound_lines:
        lines.append("Bounds")
        lines.extend(bound_lines)

    binaries = [v.name for v in program.variables if v.kind == "binary"]
    if binaries:
        lines.append("Binaries")
        for i in range(0, len(binaries), 8):
            lines.append(" " + " ".join(binaries[i : i + 8]))
    lines.append("End")
    return "\n".join(lines) + "\n"


def export_lp(program: MathProgram, path, allow_quadratic: bool = False) -> None:
    text = write_lp(program, allow_quadratic=allow_quadratic)
    with open(path, "w") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# Reader
# ---------------------------------------------------------------------------

_SECTION = re.compile(
    r"^(minimize|maximize|subject\s+to|st|s\.t\.|bounds|binaries|binary|"
    r"general|generals|end)\s*$",
    re.IGNORECASE,
)


class _Parsed:
    def __init__(self):
        self.objective: dict[str, float] = {}
        self.obj_constant = 0.0
        self.maximize = False
        self.rows: list[tuple[str, dict, str, float]] = []
        self.quads: list[tuple[str, str, str, float]] = []  # (w, x, y, c)
        self.bounds: dict[str, list[float]] = {}
        self.binaries: list[str] = []
        self.seen: list[str] = []
        self._seen_set: set[str] = set()

    def touch(self, name: str):
        if name not in self._seen_set:
            self._seen_set.add(name)
            self.seen.append(name)


def _tokenize(text: str) -> list[str]:
    out = []
    for raw in text.splitlines():
        line = raw.split("\\")[0]
        if not line.strip():
            continue
        out.append(line)
    return out


def _parse_terms(expr: str, parsed: _Parsed):
    """Parse a linear expression with optional one bracketed product."""
    coeffs: dict[str, float] = {}
    constant = 0.0
    quad = None
    bracket = re.search(r"\[(.*?)\]", expr)
    if bracket:
        inner = bracket.group(1).strip()
        m = re.match(
            rf"^([+-]?\s*[\d.eE+-]*)\s*({_NAME})\s*\*\s*({_NAME})$", inner
        )
        if not m:
            raise ProgramError(f"cannot parse quadratic block [{inner}]")
        cs = m.group(1).replace(" ", "")
        coef = 1.0 if cs in ("", "+") else (-1.0 if cs == "-" else float(cs))
        quad = (m.group(2), m.group(3), coef)
        expr = expr[: bracket.start()] + expr[bracket.end():]

    token = re.compile(
        rf"([+-])|((?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|({_NAME})"
    )
    sign, coef, pending = 1.0, None, False
    for m in token.finditer(expr):
        if m.group(1):
            if pending and coef is not None:
                constant += sign * coef
            sign = 1.0 if m.group(1) == "+" else -1.0
            coef, pending = None, True
        elif m.group(2):
            coef = float(m.group(2))
            pending = True
        else:
            name = m.group(3)
            value = sign * (coef if coef is not None else 1.0)
            coeffs[name] = coeffs.get(name, 0.0) + value
            parsed.touch(name)
            sign, coef, pending = 1.0, None, False
    if pending and coef is not None:
        constant += sign * coef
    return coeffs, constant, quad


def read_lp(text_or_path) -> MathProgram:
    """Parse LP text (or a path to it) back into a MathProgram."""
    text = text_or_path
    if "\n" not in str(text_or_path):
        try:
            with open(text_or_path) as fh:
                text = fh.read()
        except OSError:
            text = str(text_or_path)

    parsed = _Parsed()
    section = None
    auto_row = 0
    for line in _tokenize(str(text)):
        stripped = line.strip()
        m = _SECTION.match(stripped)
        if m:
            word = m.group(1).lower()
            if word == "end":
                break
            section = {
                "minimize": "obj", "maximize": "obj",
                "subject to": "rows", "st": "rows", "s.t.": "rows",
                "bounds": "bounds",
                "binaries": "bin", "binary": "bin",
                "general": "gen", "generals": "gen",
            }[re.sub(r"\s+", " ", word)]
            if section == "obj":
                parsed.maximize = word == "maximize"
            continue
        if section == "obj":
            body = stripped.split(":", 1)[-1] if ":" in stripped else stripped
            coeffs, const, quad = _parse_terms(body, parsed)
            if quad:
                raise ProgramError("quadratic objective not supported")
            for k, v in coeffs.items():
                parsed.objective[k] = parsed.objective.get(k, 0.0) + v
            parsed.obj_constant += const
        elif section == "rows":
            if ":" in stripped:
                name, body = stripped.split(":", 1)
                name = name.strip()
            else:
                auto_row += 1
                name, body = f"c{auto_row}", stripped
            sm = re.search(r"(<=|>=|=)", body)
            if not sm:
                raise ProgramError(f"row {name}: no sense found")
            lhs, rhs_text = body[: sm.start()], body[sm.end():]
            coeffs, const, quad = _parse_terms(lhs, parsed)
            rhs = float(rhs_text.strip()) - const
            if quad:
                x, y, c = quad
                # Expect the pattern [c x*y] - w = 0
                wvars = [v for v, k in coeffs.items() if k == -1.0]
                if len(coeffs) != 1 or len(wvars) != 1 or rhs != 0.0:
                    raise ProgramError(f"row {name}: unsupported quadratic form")
                parsed.quads.append((wvars[0], x, y, c))
            else:
                parsed.rows.append((name, coeffs, sm.group(1), rhs))
        elif section == "bounds":
            _parse_bound_line(stripped, parsed)
        elif section == "bin":
            for name in stripped.split():
                parsed.binaries.append(name)
                parsed.touch(name)

    prog = MathProgram()
    binset = set(parsed.binaries)
    for name in parsed.seen:
        if name in binset:
            prog.add_variable(name, 0.0, 1.0, kind="binary")
        else:
            lo, hi = parsed.bounds.get(name, [0.0, math.inf])
            prog.add_variable(name, lo, hi)
    for name, coeffs, sense, rhs in parsed.rows:
        prog.add_constraint(coeffs, sense, rhs, name)
    for w, x, y, c in parsed.quads:
        prog.add_bilinear(w, x, y, c)
    sign = -1.0 if parsed.maximize else 1.0
    prog.set_objective({k: sign * v for k, v in parsed.objective.items()},
                       sign * parsed.obj_constant)
    return prog


def _parse_bound_line(line: str, parsed: _Parsed) -> None:
    def val(tok: str) -> float:
        t = tok.lower().lstrip("+")
        if t in ("-infinity", "-inf"):
            return -math.inf
        if t in ("infinity", "inf"):
            return math.inf
        return float(tok)

    free = re.match(rf"^({_NAME})\s+free$", line, re.IGNORECASE)
    if free:
        parsed.touch(free.group(1))
        parsed.bounds[free.group(1)] = [-math.inf, math.inf]
        return
    m = re.match(
        rf"^([^\s<>=]+)\s*<=\s*({_NAME})\s*<=\s*([^\s<>=]+)$", line)
    if m:
        parsed.touch(m.group(2))
        parsed.bounds[m.group(2)] = [val(m.group(1)), val(m.group(3))]
        return
    m = re.match(rf"^({_NAME})\s*=\s*([^\s<>=]+)$", line)
    if m:
        parsed.touch(m.group(1))
        v = val(m.group(2))
        parsed.bounds[m.group(1)] = [v, v]
        return
    m = re.match(rf"^({_NAME})\s*(<=|>=)\s*([^\s<>=]+)$", line)
    if m:
        name, sense, v = m.group(1), m.group(2), val(m.group(3))
        parsed.touch(name)
        cur = parsed.bounds.setdefault(name, [0.0, math.inf])
        if sense == "<=":
            cur[1] = v
        else:
            cur[0] = v
        return
    m = re.match(rf"^([^\s<>=]+)\s*(<=|>=)\s*({_NAME})$", line)
    if m:
        v, sense, name = val(m.group(1)), m.group(2), m.group(3)
        parsed.touch(name)
        cur = parsed.bounds.setdefault(name, [0.0, math.inf])
        if sense == "<=":
            cur[0] = v
        else:
            cur[1] = v
        return
    raise ProgramError(f"cannot parse bound line: {line!r}")


def matrices_equal(a: MathProgram, b: MathProgram, tol: float = 1e-12) -> bool:
    """Entrywise comparison of constraint matrices, bounds and objectives."""

    def rowmap(p: MathProgram):
        return {c.name: (c.coeffs, c.sense, c.rhs) for c in p.constraints}

    ra, rb = rowmap(a), rowmap(b)
    if set(ra) != set(rb):
        return False
    for name in ra:
        ca, sa, rha = ra[name]
        cb, sb, rhb = rb[name]
        if sa != sb or abs(rha - rhb) > tol:
            return False
        keys = set(ca) | set(cb)
        for k in keys:
            if abs(ca.get(k, 0.0) - cb.get(k, 0.0)) > tol:
                return False
    va = {v.name: v for v in a.variables}
    vb = {v.name: v for v in b.variables}
    if set(va) != set(vb):
        return False
    for name in va:
        if va[name].kind != vb[name].kind:
            return False
        for bound in ("lower", "upper"):
            x, y = getattr(va[name], bound), getattr(vb[name], bound)
            if x != y and abs(x - y) > tol:
                return False
    keys = set(a.objective) | set(b.objective)
    for k in keys:
        if abs(a.objective.get(k, 0.0) - b.objective.get(k, 0.0)) > tol:
            return False
    qa = {(t.w, t.x, t.y): t.c for t in a.bilinear_terms}
    qb = {(t.w, t.x, t.y): t.c for t in b.bilinear_terms}
    if set(qa) != set(qb):
        return False
    return all(abs(qa[k] - qb[k]) <= tol for k in qa)
