"""MPS export of the routing MIP, plus a reader for round-trip checks.

The writer emits NAME, ROWS, COLUMNS (with INTORG/INTEND markers around the
binary x block and the integer k), RHS, BOUNDS and ENDATA in a deterministic
order with 17-significant-digit coefficients, so two exports of the same
model are byte-identical and a re-parse reproduces the exact matrices.  The
reader handles exactly the subset this writer emits (whitespace-delimited
fields, one coefficient per line); names longer than the historical 8-column
limit are allowed, as in every modern solver.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .model import Constraint, MipModel, Variable

OBJ_ROW = "COST"
_NUM = "{:.17g}"


def _fmt(value: float) -> str:
    return _NUM.format(float(value))


def export_mps(model: MipModel, path, name: str = "TCVRP") -> None:
    lines = [f"NAME          {name}"]
    lines.append("ROWS")
    lines.append(f" N  {OBJ_ROW}")
    for c in model.constraints:
        lines.append(f" {c.sense}  {c.name}")

    by_var: dict[str, list[tuple[str, float]]] = {v: [] for v in model.variables}
    for vname, coef in model.objective.items():
        if coef != 0.0:
            by_var[vname].append((OBJ_ROW, coef))
    for c in model.constraints:
        for vname, coef in c.coeffs.items():
            if coef != 0.0:
                by_var[vname].append((c.name, coef))

    lines.append("COLUMNS")
    marker_open = False
    marker_id = 0
    for vname, var in model.variables.items():
        wants_int = var.kind in ("binary", "integer")
        if wants_int and not marker_open:
            lines.append(f"    MARKER{marker_id}    'MARKER'    'INTORG'")
            marker_open = True
            marker_id += 1
        if not wants_int and marker_open:
            lines.append(f"    MARKER{marker_id}    'MARKER'    'INTEND'")
            marker_open = False
            marker_id += 1
        for row, coef in by_var[vname]:
            lines.append(f"    {vname:<12}  {row:<14}  {_fmt(coef)}")
    if marker_open:
        lines.append(f"    MARKER{marker_id}    'MARKER'    'INTEND'")

    lines.append("RHS")
    for c in model.constraints:
        if c.rhs != 0.0:
            lines.append(f"    RHS1          {c.name:<14}  {_fmt(c.rhs)}")

    lines.append("BOUNDS")
    for vname, var in model.variables.items():
        if var.kind == "binary":
            lines.append(f" BV BND           {vname}")
        elif var.kind == "integer":
            lines.append(f" UI BND           {vname:<12}  {_fmt(var.ub)}")
    lines.append("ENDATA")

    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


@dataclass
class ParsedMps:
    name: str
    objective: dict[str, float] = field(default_factory=dict)
    row_sense: dict[str, str] = field(default_factory=dict)
    row_order: list[str] = field(default_factory=list)
    coeffs: dict[str, dict[str, float]] = field(default_factory=dict)
    rhs: dict[str, float] = field(default_factory=dict)
    integer_vars: set[str] = field(default_factory=set)
    binary_vars: set[str] = field(default_factory=set)
    var_order: list[str] = field(default_factory=list)
    upper_bounds: dict[str, float] = field(default_factory=dict)


def parse_mps(path) -> ParsedMps:
    parsed = ParsedMps(name="")
    section = None
    in_integer = False
    seen_vars: set[str] = set()
    with open(path) as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("*"):
                continue
            if not line[0].isspace():
                parts = line.split()
                section = parts[0]
                if section == "NAME":
                    parsed.name = parts[1] if len(parts) > 1 else ""
                if section == "ENDATA":
                    break
                continue
            fields = line.split()
            if section == "ROWS":
                sense, name = fields
                if sense == "N":
                    continue  # objective row; entries land in .objective
                parsed.row_sense[name] = sense
                parsed.row_order.append(name)
                parsed.coeffs[name] = {}
            elif section == "COLUMNS":
                if len(fields) >= 3 and fields[1] == "'MARKER'":
                    in_integer = fields[2] == "'INTORG'"
                    continue
                vname = fields[0]
                if vname not in seen_vars:
                    seen_vars.add(vname)
                    parsed.var_order.append(vname)
                    if in_integer:
                        parsed.integer_vars.add(vname)
                for p in range(1, len(fields) - 1, 2):
                    row, coef = fields[p], float(fields[p + 1])
                    if row == OBJ_ROW:
                        parsed.objective[vname] = coef
                    else:
                        parsed.coeffs[row][vname] = coef
            elif section == "RHS":
                for p in range(1, len(fields) - 1, 2):
                    parsed.rhs[fields[p]] = float(fields[p + 1])
            elif section == "BOUNDS":
                btype, _bnd, vname = fields[0], fields[1], fields[2]
                if btype == "BV":
                    parsed.binary_vars.add(vname)
                elif btype in ("UI", "UP"):
                    parsed.upper_bounds[vname] = float(fields[3])
                elif btype in ("LI", "LO"):
                    pass  # lower bounds default to 0 in this subset
                else:
                    raise ValueError(f"unsupported bound type {btype}")
    return parsed


def roundtrip_matches(model: MipModel, parsed: ParsedMps) -> list[str]:
    """Differences between a model and a re-parsed export; empty means equal."""
    problems = []
    model_vars = list(model.variables)
    if parsed.var_order != model_vars:
        problems.append("variable order differs")
    for vname, var in model.variables.items():
        obj = model.objective.get(vname, 0.0)
        if parsed.objective.get(vname, 0.0) != obj:
            problems.append(f"objective coefficient differs for {vname}")
        is_int = var.kind in ("binary", "integer")
        if (vname in parsed.integer_vars or vname in parsed.binary_vars) != is_int:
            problems.append(f"integrality differs for {vname}")
        if var.kind == "binary" and vname not in parsed.binary_vars:
            problems.append(f"missing binary bound for {vname}")
        if var.kind == "integer" and parsed.upper_bounds.get(vname) != var.ub:
            problems.append(f"upper bound differs for {vname}")
    if parsed.row_order != [c.name for c in model.constraints]:
        problems.append("row order differs")
    for c in model.constraints:
        if parsed.row_sense.get(c.name) != c.sense:
            problems.append(f"sense differs for {c.name}")
        want = {v: coef for v, coef in c.coeffs.items() if coef != 0.0}
        if parsed.coeffs.get(c.name, {}) != want:
            problems.append(f"coefficients differ for {c.name}")
        if parsed.rhs.get(c.name, 0.0) != c.rhs:
            problems.append(f"rhs differs for {c.name}")
    return problems
