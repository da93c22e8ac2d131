"""Disjunctive big-M MIP in LP file format, plus solver start files.

Layout of the LP text, section by section and always in this order::

    \\ comment lines (instance name, big_M)
    Minimize
     obj: Cmax
    Subject To
     prec_<j>_<k>:   job precedence, job-major
     dA_<i>_<j>_<k>_<l>, dB_...:  one pair of rows per same-machine pair
     mk_<j>:         Cmax covers the last op of job j
    Bounds
     S_<j>_<k> >= 0, then Cmax >= 0
    Binaries
     x_<i>_<j>_<k>_<l>
    End

Ops are named by (job, position).  Each unordered pair on a machine gets one
binary, written with the lexicographically smaller op first; x = 1 means
that first op runs before the second.  Completion times are folded into
``S + p``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from jobshop_dd.instance import Instance, Schedule, validate_schedule

SECTIONS = ("Minimize", "Subject To", "Bounds", "Binaries", "End")


class LpParseError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class Constraint:
    name: str
    terms: tuple  # ((coef, var), ...)
    sense: str  # ">=", "<=" or "="
    rhs: int

    def slack(self, values: dict) -> float:
        lhs = sum(c * values.get(v, 0) for c, v in self.terms)
        if self.sense == ">=":
            return lhs - self.rhs
        if self.sense == "<=":
            return self.rhs - lhs
        return -abs(lhs - self.rhs)


@dataclass(frozen=True)
class MipModel:
    name: str
    big_m: int
    continuous: tuple
    binaries: tuple
    constraints: tuple
    objective: str = "Cmax"
    lower: dict = field(default_factory=dict, compare=False)

    def violations(self, values: dict, tol: float = 1e-9) -> list[str]:
        """Names of every row, bound or integrality condition ``values`` breaks."""
        bad = [c.name for c in self.constraints if c.slack(values) < -tol]
        for v in self.continuous:
            if values.get(v, 0) < self.lower.get(v, 0) - tol:
                bad.append(f"bound {v}")
        for v in self.binaries:
            if values.get(v, 0) not in (0, 1):
                bad.append(f"binary {v}")
        return bad


def _s(op) -> str:
    return f"S_{op[0]}_{op[1]}"


def _x(a, b) -> str:
    return f"x_{a[0]}_{a[1]}_{b[0]}_{b[1]}"


def _pairs(instance: Instance):
    for k in range(instance.n_machines):
        ops = sorted(instance.machine_ops(k))
        for i, a in enumerate(ops):
            for b in ops[i + 1 :]:
                yield a, b


def build_mip_model(instance: Instance) -> MipModel:
    n, m = instance.machines.shape
    p = instance.durations
    big_m = 1 + instance.total_duration()
    rows = []
    for j in range(n):
        for k in range(1, m):
            rows.append(Constraint(f"prec_{j}_{k}", ((1, _s((j, k))), (-1, _s((j, k - 1)))), ">=", int(p[j, k - 1])))
    binaries = []
    for a, b in _pairs(instance):
        x = _x(a, b)
        binaries.append(x)
        tag = x[2:]
        # x = 1: b starts after a completes; x = 0: a starts after b completes
        rows.append(Constraint(f"dA_{tag}", ((1, _s(b)), (-1, _s(a)), (-big_m, x)), ">=", int(p[a]) - big_m))
        rows.append(Constraint(f"dB_{tag}", ((1, _s(a)), (-1, _s(b)), (big_m, x)), ">=", int(p[b])))
    for j in range(n):
        rows.append(Constraint(f"mk_{j}", ((1, "Cmax"), (-1, _s((j, m - 1)))), ">=", int(p[j, m - 1])))
    cont = tuple(_s(op) for op in instance.ops()) + ("Cmax",)
    return MipModel(instance.name or "jobshop", big_m, cont, tuple(binaries), tuple(rows))


def _term(coef: int, var: str, first: bool) -> str:
    mag = "" if abs(coef) == 1 else f"{abs(coef)} "
    if first:
        return f"{'-' if coef < 0 else ''}{mag}{var}"
    return f"{'-' if coef < 0 else '+'} {mag}{var}"


def write_lp(model: MipModel) -> str:
    out = [f"\\ {model.name}", f"\\ big_M = {model.big_m}", "Minimize", f" obj: {model.objective}", "Subject To"]
    for c in model.constraints:
        body = " ".join(_term(coef, v, i == 0) for i, (coef, v) in enumerate(c.terms))
        out.append(f" {c.name}: {body} {c.sense} {c.rhs}")
    out.append("Bounds")
    out.extend(f" {v} >= {model.lower.get(v, 0)}" for v in model.continuous)
    if model.binaries:
        out.append("Binaries")
        out.extend(f" {v}" for v in model.binaries)
    out.append("End")
    return "\n".join(out) + "\n"


def export_disjunctive_lp(instance: Instance) -> str:
    return write_lp(build_mip_model(instance))


_TERM = re.compile(r"([+-])?\s*(\d+(?:\.\d+)?)?\s*([A-Za-z_][\w.]*)")
_ROW = re.compile(r"^(?:(\w+)\s*:)?\s*(.*?)\s*(>=|<=|=)\s*(-?\d+(?:\.\d+)?)$")


def _num(s: str):
    f = float(s)
    return int(f) if f.is_integer() else f


def _terms(expr: str, line: int) -> tuple:
    terms, pos = [], 0
    expr = expr.strip()
    while pos < len(expr):
        mt = _TERM.match(expr, pos)
        if mt is None or mt.end() == pos:
            raise LpParseError(f"cannot read term at {expr[pos:]!r}", line)
        sign, coef, var = mt.groups()
        if sign is None and terms:
            raise LpParseError(f"missing operator before {var}", line)
        c = _num(coef) if coef else 1
        terms.append((-c if sign == "-" else c, var))
        pos = mt.end()
        while pos < len(expr) and expr[pos] == " ":
            pos += 1
    return tuple(terms)


def parse_lp(text: str) -> MipModel:
    """Read back the subset of the LP grammar produced by :func:`write_lp`."""
    section = None
    name, big_m = "jobshop", None
    objective = None
    rows, cont, bins, lower = [], [], [], {}
    ended = False
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("\\"):
            body = line[1:].strip()
            if body.startswith("big_M ="):
                big_m = int(body.split("=")[1])
            elif section is None and name == "jobshop" and body:
                name = body
            continue
        if ended:
            raise LpParseError("text after End", no)
        if line in SECTIONS:
            want = SECTIONS.index(line)
            have = -1 if section is None else SECTIONS.index(section)
            if want <= have:
                raise LpParseError(f"section {line} out of order", no)
            section, ended = line, line == "End"
            continue
        if section == "Minimize":
            expr = line.split(":", 1)[1] if ":" in line else line
            objective = expr.strip()
        elif section == "Subject To":
            mt = _ROW.match(line)
            if mt is None:
                raise LpParseError(f"malformed constraint {line!r}", no)
            cname, expr, sense, rhs = mt.groups()
            rows.append(Constraint(cname or f"r{len(rows)}", _terms(expr, no), sense, _num(rhs)))
        elif section == "Bounds":
            parts = line.split()
            if len(parts) != 3 or parts[1] != ">=":
                raise LpParseError(f"unsupported bound {line!r}", no)
            cont.append(parts[0])
            lower[parts[0]] = _num(parts[2])
        elif section == "Binaries":
            bins.extend(line.split())
        else:
            raise LpParseError(f"unexpected content {line!r}", no)
    if not ended:
        raise LpParseError("missing End", len(text.splitlines()))
    if big_m is None:
        big_m = 0
    return MipModel(name, big_m, tuple(cont), tuple(bins), tuple(rows), objective or "", lower)


def start_values(instance: Instance, schedule: Schedule) -> dict:
    values = {_s(op): int(schedule.start_of(op)) for op in instance.ops()}
    values["Cmax"] = int(schedule.makespan)
    for a, b in _pairs(instance):
        values[_x(a, b)] = int(schedule.start_of(a) < schedule.start_of(b) or (
            schedule.start_of(a) == schedule.start_of(b) and instance.duration_of(a) == 0))
    return values


def export_start_vector(instance: Instance, schedule: Schedule) -> str:
    """Solver start file: a ``# name value`` header then one assignment per line.

    Raises ``ValueError`` when the schedule is infeasible or does not fit under
    the model's big_M.
    """
    bad = validate_schedule(instance, schedule)
    if bad is not None:
        raise ValueError(f"infeasible schedule: {bad.message}")
    model = build_mip_model(instance)
    values = start_values(instance, schedule)
    broken = model.violations(values)
    if broken:
        raise ValueError(f"schedule violates {len(broken)} model rows, first {broken[0]}")
    order = list(model.continuous) + list(model.binaries)
    return "# name value\n" + "".join(f"{v} {values[v]}\n" for v in order)


def parse_start_vector(text: str) -> dict:
    values = {}
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise LpParseError(f"expected 'name value', got {line!r}", no)
        try:
            values[parts[0]] = _num(parts[1])
        except ValueError:
            raise LpParseError(f"bad value {parts[1]!r}", no) from None
    return values


__all__ = [
    "Constraint",
    "LpParseError",
    "MipModel",
    "build_mip_model",
    "export_disjunctive_lp",
    "export_start_vector",
    "parse_lp",
    "parse_start_vector",
    "start_values",
    "write_lp",
]
