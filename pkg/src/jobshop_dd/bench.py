"""Benchmark harness: heuristic portfolios, LNS1 post-refinement and overages."""

from __future__ import annotations

import csv
import io
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

from jobshop_dd.dd import a_star_search, compile_restricted
from jobshop_dd.graph import graph_from_schedule, graph_to_schedule, lns1_refine
from jobshop_dd.heuristics import RULES, dispatch, shifting_bottleneck
from jobshop_dd.instance import Instance, generate_random_instance, parse_instance, validate_schedule

log = logging.getLogger(__name__)

EXACT_OPS_LIMIT = 14
OPTIMA_SOURCES = ("registry", "exact", "none")
KINDS = RULES + ("SB", "DD")


class RegistryFormatError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


def compute_overage(makespan: int, optimum: int) -> float:
    """Percent excess of ``makespan`` over ``optimum``, rounded to 0.1."""
    if optimum < 1:
        raise ValueError(f"optimum must be >= 1, got {optimum}")
    if makespan < optimum:
        raise ValueError(f"makespan {makespan} is below the recorded optimum {optimum}")
    return round(100.0 * (makespan - optimum) / optimum, 1)


def parse_optima(text: str) -> dict[str, int]:
    out: dict[str, int] = {}
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise RegistryFormatError(f"expected 'name optimum', got {raw.strip()!r}", no)
        name, val = parts
        try:
            value = int(val)
        except ValueError:
            raise RegistryFormatError(f"optimum for {name} is not an integer: {val!r}", no) from None
        if value < 1:
            raise RegistryFormatError(f"optimum for {name} must be positive", no)
        if name in out:
            raise RegistryFormatError(f"duplicate entry for {name}", no)
        out[name] = value
    return out


def load_optima_registry(path=None) -> dict[str, int]:
    """Name to optimum map; ``None`` loads the bundled JSPLIB registry."""
    if path is None:
        return parse_optima(resources.files("jobshop_dd.data").joinpath("optima.txt").read_text("utf-8"))
    return parse_optima(Path(path).read_text(encoding="utf-8"))


def jsplib_names() -> list[str]:
    root = resources.files("jobshop_dd.data").joinpath("jsplib")
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".txt"))


def load_jsplib(name: str) -> Instance:
    res = resources.files("jobshop_dd.data").joinpath("jsplib", f"{name}.txt")
    if not res.is_file():
        raise FileNotFoundError(f"no bundled instance named {name!r}")
    return parse_instance(res.read_text("utf-8"), name=name)


def random_instances(n_jobs: int, n_machines: int, count: int, seed: int = 0) -> list[Instance]:
    return [generate_random_instance(n_jobs, n_machines, seed + i) for i in range(count)]


@dataclass(frozen=True)
class HeuristicSpec:
    kind: str  # SPT, MWR, MOR, SB or DD
    width: int = 200
    model: str = "m2"
    rank: str = "cost"
    collect: int = 32

    def __post_init__(self):
        object.__setattr__(self, "kind", self.kind.upper())
        if self.kind not in KINDS:
            raise ValueError(f"unknown heuristic {self.kind!r}, expected one of {KINDS}")

    @property
    def label(self) -> str:
        if self.kind == "DD":
            return f"DD-{self.model}-W{self.width}"
        return self.kind

    @classmethod
    def parse(cls, text: str) -> "HeuristicSpec":
        """``SPT``, ``SB`` or ``DD[:W=400][:model=m1][:collect=8][:rank=cost]``."""
        kind, *opts = text.split(":")
        kw = {}
        for opt in opts:
            key, _, val = opt.partition("=")
            key = {"w": "width"}.get(key.lower(), key.lower())
            if key in ("width", "collect"):
                kw[key] = int(val)
            elif key in ("model", "rank"):
                kw[key] = val
            else:
                raise ValueError(f"unknown heuristic option {opt!r}")
        return cls(kind, **kw)


def run_heuristic(instance: Instance, spec: HeuristicSpec, collect: bool = False) -> list:
    """Schedules produced by one heuristic, best first."""
    if spec.kind in RULES:
        return [dispatch(instance, spec.kind)]
    if spec.kind == "SB":
        return [shifting_bottleneck(instance)]
    res = compile_restricted(
        instance, model=spec.model, width=spec.width, rank=spec.rank, collect=spec.collect if collect else 1
    )
    return res.schedules


@dataclass
class BenchConfig:
    instances: Sequence[Instance]
    heuristics: Sequence[HeuristicSpec]
    refine: bool = False
    optima: str = "none"
    registry: dict = field(default_factory=dict)
    budget: int = 10_000
    workers: int = 1

    def __post_init__(self):
        if self.optima not in OPTIMA_SOURCES:
            raise ValueError(f"optima must be one of {OPTIMA_SOURCES}")
        if self.optima == "exact":
            big = [i.name for i in self.instances if i.n_ops > EXACT_OPS_LIMIT]
            if big:
                raise ValueError(f"exact optima need at most {EXACT_OPS_LIMIT} ops; too large: {', '.join(big)}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        self.heuristics = [HeuristicSpec.parse(h) if isinstance(h, str) else h for h in self.heuristics]


@dataclass(frozen=True)
class BenchRow:
    instance: str
    heuristic: str
    makespan: int | None
    makespan_lns1: int | None
    optimum: int | None
    overage: float | None
    overage_lns1: float | None
    seconds: float
    error: str = ""


COLUMNS = ("instance", "heuristic", "makespan", "makespan_lns1", "optimum", "overage", "overage_lns1", "seconds", "error")


def _mean(vals):
    vals = [v for v in vals if v is not None]
    return sum(vals) / len(vals) if vals else None


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.1f}" if not math.isnan(v) else ""
    return str(v)


@dataclass
class BenchReport:
    rows: list[BenchRow]

    def to_csv(self, timing: bool = True) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        cols = [c for c in COLUMNS if timing or c != "seconds"]
        w.writerow(cols)
        for r in self.rows:
            w.writerow([f"{r.seconds:.4f}" if c == "seconds" else _fmt(getattr(r, c)) for c in cols])
        return buf.getvalue()

    def summary(self) -> list[tuple]:
        """Per heuristic: (label, mean seconds, mean overage, mean overage after LNS1, rows)."""
        out = []
        for h in dict.fromkeys(r.heuristic for r in self.rows):
            rows = [r for r in self.rows if r.heuristic == h and not r.error]
            out.append(
                (
                    h,
                    _mean([r.seconds for r in rows]),
                    _mean([r.overage for r in rows]),
                    _mean([r.overage_lns1 for r in rows]),
                    len(rows),
                )
            )
        return out

    def to_table(self) -> str:
        head = ("Heuristic", "Time", "Overage", "After LNS1", "N")
        body = [
            (h, f"{t:.3f}s" if t is not None else "", _pct(o), _pct(a), str(n)) for h, t, o, a, n in self.summary()
        ]
        widths = [max(len(x) for x in col) for col in zip(head, *body)]
        lines = ["  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths))) for r in [head, *body]]
        lines.insert(1, "  ".join("-" * w for w in widths))
        errors = [r for r in self.rows if r.error]
        for r in errors:
            lines.append(f"! {r.instance} {r.heuristic}: {r.error}")
        return "\n".join(lines) + "\n"


def _pct(v) -> str:
    return "" if v is None else f"{v:.1f}%"


def _instance_rows(instance: Instance, cfg: BenchConfig) -> list[BenchRow]:
    optimum = None
    if cfg.optima == "registry":
        optimum = cfg.registry.get(instance.name)
        if optimum is None:
            log.warning("no recorded optimum for %s", instance.name)
    elif cfg.optima == "exact":
        optimum = a_star_search(instance).optimum
    rows = []
    for spec in cfg.heuristics:
        try:
            t0 = time.perf_counter()
            schedules = run_heuristic(instance, spec, collect=cfg.refine)
            seconds = time.perf_counter() - t0
            for s in schedules:
                bad = validate_schedule(instance, s)
                if bad is not None:
                    raise RuntimeError(f"heuristic produced an invalid schedule: {bad.message}")
            makespan = schedules[0].makespan
            after = None
            if cfg.refine:
                after = makespan
                for s in schedules:
                    length, graph = lns1_refine(graph_from_schedule(instance, s), cfg.budget)
                    if length < after:
                        refined = graph_to_schedule(graph)
                        if validate_schedule(instance, refined) is not None:
                            raise RuntimeError("LNS1 produced an invalid schedule")
                        after = length
            ov = compute_overage(makespan, optimum) if optimum is not None else None
            ov2 = compute_overage(after, optimum) if optimum is not None and after is not None else None
            rows.append(BenchRow(instance.name, spec.label, makespan, after, optimum, ov, ov2, seconds))
        except Exception as exc:  # recorded per row, the suite carries on
            log.error("%s / %s failed: %s", instance.name, spec.label, exc)
            rows.append(BenchRow(instance.name, spec.label, None, None, optimum, None, None, 0.0, str(exc)))
    return rows


def _job(args):
    return _instance_rows(*args)


def run_suite(config: BenchConfig) -> BenchReport:
    jobs = [(inst, config) for inst in config.instances]
    if config.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            chunks = list(pool.map(_job, jobs))
    else:
        chunks = [_job(j) for j in jobs]
    # instance order, then heuristic order, as given in the config
    rows = [r for chunk in chunks for r in chunk]
    return BenchReport(rows)
