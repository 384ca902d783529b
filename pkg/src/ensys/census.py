"""Exhaustive census of subsystems of E_n.

For every variable-renaming orbit of subsets S of E_n the census
classifies S and records

    f = max height over systems with finitely many solutions,
    g = max number of solutions over those systems,

over Z (f, g) or over N (f_1, g_1).  Supersets have smaller solution
sets, so the pruned mode only classifies systems whose proper subsets are
all non-finite; the full mode visits every orbit and is used to
cross-check the pruned one for n <= 2.
"""

from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterator

from .gadgets import f_witness_chain, hypercube_system
from .solver import (
    Box,
    Budget,
    DEFAULT_BUDGET,
    Domain,
    Finite,
    Infinite,
    classify_finiteness,
    enumerate_solutions,
    verify_witness,
)
from .system import Constraint, EnSystem, canonical_form, full_universe, orbit, system_from_json, system_to_json

log = logging.getLogger(__name__)

MAX_N = 4
FULL_MODE_LIMIT = 2**20


class CensusError(ValueError):
    pass


# -- enumeration of orbit representatives ----------------------------------------------

def _from_mask(n: int, universe: list[Constraint], mask: int) -> EnSystem:
    return EnSystem(n, tuple(c for bit, c in enumerate(universe) if mask >> bit & 1))


def default_mode(n: int) -> str:
    return "full" if n <= 2 else "pruned" if n == 3 else "witness"


def enumerate_subsystems(n: int, mode: str = "full", *,
                         keep: Callable[[EnSystem], bool] | None = None,
                         prefix: tuple[int, int] | None = None) -> Iterator[EnSystem]:
    """One canonical representative per renaming orbit of subsets of E_n.

    ``mode="full"`` walks all 2^|E_n| subsets (refused when that is
    infeasible).  ``mode="pruned"`` grows systems level by level and only
    yields a system when every one of its one-smaller subsystems was kept
    by ``keep`` (the census passes "was not finite").  ``prefix=(bits,
    value)`` restricts the full walk to masks whose top bits equal value.
    """
    if not 1 <= n <= MAX_N:
        raise CensusError(f"n must be in 1..{MAX_N}, got {n}")
    universe = full_universe(n)
    size = len(universe)
    if mode == "full":
        if 2**size > FULL_MODE_LIMIT:
            raise CensusError(f"full mode over |E_{n}| = {size} constraints means 2^{size} subsets; "
                              "use mode='pruned' or 'witness'")
        if prefix is None:
            masks = range(2**size)
        else:
            bits, value = prefix
            low = size - bits
            masks = range(value << low, (value + 1) << low)
        for mask in masks:
            sys = _from_mask(n, universe, mask)
            if canonical_form(sys).key == sys.key:
                yield sys
        return
    if mode != "pruned":
        raise CensusError(f"unknown enumeration mode {mode!r}")
    keep = keep or (lambda s: True)
    empty = EnSystem(n, ())
    yield empty
    frontier = {empty.key: empty} if keep(empty) else {}
    while frontier:
        candidates: dict[tuple, EnSystem] = {}
        for sys in frontier.values():
            present = set(sys.constraints)
            for c in universe:
                if c in present:
                    continue
                grown = canonical_form(sys.with_constraints([c]))
                if grown.key in candidates:
                    continue
                if all(canonical_form(EnSystem(n, grown.constraints[:i] + grown.constraints[i + 1:])).key
                       in frontier for i in range(len(grown))):
                    candidates[grown.key] = grown
        nxt = {}
        for key in sorted(candidates):
            sys = candidates[key]
            yield sys
            if keep(sys):
                nxt[key] = sys
        frontier = nxt


def orbit_size(sys: EnSystem) -> int:
    return len(orbit(sys))


# -- records ------------------------------------------------------------------------

@dataclass(frozen=True)
class Witness:
    system: EnSystem
    solutions: tuple[tuple[int, ...], ...]
    value: int

    def to_json(self) -> dict:
        return {"system": system_to_json(self.system), "value": self.value,
                "solutions": [list(t) for t in self.solutions]}

    @classmethod
    def from_json(cls, data: dict) -> Witness:
        return cls(system_from_json(data["system"]), tuple(tuple(t) for t in data["solutions"]),
                   int(data["value"]))


def _better(new: Witness | None, old: Witness | None) -> bool:
    if new is None:
        return False
    if old is None:
        return True
    if new.value != old.value:
        return new.value > old.value
    return (len(new.system), new.system.key) < (len(old.system), old.system.key)


@dataclass
class Tally:
    """Associative partial aggregate over any set of classified orbits."""

    f: Witness | None = None
    g: Witness | None = None
    finite: int = 0
    infinite: int = 0
    undetermined: list = field(default_factory=list)
    orbits: int = 0

    def add(self, sys: EnSystem, verdict) -> None:
        self.orbits += 1
        if isinstance(verdict, Finite):
            self.finite += 1
            sols = verdict.solutions.tuples
            if sols:
                fw = Witness(sys, sols, verdict.solutions.height)
                gw = Witness(sys, sols, len(sols))
                if _better(fw, self.f):
                    self.f = fw
                if _better(gw, self.g):
                    self.g = gw
        elif isinstance(verdict, Infinite):
            self.infinite += 1
        else:
            self.undetermined.append(sys.key)

    def merge(self, other: Tally) -> Tally:
        out = Tally(self.f, self.g, self.finite + other.finite, self.infinite + other.infinite,
                    sorted(self.undetermined + other.undetermined), self.orbits + other.orbits)
        if _better(other.f, out.f):
            out.f = other.f
        if _better(other.g, out.g):
            out.g = other.g
        return out

    def to_json(self) -> dict:
        return {"f": self.f.to_json() if self.f else None, "g": self.g.to_json() if self.g else None,
                "finite": self.finite, "infinite": self.infinite,
                "undetermined": [list(map(list, k)) for k in self.undetermined], "orbits": self.orbits}

    @classmethod
    def from_json(cls, data: dict) -> Tally:
        return cls(Witness.from_json(data["f"]) if data["f"] else None,
                   Witness.from_json(data["g"]) if data["g"] else None,
                   data["finite"], data["infinite"],
                   [tuple(tuple(c) for c in k) for k in data["undetermined"]], data["orbits"])


@dataclass(frozen=True)
class CensusRecord:
    n: int
    domain: Domain
    mode: str
    f_value: int
    f_exact: bool
    g_value: int
    g_exact: bool
    f_witness: Witness | None
    g_witness: Witness | None
    undetermined: int
    orbit_count: int
    finite_count: int
    infinite_count: int
    complete: bool
    quarantine: tuple = ()

    def to_json(self) -> dict:
        names = ("f", "g") if self.domain is Domain.INTEGERS else ("f_1", "g_1")
        return {
            "n": self.n,
            "domain": self.domain.value,
            "mode": self.mode,
            "functions": list(names),
            "f_value": self.f_value,
            "f_exact": self.f_exact,
            "g_value": self.g_value,
            "g_exact": self.g_exact,
            "f_witness": self.f_witness.to_json() if self.f_witness else None,
            "g_witness": self.g_witness.to_json() if self.g_witness else None,
            "undetermined": self.undetermined,
            "quarantine": [_key_text(self.n, k) for k in self.quarantine],
            "orbit_count": self.orbit_count,
            "finite_count": self.finite_count,
            "infinite_count": self.infinite_count,
            "complete": self.complete,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=2)


def _key_text(n: int, key) -> str:
    return str(EnSystem(n, tuple(Constraint(_kind(k[0]), tuple(k[1:])) for k in key)))


def _kind(value: int):
    from .system import Kind

    return Kind(value)


def _record(n: int, dom: Domain, mode: str, tally: Tally, complete: bool) -> CensusRecord:
    exact = complete and not tally.undetermined
    return CensusRecord(
        n=n, domain=dom, mode=mode,
        f_value=tally.f.value if tally.f else 0, f_exact=exact,
        g_value=tally.g.value if tally.g else 0, g_exact=exact,
        f_witness=tally.f, g_witness=tally.g,
        undetermined=len(tally.undetermined), orbit_count=tally.orbits,
        finite_count=tally.finite, infinite_count=tally.infinite,
        complete=complete, quarantine=tuple(tally.undetermined),
    )


# -- workers ------------------------------------------------------------------------

def _classify_many(args) -> list:
    systems, dom, budget = args
    return [classify_finiteness(s, dom, budget) for s in systems]


def _full_chunk(args) -> Tally:
    n, dom, budget, bits, value = args
    tally = Tally()
    for sys in enumerate_subsystems(n, "full", prefix=(bits, value)):
        tally.add(sys, classify_finiteness(sys, dom, budget))
    return tally


def _prefix_bits(n: int) -> int:
    return min(6, len(full_universe(n)))


def census(n: int, dom: Domain = Domain.INTEGERS, budget: Budget | None = None, *,
           mode: str | None = None, workers: int = 1, checkpoint: str | None = None,
           max_orbits: int | None = None) -> CensusRecord:
    """Compute f, g (over Z) or f_1, g_1 (over N) for E_n."""
    if not 1 <= n <= MAX_N:
        raise CensusError(f"n must be in 1..{MAX_N}, got {n}")
    if dom is Domain.POSITIVE:
        raise CensusError("census is defined over Z and N only")
    budget = budget or DEFAULT_BUDGET
    mode = mode or default_mode(n)
    if mode == "full":
        return _census_full(n, dom, budget, workers, checkpoint)
    if mode == "pruned":
        return _census_pruned(n, dom, budget, workers, max_orbits)
    if mode == "witness":
        return _census_witness(n, dom, budget)
    raise CensusError(f"unknown census mode {mode!r}")


def _load_checkpoint(path: str | None, n: int, dom: Domain) -> dict[str, Tally]:
    if not path or not os.path.exists(path):
        return {}
    with open(path) as fh:
        data = json.load(fh)
    if data.get("n") != n or data.get("domain") != dom.value or data.get("mode") != "full":
        raise CensusError(f"checkpoint {path} belongs to a different census")
    return {k: Tally.from_json(v) for k, v in data["chunks"].items()}


def _save_checkpoint(path: str, n: int, dom: Domain, done: dict[str, Tally]) -> None:
    data = {"n": n, "domain": dom.value, "mode": "full",
            "chunks": {k: done[k].to_json() for k in sorted(done, key=int)}}
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(data, fh, sort_keys=True)
    os.replace(tmp, path)


def _census_full(n, dom, budget, workers, checkpoint) -> CensusRecord:
    bits = _prefix_bits(n)
    if 2 ** len(full_universe(n)) > FULL_MODE_LIMIT:
        raise CensusError(f"full census of E_{n} is infeasible; use mode='pruned' or 'witness'")
    done = _load_checkpoint(checkpoint, n, dom)
    todo = [v for v in range(2**bits) if str(v) not in done]
    jobs = [(n, dom, budget, bits, v) for v in todo]
    if workers > 1 and jobs:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for v, tally in zip(todo, pool.map(_full_chunk, jobs)):
                done[str(v)] = tally
                if checkpoint:
                    _save_checkpoint(checkpoint, n, dom, done)
    else:
        for v, job in zip(todo, jobs):
            done[str(v)] = _full_chunk(job)
            if checkpoint:
                _save_checkpoint(checkpoint, n, dom, done)
    total = Tally()
    for v in range(2**bits):
        total = total.merge(done[str(v)])
    return _record(n, dom, "full", total, True)


def _census_pruned(n, dom, budget, workers, max_orbits) -> CensusRecord:
    """Level-by-level growth that never extends a finite system."""
    universe = full_universe(n)
    tally = Tally()
    empty = EnSystem(n, ())
    tally.add(empty, classify_finiteness(empty, dom, budget))
    frontier = {empty.key: empty}
    complete = True
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        while frontier:
            candidates: dict[tuple, EnSystem] = {}
            for sys in frontier.values():
                present = set(sys.constraints)
                for c in universe:
                    if c in present:
                        continue
                    grown = canonical_form(sys.with_constraints([c]))
                    if grown.key in candidates:
                        continue
                    subs = (EnSystem(n, grown.constraints[:i] + grown.constraints[i + 1:])
                            for i in range(len(grown)))
                    if all(canonical_form(s).key in frontier for s in subs):
                        candidates[grown.key] = grown
            ordered = [candidates[k] for k in sorted(candidates)]
            if max_orbits is not None and tally.orbits + len(ordered) > max_orbits:
                ordered = ordered[: max(0, max_orbits - tally.orbits)]
                complete = False
            verdicts = _classify_batch(ordered, dom, budget, pool, workers)
            nxt = {}
            for sys, verdict in zip(ordered, verdicts):
                tally.add(sys, verdict)
                if not isinstance(verdict, Finite):
                    nxt[sys.key] = sys
            log.info("level %d: %d classified, %d extendable", len(next(iter(candidates.values()), ())) if candidates else -1,
                     len(ordered), len(nxt))
            if not complete:
                break
            frontier = nxt
    finally:
        if pool is not None:
            pool.shutdown()
    return _record(n, dom, "pruned", tally, complete)


def _classify_batch(systems, dom, budget, pool, workers):
    if pool is None or len(systems) < 2:
        return _classify_many((systems, dom, budget))
    size = -(-len(systems) // (workers * 4))
    chunks = [systems[i:i + size] for i in range(0, len(systems), size)]
    out = []
    for part in pool.map(_classify_many, [(c, dom, budget) for c in chunks]):
        out.extend(part)
    return out


def _census_witness(n, dom, budget) -> CensusRecord:
    """Lower bounds from the known witness families only."""
    tally = Tally()
    families = [hypercube_system(n)]
    if n >= 2:
        families.append(f_witness_chain(n))
    for sys in families:
        tally.add(sys, classify_finiteness(sys, dom, budget))
    return _record(n, dom, "witness", tally, False)


# -- checks -------------------------------------------------------------------------

@dataclass(frozen=True)
class Lemma3Step:
    n: int
    height: int
    appended_height: int | None
    squared_var: int
    ok: bool

    def to_json(self) -> dict:
        return {"n": self.n, "height": self.height, "appended_height": self.appended_height,
                "squared_variable": self.squared_var, "ok": self.ok}


def lemma3_step(sys: EnSystem, dom: Domain = Domain.INTEGERS,
                budget: Budget | None = None) -> tuple[Lemma3Step, EnSystem]:
    """Append x_i * x_i = x_{n+1} for the coordinate i of largest height."""
    verdict = classify_finiteness(sys, dom, budget)
    if not isinstance(verdict, Finite):
        raise CensusError(f"lemma3_step needs a finite system, got {type(verdict).__name__}")
    sols = verdict.solutions.tuples
    height = verdict.solutions.height
    best = 1
    for i in range(1, sys.n + 1):
        col = max((abs(t[i - 1]) for t in sols), default=0)
        if col == height:
            best = i
            break
    grown = sys.with_constraints([Constraint.mul(best, best, sys.n + 1)], n=sys.n + 1)
    after = classify_finiteness(grown, dom, budget)
    new_height = after.solutions.height if isinstance(after, Finite) else None
    ok = new_height is not None and new_height == height * height and new_height >= height
    return Lemma3Step(sys.n, height, new_height, best, ok), grown


def lemma3_check(start: EnSystem, levels: int, dom: Domain = Domain.INTEGERS,
                 budget: Budget | None = None) -> list[Lemma3Step]:
    """Repeat ``lemma3_step`` ``levels`` times starting from ``start``."""
    out = []
    sys = start
    for _ in range(levels):
        step, sys = lemma3_step(sys, dom, budget)
        out.append(step)
    return out


@dataclass(frozen=True)
class AuditReport:
    finite_checked: int
    infinite_checked: int
    undetermined: int
    discrepancies: tuple[str, ...]


def soundness_audit(n: int, dom: Domain = Domain.INTEGERS, budget: Budget | None = None) -> AuditReport:
    """Re-verify every verdict of a full census by independent means.

    Finite verdicts are compared with a box search of radius twice their
    height (at least 2); infinite witnesses are re-checked as identities.
    """
    budget = budget or DEFAULT_BUDGET
    finite = infinite = undetermined = 0
    problems = []
    for sys in enumerate_subsystems(n, "full"):
        verdict = classify_finiteness(sys, dom, budget)
        if isinstance(verdict, Finite):
            finite += 1
            radius = max(2 * verdict.solutions.height, 2)
            box = enumerate_solutions(sys, dom, Box.cube(n, radius, dom), budget)
            if box.tuples != verdict.solutions.tuples:
                problems.append(f"{sys}: finite set {verdict.solutions.tuples} but box {radius} gives {box.tuples}")
        elif isinstance(verdict, Infinite):
            infinite += 1
            if not verify_witness(sys, dom, verdict.witness):
                problems.append(f"{sys}: witness fails")
            points = {verdict.at(t) for t in range(5)}
            if len(points) != 5 or not all(sys.holds(p) for p in points):
                problems.append(f"{sys}: witness does not give 5 distinct solutions")
        else:
            undetermined += 1
    return AuditReport(finite, infinite, undetermined, tuple(problems))
