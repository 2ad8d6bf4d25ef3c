"""Closure engine: bounded reachability over module vectors.

A membership N in K(M) is certified when n*M rewrites to n*N through
verified atomic facts (a rewrite replaces a summand ``source`` by
``target``).  The engine never certifies non-membership: anything it does
not reach is reported as unresolved within the searched bounds.
"""

from __future__ import annotations

import random
import re
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .catalog import Catalog, ModuleVector, parse_symbol
from .degen import FactStore, build_fact_store

DEFAULT_N_MAX = 6
FRONTIER_CAP = 10 ** 6
UNRESOLVED = "unresolved within shipped facts"
NOT_FOUND = "not found within bounds"


class BoundExceeded(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# E(d)


def enumerate_E(catalog: Catalog, d: int) -> list[ModuleVector]:
    """All direct sums of catalog classes with total multiplicity d, canonically ordered."""
    if d < 0:
        raise ValueError("d must be nonnegative")
    syms = catalog.symbols()
    es = [catalog.e_of(s) for s in syms]
    out = []

    def rec(k: int, remaining: int, acc: list):
        if remaining == 0:
            out.append(ModuleVector(catalog.label, list(acc)))
            return
        if k == len(syms):
            return
        e = es[k]
        for c in range(remaining // e, -1, -1):
            if c:
                acc.append((syms[k], c))
            rec(k + 1, remaining - c * e, acc)
            if c:
                acc.pop()

    rec(0, d, [])
    return sorted(out)


# ---------------------------------------------------------------------------
# Traces


@dataclass(frozen=True)
class Trace:
    """scale*generator rewritten to scale*member by applying ``steps`` (rule indices) in order."""

    scale: int
    steps: tuple

    def compose(self, other: "Trace") -> "Trace":
        """self: M -> N at scale a; other: N -> P at scale b; result M -> P at scale a*b."""
        a, b = self.scale, other.scale
        return Trace(a * b, self.steps * b + other.steps * a)

    def alongside(self, other: "Trace") -> "Trace":
        """self: M -> A, other: N -> B; result M + N -> A + B at the product scale."""
        a, b = self.scale, other.scale
        return Trace(a * b, self.steps * b + other.steps * a)

    def rescaled(self, k: int) -> "Trace":
        return Trace(self.scale * k, self.steps * k)


@dataclass
class Membership:
    vector: ModuleVector
    generator: ModuleVector
    trace: Trace


@dataclass
class ClosureResult:
    ring: str
    generators: list
    universe_size: int
    n_max: int
    N_max: int
    members: dict
    unresolved: list
    complete_search: bool
    rules: list = field(default_factory=list, repr=False)

    def member_vectors(self) -> set:
        return set(self.members)

    def unresolved_reason(self) -> str:
        return UNRESOLVED if self.complete_search else NOT_FOUND

    def to_dict(self) -> dict:
        members = []
        for vec in sorted(self.members):
            m = self.members[vec]
            members.append({"vector": str(vec), "generator": str(m.generator), "scale": m.trace.scale,
                            "trace": [self.rules[k].name for k in m.trace.steps]})
        return {"ring": self.ring, "N_max": self.N_max, "n_max": self.n_max,
                "generators": [str(g) for g in self.generators],
                "universe_size": self.universe_size, "members": members,
                "unresolved": [{"vector": str(v), "status": self.unresolved_reason()}
                               for v in sorted(self.unresolved)]}


# ---------------------------------------------------------------------------
# Engine


@dataclass(frozen=True)
class Rule:
    name: str
    src: tuple   # ((index, count), ...)
    tgt: tuple
    facts: tuple


class ClosureEngine:
    """Rewriting over count vectors indexed by the catalog's canonical symbol order."""

    def __init__(self, catalog: Catalog, store: FactStore | None = None, n_max: int = DEFAULT_N_MAX,
                 frontier_cap: int = FRONTIER_CAP):
        self.catalog = catalog
        self.store = store if store is not None else build_fact_store(catalog)
        self.n_max = n_max
        self.frontier_cap = frontier_cap
        self.symbols = catalog.symbols()
        self.index = {s: k for k, s in enumerate(self.symbols)}
        self.e = tuple(catalog.e_of(s) for s in self.symbols)
        merged: dict = {}
        for fact in self.store.facts:
            key = (self._sparse(fact.source), self._sparse(fact.target))
            merged.setdefault(key, []).append(fact)
        self.rules = [Rule(facts[0].name, src, tgt, tuple(facts))
                      for (src, tgt), facts in merged.items()]
        self._direct_cache: dict = {}
        self.hit_cap = False

    # -- conversions ----------------------------------------------------------------

    def _sparse(self, vec: ModuleVector) -> tuple:
        return tuple(sorted((self.index[s], c) for s, c in vec.items))

    def state(self, vec: ModuleVector) -> tuple:
        st = [0] * len(self.symbols)
        for s, c in vec.items:
            st[self.index[s]] = c
        return tuple(st)

    def vector(self, state: tuple) -> ModuleVector:
        return ModuleVector(self.catalog.label, [(self.symbols[k], c) for k, c in enumerate(state) if c])

    def total_e(self, state: tuple) -> int:
        return sum(c * e for c, e in zip(state, self.e))

    def apply(self, state: tuple, rule: Rule) -> tuple | None:
        for k, c in rule.src:
            if state[k] < c:
                return None
        st = list(state)
        for k, c in rule.src:
            st[k] -= c
        for k, c in rule.tgt:
            st[k] += c
        return tuple(st)

    # -- search -----------------------------------------------------------------------

    def _bfs(self, roots: dict, wanted: Callable[[tuple], bool], stop: Callable[[], bool]):
        """Multi-source BFS; roots maps start state -> tag.  Calls wanted() on every reached state."""
        parent: dict = {}
        queue = deque()
        for st, tag in roots.items():
            if st not in parent:
                parent[st] = (None, None, tag)
                queue.append(st)
                wanted(st)
        complete = True
        while queue:
            if stop():
                return parent, complete
            st = queue.popleft()
            tag = parent[st][2]
            for r_idx, rule in enumerate(self.rules):
                nxt = self.apply(st, rule)
                if nxt is None or nxt in parent:
                    continue
                parent[nxt] = (st, r_idx, tag)
                wanted(nxt)
                queue.append(nxt)
                if len(parent) > self.frontier_cap:
                    self.hit_cap = True
                    return parent, False
        return parent, complete

    @staticmethod
    def _path(parent: dict, st: tuple) -> tuple:
        steps = []
        while True:
            prev, r_idx, _ = parent[st]
            if prev is None:
                break
            steps.append(r_idx)
            st = prev
        return tuple(reversed(steps))

    def search(self, sources: dict, universe: Iterable[ModuleVector], saturate: bool = True,
               n_max: int | None = None) -> tuple[dict, bool]:
        """Certify universe members reachable from the sources.

        ``sources`` maps a generator vector to (origin generator, base trace).
        Returns ({member: Membership}, complete) where complete is False when
        the frontier cap cut a search short.
        """
        n_max = self.n_max if n_max is None else n_max
        targets = {self.state(v): v for v in universe}
        found: dict = {}
        complete = True
        frontier = {self.state(g): (origin, base) for g, (origin, base) in sources.items()}
        for st, (origin, base) in frontier.items():
            if st in targets and targets[st] not in found:
                found[targets[st]] = Membership(targets[st], origin, base)
        explored: set = set()
        while frontier:
            new_sources: dict = {}
            for n in range(1, n_max + 1):
                if len(found) == len(targets):
                    break
                roots = {}
                for st, info in frontier.items():
                    roots.setdefault(tuple(c * n for c in st), (st, info))

                def wanted(state, n=n):
                    if any(c % n for c in state):
                        return
                    vec = targets.get(tuple(c // n for c in state))
                    if vec is not None and vec not in covered:
                        covered.add(vec)
                        pending.append((state, vec))

                pending: list = []
                covered = set(found)
                parent, ok = self._bfs(roots, wanted, lambda: len(covered) == len(targets))
                complete &= ok
                for state, vec in pending:
                    if vec in found:
                        continue
                    src_state, (origin, base) = parent[state][2]
                    steps = self._path(parent, state)
                    trace = base.compose(Trace(n, steps))
                    found[vec] = Membership(vec, origin, trace)
                    new_sources[self.state(vec)] = (origin, trace)
            explored.update(frontier)
            if not saturate:
                break
            frontier = {st: info for st, info in new_sources.items() if st not in explored}
            if len(found) == len(targets):
                break
        return found, complete

    def closure(self, generator: ModuleVector, universe: Sequence[ModuleVector],
                saturate: bool = True, n_max: int | None = None) -> ClosureResult:
        universe = list(universe)
        sources = {generator: (generator, Trace(1, ()))}
        found, complete = self.search(sources, universe, saturate, n_max)
        unresolved = [v for v in universe if v not in found]
        return ClosureResult(self.catalog.label, [generator], len(universe),
                             self.n_max if n_max is None else n_max, self.catalog.N_max,
                             found, unresolved, complete, self.rules)

    def closure_of_set(self, generators: Sequence[ModuleVector], universe: Sequence[ModuleVector],
                       saturate: bool = True, n_max: int | None = None) -> ClosureResult:
        universe = list(universe)
        sources = {g: (g, Trace(1, ())) for g in generators}
        found, complete = self.search(sources, universe, saturate, n_max)
        unresolved = [v for v in universe if v not in found]
        return ClosureResult(self.catalog.label, list(generators), len(universe),
                             self.n_max if n_max is None else n_max, self.catalog.N_max,
                             found, unresolved, complete, self.rules)

    # -- replay -------------------------------------------------------------------------

    def replay(self, generator: ModuleVector, member: ModuleVector, trace: Trace) -> bool:
        """Re-apply a trace from scratch, checking applicability and multiplicity at every step."""
        st = tuple(c * trace.scale for c in self.state(generator))
        e0 = self.total_e(st)
        for r_idx in trace.steps:
            nxt = self.apply(st, self.rules[r_idx])
            if nxt is None or self.total_e(nxt) != e0:
                return False
            st = nxt
        return st == tuple(c * trace.scale for c in self.state(member))

    def trace_states(self, generator: ModuleVector, trace: Trace) -> list[ModuleVector]:
        st = tuple(c * trace.scale for c in self.state(generator))
        out = [self.vector(st)]
        for r_idx in trace.steps:
            st = self.apply(st, self.rules[r_idx])
            if st is None:
                raise ValueError("trace does not replay")
            out.append(self.vector(st))
        return out


# ---------------------------------------------------------------------------
# Generators and decomposition


def _l_solutions(catalog: Catalog, basis: Sequence[str], d: int) -> list[ModuleVector]:
    syms = [parse_symbol(b)[0] for b in basis]
    es = [catalog.e_of(s) for s in syms]
    out = []

    def rec(k, remaining, acc):
        if remaining == 0:
            out.append(ModuleVector(catalog.label, list(acc)))
            return
        if k == len(syms):
            return
        for c in range(remaining // es[k] + 1):
            if c:
                acc.append((syms[k], c))
            rec(k + 1, remaining - c * es[k], acc)
            if c:
                acc.pop()

    rec(0, d, [])
    return sorted(set(out))


def paper_generators(catalog: Catalog, d: int) -> list[ModuleVector]:
    """Generators of the component decomposition prescribed for the ring."""
    rule = catalog.generator_rule
    kind = rule.get("rule", "all")
    free = catalog.free_symbol()
    e_free = catalog.e_of(free)
    if kind == "free-plus-odd":
        odd = parse_symbol(rule["odd"])[0]
        e_odd = catalog.e_of(odd)
        if d % e_free == 0:
            return [ModuleVector(catalog.label, {free: d // e_free})]
        if (d - e_odd) % e_free == 0 and d >= e_odd:
            return [ModuleVector(catalog.label, {free: (d - e_odd) // e_free, odd: 1})]
        return []
    if kind == "free-power":
        return [ModuleVector(catalog.label, {free: d // e_free})] if d % e_free == 0 else []
    if kind == "l-solutions":
        return _l_solutions(catalog, rule["basis"], d)
    if kind == "listed":
        return [catalog.vector(t) for t in rule.get("lists", {}).get(str(d), [])]
    return enumerate_E(catalog, d)


@dataclass
class DecompositionReport:
    ring: str
    d: int
    N_max: int
    n_max: int
    rule: str
    generators: list
    universe: list
    members: dict
    unresolved: list
    status: str
    rules: list = field(default_factory=list, repr=False)

    @property
    def covered(self) -> bool:
        return not self.unresolved

    def to_dict(self) -> dict:
        members = []
        for vec in sorted(self.members):
            m = self.members[vec]
            members.append({"vector": str(vec), "generator": str(m.generator), "scale": m.trace.scale,
                            "trace": [self.rules[k].name for k in m.trace.steps]})
        return {"ring": self.ring, "d": self.d, "N_max": self.N_max, "n_max": self.n_max,
                "generator_rule": self.rule,
                "generators": [str(g) for g in self.generators],
                "universe_size": len(self.universe),
                "coverage": "complete" if self.covered else "partial",
                "members": members,
                "unresolved": [{"vector": str(v), "status": self.status} for v in sorted(self.unresolved)],
                "bound_note": f"family parameters limited to N_max={self.N_max}; scales up to n_max={self.n_max}"}


def decompose_E(catalog: Catalog, d: int, generator_rule: str = "paper-formula",
                n_max: int = DEFAULT_N_MAX, engine: ClosureEngine | None = None) -> DecompositionReport:
    """Certify which members of E(d) lie in the closure of which generator."""
    engine = engine or ClosureEngine(catalog, n_max=n_max)
    universe = enumerate_E(catalog, d)
    if generator_rule == "paper-formula":
        gens = paper_generators(catalog, d)
    elif generator_rule == "all-of-E(d)":
        gens = list(universe)
    else:
        raise ValueError(f"unknown generator rule {generator_rule!r}")
    sources = {g: (g, Trace(1, ())) for g in gens}
    found, complete = engine.search(sources, universe, saturate=True, n_max=n_max)
    unresolved = [v for v in universe if v not in found]
    status = UNRESOLVED if complete else NOT_FOUND
    return DecompositionReport(catalog.label, d, catalog.N_max, n_max, generator_rule, gens,
                               universe, found, unresolved, status, engine.rules)


# ---------------------------------------------------------------------------
# Topology checks


def singleton_closures(engine: ClosureEngine, universe: Sequence[ModuleVector],
                       n_max: int | None = None) -> dict:
    return {x: frozenset(engine.closure(x, universe, n_max=n_max).members) for x in universe}


def check_topology_axioms(universe: Sequence[ModuleVector], closure_fn: Callable[[ModuleVector], frozenset],
                          mode: str = "exhaustive", samples: int = 200, seed: int = 0,
                          set_closure: Callable | None = None) -> dict:
    """Kuratowski axioms for C(X) = union of closure_fn(x), x in X.

    ``set_closure`` (optional) is an independent closure of a whole set,
    compared against that union.  Exhaustive mode runs over every subset.
    """
    universe = sorted(universe)
    idx = {v: k for k, v in enumerate(universe)}
    singles = [0] * len(universe)
    for v in universe:
        mask = 0
        for w in closure_fn(v):
            if w not in idx:
                raise ValueError(f"closure leaves the universe: {w}")
            mask |= 1 << idx[w]
        singles[idx[v]] = mask

    def C(mask: int) -> int:
        out = 0
        k = 0
        while mask:
            if mask & 1:
                out |= singles[k]
            mask >>= 1
            k += 1
        return out

    violations = {"empty": [], "extensive": [], "additive": [], "idempotent": [], "generic_point": [],
                  "set_closure": []}
    if C(0) != 0:
        violations["empty"].append("C(empty) is not empty")
    n = len(universe)
    names = lambda m: [str(universe[k]) for k in range(n) if m >> k & 1]

    # generic points: N in C(M) implies C(N) inside C(M)
    for k in range(n):
        for j in range(n):
            if singles[k] >> j & 1 and singles[j] & ~singles[k]:
                violations["generic_point"].append((str(universe[j]), str(universe[k])))

    if mode == "exhaustive":
        if n > 22:
            raise ValueError("universe too large for exhaustive subset enumeration")
        table = [0] * (1 << n)
        for m in range(1, 1 << n):
            low = (m & -m).bit_length() - 1
            table[m] = table[m & (m - 1)] | singles[low]
        for m in range(1 << n):
            c = table[m]
            if m & ~c:
                violations["extensive"].append(names(m))
            if C(c) != c:
                violations["idempotent"].append(names(m))
        # additivity against every pair (X, {y}); larger pairs follow by induction on |Y|
        for m in range(1 << n):
            for y in range(n):
                if table[m | 1 << y] != table[m] | singles[y]:
                    violations["additive"].append((names(m), str(universe[y])))
        pairs_checked = (1 << n) * n
        subsets = 1 << n
    elif mode == "sampled":
        rng = random.Random(seed)
        for _ in range(samples):
            X = _random_subset(rng, n)
            Y = _random_subset(rng, n)
            cx, cy, cxy = C(X), C(Y), C(X | Y)
            if X & ~cx:
                violations["extensive"].append(names(X))
            if cxy != cx | cy:
                violations["additive"].append((names(X), names(Y)))
            if C(cx) != cx:
                violations["idempotent"].append(names(X))
            if set_closure is not None:
                got = set_closure([universe[k] for k in range(n) if X >> k & 1])
                if {idx[w] for w in got} != {k for k in range(n) if cx >> k & 1}:
                    violations["set_closure"].append(names(X))
        pairs_checked = samples
        subsets = samples
    else:
        raise ValueError(f"unknown mode {mode!r}")
    ok = not any(violations.values())
    return {"mode": mode, "universe_size": n, "subsets": subsets, "pairs_checked": pairs_checked,
            "violations": {k: v[:20] for k, v in violations.items()},
            "verdict": "pass" if ok else "fail"}


def _random_subset(rng: random.Random, n: int) -> int:
    size = rng.randint(1, min(4, n))
    mask = 0
    for k in rng.sample(range(n), size):
        mask |= 1 << k
    return mask


# ---------------------------------------------------------------------------
# Graph export


def export_graph(engine: ClosureEngine, universe: Sequence[ModuleVector],
                 sources: Sequence[ModuleVector] | None = None, n_max: int | None = None) -> str:
    """Dot graph of direct (unsaturated) certified memberships between universe members."""
    universe = sorted(universe)
    sources = universe if sources is None else sorted(sources)
    lines = ["digraph degenerations {"]
    ids = {v: f"n{k}" for k, v in enumerate(universe)}
    for v in universe:
        lines.append(f'  {ids[v]} [label="{v}"];')
    for g in sources:
        res = engine.closure(g, universe, saturate=False, n_max=n_max)
        for vec in sorted(res.members):
            if vec == g:
                continue
            m = res.members[vec]
            used = sorted({engine.rules[k].name for k in m.trace.steps})
            prov = "; ".join(sorted({f.provenance for k in set(m.trace.steps) for f in engine.rules[k].facts}))
            lines.append(f'  {ids[g]} -> {ids[vec]} [label="n={m.trace.scale}: {", ".join(used)}", '
                         f'provenance="{prov}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


_EDGE = re.compile(r"^\s*n\d+ -> n\d+ ")


def graph_edges(dot: str) -> list[str]:
    return [line.strip() for line in dot.splitlines() if _EDGE.match(line)]
