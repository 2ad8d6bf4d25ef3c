"""Command-line entry point: ``mcmtop <command> --ring LABEL ...``.

Exit codes: 0 pass, 1 verification failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .catalog import CatalogError, load_catalog, verify_catalog
from .degen import build_fact_store
from .exactalg import ParseError, parse_matrix
from .order import (DEFAULT_N_MAX, ClosureEngine, check_topology_axioms, decompose_E, enumerate_E,
                    export_graph, singleton_closures)
from .truncview import ModularModeError, NoStabilization, free_presentation, make_field, multiplicity_profile

DEFAULT_PRIME = 10009


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    ring: str = "Dinf-1"
    d: int | None = None
    N_max: int = DEFAULT_N_MAX
    n_max: int = DEFAULT_N_MAX
    s_max: int | None = None
    mode: str = "auto"
    prime: int = DEFAULT_PRIME
    seed: int = 0
    out: str | None = None
    format: str = "json"
    generator: str | None = None
    generator_rule: str = "paper-formula"
    sources: list = field(default_factory=list)
    samples: int = 200
    oracle_params: int = 2
    presentation: str | None = None
    cls: str | None = None

    def validate(self):
        for name in ("N_max", "n_max"):
            if getattr(self, name) < 1:
                raise UsageError(f"{name} must be positive")
        if self.s_max is not None and self.s_max < 1:
            raise UsageError("s_max must be positive")
        if self.d is not None and self.d < 0:
            raise UsageError("d must be nonnegative")
        if self.mode not in ("auto", "rational", "modular"):
            raise UsageError(f"unknown mode {self.mode!r}")
        if self.mode == "modular":
            try:
                make_field("modular", self.prime)
            except ModularModeError as exc:
                raise UsageError(str(exc)) from None
        if self.format not in ("json", "dot"):
            raise UsageError(f"unknown format {self.format!r}")

    def field_mode(self, catalog) -> str:
        if self.mode != "auto":
            return self.mode
        return "modular" if catalog.ring.krull_dimension >= 3 else "rational"


_FLAG_TO_FIELD = {"Nmax": "N_max", "nmax": "n_max", "smax": "s_max", "class_": "cls"}


def build_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then the config file, then explicit flags."""
    cfg = asdict(RunConfig())
    if getattr(args, "config", None):
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        unknown = set(loaded) - set(cfg)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    for key, value in vars(args).items():
        if key in ("command", "config", "func") or value is None:
            continue
        cfg[_FLAG_TO_FIELD.get(key, key)] = value
    config = RunConfig(**cfg)
    config.validate()
    return config


def _need_d(config: RunConfig) -> int:
    if config.d is None:
        raise UsageError("--d is required")
    return config.d


# ---------------------------------------------------------------------------
# commands


def cmd_verify(config: RunConfig) -> tuple[int, dict]:
    cat = load_catalog(config.ring, config.N_max)
    structural = verify_catalog(cat)
    struct_ok = all(all(v.values()) for v in structural.values())
    store = build_fact_store(cat)
    facts = [r.to_dict() for r in store.reports]
    mode = config.field_mode(cat)
    table = []
    for sym in cat.symbols():
        c = cat.cls(sym)
        if c.param is not None and c.param > config.oracle_params:
            continue
        if c.is_free:
            phi = free_presentation(1, cat.ring)
        else:
            phi = c.mf.phi
        try:
            e, _ = multiplicity_profile(phi, cat.ring, config.s_max, mode, config.prime)
        except NoStabilization as exc:
            table.append({"class": c.name, "expected": c.e, "oracle": None, "error": str(exc), "ok": False})
            continue
        table.append({"class": c.name, "expected": c.e, "oracle": e, "ok": e == c.e})
    ok = struct_ok and store.all_passed and all(row["ok"] for row in table)
    report = {"ring": cat.label, "N_max": cat.N_max, "mode": mode,
              "structural": structural, "facts": facts, "rejected": [str(f) for f in store.rejected],
              "multiplicity_table": table, "verdict": "pass" if ok else "fail"}
    return (0 if ok else 1), report


def cmd_enumerate(config: RunConfig) -> tuple[int, dict]:
    cat = load_catalog(config.ring, config.N_max)
    d = _need_d(config)
    members = enumerate_E(cat, d)
    return 0, {"ring": cat.label, "d": d, "N_max": cat.N_max, "count": len(members),
               "members": [str(v) for v in members]}


def cmd_closure(config: RunConfig) -> tuple[int, dict | str]:
    cat = load_catalog(config.ring, config.N_max)
    d = _need_d(config)
    if not config.generator:
        raise UsageError("--generator is required")
    gen = cat.vector(config.generator)
    universe = enumerate_E(cat, d)
    engine = ClosureEngine(cat, n_max=config.n_max)
    if config.format == "dot":
        return 0, export_graph(engine, universe, [gen] if gen in universe else [])
    res = engine.closure(gen, universe)
    doc = res.to_dict()
    doc["d"] = d
    return 0, doc


def cmd_components(config: RunConfig) -> tuple[int, dict]:
    cat = load_catalog(config.ring, config.N_max)
    d = _need_d(config)
    report = decompose_E(cat, d, config.generator_rule, config.n_max)
    return 0, report.to_dict()


def cmd_axioms(config: RunConfig) -> tuple[int, dict]:
    cat = load_catalog(config.ring, config.N_max)
    d = _need_d(config)
    universe = enumerate_E(cat, d)
    engine = ClosureEngine(cat, n_max=config.n_max)
    closures = singleton_closures(engine, universe)
    mode = "exhaustive" if len(universe) <= 18 else "sampled"
    rep = check_topology_axioms(universe, closures.__getitem__, mode, config.samples, config.seed)
    rep.update({"ring": cat.label, "d": d, "N_max": cat.N_max, "n_max": config.n_max, "seed": config.seed})
    return (0 if rep["verdict"] == "pass" else 1), rep


def _load_presentation(path: str, catalog):
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read presentation {path}: {exc}") from None
    rows = data.get("phi") if isinstance(data, dict) else data
    try:
        return parse_matrix(rows, catalog.ring.variables)
    except (ParseError, ValueError) as exc:
        raise UsageError(f"bad presentation: {exc}") from None


def cmd_oracle(config: RunConfig) -> tuple[int, dict]:
    cat = load_catalog(config.ring, min(config.N_max, 4))
    if config.presentation:
        phi = _load_presentation(config.presentation, cat)
        label = config.presentation
    elif config.cls:
        vec = cat.vector(config.cls)
        if vec.size() != 1:
            raise UsageError("--class takes a single class symbol")
        sym = vec.items[0][0]
        c = cat.cls(sym)
        phi = free_presentation(1, cat.ring) if c.is_free else c.mf.phi
        label = c.name
    else:
        raise UsageError("oracle needs a presentation file or --class")
    mode = config.field_mode(cat)
    try:
        e, prof = multiplicity_profile(phi, cat.ring, config.s_max, mode, config.prime)
    except NoStabilization as exc:
        return 1, {"ring": cat.label, "input": label, "error": str(exc),
                   "advice": "raise --smax"}
    return 0, {"ring": cat.label, "input": label, "e": e, "profile": prof.to_dict()}


def cmd_export(config: RunConfig) -> tuple[int, str | dict]:
    cat = load_catalog(config.ring, config.N_max)
    d = _need_d(config)
    universe = enumerate_E(cat, d)
    engine = ClosureEngine(cat, n_max=config.n_max)
    sources = [cat.vector(s) for s in config.sources] or None
    dot = export_graph(engine, universe, sources)
    if config.format == "json":
        return 0, {"ring": cat.label, "d": d, "dot": dot}
    return 0, dot


COMMANDS = {"verify": cmd_verify, "enumerate": cmd_enumerate, "closure": cmd_closure,
            "components": cmd_components, "axioms": cmd_axioms, "oracle": cmd_oracle,
            "export": cmd_export}


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--ring")
    common.add_argument("--d", type=int)
    common.add_argument("--Nmax", type=int, help="largest family parameter in the catalog")
    common.add_argument("--nmax", type=int, help="largest scale n tried by the closure search")
    common.add_argument("--smax", type=int, help="largest truncation level for the oracle")
    common.add_argument("--mode", choices=["auto", "rational", "modular"])
    common.add_argument("--prime", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--out")
    common.add_argument("--format", choices=["json", "dot"])
    common.add_argument("--config", help="JSON file of defaults; flags win")
    parser = argparse.ArgumentParser(prog="mcmtop", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("verify", parents=[common], help="replay catalog, facts and multiplicity table") \
        .add_argument("--oracle-params", type=int, dest="oracle_params")
    sub.add_parser("enumerate", parents=[common], help="list E(d)")
    p = sub.add_parser("closure", parents=[common], help="closure of one generator inside E(d)")
    p.add_argument("--generator")
    p = sub.add_parser("components", parents=[common], help="generator list and coverage of E(d)")
    p.add_argument("--generator-rule", dest="generator_rule", choices=["paper-formula", "all-of-E(d)"])
    p = sub.add_parser("axioms", parents=[common], help="closure axioms on E(d)")
    p.add_argument("--samples", type=int)
    p = sub.add_parser("oracle", parents=[common], help="multiplicity of a presented module")
    p.add_argument("presentation", nargs="?")
    p.add_argument("--class", dest="class_")
    p = sub.add_parser("export", parents=[common], help="membership graph of E(d)")
    p.add_argument("--source", action="append", dest="sources")
    return parser


def _emit(payload, config: RunConfig):
    text = payload if isinstance(payload, str) else json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if config.out:
        Path(config.out).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        config = build_config(args)
        status, payload = COMMANDS[args.command](config)
    except (UsageError, CatalogError) as exc:
        print(f"mcmtop: error: {exc}", file=sys.stderr)
        return 2
    _emit(payload, config)
    return status


if __name__ == "__main__":
    sys.exit(main())
