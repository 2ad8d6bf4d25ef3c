"""Degeneration certificates, their verification and the store of atomic facts."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .catalog import Catalog, ModuleVector, Symbol, _int_expr, symbol_text
from .exactalg import Matrix, parse_matrix
from .matfac import (
    MatrixFactorization,
    MFMorphism,
    Witness,
    check_witness,
    knorrer,
    swap,
    unit_after_inverting_t,
    verify_mf,
    verify_morphism,
)
from .truncview import free_presentation, verify_exact_truncated


class CertificateError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Certificates


@dataclass(frozen=True)
class FamilyCertificate:
    """A factorization over S[t]; generic fibre is the source, special fibre the target.

    ``morphism`` maps the family to ``generic`` (constant in t) and becomes
    invertible once t is; ``generic_witness`` identifies ``generic`` with the
    presentation of the source vector, ``special_witness`` the t = 0 fibre
    with the presentation of the target vector.
    """

    family: MatrixFactorization
    generic: MatrixFactorization
    morphism: MFMorphism
    generic_witness: Witness
    source_pads: int
    special_witness: Witness
    target_pads: int
    t: str = "t"

    kind = "family"


@dataclass(frozen=True)
class FreeCoverCertificate:
    """0 -> Omega M -> R^n -> M -> 0 from a factorization of size n."""

    module: Symbol
    syzygy: Symbol
    witness: Witness
    truncated_levels: tuple = ()

    kind = "free-cover"


@dataclass(frozen=True)
class SesCertificate:
    """Maps of 0 -> L -> M -> N -> 0 between presented modules, checked after truncation."""

    A: Matrix
    B: Matrix
    L: Matrix
    M: Matrix
    N: Matrix
    levels: tuple = (3, 4, 5)

    kind = "ses"


@dataclass(frozen=True)
class AtomicFact:
    name: str
    source: ModuleVector
    target: ModuleVector
    certificate: object = field(compare=False, repr=False)
    provenance: str = ""

    def __post_init__(self):
        if not self.provenance:
            raise CertificateError(f"fact {self.name!r} has no provenance")
        if self.source.ring != self.target.ring:
            raise CertificateError("source and target over different rings")

    def __str__(self):
        return f"{self.source} => {self.target}"


@dataclass
class VerificationReport:
    fact: str
    kind: str
    checks: dict
    flags: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict:
        return {"fact": self.fact, "kind": self.kind, "checks": self.checks,
                "flags": self.flags, "verdict": "pass" if self.passed else "fail"}


# ---------------------------------------------------------------------------
# Verification


def _witness_checks(prefix: str, w: Witness, src: MatrixFactorization, tgt: MatrixFactorization) -> dict:
    if src.size != tgt.size:
        return {f"{prefix}_shapes": False}
    return {f"{prefix}_{k}": v for k, v in check_witness(w, src, tgt).items()}


def _balance_checks(fact: AtomicFact, catalog: Catalog) -> dict:
    try:
        balanced = fact.source.total_e(catalog) == fact.target.total_e(catalog)
    except Exception:
        balanced = False
    return {"e_balance": balanced,
            "nonempty_iff": fact.source.is_empty() == fact.target.is_empty()}


def verify_certificate(fact: AtomicFact, catalog: Catalog) -> VerificationReport:
    cert = fact.certificate
    if isinstance(cert, FamilyCertificate):
        checks = _verify_family(fact, cert, catalog)
        flags = []
    elif isinstance(cert, FreeCoverCertificate):
        checks = _verify_free_cover(fact, cert, catalog)
        flags = ["truncated"] if cert.truncated_levels else []
    elif isinstance(cert, SesCertificate):
        checks = _verify_ses(fact, cert, catalog)
        flags = ["truncated"]
    else:
        raise CertificateError(f"unknown certificate type {type(cert).__name__}")
    checks.update(_balance_checks(fact, catalog))
    return VerificationReport(fact.name, cert.kind, checks, flags)


def _verify_family(fact: AtomicFact, cert: FamilyCertificate, catalog: Catalog) -> dict:
    checks = {}
    fam = cert.family
    checks["family_mf"] = fam.ring == catalog.ring and verify_mf(fam)
    m = cert.morphism
    checks["morphism_target"] = m.source == fam and m.target == cert.generic.with_params(fam.params)
    checks["morphism"] = verify_morphism(m)
    checks["unit_after_inverting_t"] = unit_after_inverting_t(m, cert.t)
    checks["generic_mf"] = verify_mf(cert.generic)
    src_pres = catalog.presentation(fact.source, cert.source_pads)
    checks.update(_witness_checks("generic", cert.generic_witness, cert.generic, src_pres))
    special = fam.subs({cert.t: 0})
    tgt_pres = catalog.presentation(fact.target, cert.target_pads)
    # the determinant order of the special fibre is its multiplicity
    checks["special_det_order"] = special.phi.det().order() == fact.target.total_e(catalog)
    checks.update(_witness_checks("special", cert.special_witness, special, tgt_pres))
    return checks


def _verify_free_cover(fact: AtomicFact, cert: FreeCoverCertificate, catalog: Catalog) -> dict:
    c = catalog.cls(cert.module)
    mf = c.mf
    checks = {"mf": verify_mf(mf), "no_unit_entries": not mf.has_unit_entry()}
    om = catalog.mf_for(*cert.syzygy)
    checks.update(_witness_checks("syzygy", cert.witness, swap(mf), om))
    free = ModuleVector.single(catalog.label, catalog.free_symbol(), mf.size)
    expect_target = ModuleVector(catalog.label, [(cert.module, 1), (cert.syzygy, 1)])
    checks["shape"] = fact.source == free and fact.target == expect_target
    if cert.truncated_levels:
        ring = catalog.ring
        report = verify_exact_truncated(mf.phi, Matrix.identity(mf.size, ring.variables),
                                        mf.psi, free_presentation(mf.size, ring), mf.phi,
                                        ring, cert.truncated_levels)
        checks["truncated_ses"] = report.passed
    return checks


def _verify_ses(fact: AtomicFact, cert: SesCertificate, catalog: Catalog) -> dict:
    report = verify_exact_truncated(cert.A, cert.B, cert.L, cert.M, cert.N, catalog.ring, cert.levels)
    return {"truncated_ses": report.passed}


# ---------------------------------------------------------------------------
# Building facts


def free_cover_fact(catalog: Catalog, sym: Symbol, truncated_levels: Sequence[int] = ()) -> AtomicFact:
    c = catalog.cls(sym)
    if c.is_free:
        raise CertificateError("free classes have no free-cover fact")
    try:
        om, w = catalog.omega(sym)
    except Exception as exc:
        raise CertificateError(f"missing syzygy witness for {c.name}: {exc}") from None
    catalog.cls(om)
    source = ModuleVector.single(catalog.label, catalog.free_symbol(), c.mf.size)
    target = ModuleVector(catalog.label, [(sym, 1), (om, 1)])
    cert = FreeCoverCertificate(sym, om, w, tuple(truncated_levels))
    return AtomicFact(f"free-cover {c.name}", source, target, cert,
                      f"free cover 0 -> Omega M -> R^{c.mf.size} -> M -> 0 for M = {c.name}")


def _template_witness(data: dict | None, size: int, catalog: Catalog, n: int) -> Witness:
    if data and "P" in data:
        variables = catalog.ring.variables
        return Witness(parse_matrix(data["P"], variables, {"n": n}),
                       parse_matrix(data["Q"], variables, {"n": n}))
    return Witness.identity(size, catalog.ring.variables)


def _family_fact(catalog: Catalog, name: str, provenance: str, family: MatrixFactorization,
                 alpha: Matrix, beta: Matrix, generic_ref: tuple, special_ref: tuple,
                 special_w: Witness) -> AtomicFact:
    gfam, gparam = generic_ref
    sfam, sparam = special_ref
    generic = catalog.mf_for(gfam, gparam)
    src, src_pads, gw = catalog.resolve(gfam, gparam)
    tgt, tgt_pads, tw = catalog.resolve(sfam, sparam)
    morphism = MFMorphism(family, generic.with_params(family.params), alpha, beta)
    cert = FamilyCertificate(family, generic, morphism, gw, src_pads, special_w.then(tw), tgt_pads)
    return AtomicFact(name, src, tgt, cert, provenance)


def family_facts(catalog: Catalog) -> list[AtomicFact]:
    """Instantiate the shipped one-parameter families within the catalog's bounds."""
    if catalog.base is not None:
        return [lift_certificate(f, catalog) for f in family_facts(catalog.base)]
    out = []
    variables = catalog.ring.variables + ("t",)
    for tpl in catalog.fact_templates:
        if tpl.get("kind") != "family":
            continue
        n = tpl.get("n_min", 0)
        while True:
            g = tpl["generic"]
            s = tpl["special"]
            gp, sp = _int_expr(g["param"], n), _int_expr(s["param"], n)
            if max(gp, sp) > catalog.N_max:
                break
            env = {"n": n}
            phi = parse_matrix(tpl["phi"], variables, env)
            psi = parse_matrix(tpl["psi"], variables, env)
            fam = MatrixFactorization(catalog.ring, phi, psi, ("t",))
            alpha = parse_matrix(tpl["alpha"], variables, env)
            beta = parse_matrix(tpl["beta"], variables, env)
            sw = _template_witness(s, fam.size, catalog, n)
            out.append(_family_fact(catalog, f"{tpl['name']} n={n}", tpl["provenance"] + f" (n={n})",
                                    fam, alpha, beta, (g["family"], gp), (s["family"], sp), sw))
            sv = tpl.get("swapped")
            if sv:
                g2, s2 = sv["generic"], sv["special"]
                out.append(_family_fact(
                    catalog, f"{sv['name']} n={n}", sv["provenance"] + f" (n={n})",
                    swap(fam), beta, alpha,
                    (g2["family"], _int_expr(g2["param"], n)),
                    (s2["family"], _int_expr(s2["param"], n)), sw.swapped()))
            n += 1
    return out


def lift_certificate(fact: AtomicFact, lifted: Catalog) -> AtomicFact:
    """The ## image of a family fact over the lifted catalog's ring."""
    cert = fact.certificate
    if not isinstance(cert, FamilyCertificate):
        raise CertificateError("only family certificates can be lifted")
    if lifted.base is None or lifted.base.label != fact.source.ring:
        raise CertificateError("target catalog is not a lift of the fact's ring")
    ring = lifted.ring
    family = knorrer(cert.family, target=ring)
    generic = knorrer(cert.generic, target=ring)
    variables = family.variables
    alpha = cert.morphism.alpha.embed(variables)
    beta = cert.morphism.beta.embed(variables)
    morphism = MFMorphism(family, generic.with_params(family.params),
                          Matrix.diagonal_blocks([alpha, beta]), Matrix.diagonal_blocks([beta, alpha]))
    src, src_pads, w_src = lifted.lift_presentation(fact.source, cert.source_pads)
    tgt, tgt_pads, w_tgt = lifted.lift_presentation(fact.target, cert.target_pads)
    gw = cert.generic_witness.lifted(ring.variables).then(w_src)
    sw = cert.special_witness.lifted(ring.variables).then(w_tgt)
    new = FamilyCertificate(family, generic, morphism, gw, src_pads, sw, tgt_pads, cert.t)
    return AtomicFact(f"{fact.name} ##", src, tgt, new, f"## lift of: {fact.provenance}")


def free_cover_facts(catalog: Catalog, truncated_levels: Sequence[int] = ()) -> list[AtomicFact]:
    # M and Omega M give the same rewrite; keep the first of each pair
    out, seen = [], set()
    for sym in catalog.nonfree_symbols():
        fact = free_cover_fact(catalog, sym, truncated_levels)
        key = (fact.source, fact.target)
        if key not in seen:
            seen.add(key)
            out.append(fact)
    return out


def shipped_facts(catalog: Catalog) -> list[AtomicFact]:
    return free_cover_facts(catalog) + family_facts(catalog)


@dataclass
class FactStore:
    catalog: Catalog
    facts: list
    reports: list
    rejected: list

    @property
    def all_passed(self) -> bool:
        return not self.rejected

    def describe(self) -> list[dict]:
        return [{"fact": f.name, "source": str(f.source), "target": str(f.target),
                 "provenance": f.provenance} for f in self.facts]


_STORES: dict = {}


def build_fact_store(catalog: Catalog, extra: Sequence[AtomicFact] = (),
                     include_truncated: bool = False) -> FactStore:
    """Verify every shipped fact from scratch; only passing facts are admitted.

    Facts certified by truncated checks alone stay out unless requested.
    """
    key = (id(catalog), tuple(id(f) for f in extra), include_truncated)
    if key in _STORES:
        return _STORES[key]
    admitted, reports, rejected = [], [], []
    for fact in list(shipped_facts(catalog)) + list(extra):
        rep = verify_certificate(fact, catalog)
        reports.append(rep)
        if not rep.passed:
            rejected.append(fact)
        elif "truncated" in rep.flags and isinstance(fact.certificate, SesCertificate) \
                and not include_truncated:
            continue
        else:
            admitted.append(fact)
    store = FactStore(catalog, admitted, reports, rejected)
    _STORES[key] = store
    return store


def fact_text(fact: AtomicFact) -> str:
    return f"{fact.name}: {fact.source} => {fact.target}"


__all__ = [
    "AtomicFact", "FamilyCertificate", "FreeCoverCertificate", "SesCertificate",
    "VerificationReport", "FactStore", "CertificateError", "verify_certificate",
    "lift_certificate", "free_cover_fact", "family_facts", "free_cover_facts",
    "shipped_facts", "build_fact_store", "fact_text", "symbol_text",
]
