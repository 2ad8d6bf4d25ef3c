import pytest

from mcmtop.catalog import (BASE_RINGS, CatalogError, ModuleVector, UnsupportedRing, lift_catalog,
                            load_catalog, parse_symbol, symbol_text, verify_catalog)
from mcmtop.matfac import knorrer, verify_mf
from mcmtop.truncview import free_presentation, multiplicity_oracle


def test_symbols_roundtrip():
    assert parse_symbol("Mplus[3]") == (("Mplus", 3), 1)
    assert parse_symbol("R^2") == (("R", None), 2)
    assert symbol_text(("X_x2##", None)) == "X_x2##"
    assert parse_symbol("Iminus##[1]^3") == (("Iminus##", 1), 3)


def test_module_vector_ops():
    a = ModuleVector.parse("Dinf-1", "R^2 + X_x")
    b = ModuleVector.parse("Dinf-1", "X_x + Mplus[1]")
    assert str(a + b) == "Mplus[1] + R^2 + X_x^2"
    assert (a + b).contains(a)
    assert (a + b) - b == a
    assert a.scale(3).count(("R", None)) == 6
    assert ModuleVector.parse("Dinf-1", "0").is_empty()
    with pytest.raises(ValueError):
        a - b
    with pytest.raises(ValueError):
        a + ModuleVector.parse("cusp", "R")


def test_total_e(dinf1):
    v = dinf1.vector("R + Mminus[2] + X_xy")
    assert v.total_e(dinf1) == 3 + 4 + 1


@pytest.mark.parametrize("label", list(BASE_RINGS))
def test_catalog_structure(label):
    cat = load_catalog(label, 4)
    rep = verify_catalog(cat)
    bad = {k: v for k, v in rep.items() if not all(v.values())}
    assert bad == {}


@pytest.mark.parametrize("label", ["Ainf-3", "Dinf-3"])
def test_lifted_catalog_structure(label):
    cat = load_catalog(label, 3)
    rep = verify_catalog(cat)
    assert all(all(v.values()) for v in rep.values())


def test_unknown_ring():
    with pytest.raises(UnsupportedRing):
        load_catalog("E8")
    with pytest.raises(CatalogError):
        load_catalog("Dinf-1", 0)


def test_catalog_bounds(dinf1):
    assert ("Mplus", 6) in dinf1.classes
    assert ("Mplus", 7) not in dinf1.classes
    with pytest.raises(CatalogError):
        dinf1.vector("Mplus[7]")


def test_identifications(dinf1):
    ids = {symbol_text(k): (str(r.rhs), r.pads) for k, r in dinf1.identifications.items()}
    assert ids["Mplus[0]"] == ("X_y", 1)
    assert ids["Mminus[0]"] == ("R + X_x2", 0)
    assert ids["Iplus[0]"] == ("R", 1)
    assert ids["Iminus[0]"] == ("R", 1)


def test_lifted_identifications(dinf3):
    ids = {symbol_text(k): str(r.rhs) for k, r in dinf3.identifications.items()}
    assert ids["Mplus##[0]"] == "R + X_y##"
    assert ids["Mminus##[0]"] == "R + X_x2##"
    assert ids["Iplus##[0]"] == "R^2"


def test_lifted_classes_are_knorrer_images(dinf1, dinf3):
    for sym in dinf1.nonfree_symbols():
        if sym[1] is not None and sym[1] > dinf3.N_max:
            continue
        fam, param = sym
        mf3 = dinf3.cls((fam + "##", param)).mf
        assert mf3 == knorrer(dinf1.cls(sym).mf, target=dinf3.ring)
        assert verify_mf(mf3)


def test_lifted_e_against_oracle():
    cat = load_catalog("Dinf-3", 2)
    for sym in cat.symbols():
        c = cat.cls(sym)
        phi = free_presentation(1, cat.ring) if c.is_free else c.mf.phi
        assert multiplicity_oracle(phi, cat.ring, mode="modular", prime=10009) == c.e


def test_cone_classes():
    cat = load_catalog("cone")
    assert [c.name for c in map(cat.cls, cat.symbols())] == ["I", "J", "R"]
    assert {cat.e_of(s) for s in cat.symbols()} == {2}


def test_lift_twice():
    cat = lift_catalog(load_catalog("Ainf-1", 2), times=2)
    assert cat.ring.variables == ("x", "y", "u", "v", "u2", "v2")
    assert all(verify_mf(cat.cls(s).mf) for s in cat.nonfree_symbols())


def test_describe_is_serialisable(dinf1):
    import json
    doc = dinf1.describe()
    assert json.loads(json.dumps(doc))["ring"] == "Dinf-1"
