import pytest
import sympy

from conftest import matrix_to_sympy, to_sympy
from mcmtop.catalog import load_catalog
from mcmtop.exactalg import HypersurfaceRing, Matrix, parse_matrix, parse_polynomial
from mcmtop.matfac import (DetNotPowerOfF, MatrixFactorization, MFMorphism, UnitEntryError, Witness,
                           check_witness, complete_factorization, direct_sum, fresh_pair, identity_morphism,
                           knorrer, lift_morphism, sharp_ring, sharp_sign_witness, swap, syzygy,
                           unit_after_inverting_t, verify_mf, verify_morphism, witness_ok)

XY = ("x", "y")
RING = HypersurfaceRing("Dinf-1", XY, parse_polynomial("x^2*y", XY))


def M(rows, variables=XY):
    return parse_matrix(rows, variables)


def test_verify_and_swap():
    mf = MatrixFactorization(RING, M([["x", "y"], ["0", "-x*y"]]), M([["x*y", "y"], ["0", "-x"]]))
    assert verify_mf(mf)
    assert verify_mf(swap(mf))
    bad = MatrixFactorization(RING, M([["x"]]), M([["x"]]))
    assert not verify_mf(bad)


def test_syzygy_refuses_unit_entries():
    mf = MatrixFactorization(RING, M([["1"]]), M([["x^2*y"]]))
    with pytest.raises(UnitEntryError):
        syzygy(mf)


def test_complete_factorization():
    mf = complete_factorization(M([["x", "y^2"], ["0", "-x"]]), RING)
    assert mf.psi == M([["x*y", "y^3"], ["0", "-x*y"]])
    with pytest.raises(DetNotPowerOfF):
        complete_factorization(M([["1", "0"], ["0", "1"]]), RING)
    with pytest.raises(DetNotPowerOfF):
        complete_factorization(M([["y^2", "0"], ["0", "1"]]), RING)


def test_complete_factorization_reducible_det():
    # det = -x^2 divides (x^2 y)^2 but is not a power of f
    mf = complete_factorization(M([["x", "y"], ["0", "-x"]]), RING)
    assert verify_mf(mf)


def test_knorrer_shape_and_det():
    cat = load_catalog("Dinf-1", 3)
    for sym in cat.nonfree_symbols():
        mf = cat.cls(sym).mf
        lifted = knorrer(mf)
        assert verify_mf(lifted)
        assert lifted.size == 2 * mf.size
        ring2 = lifted.ring
        # independent check with sympy: det(Phi##) = (f + u^2 + v^2)^n
        d = matrix_to_sympy(lifted.phi).det()
        assert sympy.expand(d - to_sympy(ring2.f) ** mf.size) == 0


def test_fresh_variables():
    assert fresh_pair(("x", "y")) == ("u", "v")
    assert fresh_pair(("x", "y", "u", "v")) == ("u2", "v2")
    r2, u, v = sharp_ring(RING)
    assert r2.variables == ("x", "y", "u", "v")


def test_sharp_sign_witness():
    cat = load_catalog("Dinf-1", 2)
    mf = cat.cls(("Mplus", 1)).mf
    w = sharp_sign_witness(mf)
    assert witness_ok(w, swap(knorrer(mf)), knorrer(swap(mf)))


def test_morphism_lift():
    cat = load_catalog("Dinf-1", 2)
    mf = cat.cls(("Mplus", 1)).mf
    m = identity_morphism(mf)
    assert verify_morphism(m)
    assert verify_morphism(lift_morphism(m))


def test_unit_after_inverting_t():
    V = XY + ("t",)
    fam = MatrixFactorization(RING, M([["x + t*y", "y^2"], ["t^2", "-x + t*y"]], V),
                              M([["x*y - t*y^2", "y^3"], ["t^2*y", "-x*y - t*y^2"]], V), ("t",))
    assert verify_mf(fam)
    gen = MatrixFactorization(RING, M([["x", "1"], ["0", "-x"]]), M([["x*y", "y"], ["0", "-x*y"]]))
    m = MFMorphism(fam, gen.with_params(("t",)), M([["0", "-1"], ["t^2", "-t*y"]], V),
                   M([["0", "1"], ["-t^2", "-t*y"]], V))
    assert verify_morphism(m)
    assert unit_after_inverting_t(m)
    m0 = MFMorphism(fam, gen.with_params(("t",)), M([["0", "-1"], ["0", "-t*y"]], V),
                    M([["0", "1"], ["-t^2", "-t*y"]], V))
    assert not unit_after_inverting_t(m0)


def test_witness_algebra():
    a = MatrixFactorization(RING, M([["x"]]), M([["x*y"]]))
    b = MatrixFactorization(RING, M([["-x"]]), M([["-x*y"]]))
    w = Witness.from_rows([["-1"]], [["1"]], XY)
    assert witness_ok(w, a, b)
    assert witness_ok(w.swapped(), swap(a), swap(b))
    assert witness_ok(w.then(Witness.from_rows([["-1"]], [["1"]], XY)), a, a)
    nonunit = Witness.from_rows([["x"]], [["x"]], XY)
    assert check_witness(nonunit, a, a)["units"] is False
    s = direct_sum(a, b)
    assert s.size == 2 and verify_mf(s)


def test_witness_lift():
    a = MatrixFactorization(RING, M([["x"]]), M([["x*y"]]))
    b = MatrixFactorization(RING, M([["-x"]]), M([["-x*y"]]))
    w = Witness.from_rows([["-1"]], [["1"]], XY)
    la, lb = knorrer(a), knorrer(b)
    assert witness_ok(w.lifted(la.variables), la, lb)


def test_pad_lifts_to_pad_plus_free():
    # (1, f)## is isomorphic to diag(1, f') and (f, 1)## to diag(f', 1)
    pad = MatrixFactorization(RING, M([["1"]]), M([["x^2*y"]]))
    lp = knorrer(pad)
    V = lp.variables
    f2 = lp.ring.f
    target = MatrixFactorization(lp.ring, Matrix.diagonal_blocks([M([["1"]], V), Matrix.scalar(f2, 1)]),
                                 Matrix.diagonal_blocks([Matrix.scalar(f2, 1), M([["1"]], V)]))
    w = Witness(M([["1", "0"], ["u - i*v", "1"]], V), M([["1", "u + i*v"], ["0", "1"]], V))
    assert witness_ok(w, lp, target)
