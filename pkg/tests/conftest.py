import pytest
import sympy

from mcmtop.catalog import load_catalog
from mcmtop.exactalg import Matrix, Polynomial


def to_sympy(p: Polynomial):
    """Independent reference: rebuild a polynomial as a sympy expression."""
    syms = sympy.symbols(p.variables)
    if len(p.variables) == 1:
        syms = (syms,) if not isinstance(syms, tuple) else syms
    expr = sympy.Integer(0)
    for exp, c in p.terms.items():
        coef = sympy.Rational(c.re.numerator, c.re.denominator) + \
            sympy.I * sympy.Rational(c.im.numerator, c.im.denominator)
        term = coef
        for s, k in zip(syms, exp):
            term *= s ** k
        expr += term
    return sympy.expand(expr)


def matrix_to_sympy(A: Matrix):
    return sympy.Matrix([[to_sympy(A[i, j]) for j in range(A.ncols)] for i in range(A.nrows)])


@pytest.fixture(scope="session")
def dinf1():
    return load_catalog("Dinf-1", 6)


@pytest.fixture(scope="session")
def dinf3():
    return load_catalog("Dinf-3", 4)


@pytest.fixture(scope="session")
def cusp():
    return load_catalog("cusp", 6)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(results):
        terminalreporter.write_line(results[k])
    failed = [r.nodeid for r in terminalreporter.stats.get("failed", []) if "test_acceptance" in r.nodeid]
    for nodeid in failed:
        if not any(nodeid.endswith(f"{k:02d}") or f"criterion_{k:02d}_" in nodeid for k in results):
            terminalreporter.write_line(f"FAIL {nodeid.split('::')[-1]} (error before verdict)")
