"""Exact arithmetic over Q(i): Gaussian rationals, sparse polynomials, polynomial matrices.

Everything here is immutable once built.  Polynomials carry their ordered
variable list; arithmetic between polynomials over different variable lists
is an error, use :meth:`Polynomial.embed` to move into a larger ring first.
"""

from __future__ import annotations

import ast
import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Iterable, Mapping, Sequence


class NotDivisible(ArithmeticError):
    pass


class VariableMismatch(ValueError):
    pass


class ParseError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Gaussian rationals


class GaussianRational:
    """re + im*i with exact rational parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = re if type(re) is Fraction else Fraction(re)
        self.im = im if type(im) is Fraction else Fraction(im)

    @classmethod
    def coerce(cls, value) -> "GaussianRational":
        if isinstance(value, GaussianRational):
            return value
        if isinstance(value, (int, Fraction)):
            return cls(value, 0)
        if isinstance(value, complex):
            raise TypeError("floating complex numbers are not exact")
        raise TypeError(f"cannot coerce {value!r} to GaussianRational")

    def __add__(self, other):
        other = _coerce_or_none(other)
        if other is None:
            return NotImplemented
        return GaussianRational(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = _coerce_or_none(other)
        if other is None:
            return NotImplemented
        return GaussianRational(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        other = _coerce_or_none(other)
        if other is None:
            return NotImplemented
        return other - self

    def __mul__(self, other):
        other = _coerce_or_none(other)
        if other is None:
            return NotImplemented
        a, b, c, d = self.re, self.im, other.re, other.im
        if not b and not d:
            return GaussianRational(a * c, 0)
        return GaussianRational(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _coerce_or_none(other)
        if other is None:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        other = _coerce_or_none(other)
        if other is None:
            return NotImplemented
        return other * self.inverse()

    def inverse(self) -> "GaussianRational":
        if not self:
            raise ZeroDivisionError("division by zero in Q(i)")
        if not self.im:
            return GaussianRational(1 / self.re, 0)
        norm = self.re * self.re + self.im * self.im
        return GaussianRational(self.re / norm, -self.im / norm)

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def conjugate(self) -> "GaussianRational":
        return GaussianRational(self.re, -self.im)

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        other = _coerce_or_none(other)
        if other is None:
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        if not self.im:
            return hash(self.re)
        return hash((self.re, self.im))

    def is_real(self) -> bool:
        return not self.im

    def __repr__(self):
        return f"GaussianRational({self.re}, {self.im})"

    def __str__(self):
        return _format_coefficient(self)


def _coerce_or_none(value):
    if isinstance(value, GaussianRational):
        return value
    if isinstance(value, (int, Fraction)):
        return GaussianRational(value, 0)
    return None


I = GaussianRational(0, 1)
ZERO = GaussianRational(0, 0)
ONE = GaussianRational(1, 0)


def _format_rational(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _format_coefficient(c: GaussianRational) -> str:
    if not c.im:
        return _format_rational(c.re)
    if not c.re:
        if c.im == 1:
            return "i"
        if c.im == -1:
            return "-i"
        return f"{_format_rational(c.im)}*i"
    im = c.im
    sign = "-" if im < 0 else "+"
    mag = abs(im)
    im_text = "i" if mag == 1 else f"{_format_rational(mag)}*i"
    return f"({_format_rational(c.re)} {sign} {im_text})"


# ---------------------------------------------------------------------------
# Polynomials


Exponent = tuple


def lex_key(order_index: tuple[int, ...]):
    """Sort key for exponent vectors under lex with the given variable precedence."""
    return lambda exp: tuple(exp[k] for k in order_index)


class Polynomial:
    """Sparse multivariate polynomial with Gaussian-rational coefficients."""

    __slots__ = ("variables", "terms", "_hash")

    def __init__(self, variables: Sequence[str], terms: Mapping[Exponent, object] | None = None):
        self.variables = tuple(variables)
        clean = {}
        nvars = len(self.variables)
        if terms:
            for exp, coef in terms.items():
                exp = tuple(exp)
                if len(exp) != nvars:
                    raise VariableMismatch(
                        f"exponent {exp} does not match variables {self.variables}"
                    )
                coef = GaussianRational.coerce(coef)
                if coef:
                    clean[exp] = coef
        self.terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, variables: tuple, terms: dict) -> "Polynomial":
        # trusted constructor: terms already clean
        p = object.__new__(cls)
        p.variables = variables
        p.terms = terms
        p._hash = None
        return p

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, variables: Sequence[str]) -> "Polynomial":
        return cls._raw(tuple(variables), {})

    @classmethod
    def constant(cls, value, variables: Sequence[str]) -> "Polynomial":
        variables = tuple(variables)
        return cls(variables, {(0,) * len(variables): value})

    @classmethod
    def var(cls, name: str, variables: Sequence[str]) -> "Polynomial":
        variables = tuple(variables)
        if name not in variables:
            raise VariableMismatch(f"{name!r} not among {variables}")
        exp = tuple(1 if v == name else 0 for v in variables)
        return cls._raw(variables, {exp: ONE})

    @classmethod
    def monomial(cls, exp: Sequence[int], variables: Sequence[str], coef=1) -> "Polynomial":
        return cls(tuple(variables), {tuple(exp): coef})

    # -- basic predicates ---------------------------------------------------

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        zero = (0,) * len(self.variables)
        return all(exp == zero for exp in self.terms)

    def constant_term(self) -> GaussianRational:
        return self.terms.get((0,) * len(self.variables), ZERO)

    def is_unit_at_origin(self) -> bool:
        """Unit in the power series ring: nonzero constant term."""
        return bool(self.constant_term())

    def total_degree(self) -> int:
        if not self.terms:
            return -1
        return max(sum(e) for e in self.terms)

    def order(self) -> int:
        """Lowest total degree of a term (m-adic order); -1 for zero."""
        if not self.terms:
            return -1
        return min(sum(e) for e in self.terms)

    def is_real(self) -> bool:
        return all(c.is_real() for c in self.terms.values())

    # -- arithmetic ---------------------------------------------------------

    def _check(self, other: "Polynomial"):
        if self.variables != other.variables:
            raise VariableMismatch(
                f"variable lists differ: {self.variables} vs {other.variables}"
            )

    def _lift(self, other) -> "Polynomial | None":
        if isinstance(other, Polynomial):
            self._check(other)
            return other
        if isinstance(other, (int, Fraction, GaussianRational)):
            return Polynomial.constant(other, self.variables)
        return None

    def __add__(self, other):
        other = self._lift(other)
        if other is None:
            return NotImplemented
        terms = dict(self.terms)
        for exp, c in other.terms.items():
            s = terms.get(exp)
            if s is None:
                terms[exp] = c
            else:
                s = s + c
                if s:
                    terms[exp] = s
                else:
                    del terms[exp]
        return Polynomial._raw(self.variables, terms)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial._raw(self.variables, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        other = self._lift(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = self._lift(other)
        if other is None:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, GaussianRational)):
            c = GaussianRational.coerce(other)
            if not c:
                return Polynomial.zero(self.variables)
            return Polynomial._raw(self.variables, {e: v * c for e, v in self.terms.items()})
        other = self._lift(other)
        if other is None:
            return NotImplemented
        terms: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                exp = tuple(a + b for a, b in zip(e1, e2))
                s = terms.get(exp)
                terms[exp] = c1 * c2 if s is None else s + c1 * c2
        return Polynomial._raw(self.variables, {e: c for e, c in terms.items() if c})

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("polynomial powers must be nonnegative integers")
        result = Polynomial.constant(1, self.variables)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __truediv__(self, other):
        """Division by a nonzero scalar or by a constant polynomial."""
        if isinstance(other, Polynomial):
            if not other.is_constant() or not other:
                raise NotDivisible("use exact_divide for polynomial divisors")
            other = other.constant_term()
        c = GaussianRational.coerce(other)
        return self * c.inverse()

    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self.variables == other.variables and self.terms == other.terms
        if isinstance(other, (int, Fraction, GaussianRational)):
            return self == Polynomial.constant(other, self.variables)
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.variables, frozenset(self.terms.items())))
        return self._hash

    # -- structural -----------------------------------------------------------

    def embed(self, variables: Sequence[str]) -> "Polynomial":
        """Re-express over a variable list containing all of ours (any order)."""
        variables = tuple(variables)
        if variables == self.variables:
            return self
        try:
            pos = [variables.index(v) for v in self.variables]
        except ValueError:
            missing = [v for v in self.variables if v not in variables]
            raise VariableMismatch(f"cannot embed: {missing} missing from {variables}") from None
        n = len(variables)
        terms = {}
        for exp, c in self.terms.items():
            new = [0] * n
            for k, p in enumerate(pos):
                new[p] = exp[k]
            terms[tuple(new)] = c
        return Polynomial._raw(variables, terms)

    def drop_variables(self, names: Iterable[str]) -> "Polynomial":
        """Project to fewer variables; the dropped ones must not occur."""
        names = set(names)
        keep = [k for k, v in enumerate(self.variables) if v not in names]
        gone = [k for k, v in enumerate(self.variables) if v in names]
        terms = {}
        for exp, c in self.terms.items():
            if any(exp[k] for k in gone):
                raise VariableMismatch(f"{self} still involves one of {sorted(names)}")
            terms[tuple(exp[k] for k in keep)] = c
        return Polynomial._raw(tuple(self.variables[k] for k in keep), terms)

    def used_variables(self) -> set[str]:
        used = set()
        for exp in self.terms:
            for k, a in enumerate(exp):
                if a:
                    used.add(self.variables[k])
        return used

    def subs(self, values: Mapping[str, object]) -> "Polynomial":
        """Substitute scalars or polynomials (same variable list) for variables."""
        idx = {v: k for k, v in enumerate(self.variables)}
        for name in values:
            if name not in idx:
                raise VariableMismatch(f"{name!r} not among {self.variables}")
        result = Polynomial.zero(self.variables)
        for exp, c in self.terms.items():
            term = Polynomial._raw(self.variables, {
                tuple(0 if self.variables[k] in values else a for k, a in enumerate(exp)): c
            })
            for name, value in values.items():
                a = exp[idx[name]]
                if a:
                    if isinstance(value, Polynomial):
                        term = term * value ** a
                    else:
                        term = term * _scalar_pow(value, a)
            result = result + term
        return result

    def evaluate(self, point: Mapping[str, object]) -> GaussianRational:
        """Evaluate at a full point (every variable assigned a scalar)."""
        vals = [GaussianRational.coerce(point[v]) for v in self.variables]
        total = ZERO
        for exp, c in self.terms.items():
            term = c
            for v, a in zip(vals, exp):
                if a:
                    term = term * _scalar_pow(v, a)
            total = total + term
        return total

    def conjugate(self) -> "Polynomial":
        return Polynomial._raw(self.variables, {e: c.conjugate() for e, c in self.terms.items()})

    # -- ordering -------------------------------------------------------------

    def sorted_terms(self, order: Sequence[str] | None = None):
        """Terms largest first under lex with the given variable precedence."""
        key = lex_key(_order_index(self.variables, order))
        return sorted(self.terms.items(), key=lambda t: key(t[0]), reverse=True)

    def leading_term(self, order: Sequence[str] | None = None):
        if not self.terms:
            raise ValueError("zero polynomial has no leading term")
        key = lex_key(_order_index(self.variables, order))
        exp = max(self.terms, key=key)
        return exp, self.terms[exp]

    # -- text -------------------------------------------------------------------

    def __str__(self):
        return to_text(self)

    def __repr__(self):
        return f"Polynomial({to_text(self)!r}, {self.variables})"


def _scalar_pow(value, a: int) -> GaussianRational:
    v = GaussianRational.coerce(value)
    result = ONE
    for _ in range(a):
        result = result * v
    return result


def _order_index(variables: tuple, order: Sequence[str] | None) -> tuple[int, ...]:
    if order is None:
        return tuple(range(len(variables)))
    idx = [variables.index(v) for v in order if v in variables]
    rest = [k for k in range(len(variables)) if k not in idx]
    return tuple(idx + rest)


# ---------------------------------------------------------------------------
# Division


def poly_arith(a: Polynomial, b: Polynomial, op: str) -> Polynomial:
    if a.variables != b.variables:
        raise VariableMismatch(f"variable lists differ: {a.variables} vs {b.variables}")
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown op {op!r}")


def _divide(p: Polynomial, q: Polynomial, order: Sequence[str] | None):
    """Multivariate division of p by the single polynomial q; returns (quotient, remainder)."""
    p._check(q)
    if not q:
        raise ZeroDivisionError("division by the zero polynomial")
    key = lex_key(_order_index(p.variables, order))
    lexp, lc = q.leading_term(order)
    lc_inv = lc.inverse()
    tail = [(e, c) for e, c in q.terms.items() if e != lexp]
    work = dict(p.terms)
    quotient: dict = {}
    remainder: dict = {}
    while work:
        exp = max(work, key=key)
        c = work.pop(exp)
        if all(a >= b for a, b in zip(exp, lexp)):
            qexp = tuple(a - b for a, b in zip(exp, lexp))
            qc = c * lc_inv
            quotient[qexp] = quotient.get(qexp, ZERO) + qc
            for te, tc in tail:
                e = tuple(a + b for a, b in zip(qexp, te))
                s = work.get(e, ZERO) - qc * tc
                if s:
                    work[e] = s
                else:
                    work.pop(e, None)
        else:
            remainder[exp] = c
    return (Polynomial(p.variables, quotient), Polynomial._raw(p.variables, remainder))


def exact_divide(p: Polynomial, q: Polynomial, order: Sequence[str] | None = None) -> Polynomial:
    quotient, remainder = _divide(p, q, order)
    if remainder:
        raise NotDivisible(f"{q} does not divide {p}")
    return quotient


def normal_form(p: Polynomial, ring: "HypersurfaceRing", order: Sequence[str] | None = None) -> Polynomial:
    """Canonical representative of p modulo (f).

    p may live over the ring's variables plus extra parameters (e.g. t); the
    hypersurface equation is embedded accordingly.
    """
    f = ring.f.embed(p.variables)
    return _divide(p, f, order if order is not None else ring.order)[1]


# ---------------------------------------------------------------------------
# Rings


SUPPORTED_SHAPES = ("Ainf", "Dinf", "cusp", "cone", "user")


@dataclass(frozen=True)
class HypersurfaceRing:
    """k[[variables]]/(f) with coefficients in Q(i)."""

    label: str
    variables: tuple
    f: Polynomial
    order: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        if not self.order:
            object.__setattr__(self, "order", self.variables)
        if "i" in self.variables:
            raise ValueError("'i' is reserved for sqrt(-1)")
        if self.f.variables != self.variables:
            raise VariableMismatch("f must be written over the ring's variables")
        if not self.f or self.f.is_unit_at_origin():
            raise ValueError("f must be a nonzero non-unit")

    @property
    def krull_dimension(self) -> int:
        return len(self.variables) - 1

    def parse(self, text: str, params: Sequence[str] = (), env: Mapping[str, int] | None = None) -> Polynomial:
        return parse_polynomial(text, self.variables + tuple(params), env)

    def var(self, name: str) -> Polynomial:
        return Polynomial.var(name, self.variables)


# ---------------------------------------------------------------------------
# Matrices


class Matrix:
    """Dense immutable matrix of polynomials over a common variable list."""

    __slots__ = ("rows", "nrows", "ncols", "variables")

    def __init__(self, rows: Sequence[Sequence[Polynomial]], variables: Sequence[str] | None = None,
                 ncols: int | None = None):
        rows = tuple(tuple(r) for r in rows)
        if variables is None:
            entries = [e for r in rows for e in r]
            if not entries:
                raise ValueError("variables required for an empty matrix")
            variables = entries[0].variables
        self.variables = tuple(variables)
        self.nrows = len(rows)
        if ncols is None:
            ncols = len(rows[0]) if rows else 0
        self.ncols = ncols
        for r in rows:
            if len(r) != ncols:
                raise ValueError("ragged matrix")
            for e in r:
                if e.variables != self.variables:
                    raise VariableMismatch("matrix entries over different variable lists")
        self.rows = rows

    @classmethod
    def from_entries(cls, rows, variables: Sequence[str]) -> "Matrix":
        """Build from ints, rationals, Gaussian rationals, polynomials or text."""
        variables = tuple(variables)
        out = []
        for r in rows:
            row = []
            for e in r:
                if isinstance(e, Polynomial):
                    row.append(e.embed(variables))
                elif isinstance(e, str):
                    row.append(parse_polynomial(e, variables))
                else:
                    row.append(Polynomial.constant(e, variables))
            out.append(row)
        ncols = len(out[0]) if out else 0
        return cls(out, variables, ncols)

    @classmethod
    def identity(cls, n: int, variables: Sequence[str]) -> "Matrix":
        one = Polynomial.constant(1, variables)
        zero = Polynomial.zero(variables)
        return cls([[one if i == j else zero for j in range(n)] for i in range(n)], variables, n)

    @classmethod
    def zeros(cls, nrows: int, ncols: int, variables: Sequence[str]) -> "Matrix":
        zero = Polynomial.zero(variables)
        return cls([[zero] * ncols for _ in range(nrows)], variables, ncols)

    @classmethod
    def scalar(cls, p: Polynomial, n: int) -> "Matrix":
        zero = Polynomial.zero(p.variables)
        return cls([[p if i == j else zero for j in range(n)] for i in range(n)], p.variables, n)

    @classmethod
    def block(cls, blocks: Sequence[Sequence["Matrix"]]) -> "Matrix":
        variables = blocks[0][0].variables
        rows = []
        for brow in blocks:
            h = brow[0].nrows
            for b in brow:
                if b.nrows != h:
                    raise ValueError("block heights disagree")
                if b.variables != variables:
                    raise VariableMismatch("blocks over different variable lists")
            for i in range(h):
                rows.append([e for b in brow for e in b.rows[i]])
        ncols = sum(b.ncols for b in blocks[0])
        return cls(rows, variables, ncols)

    @classmethod
    def diagonal_blocks(cls, blocks: Sequence["Matrix"], variables: Sequence[str] | None = None) -> "Matrix":
        if not blocks:
            return cls([], variables, 0)
        variables = tuple(variables) if variables is not None else blocks[0].variables
        n = sum(b.nrows for b in blocks)
        m = sum(b.ncols for b in blocks)
        zero = Polynomial.zero(variables)
        rows = [[zero] * m for _ in range(n)]
        r0 = c0 = 0
        for b in blocks:
            if b.variables != variables:
                raise VariableMismatch("blocks over different variable lists")
            for i in range(b.nrows):
                for j in range(b.ncols):
                    rows[r0 + i][c0 + j] = b.rows[i][j]
            r0 += b.nrows
            c0 += b.ncols
        return cls(rows, variables, m)

    @classmethod
    def permutation(cls, perm: Sequence[int], variables: Sequence[str]) -> "Matrix":
        """Matrix P with (P A)[k] = A[perm[k]]."""
        n = len(perm)
        one = Polynomial.constant(1, variables)
        zero = Polynomial.zero(variables)
        return cls([[one if j == perm[i] else zero for j in range(n)] for i in range(n)], variables, n)

    # -- access ---------------------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nrows, self.ncols)

    def is_square(self) -> bool:
        return self.nrows == self.ncols

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def entries(self):
        return (e for r in self.rows for e in r)

    def column(self, j: int) -> list[Polynomial]:
        return [r[j] for r in self.rows]

    # -- arithmetic -------------------------------------------------------------

    def _check(self, other: "Matrix"):
        if self.variables != other.variables:
            raise VariableMismatch("matrices over different variable lists")

    def __add__(self, other: "Matrix") -> "Matrix":
        self._check(other)
        if self.shape != other.shape:
            raise ValueError("shape mismatch")
        return Matrix([[a + b for a, b in zip(r, s)] for r, s in zip(self.rows, other.rows)],
                      self.variables, self.ncols)

    def __neg__(self) -> "Matrix":
        return Matrix([[-a for a in r] for r in self.rows], self.variables, self.ncols)

    def __sub__(self, other: "Matrix") -> "Matrix":
        return self + (-other)

    def __mul__(self, scalar) -> "Matrix":
        if isinstance(scalar, Polynomial):
            scalar = scalar.embed(self.variables)
        return Matrix([[a * scalar for a in r] for r in self.rows], self.variables, self.ncols)

    __rmul__ = __mul__

    def __matmul__(self, other: "Matrix") -> "Matrix":
        self._check(other)
        if self.ncols != other.nrows:
            raise ValueError(f"cannot multiply {self.shape} by {other.shape}")
        cols = [other.column(j) for j in range(other.ncols)]
        zero = Polynomial.zero(self.variables)
        out = []
        for r in self.rows:
            row = []
            for c in cols:
                acc = zero
                for a, b in zip(r, c):
                    if a.terms and b.terms:
                        acc = acc + a * b
                row.append(acc)
            out.append(row)
        return Matrix(out, self.variables, other.ncols)

    def __eq__(self, other):
        if not isinstance(other, Matrix):
            return NotImplemented
        return self.variables == other.variables and self.shape == other.shape and self.rows == other.rows

    def __hash__(self):
        return hash((self.variables, self.shape, self.rows))

    def transpose(self) -> "Matrix":
        return Matrix([list(c) for c in zip(*self.rows)] if self.nrows else [],
                      self.variables, self.nrows)

    def map(self, fn) -> "Matrix":
        rows = [[fn(e) for e in r] for r in self.rows]
        variables = rows[0][0].variables if rows and rows[0] else self.variables
        return Matrix(rows, variables, self.ncols)

    def embed(self, variables: Sequence[str]) -> "Matrix":
        variables = tuple(variables)
        if variables == self.variables:
            return self
        return Matrix([[e.embed(variables) for e in r] for r in self.rows], variables, self.ncols)

    def drop_variables(self, names: Iterable[str]) -> "Matrix":
        names = tuple(names)
        variables = tuple(v for v in self.variables if v not in names)
        return Matrix([[e.drop_variables(names) for e in r] for r in self.rows], variables, self.ncols)

    def subs(self, values: Mapping[str, object]) -> "Matrix":
        return Matrix([[e.subs(values) for e in r] for r in self.rows], self.variables, self.ncols)

    def evaluate(self, point: Mapping[str, object]) -> list[list[GaussianRational]]:
        return [[e.evaluate(point) for e in r] for r in self.rows]

    def is_zero(self) -> bool:
        return all(not e for e in self.entries())

    def has_unit_entry(self) -> bool:
        return any(e.is_unit_at_origin() for e in self.entries())

    # -- determinants -------------------------------------------------------------

    def det(self) -> Polynomial:
        if not self.is_square():
            raise ValueError("determinant of a non-square matrix")
        return _det_rows(self.rows, list(range(self.nrows)), self.variables)

    def adjugate(self) -> "Matrix":
        return adjugate(self)

    # -- text -------------------------------------------------------------------

    def to_text(self) -> str:
        return json.dumps([[to_text(e) for e in r] for r in self.rows])

    def __repr__(self):
        return f"Matrix({self.to_text()})"


def _det_rows(rows, row_ids: list[int], variables) -> Polynomial:
    """Laplace expansion with memoisation over column subsets."""
    n = len(row_ids)
    if n == 0:
        return Polynomial.constant(1, variables)
    cols = list(range(len(rows[0])))
    if len(cols) != n:
        raise ValueError("non-square minor")
    memo: dict[int, Polynomial] = {}
    zero = Polynomial.zero(variables)

    def expand(k: int, used: int) -> Polynomial:
        if k == n:
            return Polynomial.constant(1, variables)
        hit = memo.get(used)
        if hit is not None:
            return hit
        acc = zero
        pos = 0
        row = rows[row_ids[k]]
        for j in cols:
            if used >> j & 1:
                continue
            entry = row[j]
            if entry.terms:
                sub = expand(k + 1, used | (1 << j))
                if sub.terms:
                    term = entry * sub
                    acc = acc - term if pos & 1 else acc + term
            pos += 1
        memo[used] = acc
        return acc

    return expand(0, 0)


def adjugate(A: Matrix) -> Matrix:
    """Classical adjoint: A @ adjugate(A) == det(A) * identity."""
    if not A.is_square():
        raise ValueError("adjugate of a non-square matrix")
    n = A.nrows
    if n == 0:
        return A
    if n == 1:
        return Matrix.identity(1, A.variables)
    out = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [[e for jj, e in enumerate(r) if jj != j] for ii, r in enumerate(A.rows) if ii != i]
            d = _det_rows(minor, list(range(n - 1)), A.variables)
            out[j][i] = -d if (i + j) & 1 else d
    return Matrix(out, A.variables, n)


def exact_divide_matrix(A: Matrix, q: Polynomial) -> Matrix:
    return A.map(lambda e: exact_divide(e, q.embed(A.variables)))


# ---------------------------------------------------------------------------
# Text format


_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)


def parse_polynomial(text: str, variables: Sequence[str], env: Mapping[str, int] | None = None) -> Polynomial:
    """Parse e.g. ``x^2*y + (1/2 - i)*u^(n+1)``.

    ``i`` is sqrt(-1); names in ``env`` are integer parameters (usable in
    exponents); every other name must be one of ``variables``.
    """
    variables = tuple(variables)
    env = dict(env or {})
    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ParseError(f"cannot parse {text!r}: {exc.msg}") from None

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant):
            if isinstance(node.value, bool) or not isinstance(node.value, int):
                raise ParseError(f"only integer literals allowed, got {node.value!r}")
            return node.value
        if isinstance(node, ast.Name):
            if node.id == "i":
                return Polynomial.constant(I, variables)
            if node.id in env:
                return env[node.id]
            if node.id in variables:
                return Polynomial.var(node.id, variables)
            raise ParseError(f"unknown symbol {node.id!r} (variables: {variables})")
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and isinstance(node.op, _BINOPS):
            a, b = ev(node.left), ev(node.right)
            if isinstance(node.op, ast.Pow):
                if isinstance(b, Polynomial):
                    if not b.is_constant() or not b.constant_term().is_real():
                        raise ParseError("exponents must be integers")
                    b = b.constant_term().re
                if isinstance(b, Fraction):
                    if b.denominator != 1:
                        raise ParseError("exponents must be integers")
                    b = int(b)
                if b < 0:
                    raise ParseError("negative exponents are not polynomial")
                if isinstance(a, Polynomial):
                    return a ** b
                return Fraction(a) ** b
            if isinstance(node.op, ast.Div):
                if isinstance(b, Polynomial):
                    if not b.is_constant():
                        raise ParseError("division only by constants")
                    b = b.constant_term()
                if not b:
                    raise ParseError("division by zero")
                if isinstance(a, Polynomial):
                    return a / b
                if isinstance(b, GaussianRational):
                    return GaussianRational.coerce(a) / b
                return Fraction(a) / Fraction(b)
            if isinstance(node.op, ast.Add):
                return _poly_or_num(a, variables) + b if isinstance(b, Polynomial) else a + b
            if isinstance(node.op, ast.Sub):
                return _poly_or_num(a, variables) - b if isinstance(b, Polynomial) else a - b
            return _poly_or_num(a, variables) * b if isinstance(b, Polynomial) else a * b
        raise ParseError(f"unsupported syntax in {text!r}")

    value = ev(tree)
    return value if isinstance(value, Polynomial) else Polynomial.constant(value, variables)


def _poly_or_num(a, variables):
    return a if isinstance(a, Polynomial) else Polynomial.constant(a, variables)


def _monomial_text(exp, variables) -> str:
    parts = []
    for v, a in zip(variables, exp):
        if a == 1:
            parts.append(v)
        elif a > 1:
            parts.append(f"{v}^{a}")
    return "*".join(parts)


def to_text(p: Polynomial, order: Sequence[str] | None = None) -> str:
    if not p.terms:
        return "0"
    pieces = []
    for exp, c in p.sorted_terms(order):
        mono = _monomial_text(exp, p.variables)
        negative = (c.im == 0 and c.re < 0) or (c.re == 0 and c.im < 0)
        mag = -c if negative else c
        if not mono:
            body = _format_coefficient(mag)
        elif mag == ONE:
            body = mono
        else:
            body = f"{_format_coefficient(mag)}*{mono}"
        pieces.append(("-" if negative else "+", body))
    first_sign, first = pieces[0]
    out = ("-" if first_sign == "-" else "") + first
    for sign, body in pieces[1:]:
        out += f" {sign} {body}"
    return out


def parse_matrix(text_or_rows, variables: Sequence[str], env: Mapping[str, int] | None = None) -> Matrix:
    """Nested bracket lists of polynomial strings (JSON text or already-loaded lists)."""
    rows = json.loads(text_or_rows) if isinstance(text_or_rows, str) else text_or_rows
    variables = tuple(variables)
    if not rows:
        raise ParseError("empty matrix")
    parsed = [[parse_polynomial(str(e), variables, env) for e in r] for r in rows]
    return Matrix(parsed, variables, len(parsed[0]))


def matrix_to_rows(A: Matrix) -> list[list[str]]:
    return [[to_text(e) for e in r] for r in A.rows]


def product(items: Iterable[Polynomial], variables) -> Polynomial:
    return reduce(lambda a, b: a * b, items, Polynomial.constant(1, variables))
