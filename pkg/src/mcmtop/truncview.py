"""Linear algebra over the truncations S/(f, m^s).

Provides the Hilbert-Samuel multiplicity oracle and truncated checks of
short exact sequences of presented modules.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import Sequence

from .exactalg import GaussianRational, HypersurfaceRing, Matrix, Polynomial, VariableMismatch


class NoStabilization(RuntimeError):
    pass


class ModularModeError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Fields for elimination


class RationalField:
    """Exact arithmetic in Q(i)."""

    name = "rational"

    def convert(self, c: GaussianRational):
        return c

    def is_zero(self, a) -> bool:
        return not a

    def inv(self, a):
        return a.inverse()

    def describe(self) -> dict:
        return {"mode": "rational"}


class PrimeField:
    """GF(p) with p = 1 mod 4; i is sent to a fixed square root of -1."""

    name = "modular"

    def __init__(self, p: int):
        from sympy import isprime
        from sympy.ntheory import sqrt_mod

        if p % 4 != 1 or not isprime(p):
            raise ModularModeError(f"modular mode needs a prime p = 1 mod 4, got {p}")
        self.p = p
        self.sqrt_minus_one = min(sqrt_mod(p - 1, p, all_roots=True))

    def convert(self, c: GaussianRational) -> int:
        p = self.p
        re = c.re.numerator * pow(c.re.denominator, -1, p)
        im = c.im.numerator * pow(c.im.denominator, -1, p)
        return (re + im * self.sqrt_minus_one) % p

    def is_zero(self, a) -> bool:
        return a == 0

    def inv(self, a):
        return pow(a, -1, self.p)

    def describe(self) -> dict:
        return {"mode": "modular", "prime": self.p}


def make_field(mode: str = "rational", prime: int | None = None):
    if mode == "rational":
        return RationalField()
    if mode == "modular":
        if prime is None:
            raise ModularModeError("modular mode needs a prime")
        return PrimeField(prime)
    raise ValueError(f"unknown arithmetic mode {mode!r}")


class Echelon:
    """Incrementally built row-echelon basis of sparse vectors {column: value}.

    Every stored row has a distinct leading (smallest) column, so a vector
    lies in the span iff leading-column elimination reduces it to zero.
    """

    def __init__(self, fld):
        self.fld = fld
        self.pivots: dict[int, dict] = {}
        self.prime = fld.p if isinstance(fld, PrimeField) else None

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def reduce(self, row: dict) -> dict:
        row = dict(row)
        pivots = self.pivots
        p = self.prime
        while row:
            col = min(row)
            piv = pivots.get(col)
            if piv is None:
                return row
            c = row[col]
            for k, v in piv.items():
                old = row.get(k)
                if p is None:
                    nv = -(c * v) if old is None else old - c * v
                else:
                    nv = ((old or 0) - c * v) % p
                if nv:
                    row[k] = nv
                else:
                    row.pop(k, None)
        return row

    def add(self, row: dict) -> bool:
        """Insert a vector; True when it enlarged the span."""
        row = self.reduce(row)
        if not row:
            return False
        col = min(row)
        inv = self.fld.inv(row[col])
        if self.prime is None:
            row = {k: v * inv for k, v in row.items()}
        else:
            row = {k: v * inv % self.prime for k, v in row.items()}
        self.pivots[col] = row
        return True

    def contains(self, row: dict) -> bool:
        return not self.reduce(row)

    def copy(self) -> "Echelon":
        other = Echelon(self.fld)
        other.pivots = dict(self.pivots)
        return other


def rank_of(rows, fld) -> int:
    ech = Echelon(fld)
    for r in rows:
        ech.add(r)
    return ech.rank


# ---------------------------------------------------------------------------
# Truncation frames


def local_leading_exponent(f: Polynomial, order: Sequence[str] | None = None) -> tuple:
    """Leading exponent of f for a local degree ordering.

    Lowest total degree first, ties broken lexicographically with the ring's
    variable precedence.  This is the leading term of f's initial form.
    """
    low = f.order()
    initial = [e for e in f.terms if sum(e) == low]
    variables = f.variables
    idx = [variables.index(v) for v in (order or variables)]
    return max(initial, key=lambda e: tuple(e[k] for k in idx))


def monomials_below(nvars: int, s: int):
    """All exponent vectors of total degree < s, by degree then lex."""
    out = []
    for deg in range(s):
        for combo in combinations_with_replacement(range(nvars), deg):
            exp = [0] * nvars
            for k in combo:
                exp[k] += 1
            out.append(tuple(exp))
    return out


class TruncationFrame:
    """Standard monomial basis of S/(f, m^s) and reduction into it."""

    def __init__(self, ring: HypersurfaceRing, s: int):
        if s < 1:
            raise ValueError("truncation order must be at least 1")
        self.ring = ring
        self.s = s
        self.lead = local_leading_exponent(ring.f, ring.order)
        nv = len(ring.variables)
        self.basis = [m for m in monomials_below(nv, s)
                      if not all(a >= b for a, b in zip(m, self.lead))]
        self.index = {m: k for k, m in enumerate(self.basis)}
        lc = ring.f.terms[self.lead]
        inv = lc.inverse()
        # f = lc*lead + tail  =>  lead == -tail/lc  modulo f
        self._tail = [(e, -c * inv) for e, c in ring.f.terms.items() if e != self.lead]
        self._cache: dict[tuple, dict] = {}

    @property
    def dimension(self) -> int:
        return len(self.basis)

    def reduce_monomial(self, exp: tuple) -> dict:
        """Coordinates (basis index -> coefficient) of a monomial modulo (f, m^s)."""
        hit = self._cache.get(exp)
        if hit is not None:
            return hit
        if sum(exp) >= self.s:
            out: dict = {}
        elif exp in self.index:
            out = {self.index[exp]: GaussianRational(1)}
        else:
            q = tuple(a - b for a, b in zip(exp, self.lead))
            out = {}
            for te, tc in self._tail:
                e = tuple(a + b for a, b in zip(q, te))
                if sum(e) >= self.s:
                    continue
                for k, v in self.reduce_monomial(e).items():
                    nv = out.get(k, 0) + tc * v
                    if nv:
                        out[k] = nv
                    else:
                        out.pop(k, None)
        self._cache[exp] = out
        return out

    def reduce(self, p: Polynomial) -> dict:
        if p.variables != self.ring.variables:
            raise VariableMismatch(
                f"polynomial over {p.variables}, frame over {self.ring.variables}")
        out: dict = {}
        for exp, c in p.terms.items():
            if sum(exp) >= self.s:
                continue
            for k, v in self.reduce_monomial(exp).items():
                nv = out.get(k, 0) + c * v
                if nv:
                    out[k] = nv
                else:
                    out.pop(k, None)
        return out

    def times_monomial(self, b: tuple, p: Polynomial) -> dict:
        """Coordinates of (monomial b) * p."""
        out: dict = {}
        for exp, c in p.terms.items():
            e = tuple(x + y for x, y in zip(b, exp))
            if sum(e) >= self.s:
                continue
            for k, v in self.reduce_monomial(e).items():
                nv = out.get(k, 0) + c * v
                if nv:
                    out[k] = nv
                else:
                    out.pop(k, None)
        return out

    def column_span(self, columns: Sequence[Sequence[Polynomial]], fld) -> list[dict]:
        """Vectors spanning R-submodule generated by the columns, truncated.

        A column has one polynomial per free generator; coordinate of
        generator g and basis monomial k is g*dim + k.
        """
        dim = self.dimension
        rows = []
        for col in columns:
            for b in self.basis:
                vec = {}
                for g, entry in enumerate(col):
                    if not entry:
                        continue
                    for k, v in self.times_monomial(b, entry).items():
                        vec[g * dim + k] = fld.convert(v)
                if vec:
                    rows.append(vec)
        return rows


# ---------------------------------------------------------------------------
# Multiplicity


@dataclass
class LengthProfile:
    lengths: list[int]
    dimension: int
    mode: str = "rational"
    differences: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"lengths": self.lengths, "dimension": self.dimension, "mode": self.mode,
                "differences": self.differences}


def _check_presentation(phi: Matrix, ring: HypersurfaceRing) -> Matrix:
    if phi.variables != ring.variables:
        raise VariableMismatch(
            f"presentation over {phi.variables}, ring over {ring.variables}")
    return phi


def truncated_length(phi: Matrix, ring: HypersurfaceRing, s: int, fld=None) -> int:
    """dim_k of R^rows / (im phi + m^s R^rows)."""
    fld = fld or RationalField()
    _check_presentation(phi, ring)
    frame = TruncationFrame(ring, s)
    columns = [phi.column(j) for j in range(phi.ncols)]
    return phi.nrows * frame.dimension - rank_of(frame.column_span(columns, fld), fld)


def finite_differences(values: Sequence[int], order: int) -> list[int]:
    seq = list(values)
    for _ in range(order):
        seq = [b - a for a, b in zip(seq, seq[1:])]
    return seq


def module_lengths(phi: Matrix, ring: HypersurfaceRing, s_max: int | None = None,
                   mode: str = "rational", prime: int | None = None) -> LengthProfile:
    D = ring.krull_dimension
    s_max = D + 10 if s_max is None else s_max
    fld = make_field(mode, prime)
    lengths = [truncated_length(phi, ring, s, fld) for s in range(1, s_max + 1)]
    diffs = finite_differences([0] + lengths, D)
    return LengthProfile(lengths, D, fld.name, diffs)


def _stable_value(diffs: Sequence[int], window: int = 3):
    for k in range(len(diffs) - window + 1):
        block = diffs[k:k + window]
        if len(set(block)) == 1:
            return block[0], k
    return None


def multiplicity_profile(phi: Matrix, ring: HypersurfaceRing, s_max: int | None = None,
                         mode: str = "rational", prime: int | None = None,
                         window: int = 3) -> tuple[int, LengthProfile]:
    """Compute lengths level by level and stop once the D-th difference settles.

    The D-th finite difference of s -> L(s) is eventually the constant e,
    i.e. D! times the leading coefficient of the Hilbert-Samuel polynomial.
    """
    D = ring.krull_dimension
    s_max = D + 10 if s_max is None else s_max
    fld = make_field(mode, prime)
    lengths: list[int] = []
    for s in range(1, s_max + 1):
        lengths.append(truncated_length(phi, ring, s, fld))
        diffs = finite_differences([0] + lengths, D)
        found = _stable_value(diffs, window)
        if found is not None:
            return found[0], LengthProfile(lengths, D, fld.name, diffs)
    raise NoStabilization(
        f"D-th difference of the length function did not settle by s={s_max}; "
        f"lengths={lengths}; raise s_max")


def multiplicity_oracle(phi: Matrix, ring: HypersurfaceRing, s_max: int | None = None,
                        mode: str = "rational", prime: int | None = None) -> int:
    return multiplicity_profile(phi, ring, s_max, mode, prime)[0]


def free_presentation(rank: int, ring: HypersurfaceRing) -> Matrix:
    """Presentation of R^rank: no relations."""
    return Matrix([[] for _ in range(rank)], ring.variables, 0)


# ---------------------------------------------------------------------------
# Truncated exactness


@dataclass
class TruncatedReport:
    op: str
    ring: str
    levels: list[dict]
    verdict: str
    label: str = "truncated"

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict:
        return {"op": self.op, "ring": self.ring, "label": self.label,
                "levels": self.levels, "verdict": self.verdict}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _image_vectors(mapping: Matrix, frame: TruncationFrame, fld) -> list[dict]:
    """Images of all (basis monomial) * e_j under the matrix."""
    return frame.column_span([mapping.column(j) for j in range(mapping.ncols)], fld)


def _rank_with(base: Echelon, extra: list[dict]) -> int:
    ech = base.copy()
    for r in extra:
        ech.add(r)
    return ech.rank


def verify_exact_truncated(A_map: Matrix, B_map: Matrix, pres_L: Matrix, pres_M: Matrix,
                           pres_N: Matrix, ring: HypersurfaceRing, levels: Sequence[int],
                           mode: str = "rational", prime: int | None = None,
                           check_multiplicity: bool = False) -> TruncatedReport:
    """Check 0 -> L -> M -> N -> 0 after tensoring with S/(f, m^s), for each s.

    A_map sends generators of L = coker pres_L into M = coker pres_M, B_map
    those of M into N = coker pres_N.  Passing is a necessary condition only.
    """
    for m in (A_map, B_map, pres_L, pres_M, pres_N):
        _check_presentation(m, ring)
    if A_map.shape != (pres_M.nrows, pres_L.nrows) or B_map.shape != (pres_N.nrows, pres_M.nrows):
        raise ValueError(
            f"map shapes {A_map.shape}, {B_map.shape} do not match generator counts "
            f"{pres_L.nrows}, {pres_M.nrows}, {pres_N.nrows}")
    fld = make_field(mode, prime)
    records = []
    ok_all = True
    for s in levels:
        frame = TruncationFrame(ring, s)
        dim = frame.dimension
        rel_M = Echelon(fld)
        for r in _image_vectors(pres_M, frame, fld):
            rel_M.add(r)
        rel_N = Echelon(fld)
        for r in _image_vectors(pres_N, frame, fld):
            rel_N.add(r)
        # A applied to the relations of L must land in the relations of M
        a_of_rel = _image_vectors(A_map @ pres_L, frame, fld) if pres_L.ncols else []
        b_of_rel = _image_vectors(B_map @ pres_M, frame, fld) if pres_M.ncols else []
        compatible = (all(rel_M.contains(r) for r in a_of_rel)
                      and all(rel_N.contains(r) for r in b_of_rel))
        composite = _image_vectors(B_map @ A_map, frame, fld)
        composite_zero = all(rel_N.contains(r) for r in composite)
        b_images = _image_vectors(B_map, frame, fld)
        rank_B = _rank_with(rel_N, b_images) - rel_N.rank
        a_images = _image_vectors(A_map, frame, fld)
        rank_A = _rank_with(rel_M, a_images) - rel_M.rank
        dim_M = pres_M.nrows * dim - rel_M.rank
        dim_N = pres_N.nrows * dim - rel_N.rank
        dim_L = pres_L.nrows * dim - rank_of(_image_vectors(pres_L, frame, fld), fld) \
            if pres_L.ncols else pres_L.nrows * dim
        surjective = rank_B == dim_N
        middle = rank_A + rank_B == dim_M
        checks = {"compatible": compatible, "composite_zero": composite_zero,
                  "surjective": surjective, "rank_sum": middle}
        ok = all(checks.values())
        ok_all &= ok
        records.append({"s": s, "dims": {"L": dim_L, "M": dim_M, "N": dim_N, "frame": dim},
                        "ranks": {"A": rank_A, "B": rank_B}, "checks": checks,
                        "verdict": "pass" if ok else "fail"})
    if check_multiplicity:
        eL = multiplicity_oracle(pres_L, ring, mode=mode, prime=prime)
        eM = multiplicity_oracle(pres_M, ring, mode=mode, prime=prime)
        eN = multiplicity_oracle(pres_N, ring, mode=mode, prime=prime)
        balanced = eM == eL + eN
        ok_all &= balanced
        records.append({"multiplicity": {"L": eL, "M": eM, "N": eN}, "verdict":
                        "pass" if balanced else "fail"})
    verdict = "pass" if ok_all else "fail"
    return TruncatedReport("verify_exact_truncated", ring.label, records, verdict,
                           label=f"truncated ({fld.name})")
