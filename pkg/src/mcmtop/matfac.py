"""Matrix factorizations, their morphisms, equivalence witnesses and the ## lift."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .exactalg import (
    I,
    HypersurfaceRing,
    Matrix,
    NotDivisible,
    Polynomial,
    VariableMismatch,
    exact_divide,
    normal_form,
)


class DetNotPowerOfF(ValueError):
    pass


class UnitEntryError(ValueError):
    pass


@dataclass(frozen=True)
class MatrixFactorization:
    """(phi, psi) with phi*psi = psi*phi = f*I over ring variables + params."""

    ring: HypersurfaceRing
    phi: Matrix
    psi: Matrix
    params: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(self.params))
        if self.phi.shape != self.psi.shape or not self.phi.is_square():
            raise ValueError(f"factor shapes {self.phi.shape} and {self.psi.shape} must be equal and square")
        if self.phi.nrows == 0:
            raise ValueError("matrix factorizations of size 0 are not allowed")
        if self.phi.variables != self.variables or self.psi.variables != self.variables:
            raise VariableMismatch(f"matrices must be over {self.variables}")

    @property
    def variables(self) -> tuple:
        return self.ring.variables + self.params

    @property
    def size(self) -> int:
        return self.phi.nrows

    @property
    def f(self) -> Polynomial:
        return self.ring.f.embed(self.variables)

    def subs(self, values) -> "MatrixFactorization":
        """Specialize parameters (e.g. t=0); substituted params are dropped."""
        names = tuple(values)
        rest = tuple(p for p in self.params if p not in names)
        phi = self.phi.subs(values).drop_variables(names)
        psi = self.psi.subs(values).drop_variables(names)
        return MatrixFactorization(self.ring, phi, psi, rest)

    def with_params(self, params: Sequence[str]) -> "MatrixFactorization":
        """Same factorization viewed over ring variables + params (constant in them)."""
        variables = self.ring.variables + tuple(params)
        return MatrixFactorization(self.ring, self.phi.embed(variables), self.psi.embed(variables), params)

    def has_unit_entry(self) -> bool:
        return self.phi.has_unit_entry() or self.psi.has_unit_entry()


def verify_mf(mf: MatrixFactorization) -> bool:
    if mf.phi.shape != mf.psi.shape:
        raise ValueError("size mismatch")
    target = Matrix.scalar(mf.f, mf.size)
    return mf.phi @ mf.psi == target and mf.psi @ mf.phi == target


def swap(mf: MatrixFactorization) -> MatrixFactorization:
    return MatrixFactorization(mf.ring, mf.psi, mf.phi, mf.params)


def syzygy(mf: MatrixFactorization) -> MatrixFactorization:
    """Swap, refusing factorizations that contain trivial (unit) entries."""
    if mf.has_unit_entry():
        raise UnitEntryError("factorization has unit entries; reduce it before taking syzygies")
    return swap(mf)


def direct_sum(a: MatrixFactorization, b: MatrixFactorization) -> MatrixFactorization:
    if a.ring != b.ring or a.params != b.params:
        raise ValueError("direct sum of factorizations over different rings")
    return MatrixFactorization(a.ring, Matrix.diagonal_blocks([a.phi, b.phi]),
                               Matrix.diagonal_blocks([a.psi, b.psi]), a.params)


def direct_sum_all(mfs: Sequence[MatrixFactorization]) -> MatrixFactorization:
    out = mfs[0]
    for m in mfs[1:]:
        out = direct_sum(out, m)
    return out


def complete_factorization(phi: Matrix, ring: HypersurfaceRing) -> MatrixFactorization:
    """Find psi with phi*psi = f*I, namely psi = f*adj(phi)/det(phi).

    This covers det(phi) = unit*f^a as well as the reducible-f case where
    det(phi) is only a divisor of f^size.
    """
    if phi.variables != ring.variables:
        raise VariableMismatch("phi must be over the ring's variables")
    if not phi.is_square() or phi.nrows == 0:
        raise ValueError("phi must be a nonempty square matrix")
    det = phi.det()
    if not det:
        raise DetNotPowerOfF("det(phi) is zero")
    if det.is_unit_at_origin():
        raise DetNotPowerOfF("det(phi) is a unit: the cokernel is zero, not an MCM factorization")
    adj = phi.adjugate()
    f = ring.f
    try:
        psi = adj.map(lambda e: exact_divide(f * e, det, ring.order))
    except NotDivisible as exc:
        raise DetNotPowerOfF(f"det(phi) = {det} does not divide f*adj(phi): {exc}") from None
    mf = MatrixFactorization(ring, phi, psi)
    if not verify_mf(mf):
        raise DetNotPowerOfF("completed pair fails phi*psi = psi*phi = f*I")
    return mf


# ---------------------------------------------------------------------------
# Knorrer's ## construction


def fresh_pair(existing: Sequence[str]) -> tuple[str, str]:
    existing = set(existing)
    k = 1
    while True:
        suffix = "" if k == 1 else str(k)
        u, v = f"u{suffix}", f"v{suffix}"
        if u not in existing and v not in existing:
            return u, v
        k += 1


def sharp_ring(ring: HypersurfaceRing, label: str | None = None) -> tuple[HypersurfaceRing, str, str]:
    u, v = fresh_pair(ring.variables)
    variables = ring.variables + (u, v)
    f2 = ring.f.embed(variables) + Polynomial.var(u, variables) ** 2 + Polynomial.var(v, variables) ** 2
    new = HypersurfaceRing(label or f"{ring.label}##", variables, f2, tuple(ring.order) + (u, v))
    return new, u, v


_SHARP_CACHE: dict = {}


def lifted_ring(ring: HypersurfaceRing, label: str | None = None) -> tuple[HypersurfaceRing, str, str]:
    key = (ring, label)
    if key not in _SHARP_CACHE:
        _SHARP_CACHE[key] = sharp_ring(ring, label)
    return _SHARP_CACHE[key]


def sharp_scalars(variables: Sequence[str], u: str, v: str):
    """w = u + i*v and wbar = u - i*v over the given variables."""
    U = Polynomial.var(u, variables)
    V = Polynomial.var(v, variables)
    return U + V * I, U - V * I


def sharp_matrices(phi: Matrix, psi: Matrix, u: str, v: str) -> tuple[Matrix, Matrix]:
    variables = phi.variables
    w, wbar = sharp_scalars(variables, u, v)
    n = phi.nrows
    W = Matrix.scalar(w, n)
    Wb = Matrix.scalar(wbar, n)
    Phi = Matrix.block([[phi, W], [-Wb, psi]])
    Psi = Matrix.block([[psi, -W], [Wb, phi]])
    return Phi, Psi


def knorrer(mf: MatrixFactorization, target: HypersurfaceRing | None = None) -> MatrixFactorization:
    """(Phi##, Psi##) factoring f + u^2 + v^2, with fresh u, v."""
    if target is None:
        target, u, v = lifted_ring(mf.ring)
    else:
        u, v = target.variables[-2:]
        if target.variables[:-2] != mf.ring.variables:
            raise VariableMismatch("target ring must extend the source ring by two variables")
    variables = target.variables + mf.params
    Phi, Psi = sharp_matrices(mf.phi.embed(variables), mf.psi.embed(variables), u, v)
    return MatrixFactorization(target, Phi, Psi, mf.params)


# ---------------------------------------------------------------------------
# Morphisms and witnesses


@dataclass(frozen=True)
class MFMorphism:
    """(alpha, beta) with alpha*phi = phi'*beta and beta*psi = psi'*alpha modulo f."""

    source: MatrixFactorization
    target: MatrixFactorization
    alpha: Matrix
    beta: Matrix


def _common(m: MFMorphism) -> tuple:
    variables = m.source.variables
    if m.target.variables != variables:
        tgt = m.target.with_params(m.source.params) if not m.target.params else m.target
        if tgt.variables != variables:
            raise VariableMismatch("morphism source and target live over different variables")
        return m.source, tgt, variables
    return m.source, m.target, variables


def _reduce(A: Matrix, ring: HypersurfaceRing) -> Matrix:
    return A.map(lambda e: normal_form(e, ring))


def verify_morphism(m: MFMorphism) -> bool:
    src, tgt, variables = _common(m)
    alpha, beta = m.alpha.embed(variables), m.beta.embed(variables)
    if alpha.shape != (tgt.size, src.size) or beta.shape != (tgt.size, src.size):
        raise ValueError(f"morphism matrices {alpha.shape}, {beta.shape} do not fit sizes "
                         f"{src.size} -> {tgt.size}")
    ring = src.ring
    left1 = _reduce(alpha @ src.phi - tgt.phi @ beta, ring)
    left2 = _reduce(beta @ src.psi - tgt.psi @ alpha, ring)
    return left1.is_zero() and left2.is_zero()


def generic_det(A: Matrix, series_vars: Sequence[str], ring: HypersurfaceRing | None = None) -> Polynomial:
    det = A.det()
    if ring is not None:
        det = normal_form(det, ring)
    return det.subs({v: 0 for v in series_vars})


def unit_after_inverting_t(m: MFMorphism, t_name: str = "t") -> bool:
    """det(alpha), det(beta) at series variables = 0 are nonzero polynomials in t."""
    ring = m.source.ring
    series = ring.variables
    for M in (m.alpha, m.beta):
        if not M.is_square():
            return False
        d = generic_det(M, series, ring)
        if not d:
            return False
        if d.used_variables() - {t_name}:
            return False
    return True


def compose_morphisms(second: MFMorphism, first: MFMorphism) -> MFMorphism:
    return MFMorphism(first.source, second.target, second.alpha @ first.alpha, second.beta @ first.beta)


def identity_morphism(mf: MatrixFactorization) -> MFMorphism:
    Id = Matrix.identity(mf.size, mf.variables)
    return MFMorphism(mf, mf, Id, Id)


def lift_morphism(m: MFMorphism) -> MFMorphism:
    """((alpha,0;0,beta),(beta,0;0,alpha)) between the ## factorizations."""
    src = knorrer(m.source)
    tgt = knorrer(m.target)
    variables = src.variables
    alpha = m.alpha.embed(variables)
    beta = m.beta.embed(variables)
    return MFMorphism(src, tgt, Matrix.diagonal_blocks([alpha, beta]), Matrix.diagonal_blocks([beta, alpha]))


@dataclass(frozen=True)
class Witness:
    """Unit matrices (P, Q) with P*A = B*Q and Q*A' = B'*P: coker A is isomorphic to coker B."""

    P: Matrix
    Q: Matrix

    @classmethod
    def identity(cls, n: int, variables) -> "Witness":
        Id = Matrix.identity(n, variables)
        return cls(Id, Id)

    @classmethod
    def from_rows(cls, P, Q, variables) -> "Witness":
        return cls(Matrix.from_entries(P, variables), Matrix.from_entries(Q, variables))

    @property
    def variables(self) -> tuple:
        return self.P.variables

    def embed(self, variables) -> "Witness":
        return Witness(self.P.embed(variables), self.Q.embed(variables))

    def then(self, other: "Witness") -> "Witness":
        """Apply self first, then other."""
        return Witness(other.P @ self.P, other.Q @ self.Q)

    def swapped(self) -> "Witness":
        """Witness between the swapped factorizations."""
        return Witness(self.Q, self.P)

    def lifted(self, variables) -> "Witness":
        P, Q = self.P.embed(variables), self.Q.embed(variables)
        return Witness(Matrix.diagonal_blocks([P, Q]), Matrix.diagonal_blocks([Q, P]))

    def to_rows(self) -> dict:
        from .exactalg import matrix_to_rows
        return {"P": matrix_to_rows(self.P), "Q": matrix_to_rows(self.Q)}


def direct_sum_witness(parts: Sequence[Witness]) -> Witness:
    return Witness(Matrix.diagonal_blocks([w.P for w in parts]),
                   Matrix.diagonal_blocks([w.Q for w in parts]))


def check_witness(w: Witness, source: MatrixFactorization, target: MatrixFactorization) -> dict:
    """Sub-check verdicts for w: source -> target being an isomorphism of factorizations."""
    variables = source.variables
    if target.variables != variables:
        target = target.with_params(source.params)
    P, Q = w.P.embed(variables), w.Q.embed(variables)
    shapes = P.shape == (target.size, source.size) and Q.shape == P.shape and P.is_square()
    if not shapes:
        return {"shapes": False}
    ring = source.ring
    commutes = (_reduce(P @ source.phi - target.phi @ Q, ring).is_zero()
                and _reduce(Q @ source.psi - target.psi @ P, ring).is_zero())
    series = ring.variables + source.params
    units = bool(generic_det(P, series, ring)) and bool(generic_det(Q, series, ring))
    return {"shapes": True, "commutes": commutes, "units": units}


def witness_ok(w: Witness, source: MatrixFactorization, target: MatrixFactorization) -> bool:
    return all(check_witness(w, source, target).values())


def sharp_sign_witness(mf: MatrixFactorization) -> Witness:
    """Witness from swap(mf##) to (swap mf)##: both sides conjugated by diag(I, -I)."""
    n = mf.size
    variables = knorrer(mf).variables
    Id = Matrix.identity(n, variables)
    D = Matrix.diagonal_blocks([Id, -Id])
    return Witness(D, D)
