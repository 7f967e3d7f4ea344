"""Sign involutions on graded polynomial algebras.

A ``GradedAlgebra`` is a free commutative polynomial algebra whose
variables carry a positive internal degree and a parity in {0, 1}; the
involution negates the odd-parity variables. The invariant subalgebra R0
is spanned by the monomials of even total parity, and its Hilbert series
is the average of the plain series with the sign-twisted one.

``flatness_verdict`` decides whether R is a free R0-module by exact
power-series division inside a finite window:

* a negative coefficient of HS_R / HS_{R0} strictly inside the window
  disproves freeness for any homogeneous basis (NOT-FREE);
* if the squarefree-odd-monomial candidate basis reproduces HS_R
  multiplicatively and the window extends past twice the total odd degree,
  the rational-function identity is forced and the basis is certified
  (FREE);
* otherwise the window is too small to decide (INCONCLUSIVE), which is
  reported rather than guessed.
"""

import re
from dataclasses import dataclass
from itertools import combinations

from .exactalg import DomainError, Rational, StructureError, TruncatedSeries, VarTable

__all__ = [
    "GradedAlgebra",
    "FixedIdeal",
    "FlatnessReport",
    "hilbert_series",
    "signed_hilbert_series",
    "invariants_hs",
    "odd_part_hs",
    "series_coefficients",
    "fixed_ideal",
    "conormal_degree_zero",
    "flatness_verdict",
    "quotient_report",
    "DEFAULT_BOUND",
]

DEFAULT_BOUND = 40

_NAME = re.compile(r"[A-Za-z_]\w*\Z")
_T = VarTable(("t",))


@dataclass(frozen=True)
class GradedAlgebra:
    """Free polynomial algebra on (name, degree, parity) variables."""

    variables: tuple

    def __post_init__(self):
        raw = tuple(self.variables)
        if not raw:
            raise StructureError("need at least one variable")
        seen = set()
        vars_ = []
        for rec in raw:
            try:
                name, degree, parity = rec
            except (TypeError, ValueError):
                raise StructureError(f"bad variable record {rec!r}") from None
            if not isinstance(name, str) or not _NAME.match(name):
                raise StructureError(f"bad variable name {name!r}")
            if not isinstance(degree, int) or degree < 1:
                raise StructureError(f"bad degree for {name!r}")
            if parity not in (0, 1):
                raise StructureError(f"bad parity for {name!r}")
            if name in seen:
                raise StructureError(f"duplicate variable {name!r}")
            seen.add(name)
            vars_.append((name, degree, parity))
        object.__setattr__(self, "variables", tuple(vars_))

    @property
    def odd_variables(self) -> tuple:
        return tuple(v for v in self.variables if v[2] == 1)

    @property
    def even_variables(self) -> tuple:
        return tuple(v for v in self.variables if v[2] == 0)

    @classmethod
    def from_spec(cls, text: str) -> "GradedAlgebra":
        """Parse ``"x:1:odd,y:2:even"`` (parities also accepted as 0/1)."""
        variables = []
        for chunk in str(text).split(","):
            parts = chunk.strip().split(":")
            if len(parts) != 3:
                raise StructureError(f"bad variable spec {chunk!r}")
            name, deg_s, par_s = (p.strip() for p in parts)
            try:
                degree = int(deg_s)
            except ValueError:
                raise StructureError(f"bad degree in {chunk!r}") from None
            key = par_s.lower()
            if key in ("odd", "1"):
                parity = 1
            elif key in ("even", "0"):
                parity = 0
            else:
                raise StructureError(f"bad parity in {chunk!r}")
            variables.append((name, degree, parity))
        return cls(tuple(variables))

    def to_obj(self) -> dict:
        return {"variables": [list(v) for v in self.variables]}

    @classmethod
    def from_obj(cls, obj: dict) -> "GradedAlgebra":
        return cls(tuple(tuple(v) for v in obj["variables"]))


def _geometric(degree: int, bound: int, sign: int) -> TruncatedSeries:
    """1 / (1 - sign * t^degree) as a truncated series."""
    terms = {}
    k = 0
    while k * degree <= bound:
        terms[(k * degree,)] = Rational(sign ** k)
        k += 1
    return TruncatedSeries(_T, bound, terms)


def hilbert_series(algebra: GradedAlgebra, bound: int = DEFAULT_BOUND) -> TruncatedSeries:
    """Hilbert series of the full polynomial algebra."""
    out = TruncatedSeries.one(_T, bound)
    for _name, degree, _parity in algebra.variables:
        out = out * _geometric(degree, bound, 1)
    return out


def signed_hilbert_series(algebra: GradedAlgebra, bound: int = DEFAULT_BOUND) -> TruncatedSeries:
    """Trace series of the involution: odd variables contribute 1/(1+t^d)."""
    out = TruncatedSeries.one(_T, bound)
    for _name, degree, parity in algebra.variables:
        out = out * _geometric(degree, bound, -1 if parity else 1)
    return out


def invariants_hs(algebra: GradedAlgebra, bound: int = DEFAULT_BOUND) -> TruncatedSeries:
    """Hilbert series of the even-parity subalgebra R0."""
    half = Rational(1, 2)
    return (hilbert_series(algebra, bound) + signed_hilbert_series(algebra, bound)).scale(half)


def odd_part_hs(algebra: GradedAlgebra, bound: int = DEFAULT_BOUND) -> TruncatedSeries:
    """Hilbert series of the odd-parity module R1."""
    half = Rational(1, 2)
    return (hilbert_series(algebra, bound) - signed_hilbert_series(algebra, bound)).scale(half)


def series_coefficients(series: TruncatedSeries) -> list[int]:
    """Integer coefficient list [c_0, ..., c_bound]; rejects non-integers."""
    out = []
    for k in range(series.bound + 1):
        c = series.coefficient((k,))
        if c.denominator != 1:
            raise DomainError(f"non-integer coefficient at degree {k}")
        out.append(int(c))
    return out


@dataclass(frozen=True)
class FixedIdeal:
    generators: tuple
    cartier: bool
    fixed_locus_is_everything: bool

    def to_obj(self) -> dict:
        return {
            "generators": list(self.generators),
            "cartier": self.cartier,
            "fixed_locus_is_everything": self.fixed_locus_is_everything,
        }


def fixed_ideal(algebra: GradedAlgebra) -> FixedIdeal:
    """Generators of the ideal cut out by the non-invariant part."""
    gens = tuple(name for name, _d, p in algebra.variables if p == 1)
    return FixedIdeal(gens, len(gens) == 1, len(gens) == 0)


def conormal_degree_zero(algebra: GradedAlgebra) -> bool:
    """True when the parity-0 part of the conormal module vanishes.

    Requires a Cartier fixed ideal; its single generator x spans (x)/(x^2),
    and the parity of that generator decides the claim.
    """
    fi = fixed_ideal(algebra)
    if not fi.cartier:
        raise DomainError("conormal grading needs a Cartier fixed ideal")
    (name,) = fi.generators
    parity = next(p for n, _d, p in algebra.variables if n == name)
    return parity == 1


@dataclass(frozen=True)
class FlatnessReport:
    verdict: str
    bound: int
    ratio_coeffs: tuple
    basis: tuple | None
    witness: dict | None
    certified: bool
    note: str

    def to_obj(self) -> dict:
        return {
            "verdict": self.verdict,
            "bound": self.bound,
            "ratio": list(self.ratio_coeffs),
            "basis": list(self.basis) if self.basis is not None else None,
            "witness": self.witness,
            "certified": self.certified,
            "note": self.note,
        }


def _candidate_basis(algebra: GradedAlgebra) -> list[tuple[int, str]]:
    """Squarefree odd monomials as (degree, label), degree-then-label order."""
    odd = algebra.odd_variables
    out = []
    for r in range(len(odd) + 1):
        for subset in combinations(odd, r):
            degree = sum(d for _n, d, _p in subset)
            label = "*".join(n for n, _d, _p in subset) if subset else "1"
            out.append((degree, label))
    out.sort()
    return out


def flatness_verdict(algebra: GradedAlgebra, bound: int = DEFAULT_BOUND) -> FlatnessReport:
    """Decide freeness of R over R0 by exact series division."""
    if not isinstance(bound, int) or bound < 1:
        raise DomainError("bound must be a positive int")
    hs = hilbert_series(algebra, bound)
    inv = invariants_hs(algebra, bound)
    ratio = hs * inv.inverse()
    coeffs = tuple(series_coefficients(ratio))

    for k in range(bound):
        if coeffs[k] < 0:
            return FlatnessReport(
                "NOT-FREE",
                bound,
                coeffs,
                None,
                {"degree": k, "coefficient": coeffs[k]},
                True,
                "a free module's ratio series has the basis degrees as "
                "non-negative coefficients",
            )

    basis = _candidate_basis(algebra)
    cap = sum(d for _n, d, _p in algebra.odd_variables)
    candidate = TruncatedSeries.from_terms(
        _T, bound, (((deg,), 1) for deg, _label in basis)
    )
    defect = candidate * inv - hs
    if defect.is_zero() and 2 * cap < bound:
        return FlatnessReport(
            "FREE",
            bound,
            coeffs,
            tuple(label for _deg, label in basis),
            None,
            True,
            "candidate basis reproduces the Hilbert series; the window "
            "exceeds twice the total odd degree, forcing the identity",
        )
    if defect.is_zero():
        note = "window too small to certify the candidate basis"
    else:
        note = "candidate basis does not match inside the window"
    return FlatnessReport("INCONCLUSIVE", bound, coeffs, None, None, False, note)


def quotient_report(algebra: GradedAlgebra, bound: int = DEFAULT_BOUND) -> dict:
    """Full JSON-ready verdict for one algebra."""
    fi = fixed_ideal(algebra)
    rep = flatness_verdict(algebra, bound)
    return {
        "variables": [list(v) for v in algebra.variables],
        "bound": bound,
        "hs_R": series_coefficients(hilbert_series(algebra, bound)),
        "hs_R0": series_coefficients(invariants_hs(algebra, bound)),
        "ratio": list(rep.ratio_coeffs),
        "verdict": rep.verdict,
        "basis": list(rep.basis) if rep.basis is not None else None,
        "cartier": fi.cartier,
        "conormal_degree_zero": conormal_degree_zero(algebra) if fi.cartier else None,
        "witness": rep.witness,
        "note": rep.note,
    }
