"""Integer coefficient combinatorics for the power-identity tables.

Two families of exact integer data drive everything downstream:

* ``pk_poly(k)``: the polynomial P_k(t) = sum_{i=0}^{k} 2^(k-i) (2-t)^i,
  which satisfies t*P_k(t) = 2^(k+1) - (2-t)^(k+1) for every k >= 0.
* ``coeff_table(d)``: the exponent table c_j = sum_{i=j}^{2d} 2^(2d-i)
  (-1)^j C(i,j), j = 0..2d, whose alternating entries sum to 2^(2d)
  and whose leading entry is 1.

All arithmetic uses unbounded Python integers; nothing is floated.
"""

from dataclasses import dataclass
from math import comb

from .exactalg import DomainError

__all__ = [
    "DomainError",
    "IntPoly",
    "CoeffTable",
    "pk_poly",
    "pk_identity_check",
    "coeff_table",
    "coeff_matrix",
    "binomial_expansion_check",
]


@dataclass(frozen=True)
class IntPoly:
    """Dense univariate integer polynomial; index = degree, trailing zeros trimmed."""

    coeffs: tuple[int, ...] = ()

    def __post_init__(self):
        c = tuple(int(x) for x in self.coeffs)
        while c and c[-1] == 0:
            c = c[:-1]
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __add__(self, other: "IntPoly") -> "IntPoly":
        a, b = self.coeffs, other.coeffs
        n = max(len(a), len(b))
        return IntPoly(
            tuple((a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n))
        )

    def __neg__(self) -> "IntPoly":
        return IntPoly(tuple(-x for x in self.coeffs))

    def __sub__(self, other: "IntPoly") -> "IntPoly":
        return self + (-other)

    def __mul__(self, other) -> "IntPoly":
        if isinstance(other, int):
            return IntPoly(tuple(other * x for x in self.coeffs))
        out = [0] * (len(self.coeffs) + len(other.coeffs))
        for i, x in enumerate(self.coeffs):
            if x:
                for j, y in enumerate(other.coeffs):
                    out[i + j] += x * y
        return IntPoly(tuple(out))

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "IntPoly":
        if n < 0:
            raise DomainError("negative polynomial power")
        out = IntPoly((1,))
        base = self
        while n:
            if n & 1:
                out = out * base
            n >>= 1
            if n:
                base = base * base
        return out

    def __call__(self, value: int) -> int:
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * value + c
        return acc

    def coefficient(self, k: int) -> int:
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else 0


_T = IntPoly((0, 1))
_TWO_MINUS_T = IntPoly((2, -1))


def pk_poly(k: int) -> IntPoly:
    """P_k(t) = sum_{i=0}^{k} 2^(k-i) (2-t)^i.

    >>> pk_poly(1).coeffs
    (4, -1)
    """
    if k < 0:
        raise DomainError("k must be nonnegative")
    out = IntPoly()
    p = IntPoly((1,))
    for i in range(k + 1):
        out = out + (2 ** (k - i)) * p
        p = p * _TWO_MINUS_T
    return out


def pk_identity_check(k: int) -> bool:
    """True iff t*P_k(t) == 2^(k+1) - (2-t)^(k+1) as integer polynomials."""
    if k < 0:
        raise DomainError("k must be nonnegative")
    lhs = _T * pk_poly(k)
    rhs = IntPoly((2 ** (k + 1),)) - _TWO_MINUS_T ** (k + 1)
    return lhs == rhs


@dataclass(frozen=True)
class CoeffTable:
    """Validated exponent table for a relative dimension d >= 1.

    entries[j] = c_j for j = 0..2d. Construction enforces the three
    structural facts every table must satisfy: the leading entry is 1,
    the signs alternate starting positive, and the entries sum to 2^(2d).
    """

    dim: int
    entries: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(int(x) for x in self.entries))
        d = self.dim
        if d < 1:
            raise DomainError("dim must be >= 1")
        if len(self.entries) != 2 * d + 1:
            raise DomainError("table must have 2d+1 entries")
        if self.entries[-1] != 1:
            raise DomainError("leading entry must be 1")
        if sum(self.entries) != 2 ** (2 * d):
            raise DomainError("entries must sum to 2^(2d)")
        for j, c in enumerate(self.entries):
            if c == 0 or (c > 0) != (j % 2 == 0):
                raise DomainError("entry signs must alternate, starting positive")

    @property
    def lhs_exponent(self) -> int:
        """Exponent 2^(2d+2) carried by the left-hand side."""
        return 2 ** (2 * self.dim + 2)

    def to_obj(self) -> dict:
        return {
            "dim": self.dim,
            "lhs_exponent": str(self.lhs_exponent),
            "entries": [str(c) for c in self.entries],
        }


def coeff_table(d: int) -> CoeffTable:
    """The exponent table c_j = sum_{i=j}^{2d} 2^(2d-i) (-1)^j C(i,j).

    The degenerate case d = 0 is rejected: the table would collapse to a
    single entry and the statement it encodes changes kind.

    >>> coeff_table(1).entries
    (7, -4, 1)
    """
    if d < 1:
        raise DomainError("d must be >= 1 (d = 0 collapses the table)")
    entries = [
        sum(2 ** (2 * d - i) * (-1) ** j * comb(i, j) for i in range(j, 2 * d + 1))
        for j in range(2 * d + 1)
    ]
    return CoeffTable(d, tuple(entries))


def coeff_matrix(d: int) -> list[list[int]]:
    """Row i of the summation grid: 2^(2d-i) (-1)^j C(i,j), zero above the diagonal.

    Column sums reproduce coeff_table(d).
    """
    if d < 1:
        raise DomainError("d must be >= 1")
    return [
        [2 ** (2 * d - i) * (-1) ** j * comb(i, j) if j <= i else 0 for j in range(2 * d + 1)]
        for i in range(2 * d + 1)
    ]


def binomial_expansion_check(d: int) -> bool:
    """Cross-check of the table by a second expansion route.

    Expanding sum_i 2^(2d-i) (1-u)^i in powers of u must reproduce the
    double-sum table entry by entry; this exercises the binomial expansion
    of the virtual block instead of the direct double sum.
    """
    if d < 1:
        raise DomainError("d must be >= 1")
    one_minus_u = IntPoly((1, -1))
    acc = IntPoly()
    p = IntPoly((1,))
    for i in range(2 * d + 1):
        acc = acc + (2 ** (2 * d - i)) * p
        p = p * one_minus_u
    want = coeff_table(d).entries
    return tuple(acc.coefficient(j) for j in range(2 * d + 1)) == want and acc.degree == 2 * d
