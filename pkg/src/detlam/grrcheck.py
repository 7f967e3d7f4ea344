"""First-Chern-class verification of the determinant-bundle identities.

Two settings share one code path:

* universal: the base-free check over the ring Q[l, a_1..a_d] truncated in
  degree d+1, where l is the first Chern class of the line bundle and the
  a_i are the Chern roots of the relative cotangent sheaf. The weighted
  alternating combination of Chern characters, multiplied by the Todd class
  of the relative tangent sheaf, must vanish identically in degree d+1.
* on a model: for a family with one-dimensional base, the degree of the
  determinant of cohomology of F is the integral of ch(F) Td(T_f) over the
  total space, and the exponent identity is checked as exact integers.

Integer lattice deductions about determinant classes (divisibility and
torsion consequences) are handled by Hermite-style integer row reduction,
with no division at any point.
"""

import re
from dataclasses import dataclass

from .charclass import adams_rescale, ch_from_chern, dual_ch, sym_ch, todd_from_chern
from .chowmodel import BundleClass, ChowModel, ModelError
from .combinat import coeff_table
from .exactalg import DomainError, Rational, TruncatedSeries, VarTable

__all__ = [
    "ComboTerm",
    "main_combo",
    "deligne_combo_d1",
    "combo_from_obj",
    "universal_defect",
    "universal_report",
    "UniversalReport",
    "main_theorem_defect_vanishes",
    "ducrot_defect",
    "bundle_ch",
    "c1_lambda",
    "verify_main_on_model",
    "MainReport",
    "euler_char",
    "PicardLattice",
    "picard_deduce",
    "DeduceReport",
    "parse_linear_expr",
    "preset_relations",
]


# ----------------------------------------------------------------------
# virtual combinations of twisted symmetric powers


@dataclass(frozen=True)
class ComboTerm:
    """coeff * lambda(L^twist (x) Sym^sym(Omega)), dualizing the Sym factor
    when dual is set."""

    coeff: int
    twist: int
    sym: int
    dual: bool = False

    def __post_init__(self):
        if self.sym < 0:
            raise DomainError("sym degree must be >= 0")

    def to_obj(self) -> dict:
        return {
            "coeff": str(self.coeff),
            "twist": self.twist,
            "sym": self.sym,
            "dual": self.dual,
        }


def combo_from_obj(obj) -> tuple[ComboTerm, ...]:
    terms = []
    for rec in obj:
        try:
            terms.append(
                ComboTerm(
                    int(rec["coeff"]),
                    int(rec["twist"]),
                    int(rec["sym"]),
                    bool(rec.get("dual", False)),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DomainError(f"bad combo record {rec!r}") from exc
    return tuple(terms)


def main_combo(d: int, allow_degenerate: bool = False) -> tuple[ComboTerm, ...]:
    """The exponent-2^(2d+2) side minus the weighted twisted-Sym side."""
    if d == 0 and allow_degenerate:
        entries = (1,)
    else:
        entries = coeff_table(d).entries
    terms = [ComboTerm(2 ** (2 * d + 2), 1, 0)]
    terms += [ComboTerm(-c, 2, j) for j, c in enumerate(entries)]
    return tuple(terms)


def deligne_combo_d1() -> tuple[ComboTerm, ...]:
    """The 18-coefficient curve-case combination with dual cotangent twists."""
    return (
        ComboTerm(18, 1, 0),
        ComboTerm(-18, 0, 0),
        ComboTerm(-6, 2, 1, dual=True),
        ComboTerm(6, 1, 1, dual=True),
    )


# ----------------------------------------------------------------------
# universal defect


def _universal_ring(d: int) -> VarTable:
    return VarTable([("l", 1)] + [(f"a{i}", 1) for i in range(1, d + 1)])


def _check_dim(d: int, allow_degenerate: bool):
    if not isinstance(d, int) or d < 0:
        raise DomainError("d must be a nonnegative integer")
    if d == 0 and not allow_degenerate:
        raise DomainError("d = 0 is degenerate; pass allow_degenerate=True to inspect it")


def universal_report(d, combo=None, allow_degenerate=False) -> "UniversalReport":
    """Assemble the universal defect and its degree breakdown."""
    _check_dim(d, allow_degenerate)
    combo = tuple(combo) if combo is not None else main_combo(d, allow_degenerate)
    vt = _universal_ring(d)
    bound = d + 1
    one = TruncatedSeries.one(vt, bound)
    l = TruncatedSeries.gen(vt, bound, "l")
    roots = [TruncatedSeries.gen(vt, bound, f"a{i}") for i in range(1, d + 1)]
    ch_omega = TruncatedSeries.zero(vt, bound)
    for a in roots:
        ch_omega = ch_omega + a.exp()
    tangent_chern = one
    for a in roots:
        tangent_chern = tangent_chern * (one - a)
    todd = todd_from_chern(tangent_chern)
    D = TruncatedSeries.zero(vt, bound)
    for term in combo:
        s = sym_ch(ch_omega, term.sym)
        if term.dual:
            s = dual_ch(s)
        D = D + (l * term.twist).exp() * s * term.coeff
    defect = D * todd
    return UniversalReport(
        dim=d,
        combo=combo,
        combo_ch=D,
        todd=todd,
        defect=defect,
        top_degree_zero=defect.component(d + 1).is_zero(),
        subtop_zero=defect.component(d).is_zero(),
    )


@dataclass(frozen=True)
class UniversalReport:
    dim: int
    combo: tuple[ComboTerm, ...]
    combo_ch: TruncatedSeries
    todd: TruncatedSeries
    defect: TruncatedSeries
    top_degree_zero: bool
    subtop_zero: bool

    def to_obj(self) -> dict:
        return {
            "dim": self.dim,
            "combo": [t.to_obj() for t in self.combo],
            "combo_ch": self.combo_ch.to_obj(),
            "todd": self.todd.to_obj(),
            "defect_components": [
                {"degree": k, "terms": self.defect.component(k).to_obj()}
                for k in range(self.dim + 2)
            ],
            "top_degree_zero": self.top_degree_zero,
            "subtop_zero": self.subtop_zero,
        }


def universal_defect(d, combo=None, allow_degenerate=False) -> TruncatedSeries:
    """The defect class D * Td(T_f) over the universal truncated ring."""
    return universal_report(d, combo, allow_degenerate).defect


def main_theorem_defect_vanishes(d: int, allow_degenerate: bool = False) -> bool:
    """True iff the main combination's defect vanishes in degree d+1."""
    return universal_report(d, allow_degenerate=allow_degenerate).top_degree_zero


# ----------------------------------------------------------------------
# vanishing of the ideal-block product


def ducrot_defect(d: int, factors=None, allow_short: bool = False) -> TruncatedSeries:
    """Chern character of the product of (O - line) blocks, truncated at d+1.

    With d+2 factors the product of classes (1 - e^(l_i)) has every term of
    degree >= d+2, hence vanishes on the window; with fewer factors the
    lowest term survives and witnesses non-vanishing.
    """
    if d < 0:
        raise DomainError("d must be >= 0")
    if factors is None:
        names = [f"l{i}" for i in range(1, d + 3)]
    elif isinstance(factors, int):
        names = [f"l{i}" for i in range(1, factors + 1)]
    else:
        names = list(factors)
    if len(names) != d + 2 and not allow_short:
        raise DomainError(f"need exactly d+2 = {d + 2} factors, got {len(names)}")
    vt = VarTable([(n, 1) for n in names])
    bound = d + 1
    out = TruncatedSeries.one(vt, bound)
    for n in names:
        out = out * (
            TruncatedSeries.one(vt, bound) - TruncatedSeries.gen(vt, bound, n).exp()
        )
    return out


# ----------------------------------------------------------------------
# model-side degrees


def bundle_ch(model: ChowModel, bundle: BundleClass) -> TruncatedSeries:
    """Chern character of a bundle class in the model ring, normal form."""
    if bundle.chern is not None:
        return model.normal_form(ch_from_chern(bundle.rank, model.normal_form(bundle.chern)))
    acc = model.zero()
    for n, exps in bundle.line_combo:
        c1 = model.zero()
        for i, e in enumerate(exps):
            if e:
                if model.vars.weights[i] != 1:
                    raise ModelError("line exponents must sit on weight-one generators")
                c1 = c1 + model.gen(model.vars.names[i]) * e
        acc = acc + c1.exp() * n
    return model.normal_form(acc)


def _as_line(model: ChowModel, line) -> BundleClass:
    if isinstance(line, BundleClass):
        return line
    if isinstance(line, dict):
        return BundleClass.line(model, line)
    raise DomainError("line must be a BundleClass or a divisor-coefficient dict")


def _integral_value(value: Rational, what: str) -> int:
    if value.denominator != 1:
        raise DomainError(f"{what} came out non-integral ({value}); model data inconsistent")
    return int(value)


def _c1_lambda_from_ch(model: ChowModel, ch: TruncatedSeries) -> int:
    td = todd_from_chern(model.tangent_chern)
    return _integral_value(
        model.integrate(ch * td), "determinant degree"
    )


def c1_lambda(model: ChowModel, bundle: BundleClass) -> int:
    """Degree of the determinant of cohomology along a one-dimensional base.

    Computed as the integral over the total space of ch(F) Td(T_f), whose
    top component is exactly the degree-one pushforward term.
    """
    if model.total_dim - model.rel_dim != 1:
        raise DomainError("determinant degree needs a one-dimensional base")
    return _c1_lambda_from_ch(model, bundle_ch(model, bundle))


@dataclass(frozen=True)
class MainReport:
    model: str
    dim: int
    line: dict
    lhs_exponent: int
    lhs_degree: int
    lhs: int
    rhs_rows: tuple
    rhs: int

    @property
    def ok(self) -> bool:
        return self.lhs == self.rhs

    def to_obj(self) -> dict:
        return {
            "model": self.model,
            "dim": self.dim,
            "line": {k: str(v) for k, v in self.line.items()},
            "lhs_exponent": str(self.lhs_exponent),
            "lhs_degree": str(self.lhs_degree),
            "lhs": str(self.lhs),
            "rhs_rows": [
                {"sym": j, "coeff": str(c), "degree": str(deg)}
                for j, c, deg in self.rhs_rows
            ],
            "rhs": str(self.rhs),
            "ok": self.ok,
        }


def verify_main_on_model(model: ChowModel, line) -> MainReport:
    """Exact integer check of the exponent identity on a family model."""
    d = model.rel_dim
    if d < 1:
        raise DomainError("need a family of positive relative dimension")
    if model.total_dim - d != 1:
        raise DomainError("the verification needs a one-dimensional base")
    line_coeffs = dict(line) if isinstance(line, dict) else {}
    bundle = _as_line(model, line)
    c1 = bundle.chern.component(1)
    ch_l = model.normal_form(c1.exp())
    table = coeff_table(d)
    lhs_degree = _c1_lambda_from_ch(model, ch_l)
    lhs = table.lhs_exponent * lhs_degree
    omega_chern = model.normal_form(adams_rescale(model.tangent_chern, -1))
    ch_omega = model.normal_form(ch_from_chern(d, omega_chern))
    ch_l2 = model.normal_form((c1 * 2).exp())
    rows = []
    rhs = 0
    for j, c in enumerate(table.entries):
        ch_j = model.normal_form(ch_l2 * sym_ch(ch_omega, j))
        deg_j = _c1_lambda_from_ch(model, ch_j)
        rows.append((j, c, deg_j))
        rhs += c * deg_j
    return MainReport(
        model=model.name,
        dim=d,
        line=line_coeffs,
        lhs_exponent=table.lhs_exponent,
        lhs_degree=lhs_degree,
        lhs=lhs,
        rhs_rows=tuple(rows),
        rhs=rhs,
    )


def euler_char(model: ChowModel, bundle: BundleClass) -> int:
    """chi(F) over a point base: the integral of ch(F) Td(T)."""
    if model.rel_dim != model.total_dim:
        raise DomainError("Euler characteristic needs a point base")
    td = todd_from_chern(model.tangent_chern)
    return _integral_value(model.integrate(bundle_ch(model, bundle) * td), "chi")


# ----------------------------------------------------------------------
# integer lattice deductions


def _integer_echelon(rows, n: int):
    """Pivot rows of the integer row space, in pivot-column order."""
    work = []
    for r in rows:
        r = [int(x) for x in r]
        if len(r) != n:
            raise DomainError("relation vector length mismatch")
        if any(r):
            work.append(r)
    out = []
    for col in range(n):
        while True:
            nz = [r for r in work if r[col]]
            if len(nz) <= 1:
                break
            nz.sort(key=lambda r: abs(r[col]))
            p = nz[0]
            for r in nz[1:]:
                q = r[col] // p[col]
                if q:
                    for i in range(n):
                        r[i] -= q * p[i]
        nz = [r for r in work if r[col]]
        if nz:
            p = nz[0]
            work.remove(p)
            if p[col] < 0:
                p = [-x for x in p]
            out.append((col, p))
    return out


class PicardLattice:
    """Integer relations between determinant classes, in reduced form."""

    def __init__(self, symbols, relations):
        self.symbols = [str(s) for s in symbols]
        if len(set(self.symbols)) != len(self.symbols):
            raise DomainError("duplicate symbols")
        n = len(self.symbols)
        self.relations = [
            parse_linear_expr(r, self.symbols) if isinstance(r, str) else [int(x) for x in r]
            for r in relations
        ]
        self.echelon = _integer_echelon(self.relations, n)

    def contains(self, goal) -> tuple[bool, list[int]]:
        """Is the goal vector in the integer span? Returns (flag, remainder)."""
        if isinstance(goal, str):
            goal = parse_linear_expr(goal, self.symbols)
        g = [int(x) for x in goal]
        if len(g) != len(self.symbols):
            raise DomainError("goal vector length mismatch")
        for col, row in self.echelon:
            if g[col]:
                q = g[col] // row[col]
                if q:
                    for i in range(len(g)):
                        g[i] -= q * row[i]
        return (not any(g), g)

    def to_obj(self) -> dict:
        return {
            "symbols": self.symbols,
            "relations": [[str(x) for x in r] for r in self.relations],
            "echelon": [[str(x) for x in row] for _, row in self.echelon],
        }


@dataclass(frozen=True)
class DeduceReport:
    symbols: list
    goal: list
    derivable: bool
    remainder: list

    def to_obj(self) -> dict:
        return {
            "symbols": self.symbols,
            "goal": [str(x) for x in self.goal],
            "derivable": self.derivable,
            "remainder": [str(x) for x in self.remainder],
        }


def picard_deduce(symbols, relations, goal) -> DeduceReport:
    """Decide whether the goal relation follows by integer combination."""
    lat = PicardLattice(symbols, relations)
    goal_vec = parse_linear_expr(goal, lat.symbols) if isinstance(goal, str) else [
        int(x) for x in goal
    ]
    ok, rem = lat.contains(goal_vec)
    return DeduceReport(symbols=lat.symbols, goal=goal_vec, derivable=ok, remainder=rem)


_TOKEN = re.compile(r"[A-Za-z_]\w*|\d+|\S")


def _parse_terms(text: str, symbols, vec, flip: bool):
    index = {s: i for i, s in enumerate(symbols)}
    tokens = _TOKEN.findall(text)
    sign = 1
    pending: int | None = None
    expect_term = True
    i = 0
    while i < len(tokens):
        t = tokens[i]
        if t in "+-":
            if not expect_term and pending is None:
                sign = 1 if t == "+" else -1
                expect_term = True
            elif expect_term and pending is None:
                sign *= 1 if t == "+" else -1
            else:
                raise DomainError(f"misplaced sign in {text!r}")
            i += 1
            continue
        if t.isdigit():
            if pending is not None:
                raise DomainError(f"two coefficients in a row in {text!r}")
            pending = int(t)
            i += 1
            if i < len(tokens) and tokens[i] == "*":
                i += 1
            continue
        if re.fullmatch(r"[A-Za-z_]\w*", t):
            if t not in index:
                raise DomainError(f"unknown symbol {t!r}")
            coeff = (pending if pending is not None else 1) * sign
            vec[index[t]] += -coeff if flip else coeff
            pending = None
            sign = 1
            expect_term = False
            i += 1
            continue
        raise DomainError(f"unexpected token {t!r} in {text!r}")
    if pending is not None:
        if pending != 0:
            raise DomainError(f"constant terms are not allowed: {text!r}")
        # a bare literal 0 is the empty side
    elif expect_term and tokens:
        raise DomainError(f"dangling operator in {text!r}")


def parse_linear_expr(text: str, symbols) -> list[int]:
    """Parse '13*l1 - l2' or 'a = b - c' into an integer vector over symbols.

    An '=' moves the right side over with flipped signs, so the result is
    always the vector of (left - right).
    """
    parts = text.split("=")
    if len(parts) > 2:
        raise DomainError("at most one '=' allowed")
    vec = [0] * len(symbols)
    _parse_terms(parts[0], symbols, vec, flip=False)
    if len(parts) == 2:
        _parse_terms(parts[1], symbols, vec, flip=True)
    return vec


def preset_relations(name: str):
    """Named relation sets over the symbols l0, l1, l2.

    'mumford': the k = 0 exponent relation together with the duality
    identification l0 = l1; enough to derive 13*l1 = l2.
    'elliptic': the same plus l2 = l1, which forces 12*l1 = 0.
    """
    symbols = ["l0", "l1", "l2"]
    table = coeff_table(1)
    power = [0, 0, 0]
    power[0] += 16
    for j, c in enumerate(table.entries):
        power[j] -= c
    serre = [1, -1, 0]
    if name == "mumford":
        return symbols, [power, serre]
    if name == "elliptic":
        return symbols, [power, serre, [0, 1, -1]]
    raise DomainError(f"unknown preset {name!r}")
