"""Model intersection rings presented by triangular rewrite rules.

A model is a graded ring Q[g_1..g_r] / (rules) with one rewrite rule per
leading monomial, each rule strictly decreasing in graded-lex order, so
normal forms exist and are reached by exhaustive reduction. The model also
carries the data a verification needs: relative and total dimension, marked
base generators for family models, the total Chern class of the relative
tangent sheaf, and the point class that normalizes integration.

Built-in presentations:

* ``model_pn(n)``: projective n-space over a point.
* ``model_pn_x_pm(n, m)``: the product family P^n x P^m -> P^m.
* ``model_hirzebruch(e)``: the ruled surface P(O + O(-e)) -> P^1 with
  fiber relation z^2 = -e z f and relative tangent class 1 + (2z + e f).
"""

import json
from dataclasses import dataclass

from .exactalg import Rational, StructureError, TruncatedSeries, VarTable

__all__ = [
    "ModelError",
    "UnsupportedModelError",
    "ChowModel",
    "BundleClass",
    "load_model",
    "load_model_file",
    "builtin_model",
    "model_pn",
    "model_pn_x_pm",
    "model_hirzebruch",
]


class ModelError(ValueError):
    """The presentation fails validation."""


class UnsupportedModelError(ModelError):
    """The presentation is consistent but outside the supported fragment."""


def _exponents_of_degree(weights: tuple[int, ...], degree: int):
    """All exponent vectors with the given weighted total degree."""
    if not weights:
        if degree == 0:
            yield ()
        return
    w = weights[0]
    for e in range(degree // w + 1):
        for rest in _exponents_of_degree(weights[1:], degree - e * w):
            yield (e,) + rest


def _divides(lead: tuple[int, ...], exps: tuple[int, ...]) -> bool:
    return all(a <= b for a, b in zip(lead, exps))


class ChowModel:
    """A graded ring with a terminating, dimension-closed rewrite system."""

    def __init__(
        self,
        name: str,
        generators,
        relations,
        rel_dim: int,
        total_dim: int,
        base_generators,
        tangent_chern: TruncatedSeries | None,
        point_class,
    ):
        self.name = str(name)
        try:
            self.vars = VarTable(generators)
        except StructureError as exc:
            raise ModelError(str(exc)) from exc
        if not isinstance(rel_dim, int) or not isinstance(total_dim, int):
            raise ModelError("dimensions must be integers")
        if not 0 <= rel_dim <= total_dim:
            raise ModelError("need 0 <= rel_dim <= total_dim")
        self.rel_dim = rel_dim
        self.total_dim = total_dim

        base = tuple(base_generators)
        for b in base:
            self.vars.index(b)
        if len(set(base)) != len(base):
            raise ModelError("duplicate base generators")
        if (rel_dim < total_dim) != bool(base):
            raise ModelError("base generators must be marked exactly for family models")
        self.base_generators = base
        self._base_idx = frozenset(self.vars.index(b) for b in base)

        self.rules = self._parse_rules(relations)
        self._nf_cache: dict[tuple[int, ...], dict] = {}
        self._check_dimension_closure()
        self.point_class = self._check_point_class(point_class)
        self.tangent_chern = self._check_tangent(tangent_chern)
        self._rel_point = self._find_relative_point()
        self._base_point = tuple(
            p - r for p, r in zip(self.point_class, self._rel_point)
        )
        if any(e < 0 for e in self._base_point):
            raise UnsupportedModelError("point class does not factor through the fiber point")

    # ------------------------------------------------------------------
    # validation helpers

    def _mono_key(self, exps: tuple[int, ...]):
        return (self.vars.degree(exps), exps)

    def _parse_rules(self, relations):
        rules = []
        leads = set()
        for rel in relations:
            if isinstance(rel, dict):
                lead = tuple(int(e) for e in rel["lead"])
                replace = [
                    (tuple(int(e) for e in rec["exponents"]), Rational(str(rec["coeff"])))
                    for rec in rel["replace"]
                ]
            else:
                lead, replace = rel
                lead = tuple(int(e) for e in lead)
                replace = [(tuple(int(e) for e in x), Rational(c)) for x, c in replace]
            if len(lead) != len(self.vars) or all(e == 0 for e in lead):
                raise ModelError(f"bad rule lead {lead!r}")
            if lead in leads:
                raise ModelError(f"duplicate rule lead {lead!r}")
            leads.add(lead)
            for exps, coeff in replace:
                if len(exps) != len(self.vars):
                    raise ModelError("bad replacement exponents")
                if not coeff:
                    raise ModelError("zero replacement coefficient")
                if self.vars.degree(exps) != self.vars.degree(lead):
                    raise ModelError(f"rule {lead!r} is not homogeneous")
                if self._mono_key(exps) >= self._mono_key(lead):
                    raise ModelError(
                        f"rule {lead!r} is not strictly decreasing; would not terminate"
                    )
            rules.append((lead, tuple(replace)))
        # deterministic application order: biggest lead first
        rules.sort(key=lambda r: self._mono_key(r[0]), reverse=True)
        return tuple(rules)

    def _reduce_monomial(self, exps: tuple[int, ...]) -> dict:
        """Normal form of one monomial as {exponents: Rational}, truncated."""
        if self.vars.degree(exps) > self.total_dim:
            return {}
        cached = self._nf_cache.get(exps)
        if cached is not None:
            return cached
        out: dict[tuple[int, ...], Rational] = {exps: Rational(1)}
        for lead, replace in self.rules:
            if _divides(lead, exps):
                rest = tuple(b - a for a, b in zip(lead, exps))
                out = {}
                for rexps, rc in replace:
                    prod = tuple(a + b for a, b in zip(rexps, rest))
                    for nexps, nc in self._reduce_monomial(prod).items():
                        v = out.get(nexps, Rational(0)) + rc * nc
                        if v:
                            out[nexps] = v
                        else:
                            del out[nexps]
                break
        self._nf_cache[exps] = out
        return out

    def _check_dimension_closure(self):
        top = self.total_dim
        max_w = max(self.vars.weights)
        # homogeneous rules preserve degree, so a monomial just above the
        # window must reduce to the empty sum; anything heavier factors
        # through this window one variable at a time
        for deg in range(top + 1, top + max_w + 1):
            for exps in _exponents_of_degree(self.vars.weights, deg):
                if self._reduce_full(exps):
                    raise ModelError(
                        f"monomial {exps} of degree {deg} does not normalize to zero"
                    )

    def _reduce_full(self, exps: tuple[int, ...]) -> dict:
        """Like _reduce_monomial but without the degree-window truncation."""
        out: dict[tuple[int, ...], Rational] = {exps: Rational(1)}
        for lead, replace in self.rules:
            if _divides(lead, exps):
                rest = tuple(b - a for a, b in zip(lead, exps))
                out = {}
                for rexps, rc in replace:
                    prod = tuple(a + b for a, b in zip(rexps, rest))
                    for nexps, nc in self._reduce_full(prod).items():
                        v = out.get(nexps, Rational(0)) + rc * nc
                        if v:
                            out[nexps] = v
                        else:
                            del out[nexps]
                break
        return out

    def _is_normal(self, exps: tuple[int, ...]) -> bool:
        return not any(_divides(lead, exps) for lead, _ in self.rules)

    def _check_point_class(self, point_class):
        pt = tuple(int(e) for e in point_class)
        if len(pt) != len(self.vars):
            raise ModelError("point class length mismatch")
        if self.vars.degree(pt) != self.total_dim:
            raise ModelError("point class must have degree total_dim")
        if not self._is_normal(pt):
            raise ModelError("point class must be in normal form")
        for exps in _exponents_of_degree(self.vars.weights, self.total_dim):
            nf = self._reduce_monomial(exps)
            if any(e != pt for e in nf):
                raise ModelError(
                    f"degree-{self.total_dim} monomial {exps} is not a multiple "
                    "of the point class"
                )
        return pt

    def _check_tangent(self, tangent):
        if tangent is None:
            return self.one()
        if not isinstance(tangent, TruncatedSeries):
            raise ModelError("tangent_chern must be a TruncatedSeries")
        if tangent.vars != self.vars or tangent.bound != self.total_dim:
            raise ModelError("tangent_chern lives in the wrong ring")
        if tangent.constant_term != 1:
            raise ModelError("tangent total Chern class must have constant term 1")
        return self.normal_form(tangent)

    def _find_relative_point(self):
        if self.rel_dim == 0:
            return (0,) * len(self.vars)
        fiber_idx = [i for i in range(len(self.vars)) if i not in self._base_idx]
        if not fiber_idx:
            raise ModelError("no fiber generators for a positive relative dimension")
        candidates = [
            exps
            for exps in _exponents_of_degree(self.vars.weights, self.rel_dim)
            if all(exps[i] == 0 for i in self._base_idx) and self._is_normal(exps)
        ]
        if len(candidates) != 1:
            raise UnsupportedModelError(
                f"need exactly one normal fiber monomial of degree {self.rel_dim}, "
                f"found {len(candidates)}"
            )
        rel_pt = candidates[0]
        # soundness of the pushforward: every normal monomial must split into
        # a normal fiber part times a base part, and fiber parts of full
        # fiber degree must coincide with the fiber point
        for deg in range(self.total_dim + 1):
            for exps in _exponents_of_degree(self.vars.weights, deg):
                if not self._is_normal(exps):
                    continue
                fiber_part = tuple(
                    0 if i in self._base_idx else e for i, e in enumerate(exps)
                )
                if not self._is_normal(fiber_part):
                    raise UnsupportedModelError(
                        "normal monomials do not split over the base"
                    )
                fdeg = self.vars.degree(fiber_part)
                if fdeg >= self.rel_dim and fiber_part != rel_pt:
                    raise UnsupportedModelError(
                        "fiber degree exceeds the fiber point; pushforward unsupported"
                    )
        return rel_pt

    # ------------------------------------------------------------------
    # ring API

    def one(self) -> TruncatedSeries:
        return TruncatedSeries.one(self.vars, self.total_dim)

    def zero(self) -> TruncatedSeries:
        return TruncatedSeries.zero(self.vars, self.total_dim)

    def gen(self, name: str) -> TruncatedSeries:
        return TruncatedSeries.gen(self.vars, self.total_dim, name)

    def first_chern(self, coeffs: dict) -> TruncatedSeries:
        """Degree-one class sum(a_g * g) for weight-one generators g."""
        s = self.zero()
        for gname, a in coeffs.items():
            i = self.vars.index(gname)
            if self.vars.weights[i] != 1:
                raise ModelError(f"generator {gname} has weight > 1; not a divisor class")
            s = s + self.gen(gname).scale(a)
        return s

    def normal_form(self, series: TruncatedSeries) -> TruncatedSeries:
        if series.vars != self.vars:
            raise ModelError("series lives in a different ring")
        acc: dict[tuple[int, ...], Rational] = {}
        for exps, coeff in series.terms.items():
            for nexps, nc in self._reduce_monomial(exps).items():
                v = acc.get(nexps, Rational(0)) + coeff * nc
                if v:
                    acc[nexps] = v
                else:
                    del acc[nexps]
        return TruncatedSeries(self.vars, series.bound, acc)

    def integrate(self, series: TruncatedSeries) -> Rational:
        """Coefficient of the point class in the normal form."""
        nf = self.normal_form(series)
        return nf.coefficient(self.point_class)

    def fiber_pushforward(self, series: TruncatedSeries) -> TruncatedSeries:
        """Integrate over the fibers; degree drops by rel_dim."""
        nf = self.normal_form(series)
        rel_pt = self._rel_point
        out: dict[tuple[int, ...], Rational] = {}
        for exps, coeff in nf.terms.items():
            fiber_part = tuple(
                0 if i in self._base_idx else e for i, e in enumerate(exps)
            )
            if fiber_part == rel_pt:
                base_part = tuple(e - r for e, r in zip(exps, rel_pt))
                out[base_part] = out.get(base_part, Rational(0)) + coeff
        return TruncatedSeries(self.vars, self.total_dim - self.rel_dim, out)

    def base_integrate(self, series: TruncatedSeries) -> Rational:
        """Coefficient of the base point class; inverse step of integrate."""
        return series.coefficient(self._base_point)

    # ------------------------------------------------------------------
    # serialization

    def to_obj(self) -> dict:
        def series_obj(s: TruncatedSeries):
            return [
                {"exponents": list(e), "coeff": str(c)} for e, c in s.sorted_items()
            ]

        return {
            "name": self.name,
            "generators": [
                {"name": n, "weight": w}
                for n, w in zip(self.vars.names, self.vars.weights)
            ],
            "relations": [
                {
                    "lead": list(lead),
                    "replace": [
                        {"exponents": list(e), "coeff": str(c)} for e, c in replace
                    ],
                }
                for lead, replace in self.rules
            ],
            "rel_dim": self.rel_dim,
            "total_dim": self.total_dim,
            "base_generators": list(self.base_generators),
            "tangent_chern": series_obj(self.tangent_chern),
            "point_class": list(self.point_class),
        }

    def __repr__(self) -> str:
        return f"<ChowModel {self.name}: rel_dim={self.rel_dim} total_dim={self.total_dim}>"


@dataclass(frozen=True)
class BundleClass:
    """A sheaf class on a model: a rank with a total Chern class, or a
    formal integer combination of line classes given by divisor coefficients."""

    rank: int
    chern: TruncatedSeries | None = None
    line_combo: tuple | None = None

    def __post_init__(self):
        if (self.chern is None) == (self.line_combo is None):
            raise ModelError("exactly one of chern / line_combo is required")
        if self.chern is not None and self.chern.constant_term != 1:
            raise ModelError("total Chern class must start with 1")
        if self.line_combo is not None:
            combo = tuple((int(n), tuple(int(e) for e in exps)) for n, exps in self.line_combo)
            object.__setattr__(self, "line_combo", combo)

    @classmethod
    def line(cls, model: ChowModel, coeffs: dict) -> "BundleClass":
        c1 = model.first_chern(coeffs)
        return cls(rank=1, chern=model.normal_form(model.one() + c1))


# ----------------------------------------------------------------------
# built-in models


def model_pn(n: int) -> ChowModel:
    """P^n over a point: one generator h, relation h^(n+1) = 0."""
    if n < 1:
        raise ModelError("need n >= 1")
    vt = [("h", 1)]
    vars_ = VarTable(vt)
    tangent = (TruncatedSeries.one(vars_, n) + TruncatedSeries.gen(vars_, n, "h")) ** (n + 1)
    return ChowModel(
        name=f"P{n}",
        generators=vt,
        relations=[((n + 1,), [])],
        rel_dim=n,
        total_dim=n,
        base_generators=[],
        tangent_chern=tangent,
        point_class=(n,),
    )


def model_pn_x_pm(n: int, m: int) -> ChowModel:
    """The product family P^n x P^m -> P^m; h is the fiber class, s the base."""
    if n < 1 or m < 1:
        raise ModelError("need n, m >= 1")
    vt = [("h", 1), ("s", 1)]
    vars_ = VarTable(vt)
    total = n + m
    one = TruncatedSeries.one(vars_, total)
    h = TruncatedSeries.gen(vars_, total, "h")
    return ChowModel(
        name=f"P{n}xP{m}",
        generators=vt,
        relations=[((n + 1, 0), []), ((0, m + 1), [])],
        rel_dim=n,
        total_dim=total,
        base_generators=["s"],
        tangent_chern=(one + h) ** (n + 1),
        point_class=(n, m),
    )


def model_hirzebruch(e: int) -> ChowModel:
    """The ruled surface P(O + O(-e)) over P^1.

    Generators z (fiber hyperplane class) and f (base point class) with
    z^2 = -e z f, f^2 = 0; the relative tangent class is 1 + (2z + e f),
    whose square is zero in the ring, and the point class is z f. The sign
    pairing is pinned by chi(O) = 1 and the e = 0 product comparison.
    """
    if e < 0:
        raise ModelError("need e >= 0")
    vt = [("z", 1), ("f", 1)]
    vars_ = VarTable(vt)
    one = TruncatedSeries.one(vars_, 2)
    z = TruncatedSeries.gen(vars_, 2, "z")
    f = TruncatedSeries.gen(vars_, 2, "f")
    relations = [((0, 2), [])]
    if e:
        relations.append(((2, 0), [((1, 1), Rational(-e))]))
    else:
        relations.append(((2, 0), []))
    return ChowModel(
        name=f"F{e}",
        generators=vt,
        relations=relations,
        rel_dim=1,
        total_dim=2,
        base_generators=["f"],
        tangent_chern=one + z.scale(2) + f.scale(e),
        point_class=(1, 1),
    )


def builtin_model(name: str, n: int | None = None, m: int | None = None, e: int | None = None) -> ChowModel:
    """Dispatch a built-in model by CLI-style name and parameters."""
    key = name.strip().lower()
    if key in ("pn", "p"):
        if n is None:
            raise ModelError("Pn needs --n")
        return model_pn(n)
    if key == "pnxpm":
        if n is None or m is None:
            raise ModelError("PnxPm needs --n and --m")
        return model_pn_x_pm(n, m)
    if key.startswith("p") and "x" in key and key.count("p") == 2:
        # forms like P1xP1 / P2xP1
        try:
            left, right = key[1:].split("xp")
            return model_pn_x_pm(int(left), int(right))
        except ValueError as exc:
            raise ModelError(f"cannot parse product model {name!r}") from exc
    if key == "hirzebruch":
        if e is None:
            raise ModelError("Hirzebruch needs --e")
        return model_hirzebruch(e)
    if key.startswith("p") and key[1:].isdigit():
        return model_pn(int(key[1:]))
    raise ModelError(f"unknown model {name!r}")


# ----------------------------------------------------------------------
# JSON loading


def load_model(obj: dict) -> ChowModel:
    """Build and validate a model from its JSON schema dict."""
    if not isinstance(obj, dict):
        raise ModelError("model description must be an object")
    try:
        generators = [
            (g["name"], int(g.get("weight", 1))) if isinstance(g, dict) else (g[0], int(g[1]))
            for g in obj["generators"]
        ]
        vars_ = VarTable(generators)
        total = int(obj["total_dim"])
        tangent = TruncatedSeries.from_terms(
            vars_,
            total,
            [
                (tuple(int(x) for x in rec["exponents"]), Rational(str(rec["coeff"])))
                for rec in obj.get("tangent_chern", [])
            ],
        )
        if not obj.get("tangent_chern"):
            tangent = TruncatedSeries.one(vars_, total)
        return ChowModel(
            name=obj.get("name", "model"),
            generators=generators,
            relations=obj.get("relations", []),
            rel_dim=int(obj["rel_dim"]),
            total_dim=total,
            base_generators=obj.get("base_generators", []),
            tangent_chern=tangent,
            point_class=tuple(int(x) for x in obj["point_class"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ModelError):
            raise
        raise ModelError(f"malformed model description: {exc}") from exc


def load_model_file(path: str) -> ChowModel:
    with open(path, "r", encoding="utf-8") as fh:
        return load_model(json.load(fh))
