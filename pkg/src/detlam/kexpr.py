"""Term rewriting for virtual sheaf expressions under lambda.

Expression trees are built from line-bundle atoms, the unit O, the
order-two twist sheaf {-1}, formal integer combinations, tensor products,
duals, symmetric powers, a fiber pushforward binder, and top-level
lambda(.)^n wrappers. Normalization maps a tree to a canonical formal sum
of tensor monomials

    monomial = (sorted factors, twist parity),   factor = (kind, name, param, dual)

with the involutions dual(dual(x)) = x and twist (x) twist = O applied, Sym
lifted through duals and twists, and integer coefficients merged. For a
lambda product the canonical form is the fully distributed exponent map
{monomial: exponent}, which is sound because lambda of a formal sum is by
definition the product of the factor lambdas.

A chain script is a sequence of directed axiom applications; every step
carries the expected display, built independently from the step's printed
formula. The engine applies the axiom, demands canonical equality with the
expected display, and only then adopts the display's factor structure, so a
corrupted script fails at exactly the corrupted step.
"""

import json
import re
from dataclasses import dataclass, field

__all__ = [
    "UnsupportedExpression",
    "ScriptError",
    "Atom",
    "One",
    "Twist",
    "Dual",
    "Sym",
    "Ten",
    "Lin",
    "Push",
    "Lam",
    "LamProd",
    "O",
    "T",
    "atom",
    "ten",
    "lin",
    "o_minus",
    "tpow",
    "normalize",
    "normalize_expr",
    "canonical_state",
    "to_expr",
    "render_expr",
    "parse_expr",
    "render_monomial",
    "RewriteAxiom",
    "AXIOMS",
    "ChainStep",
    "ChainScript",
    "ChainReport",
    "chain_verify",
    "corrupt_script",
    "script_to_obj",
    "script_from_obj",
    "script_from_file",
    "shipped_chain",
    "script_invfunc_a_k",
    "script_invfunc_l_p",
    "script_multadd_d1",
    "get_chain",
    "builtin_chain_names",
    "multiadditivity_expand",
    "MultAddReport",
]


class UnsupportedExpression(ValueError):
    """Constructor combination outside the supported normalization fragment."""


class ScriptError(ValueError):
    """Malformed chain script."""


class _StepFailure(Exception):
    """Internal: an axiom did not apply; reported, not raised to callers."""


# ----------------------------------------------------------------------
# expression trees


@dataclass(frozen=True)
class Atom:
    name: str


@dataclass(frozen=True)
class One:
    pass


@dataclass(frozen=True)
class Twist:
    pass


@dataclass(frozen=True)
class Dual:
    inner: object


@dataclass(frozen=True)
class Sym:
    power: int
    inner: object


@dataclass(frozen=True)
class Ten:
    factors: tuple

    def __init__(self, *factors):
        object.__setattr__(self, "factors", tuple(factors))


@dataclass(frozen=True)
class Lin:
    """Formal integer combination: tuple of (coefficient, expression)."""

    terms: tuple

    def __init__(self, *terms):
        object.__setattr__(self, "terms", tuple((int(n), e) for n, e in terms))


@dataclass(frozen=True)
class Push:
    """Derived pushforward along the exceptional fibration, binding one atom."""

    binder: str
    inner: object


@dataclass(frozen=True)
class Lam:
    arg: object
    exp: int = 1


@dataclass(frozen=True)
class LamProd:
    factors: tuple

    def __init__(self, *factors):
        fs = []
        for f in factors:
            if isinstance(f, LamProd):
                fs.extend(f.factors)
            elif isinstance(f, Lam):
                fs.append(f)
            else:
                raise UnsupportedExpression("LamProd takes Lam factors")
        object.__setattr__(self, "factors", tuple(fs))


O = One()
T = Twist()


def atom(name: str) -> Atom:
    return Atom(name)


def ten(*factors):
    return Ten(*factors)


def lin(*pairs):
    return Lin(*pairs)


def o_minus(e) -> Lin:
    """The block O - e."""
    return Lin((1, O), (-1, e))


def tpow(e, n: int):
    """Tensor power; n = 0 gives O."""
    if n < 0:
        raise UnsupportedExpression("negative tensor power")
    return Ten(*([e] * n)) if n else O


# ----------------------------------------------------------------------
# normalization to formal sums


def _fs_add(a: dict, b: dict, scale: int = 1) -> dict:
    out = dict(a)
    for m, c in b.items():
        v = out.get(m, 0) + scale * c
        if v:
            out[m] = v
        else:
            out.pop(m, None)
    return out


def _fs_mul(a: dict, b: dict) -> dict:
    out: dict = {}
    for (fa, ta), ca in a.items():
        for (fb, tb), cb in b.items():
            m = (tuple(sorted(fa + fb)), (ta + tb) % 2)
            v = out.get(m, 0) + ca * cb
            if v:
                out[m] = v
            else:
                del out[m]
    return out


_FS_ONE_MONO = ((), 0)


def normalize_expr(e) -> dict:
    """Formal-sum normal form {monomial: int} of a sheaf-level tree."""
    if isinstance(e, One):
        return {_FS_ONE_MONO: 1}
    if isinstance(e, Twist):
        return {((), 1): 1}
    if isinstance(e, Atom):
        return {((("atom", e.name, 0, 0),), 0): 1}
    if isinstance(e, Dual):
        inner = normalize_expr(e.inner)
        out: dict = {}
        for (fs, tw), c in inner.items():
            m = (tuple(sorted((k, n, p, 1 - d) for k, n, p, d in fs)), tw)
            out[m] = out.get(m, 0) + c
        return {m: c for m, c in out.items() if c}
    if isinstance(e, Ten):
        out = {_FS_ONE_MONO: 1}
        for f in e.factors:
            out = _fs_mul(out, normalize_expr(f))
        return out
    if isinstance(e, Lin):
        out = {}
        for n, sub in e.terms:
            out = _fs_add(out, normalize_expr(sub), n)
        return out
    if isinstance(e, Sym):
        return _normalize_sym(e.power, e.inner)
    if isinstance(e, Push):
        return _normalize_push(e.binder, normalize_expr(e.inner))
    raise UnsupportedExpression(f"cannot normalize {type(e).__name__} here")


def _normalize_sym(j: int, inner) -> dict:
    if j < 0:
        raise UnsupportedExpression("negative symmetric power")
    if j == 0:
        return {_FS_ONE_MONO: 1}
    fs = normalize_expr(inner)
    if j == 1:
        return fs
    if len(fs) != 1:
        raise UnsupportedExpression("Sym of a formal sum is outside the fragment")
    (factors, tw), c = next(iter(fs.items()))
    if c != 1:
        raise UnsupportedExpression("Sym of a scaled class is outside the fragment")
    new_tw = (tw * j) % 2
    if not factors:
        return {((), new_tw): 1}
    if len(factors) > 1:
        raise UnsupportedExpression("Sym of a composite monomial is outside the fragment")
    kind, name, param, dual = factors[0]
    if kind != "atom":
        raise UnsupportedExpression("nested Sym is outside the fragment")
    return {((("sym", name, j, dual),), new_tw): 1}


def _normalize_push(binder: str, fs: dict) -> dict:
    out: dict = {}
    for (factors, tw), c in fs.items():
        j = 0
        for kind, name, param, dual in factors:
            if (kind, name, param, dual) == ("atom", binder, 0, 0):
                j += 1
            else:
                raise UnsupportedExpression(
                    "pushforward binder applies only to powers of its atom"
                )
        new = (("push", binder, j, 0),) if j else ()
        m = (new, (tw - j) % 2)
        v = out.get(m, 0) + c
        if v:
            out[m] = v
        else:
            del out[m]
    return out


def _canon_items(fs: dict) -> tuple:
    return tuple(sorted(fs.items()))


def normalize(e):
    """Canonical form: sorted coefficient tuple for sheaf trees, sorted
    exponent tuple for lambda products."""
    if isinstance(e, (Lam, LamProd)):
        return _canon_items(canonical_state(_state_of(e)))
    return _canon_items(normalize_expr(e))


def _state_of(e) -> list:
    if isinstance(e, Lam):
        return [(normalize_expr(e.arg), int(e.exp))]
    if isinstance(e, LamProd):
        return [(normalize_expr(f.arg), int(f.exp)) for f in e.factors]
    raise UnsupportedExpression("expected a lambda expression")


def canonical_state(state: list) -> dict:
    """Fully distributed lambda-exponent map of a factor list."""
    out: dict = {}
    for fs, exp in state:
        for m, c in fs.items():
            v = out.get(m, 0) + exp * c
            if v:
                out[m] = v
            else:
                del out[m]
    return out


def to_expr(canon) -> Lin:
    """Rebuild a (sheaf-level) tree from a canonical coefficient tuple."""
    terms = []
    for (factors, tw), c in canon:
        parts = []
        for kind, name, param, dual in factors:
            base = Atom(name)
            if kind == "sym":
                base = Sym(param, Dual(base)) if dual else Sym(param, base)
            elif kind == "push":
                base = Push(name, tpow(Atom(name), param))
                if dual:
                    base = Dual(base)
            elif dual:
                base = Dual(base)
            parts.append(base)
        if tw:
            parts.append(T)
        terms.append((c, Ten(*parts) if parts else O))
    return Lin(*terms) if terms else Lin((0, O))


def render_monomial(m) -> str:
    factors, tw = m
    bits = []
    for kind, name, param, dual in factors:
        mark = "'" if dual else ""
        if kind == "atom":
            bits.append(name + mark)
        elif kind == "sym":
            bits.append(f"Sym{param}({name}{mark})")
        else:
            bits.append(f"Rp{param}({name}){mark}")
    if tw:
        bits.append("T")
    return "*".join(bits) if bits else "O"


def render_canonical(canon) -> list[str]:
    return [f"{c}@{render_monomial(m)}" for m, c in canon]


# ----------------------------------------------------------------------
# expression strings (script files)


def render_expr(e) -> str:
    if isinstance(e, One):
        return "O"
    if isinstance(e, Twist):
        return "T"
    if isinstance(e, Atom):
        return e.name
    if isinstance(e, Dual):
        return f"(dual {render_expr(e.inner)})"
    if isinstance(e, Sym):
        return f"(sym {e.power} {render_expr(e.inner)})"
    if isinstance(e, Ten):
        return "(* " + " ".join(render_expr(f) for f in e.factors) + ")"
    if isinstance(e, Lin):
        body = " ".join(f"{n} {render_expr(sub)}" for n, sub in e.terms)
        return f"(lin {body})"
    if isinstance(e, Push):
        return f"(push {e.binder} {render_expr(e.inner)})"
    if isinstance(e, Lam):
        return f"(lam {render_expr(e.arg)} {e.exp})"
    if isinstance(e, LamProd):
        return "(prod " + " ".join(render_expr(f) for f in e.factors) + ")"
    raise UnsupportedExpression(f"cannot render {type(e).__name__}")


_TOKEN = re.compile(r"\(|\)|[^\s()]+")
_INT = re.compile(r"-?\d+\Z")
_NAME = re.compile(r"[A-Za-z_]\w*\Z")


def parse_expr(text: str):
    tokens = _TOKEN.findall(text)
    pos = 0

    def parse():
        nonlocal pos
        if pos >= len(tokens):
            raise ScriptError("unexpected end of expression")
        t = tokens[pos]
        pos += 1
        if t == ")":
            raise ScriptError("unexpected ')'")
        if t != "(":
            if t == "O":
                return O
            if t == "T":
                return T
            if _NAME.match(t):
                return Atom(t)
            raise ScriptError(f"bad token {t!r}")
        if pos >= len(tokens) or tokens[pos] in ("(", ")"):
            raise ScriptError("expected a form head")
        head = tokens[pos]
        pos += 1
        args = []
        while pos < len(tokens) and tokens[pos] != ")":
            if tokens[pos] == "(" or not _INT.match(tokens[pos]):
                args.append(parse())
            else:
                args.append(int(tokens[pos]))
                pos += 1
        if pos >= len(tokens):
            raise ScriptError("missing ')'")
        pos += 1
        try:
            if head == "dual":
                (inner,) = args
                return Dual(inner)
            if head == "sym":
                j, inner = args
                return Sym(int(j), inner)
            if head == "*":
                return Ten(*args)
            if head == "lin":
                pairs = list(zip(args[0::2], args[1::2]))
                if len(args) % 2:
                    raise ScriptError("lin needs coefficient/expression pairs")
                return Lin(*pairs)
            if head == "push":
                binder, inner = args
                if isinstance(binder, Atom):
                    binder = binder.name
                return Push(binder, inner)
            if head == "lam":
                arg_, exp = args
                return Lam(arg_, int(exp))
            if head == "prod":
                return LamProd(*args)
        except (TypeError, ValueError) as exc:
            raise ScriptError(f"bad {head!r} form") from exc
        raise ScriptError(f"unknown form {head!r}")

    out = parse()
    if pos != len(tokens):
        raise ScriptError("trailing tokens")
    return out


# ----------------------------------------------------------------------
# axioms


@dataclass(frozen=True)
class RewriteAxiom:
    name: str
    kind: str
    law: str
    description: str


AXIOMS: dict[str, RewriteAxiom] = {}


def _axiom(name, kind, law, description):
    AXIOMS[name] = RewriteAxiom(name, kind, law, description)


_axiom(
    "line-twist-flip",
    "twist_flip",
    "lambda(F{-1}) ~ lambda(F)^(-1): replace -A by +A(x){-1} per occurrence",
    "flip the sign of a line atom into a twist",
)
_axiom(
    "iso-subst",
    "subst",
    "substitute along a declared canonical isomorphism src ~ dst",
    "rename one atom along an isomorphism such as adjunction",
)
_axiom(
    "ideal-descent",
    "descend",
    "restriction sequence of the fixed divisor: O - L resolves the direct image "
    "of the structure sheaf of the divisor",
    "move the lambda argument from the divisor to the ambient space, "
    "then tensor by the resolving block",
)
_axiom(
    "quotient-descent",
    "descend",
    "projection formula along the quotient: q^*(J) ~ L{-1} and q^*(q_*(M)) ~ M "
    "on invariant sections",
    "descend every atom through the quotient map",
)
_axiom(
    "pk-identity",
    "regroup",
    "t * P_k(t) = 2^(k+1) - (2-t)^(k+1)",
    "recognize the telescoped polynomial identity",
)
_axiom(
    "binomial",
    "regroup",
    "(O - X)^(x)i = sum_j C(i,j) (-X)^(x)j",
    "recognize a binomial expansion",
)
_axiom(
    "cancel",
    "regroup",
    "formal cancellation / regrouping of identical lambda-monomials",
    "regroup factors without changing the distributed form",
)
_axiom(
    "plus-minus-split",
    "split",
    "lambda(F) := det(F_+) (x) det(F_-)^(-1): F ~ F_+ - F_-",
    "split an equivariant atom into its invariant and anti-invariant parts",
)
_axiom(
    "pushforward",
    "push",
    "projection formula: R p_*(p^*(A) (x) Phi) ~ A (x) R p_*(Phi)",
    "pull the pulled-back factor out of a derived pushforward",
)
_axiom(
    "cartier-collapse",
    "collapse",
    "lambda(i^*(M) (x) P_k(O + N{-1})) ~ lambda(M)^(2^(k+1)) over a Cartier "
    "fixed divisor, applied at k = d",
    "collapse the pushed polynomial block to a power of lambda(M)",
)
_axiom(
    "multadd-split",
    "multadd",
    "I(A (x) B, L_2..L_{d+1}) ~ I(A, L_2..L_{d+1}) (x) I(B, L_2..L_{d+1})",
    "split the first slot of a Deligne-style pairing block",
)


def _count_atom(factors, name: str) -> int:
    return sum(1 for k, n, p, d in factors if (k, n, d) == ("atom", name, 0))


def _apply_axiom(state: list, axiom: RewriteAxiom, position: int, args: dict) -> list:
    if not 0 <= position < len(state):
        raise _StepFailure(f"factor position {position} out of range")
    fs, exp = state[position]
    kind = axiom.kind

    if kind == "regroup":
        return [list(t) for t in state]

    if kind == "twist_flip":
        name = args["atom"]
        out: dict = {}
        hit = False
        for (factors, tw), c in fs.items():
            n = _count_atom(factors, name)
            hit = hit or n > 0
            m = (factors, (tw + n) % 2)
            out[m] = out.get(m, 0) + c * ((-1) ** n)
        if not hit:
            raise _StepFailure(f"atom {name!r} does not occur at factor {position}")
        new = [list(t) for t in state]
        new[position] = [out, exp]
        return new

    if kind == "subst":
        src, dst = args["src"], args["dst"]
        out = {}
        hit = False
        for (factors, tw), c in fs.items():
            nf = []
            for k, n, p, d in factors:
                if n == src and k in ("atom", "sym"):
                    nf.append((k, dst, p, d))
                    hit = True
                else:
                    nf.append((k, n, p, d))
            m = (tuple(sorted(nf)), tw)
            out[m] = out.get(m, 0) + c
        if not hit:
            raise _StepFailure(f"atom {src!r} does not occur at factor {position}")
        new = [list(t) for t in state]
        new[position] = [out, exp]
        return new

    if kind == "descend":
        mapping = {
            src: (dst, int(twd), int(sign))
            for src, (dst, twd, sign) in args["map"].items()
        }
        out = {}
        for (factors, tw), c in fs.items():
            nf = []
            coeff = c
            twist = tw
            for k, n, p, d in factors:
                if k != "atom" or d != 0:
                    raise _StepFailure("descent supports plain atoms only")
                if n not in mapping:
                    raise _StepFailure(f"descent does not cover atom {n!r}")
                dst, twd, sign = mapping[n]
                nf.append(("atom", dst, 0, 0))
                twist = (twist + twd) % 2
                coeff *= sign
            m = (tuple(sorted(nf)), twist)
            out[m] = out.get(m, 0) + coeff
        multiplier = args.get("multiplier")
        if multiplier is not None:
            out = _fs_mul(out, normalize_expr(multiplier))
        new = [list(t) for t in state]
        new[position] = [out, exp]
        return new

    if kind == "split":
        name, plus, minus = args["atom"], args["plus"], args["minus"]
        out = {}
        hit = False
        for (factors, tw), c in fs.items():
            n = _count_atom(factors, name)
            if n == 0:
                out[(factors, tw)] = out.get((factors, tw), 0) + c
                continue
            if n > 1:
                raise _StepFailure("split supports a single occurrence per monomial")
            hit = True
            rest = tuple(f for f in factors if (f[0], f[1], f[3]) != ("atom", name, 0))
            for repl, sgn in ((plus, 1), (minus, -1)):
                m = (tuple(sorted(rest + (("atom", repl, 0, 0),))), tw)
                v = out.get(m, 0) + sgn * c
                if v:
                    out[m] = v
                else:
                    del out[m]
        if not hit:
            raise _StepFailure(f"atom {name!r} does not occur at factor {position}")
        new = [list(t) for t in state]
        new[position] = [out, exp]
        return new

    if kind == "push":
        pulled, restrict, binder = args["pulled"], args["restrict"], args["binder"]
        out = {}
        for (factors, tw), c in fs.items():
            j = 0
            seen_pulled = 0
            for k, n, p, d in factors:
                if (k, n, p, d) == ("atom", pulled, 0, 0):
                    seen_pulled += 1
                elif (k, n, p, d) == ("atom", binder, 0, 0):
                    j += 1
                else:
                    raise _StepFailure(
                        f"unexpected factor {n!r} under the pushforward"
                    )
            if seen_pulled != 1:
                raise _StepFailure("need exactly one pulled-back factor per monomial")
            nf = [("atom", restrict, 0, 0)]
            if j:
                nf.append(("push", binder, j, 0))
            m = (tuple(sorted(nf)), (tw - j) % 2)
            out[m] = out.get(m, 0) + c
        new = [list(t) for t in state]
        new[position] = [out, exp]
        return new

    if kind == "collapse":
        restrict, binder = args["restrict"], args["binder"]
        base, k = args["base"], int(args["k"])
        want = normalize_expr(
            Ten(Atom(restrict), Push(binder, _pk_tree(k, _o_plus_twisted(binder))))
        )
        if exp != 1:
            raise _StepFailure("collapse needs a factor of exponent 1")
        if fs != want:
            raise _StepFailure("factor is not the pushed polynomial block")
        new = [list(t) for t in state]
        new[position] = [{((("atom", base, 0, 0),), 0): 1}, 2 ** (k + 1)]
        return new

    if kind == "multadd":
        a, b = args["a"], args["b"]
        others = list(args["others"])
        blocks = [o_minus(Atom(x)) for x in others]
        want = normalize_expr(Ten(o_minus(Ten(Atom(a), Atom(b))), *blocks))
        if fs != want:
            raise _StepFailure("factor is not a first-slot pairing block")
        fa = normalize_expr(Ten(o_minus(Atom(a)), *blocks))
        fb = normalize_expr(Ten(o_minus(Atom(b)), *blocks))
        new = [list(t) for t in state]
        new[position : position + 1] = [[fa, exp], [fb, exp]]
        return new

    raise ScriptError(f"axiom kind {kind!r} has no interpreter")


# ----------------------------------------------------------------------
# chain scripts


@dataclass(frozen=True)
class ChainStep:
    axiom: str
    position: int
    args: dict = field(default_factory=dict)
    note: str = ""
    expected: object = None

    def __post_init__(self):
        if self.axiom not in AXIOMS:
            raise ScriptError(f"unknown axiom {self.axiom!r}")
        if self.expected is None:
            raise ScriptError("every step carries its expected display")


@dataclass(frozen=True)
class ChainScript:
    name: str
    start: object
    end: object
    steps: tuple
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ChainReport:
    name: str
    ok: bool
    failed_step: int | None
    reason: str
    rows: tuple
    endpoint_ok: bool

    def to_obj(self) -> dict:
        return {
            "name": self.name,
            "ok": self.ok,
            "failed_step": self.failed_step,
            "reason": self.reason,
            "steps": list(self.rows),
            "endpoint_ok": self.endpoint_ok,
        }


def chain_verify(script: ChainScript) -> ChainReport:
    """Run a script, checking every step against its expected display."""
    state = _state_of(script.start)
    rows = []
    for idx, step in enumerate(script.steps, 1):
        ax = AXIOMS[step.axiom]
        row = {"step": idx, "note": step.note, "axiom": ax.name, "law": ax.law}
        try:
            new_state = _apply_axiom(state, ax, step.position, step.args)
        except _StepFailure as fail:
            row["ok"] = False
            row["witness"] = {"error": str(fail)}
            rows.append(row)
            return ChainReport(script.name, False, idx, str(fail), tuple(rows), False)
        exp_state = _state_of(step.expected)
        got = _canon_items(canonical_state(new_state))
        want = _canon_items(canonical_state(exp_state))
        if got != want:
            row["ok"] = False
            row["witness"] = {
                "expected": render_canonical(want),
                "got": render_canonical(got),
            }
            rows.append(row)
            return ChainReport(
                script.name, False, idx, "display mismatch", tuple(rows), False
            )
        row["ok"] = True
        rows.append(row)
        state = exp_state
    end_ok = _canon_items(canonical_state(state)) == _canon_items(
        canonical_state(_state_of(script.end))
    )
    if not end_ok:
        return ChainReport(script.name, False, None, "endpoint mismatch", tuple(rows), False)
    return ChainReport(script.name, True, None, "", tuple(rows), True)


def corrupt_script(script: ChainScript, step_no: int) -> ChainScript:
    """Replace one step's expected display with a tampered one."""
    if not 1 <= step_no <= len(script.steps):
        raise ScriptError(f"no step {step_no}")
    steps = list(script.steps)
    s = steps[step_no - 1]
    tampered = LamProd(
        *(s.expected.factors if isinstance(s.expected, LamProd) else [s.expected]),
        Lam(O, 1),
    )
    steps[step_no - 1] = ChainStep(s.axiom, s.position, s.args, s.note, tampered)
    return ChainScript(script.name + f"#corrupt{step_no}", script.start, script.end, tuple(steps), script.params)


# ----------------------------------------------------------------------
# script serialization


def _args_to_obj(args: dict) -> dict:
    out = {}
    for k, v in args.items():
        if isinstance(v, (Atom, One, Twist, Dual, Sym, Ten, Lin, Push)):
            out[k] = {"expr": render_expr(v)}
        else:
            out[k] = v
    return out


def _args_from_obj(obj: dict) -> dict:
    out = {}
    for k, v in obj.items():
        if isinstance(v, dict) and set(v) == {"expr"}:
            out[k] = parse_expr(v["expr"])
        else:
            out[k] = v
    return out


def script_to_obj(script: ChainScript) -> dict:
    return {
        "name": script.name,
        "params": script.params,
        "start": render_expr(script.start),
        "end": render_expr(script.end),
        "steps": [
            {
                "axiom": s.axiom,
                "position": s.position,
                "args": _args_to_obj(s.args),
                "note": s.note,
                "expected": render_expr(s.expected),
            }
            for s in script.steps
        ],
    }


def script_from_obj(obj: dict) -> ChainScript:
    try:
        steps = tuple(
            ChainStep(
                axiom=rec["axiom"],
                position=int(rec["position"]),
                args=_args_from_obj(rec.get("args", {})),
                note=rec.get("note", ""),
                expected=parse_expr(rec["expected"]),
            )
            for rec in obj["steps"]
        )
        return ChainScript(
            name=obj.get("name", "script"),
            start=parse_expr(obj["start"]),
            end=parse_expr(obj["end"]),
            steps=steps,
            params=dict(obj.get("params", {})),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ScriptError):
            raise
        raise ScriptError(f"malformed script: {exc}") from exc


def script_from_file(path: str) -> ChainScript:
    with open(path, "r", encoding="utf-8") as fh:
        return script_from_obj(json.load(fh))


def shipped_chain(name: str) -> ChainScript:
    """Load one of the chain scripts shipped with the package."""
    from importlib import resources

    fn = "chain_" + name.replace("-", "_") + ".json"
    ref = resources.files("detlam").joinpath("data").joinpath(fn)
    try:
        text = ref.read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise ScriptError(f"no shipped chain {name!r}") from exc
    return script_from_obj(json.loads(text))


# ----------------------------------------------------------------------
# built-in scripts


def _o_plus_twisted(name: str) -> Lin:
    """The block O + name{-1}."""
    return Lin((1, O), (1, Ten(Atom(name), T)))


def _pk_tree(k: int, arg) -> Lin:
    """P_k evaluated at a virtual class: sum_i 2^(k-i) (2O - arg)^(x)i."""
    two_minus = Lin((2, O), (-1, arg))
    return Lin(*(((2 ** (k - i)), tpow(two_minus, i)) for i in range(k + 1)))


def script_invfunc_a_k(k: int = 1) -> ChainScript:
    """The eleven-step chain from the restricted polynomial block to
    lambda(M)^(2^(k+1)) times two pairing blocks."""
    if k < 1:
        raise ScriptError("need k >= 1")
    iM, iL, N, M, L = Atom("iM"), Atom("iL"), Atom("N"), Atom("M"), Atom("L")
    qM, qMp, qMm, J = Atom("qM"), Atom("qMp"), Atom("qMm"), Atom("J")
    e = 2 ** (k + 1)

    start = Lam(Ten(iM, _pk_tree(k, o_minus(iL))))
    disp_a = Lam(Ten(iM, _pk_tree(k, Lin((1, O), (1, Ten(iL, T))))))
    disp_b = Lam(Ten(iM, _pk_tree(k, _o_plus_twisted("N"))))
    disp_c = Lam(Ten(M, o_minus(L), _pk_tree(k, o_minus(L))))
    disp_d = Lam(
        Ten(M, Lin((e, O), (-1, tpow(Lin((2, O), (-1, o_minus(L))), k + 1))))
    )
    disp_e = Lam(
        Ten(
            M,
            Lin((e, O), (-1, tpow(Lin((2, O), (-1, _o_plus_twisted("L"))), k + 1))),
        )
    )
    disp_f = Lam(Ten(M, Lin((e, O), (-1, tpow(o_minus(Ten(L, T)), k + 1)))))
    disp_g = LamProd(
        Lam(M, e),
        Lam(Ten(M, tpow(o_minus(Ten(L, T)), k + 1)), -1),
    )
    disp_h = LamProd(
        Lam(M, e),
        Lam(Ten(qM, tpow(o_minus(J), k + 1)), -1),
    )
    disp_i = LamProd(
        Lam(M, e),
        Lam(Ten(Lin((1, qMp), (-1, qMm)), tpow(o_minus(J), k + 1)), -1),
    )
    disp_j = LamProd(
        Lam(M, e),
        Lam(
            Ten(
                Lin((1, o_minus(qMm)), (-1, o_minus(qMp))),
                tpow(o_minus(J), k + 1),
            ),
            -1,
        ),
    )
    disp_k = LamProd(
        Lam(M, e),
        Lam(Ten(o_minus(qMm), tpow(o_minus(J), k + 1)), -1),
        Lam(Ten(o_minus(qMp), tpow(o_minus(J), k + 1)), 1),
    )

    steps = (
        ChainStep("line-twist-flip", 0, {"atom": "iL"}, "a", disp_a),
        ChainStep("iso-subst", 0, {"src": "iL", "dst": "N"}, "b", disp_b),
        ChainStep(
            "ideal-descent",
            0,
            {
                "map": {"iM": ["M", 0, 1], "N": ["L", 1, -1]},
                "multiplier": o_minus(L),
            },
            "c",
            disp_c,
        ),
        ChainStep("pk-identity", 0, {}, "d", disp_d),
        ChainStep("line-twist-flip", 0, {"atom": "L"}, "e", disp_e),
        ChainStep("cancel", 0, {}, "f", disp_f),
        ChainStep("cancel", 0, {}, "g", disp_g),
        ChainStep(
            "quotient-descent",
            1,
            {"map": {"M": ["qM", 0, 1], "L": ["J", 1, 1]}},
            "h",
            disp_h,
        ),
        ChainStep(
            "plus-minus-split",
            1,
            {"atom": "qM", "plus": "qMp", "minus": "qMm"},
            "i",
            disp_i,
        ),
        ChainStep("cancel", 1, {}, "j", disp_j),
        ChainStep("cancel", 1, {}, "k", disp_k),
    )
    return ChainScript("invfunc-a-k", start, disp_k, steps, {"k": k})


def script_invfunc_l_p(d: int = 1) -> ChainScript:
    """The blow-up chain: push the polynomial block down the exceptional
    fibration and collapse to lambda(M)^(2^(d+1))."""
    if d < 1:
        raise ScriptError("need d >= 1")
    muM, iM, bM, M = Atom("muM"), Atom("iM"), Atom("bM"), Atom("M")
    binder = "Nt"
    Nt = Atom(binder)

    start = Lam(Ten(muM, _pk_tree(d, _o_plus_twisted(binder))))
    inner_l = Lin(
        (2 ** d, O),
        *(
            (2 ** (d - i), tpow(Lin((2, O), (-1, _o_plus_twisted(binder))), i))
            for i in range(1, d + 1)
        ),
    )
    disp_l = Lam(Ten(iM, Push(binder, inner_l)))
    inner_m = Lin(
        (2 ** d, O),
        *((2 ** (d - i), tpow(o_minus(Ten(Nt, T)), i)) for i in range(1, d + 1)),
    )
    disp_m = Lam(Ten(iM, Push(binder, inner_m)))
    from math import comb

    inner_n = Lin(
        *(
            (2 ** (d - i) * (-1) ** j * comb(i, j), tpow(Ten(Nt, T), j))
            for i in range(d + 1)
            for j in range(i + 1)
        )
    )
    disp_n = Lam(Ten(iM, Push(binder, inner_n)))
    disp_o = Lam(bM, 2 ** (d + 1))
    disp_p = Lam(M, 2 ** (d + 1))

    steps = (
        ChainStep(
            "pushforward",
            0,
            {"pulled": "muM", "restrict": "iM", "binder": binder},
            "l",
            disp_l,
        ),
        ChainStep("cancel", 0, {}, "m", disp_m),
        ChainStep("binomial", 0, {}, "n", disp_n),
        ChainStep(
            "cartier-collapse",
            0,
            {"pulled": "muM", "restrict": "iM", "binder": binder, "base": "bM", "k": d},
            "o",
            disp_o,
        ),
        ChainStep("iso-subst", 0, {"src": "bM", "dst": "M"}, "p", disp_p),
    )
    return ChainScript("invfunc-l-p", start, disp_p, steps, {"d": d})


def script_multadd_d1() -> ChainScript:
    """The five-step trivialization of the extra pairing block at d = 1."""
    Q, L1, L2 = Atom("Q"), Atom("L1"), Atom("L2")

    def I(a, b, exp=1):
        return Lam(Ten(o_minus(a), o_minus(b)), exp)

    start = Lam(Ten(o_minus(Q), o_minus(L1), o_minus(L2)))
    s1 = LamProd(
        I(L1, L2),
        Lam(Ten(Lin((1, Q), (-1, Ten(Q, L1))), o_minus(L2)), -1),
    )
    s2 = LamProd(
        I(L1, L2),
        Lam(
            Ten(
                Lin((1, O), (-1, Ten(L1, Q)), (-1, o_minus(Q))),
                o_minus(L2),
            ),
            -1,
        ),
    )
    s3 = LamProd(
        I(L1, L2),
        Lam(Ten(o_minus(Ten(L1, Q)), o_minus(L2)), -1),
        I(Q, L2),
    )
    s4 = LamProd(
        I(L1, L2),
        I(L1, L2, -1),
        I(Q, L2, -1),
        I(Q, L2),
    )
    end = LamProd()
    steps = (
        ChainStep("cancel", 0, {}, "split off the pairing block", s1),
        ChainStep("cancel", 1, {}, "rewrite the twisted slot", s2),
        ChainStep("cancel", 1, {}, "recognize pairing notation", s3),
        ChainStep(
            "multadd-split",
            1,
            {"a": "L1", "b": "Q", "others": ["L2"]},
            "first-slot multiadditivity",
            s4,
        ),
        ChainStep("cancel", 0, {}, "cancel dual pairs", end),
    )
    return ChainScript("multadd-d1", start, end, steps, {"d": 1})


def builtin_chain_names() -> list[str]:
    return ["invfunc-a-k", "invfunc-l-p", "multadd-d1"]


def get_chain(name: str, dim: int = 1) -> ChainScript:
    if name == "invfunc-a-k":
        return script_invfunc_a_k(dim)
    if name == "invfunc-l-p":
        return script_invfunc_l_p(dim)
    if name == "multadd-d1":
        return script_multadd_d1()
    raise ScriptError(f"unknown chain {name!r}")


# ----------------------------------------------------------------------
# multiadditivity expansion


@dataclass(frozen=True)
class MultAddReport:
    lines: tuple
    q: str
    lhs: object
    rhs: object
    defect: tuple
    defect_is_trivial_block: bool

    @property
    def ok(self) -> bool:
        return self.defect_is_trivial_block

    def to_obj(self) -> dict:
        return {
            "lines": list(self.lines),
            "q": self.q,
            "lhs": render_expr(self.lhs),
            "rhs": render_expr(self.rhs),
            "defect": render_canonical(self.defect),
            "defect_is_trivial_block": self.defect_is_trivial_block,
        }


def multiadditivity_expand(lines, q) -> MultAddReport:
    """Expand I(L1 (x) Q, rest) against I(L1, rest) (x) I(Q, rest).

    The two sides are not formally equal; their lambda-exponent difference
    must be exactly minus the full (d+2)-factor block
    (O - L1)(O - Q)(O - L2)...(O - L_{d+1}), the canonically trivial one.
    """
    lines = [str(x) for x in lines]
    if not lines:
        raise ScriptError("need at least one line")
    q = str(q)

    def leaf(name):
        return O if name == "O" else Atom(name)

    first, rest = lines[0], lines[1:]
    rest_blocks = [o_minus(leaf(x)) for x in rest]
    lhs = Lam(Ten(o_minus(Ten(leaf(first), leaf(q))), *rest_blocks))
    rhs = LamProd(
        Lam(Ten(o_minus(leaf(first)), *rest_blocks)),
        Lam(Ten(o_minus(leaf(q)), *rest_blocks)),
    )
    diff = canonical_state(_state_of(lhs) + [(fs, -e) for fs, e in _state_of(rhs)])
    block = Lam(Ten(o_minus(leaf(first)), o_minus(leaf(q)), *rest_blocks), -1)
    want = canonical_state(_state_of(block))
    return MultAddReport(
        lines=tuple(lines),
        q=q,
        lhs=lhs,
        rhs=rhs,
        defect=_canon_items(diff),
        defect_is_trivial_block=diff == want,
    )
