"""Exact symbolic expressions over jet space.

An expression is a normalized sum of terms.  Each term is an exact rational
coefficient times a multiset of (base, exponent) factors, where a base is an
atom (independent variable, jet coordinate, unknown constant, or formal
function symbol) or a polynomial sub-expression carried opaquely under a
negative-integer or fractional rational exponent.

Normal forms are canonical: syntactic equality of normal forms decides
zero-equivalence for this expression class (polynomials in jets and
parameters, times rational powers of distinct polynomial bases, times formal
function symbols).  No algebraic relations are assumed between distinct
opaque bases; this is a stated limitation, not an oversight.

Values are immutable after construction and all operations are pure.
"""

from __future__ import annotations

from fractions import Fraction


class DomainError(ArithmeticError):
    """Raised when normalization hits an undefined value (zero to a negative power)."""


class NonlinearError(ValueError):
    """Raised by collect() when an expression is not linear in the unknowns."""

    def __init__(self, message, term=None):
        super().__init__(message)
        self.term = term


def _as_fraction(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise TypeError(f"expected an exact rational, got {type(x).__name__}")


# ---------------------------------------------------------------------------
# Atoms
# ---------------------------------------------------------------------------

class Atom:
    """Base class for the leaves of the expression tree.

    Every atom carries a precomputed sort key; the key order is total and
    stable across runs (kind, then index/name, then multi-index, then the
    normal form of a function argument).
    """

    __slots__ = ("_key", "_hash")

    def sort_key(self):
        return self._key

    def __eq__(self, other):
        return self is other or (isinstance(other, Atom) and self._key == other._key)

    def __ne__(self, other):
        return not self.__eq__(other)

    def __lt__(self, other):
        return self._key < other._key

    def __hash__(self):
        return self._hash

    def as_expr(self):
        return Expr(((Fraction(1), ((self, Fraction(1)),)),))

    # arithmetic delegates to the expression layer
    def __add__(self, other):
        return self.as_expr() + other

    __radd__ = __add__

    def __sub__(self, other):
        return self.as_expr() - other

    def __rsub__(self, other):
        return (-self.as_expr()) + other

    def __neg__(self):
        return -self.as_expr()

    def __mul__(self, other):
        return self.as_expr() * other

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self.as_expr() / other

    def __rtruediv__(self, other):
        return other / self.as_expr()

    def __pow__(self, e):
        return self.as_expr() ** e


class IndepVar(Atom):
    """Independent variable x^i."""

    __slots__ = ("index", "name")

    def __init__(self, index, name):
        self.index = index
        self.name = name
        self._key = (0, index)
        self._hash = hash(self._key)

    def __repr__(self):
        return self.name


class Jet(Atom):
    """Jet coordinate u^a_J: dependent variable `alpha` differentiated by the
    multi-index `mi`, a tuple of IndepVar atoms sorted by index (so u[x,t]
    and u[t,x] are the same atom).  An empty multi-index is the dependent
    variable itself."""

    __slots__ = ("alpha", "name", "mi")

    def __init__(self, alpha, name, mi=()):
        self.alpha = alpha
        self.name = name
        self.mi = tuple(sorted(mi, key=lambda v: v.index))
        self._key = (1, alpha, len(self.mi), tuple(v.index for v in self.mi))
        self._hash = hash(self._key)

    @property
    def order(self):
        return len(self.mi)

    def shifted(self, v):
        """The jet with one more differentiation by the independent variable v."""
        return Jet(self.alpha, self.name, self.mi + (v,))

    def counts(self):
        c = {}
        for v in self.mi:
            c[v.index] = c.get(v.index, 0) + 1
        return c

    def contains(self, other):
        """True if this jet is `other` or a derivative of it (same variable,
        multi-index a superset as multisets)."""
        if self.alpha != other.alpha or len(self.mi) < len(other.mi):
            return False
        mine, theirs = self.counts(), other.counts()
        return all(mine.get(i, 0) >= k for i, k in theirs.items())

    def minus(self, other):
        """Multi-index difference self.mi - other.mi as a tuple of IndepVars."""
        rest = list(self.mi)
        for v in other.mi:
            rest.remove(v)
        return tuple(rest)

    def __repr__(self):
        if not self.mi:
            return self.name
        return f"{self.name}[{','.join(v.name for v in self.mi)}]"


class Param(Atom):
    """Unknown constant (ansatz coefficient, arbitrary constant)."""

    __slots__ = ("name",)

    def __init__(self, name):
        self.name = name
        self._key = (2, name)
        self._hash = hash(self._key)

    def __repr__(self):
        return self.name


class FuncSym(Atom):
    """Formal univariate function symbol f, differentiated `order` times,
    applied to an expression argument."""

    __slots__ = ("name", "order", "arg")

    def __init__(self, name, order, arg):
        self.name = name
        self.order = order
        self.arg = arg
        self._key = (3, name, order, arg.sort_key())
        self._hash = hash(self._key)

    def raised(self):
        return FuncSym(self.name, self.order + 1, self.arg)

    def __repr__(self):
        return f"{self.name}{self.order * chr(39)}({self.arg!r})"


# ---------------------------------------------------------------------------
# Expr
# ---------------------------------------------------------------------------

def _basekey(b):
    if isinstance(b, Atom):
        return (0,) + b._key
    return (1, b.sort_key())


def _monokey(factors):
    return tuple((_basekey(b), e.numerator, e.denominator) for b, e in factors)


class Expr:
    """Canonical sum of terms; construct through the arithmetic operators,
    `Atom.as_expr`, or `Expr.const` rather than directly."""

    __slots__ = ("terms", "_hash", "_skey", "_atoms")

    def __init__(self, terms=()):
        self.terms = tuple(terms)
        self._hash = None
        self._skey = None
        self._atoms = None

    # -- construction helpers --

    @staticmethod
    def const(c):
        c = _as_fraction(c)
        if c == 0:
            return ZERO
        return Expr(((c, ()),))

    # -- canonical keys --

    def sort_key(self):
        if self._skey is None:
            self._skey = tuple(
                (_monokey(f), c.numerator, c.denominator) for c, f in self.terms
            )
        return self._skey

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.sort_key())
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Expr):
            if isinstance(other, (int, Fraction)):
                return self == Expr.const(other)
            return NotImplemented
        return self.terms == other.terms

    def __ne__(self, other):
        r = self.__eq__(other)
        return NotImplemented if r is NotImplemented else not r

    # -- predicates --

    @property
    def is_zero(self):
        return not self.terms

    def is_rational(self):
        return not self.terms or (len(self.terms) == 1 and not self.terms[0][1])

    def as_rational(self):
        if self.is_zero:
            return Fraction(0)
        if not self.is_rational():
            raise ValueError(f"not a rational constant: {self!r}")
        return self.terms[0][0]

    def atoms(self):
        """All atoms appearing anywhere, including inside function-symbol
        arguments and opaque bases."""
        if self._atoms is None:
            found = set()
            for _, factors in self.terms:
                for b, _e in factors:
                    if isinstance(b, Atom):
                        found.add(b)
                        if isinstance(b, FuncSym):
                            found |= b.arg.atoms()
                    else:
                        found |= b.atoms()
            self._atoms = frozenset(found)
        return self._atoms

    def jets(self, alpha=None):
        return [a for a in sorted(self.atoms())
                if isinstance(a, Jet) and (alpha is None or a.alpha == alpha)]

    def max_order(self):
        return max((a.order for a in self.atoms() if isinstance(a, Jet)), default=0)

    def is_polynomial(self):
        """True if every factor is an atom raised to a positive integer power."""
        return all(
            isinstance(b, Atom) and e.denominator == 1 and e > 0
            for _, factors in self.terms for b, e in factors
        )

    # -- arithmetic --

    def __add__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return _build(list(self.terms) + list(other.terms))

    __radd__ = __add__

    def __neg__(self):
        return Expr(tuple((-c, f) for c, f in self.terms))

    def __sub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        out = []
        for c1, f1 in self.terms:
            for c2, f2 in other.terms:
                out.extend(_term_product(c1, f1, c2, f2))
        return _build(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            q = _as_fraction(other)
            if q == 0:
                raise DomainError("division by zero")
            return self * Expr.const(1 / q)
        if isinstance(other, Expr):
            return self * make_power(other, Fraction(-1))
        return NotImplemented

    def __rtruediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other * make_power(self, Fraction(-1))

    def __pow__(self, e):
        if isinstance(e, Expr):
            e = e.as_rational()
        return make_power(self, _as_fraction(e))

    def __repr__(self):
        return to_string(self)

    __str__ = __repr__


def _coerce(x):
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, Fraction)):
        return Expr.const(x)
    if isinstance(x, Atom):
        return x.as_expr()
    return NotImplemented


ZERO = Expr()
ONE = Expr(((Fraction(1), ()),))


# ---------------------------------------------------------------------------
# Normalization
# ---------------------------------------------------------------------------

def _term_product(c1, f1, c2, f2):
    """Multiply two canonical terms; returns a list of terms (expansion of
    opaque powers that became nonnegative integers may produce several)."""
    merged = dict(f1)
    for b, e in f2:
        cur = merged.get(b)
        merged[b] = e if cur is None else cur + e
    return _expand_term(c1 * c2, merged)


def _expand_term(coeff, fdict):
    """Build canonical terms from a coefficient and a base->exponent mapping.

    Opaque bases whose exponent is a nonnegative integer are expanded into
    the polynomial part; everything else stays a factor."""
    if coeff == 0:
        return []
    plain = []
    expansions = []
    for b, e in fdict.items():
        if e == 0:
            continue
        if not isinstance(b, Atom) and e.denominator == 1 and e > 0:
            expansions.append((b, int(e)))
        else:
            plain.append((b, e))
    plain.sort(key=lambda fe: _basekey(fe[0]))
    if not expansions:
        return [(coeff, tuple(plain))]
    prod = Expr(((coeff, tuple(plain)),))
    for b, k in expansions:
        prod = prod * _int_power(b, k)
    return list(prod.terms)


def _int_power(e, k):
    result = ONE
    square = e
    while k:
        if k & 1:
            result = result * square
        k >>= 1
        if k:
            square = square * square
    return result


def _build(raw_terms):
    """Accumulate like terms, then run opaque-base reduction to a fixpoint."""
    acc = {}
    for c, f in raw_terms:
        key = _monokey(f)
        cur = acc.get(key)
        if cur is None:
            acc[key] = [c, f]
        else:
            cur[0] += c
    terms = [(c, f) for c, f in acc.values() if c != 0]
    if any(not isinstance(b, Atom) for _, f in terms for b, _ in f):
        terms = _radical_reduce(terms)
    terms.sort(key=lambda t: _monokey(t[1]))
    return Expr(tuple(terms))


def _split_radical(factors):
    plain, rad = [], []
    for b, e in factors:
        if isinstance(b, Atom):
            plain.append((b, e))
        else:
            rad.append((b, e))
    return tuple(plain), tuple(rad)


def _lm_key(factors):
    return (sum(e for _, e in factors), _monokey(factors))


def _divides(lm, mono):
    need = dict(lm)
    have = {b: e for b, e in mono}
    return all(have.get(b, 0) >= k for b, k in need.items())


def _mono_quot(mono, lm):
    out = dict(mono)
    for b, k in lm:
        out[b] -= k
        if out[b] == 0:
            del out[b]
    return tuple(sorted(out.items(), key=lambda fe: _basekey(fe[0])))


def _radical_reduce(terms):
    """Keep opaque-base powers canonical: for each group of terms sharing a
    radical signature, divide the polynomial part by each (non-constant)
    base and move exact multiples up one power.  The resulting base-adic
    form is unique, which is what makes syntactic zero-testing sound."""
    while True:
        groups = {}
        for c, f in terms:
            plain, rad = _split_radical(f)
            groups.setdefault(rad, []).append((c, plain))
        changed = False
        out = []
        for rad, polyterms in groups.items():
            if not rad:
                out.extend((c, p) for c, p in polyterms)
                continue
            moved = _reduce_group(rad, polyterms)
            if moved is None:
                out.extend((c, tuple(sorted(dict(p + rad).items(),
                                            key=lambda fe: _basekey(fe[0]))))
                           for c, p in polyterms)
            else:
                changed = True
                out.extend(moved)
        # re-accumulate (moved terms can collide with existing ones)
        acc = {}
        for c, f in out:
            key = _monokey(f)
            cur = acc.get(key)
            if cur is None:
                acc[key] = [c, f]
            else:
                cur[0] += c
        terms = [(c, f) for c, f in acc.values() if c != 0]
        if not changed:
            return terms


def _reduce_group(rad, polyterms):
    """Try to extract one exact multiple of one base from the group's
    polynomial part.  Returns replacement raw terms, or None if stable."""
    for b, e in rad:
        if b.is_rational():
            continue  # opaque constants like 2^(1/2) are inert
        lm_c, lm_f = max(b.terms, key=lambda t: _lm_key(t[1]))
        # polynomial division of the group content by b
        poly = {f: c for c, f in _accumulate(polyterms)}
        quot = {}
        progress = True
        while progress:
            progress = False
            for mono in sorted(poly, key=_lm_key, reverse=True):
                if _divides(lm_f, mono):
                    q = _mono_quot(mono, lm_f)
                    ratio = poly[mono] / lm_c
                    quot[q] = quot.get(q, 0) + ratio
                    for bc, bf in b.terms:
                        prods = _term_product(-ratio * bc, q, Fraction(1), bf)
                        for pc, pf in prods:
                            # products stay polynomial here: q and bf are atom factors
                            poly[pf] = poly.get(pf, 0) + pc
                            if poly[pf] == 0:
                                del poly[pf]
                    progress = True
                    break
        if not quot:
            continue
        rest = tuple(fe for fe in rad if fe[0] is not b and fe != (b, e))
        up = [(b, e + 1)] if e + 1 != 0 else []
        moved = []
        for q, c in quot.items():
            if c == 0:
                continue
            moved.extend(_expand_term(c, dict(q + rest + tuple(up))))
        for mono, c in poly.items():
            moved.extend(_expand_term(c, dict(mono + rad)))
        return moved
    return None


def _accumulate(terms):
    acc = {}
    for c, f in terms:
        key = _monokey(f)
        cur = acc.get(key)
        if cur is None:
            acc[key] = [c, f]
        else:
            cur[0] += c
    return [(c, f) for c, f in acc.values() if c != 0]


def _nth_root(n, k):
    """Exact integer k-th root of n >= 0, or None."""
    if n in (0, 1):
        return n
    r = round(n ** (1.0 / k))
    for cand in (r - 1, r, r + 1):
        if cand >= 0 and cand ** k == n:
            return cand
    return None


def _rational_pow(c, e):
    """c**e as an exact Fraction, or None when the result is irrational."""
    if e.denominator == 1:
        if c == 0 and e < 0:
            raise DomainError("zero raised to a negative power")
        return c ** int(e)
    if c < 0:
        return None
    if c == 0:
        if e < 0:
            raise DomainError("zero raised to a negative power")
        return Fraction(0)
    pn = _nth_root(c.numerator, e.denominator)
    pd = _nth_root(c.denominator, e.denominator)
    if pn is None or pd is None:
        return None
    return Fraction(pn, pd) ** e.numerator


def make_power(base, e):
    """Canonical `base ** e` for an Expr base and rational exponent.

    Nonnegative integer powers of sums expand; single terms distribute over
    their factors; everything else becomes an opaque factor whose base must
    be polynomial."""
    e = _as_fraction(e)
    if e == 0:
        return ONE
    if e == 1:
        return base
    if base.is_zero:
        if e < 0:
            raise DomainError("zero raised to a negative power")
        return ZERO
    if e.denominator == 1 and e > 0:
        return _int_power(base, int(e))
    if len(base.terms) == 1:
        c, factors = base.terms[0]
        scalar = _rational_pow(c, e)
        fdict = {b: k * e for b, k in factors}
        if scalar is None:
            fdict[Expr.const(c)] = e
            scalar = Fraction(1)
        return _build(_expand_term(scalar, fdict))
    if not base.is_polynomial():
        raise DomainError(
            f"cannot raise a non-polynomial sum to the power {e}: {base!r}")
    return Expr(((Fraction(1), ((base, e),)),))


# ---------------------------------------------------------------------------
# Calculus on atoms
# ---------------------------------------------------------------------------

def pdiff(e, a):
    """Partial derivative of e with respect to the atom a, treating all other
    atoms as constants.  Function symbols differentiate through their
    argument by the chain rule; opaque powers by the power rule."""
    out = []
    for coeff, factors in e.terms:
        for i, (b, k) in enumerate(factors):
            db = _base_diff(b, a)
            if db is None:
                continue
            rest = dict(factors[:i] + factors[i + 1:])
            cur = _build(_expand_term(coeff * k, rest))
            if k != 1:
                if isinstance(b, Atom):
                    cur = cur * _build(_expand_term(Fraction(1), {b: k - 1}))
                else:
                    cur = cur * make_power(b, k - 1)
            cur = cur * db
            out.extend(cur.terms)
    return _build(out)


def _base_diff(b, a):
    """d(b)/d(a) as an Expr, or None when it is zero."""
    if isinstance(b, Atom):
        if b == a:
            return ONE
        if isinstance(b, FuncSym):
            darg = pdiff(b.arg, a)
            if darg.is_zero:
                return None
            return b.raised().as_expr() * darg
        return None
    d = pdiff(b, a)
    return None if d.is_zero else d


def substitute(e, a, replacement):
    """Replace every occurrence of the atom a (including inside function
    arguments and opaque bases) by `replacement`, renormalizing."""
    replacement = _coerce(replacement)
    out = []
    for coeff, factors in e.terms:
        cur = Expr.const(coeff)
        for b, k in factors:
            if isinstance(b, Atom):
                if b == a:
                    piece = make_power(replacement, k)
                elif isinstance(b, FuncSym) and a in b.arg.atoms():
                    newf = FuncSym(b.name, b.order, substitute(b.arg, a, replacement))
                    piece = _build(_expand_term(Fraction(1), {newf: k}))
                else:
                    piece = _build(_expand_term(Fraction(1), {b: k}))
            else:
                if a in b.atoms():
                    piece = make_power(substitute(b, a, replacement), k)
                else:
                    piece = Expr(((Fraction(1), ((b, k),)),))
            cur = cur * piece
            if cur.is_zero:
                break
        out.extend(cur.terms)
    return _build(out)


def substitute_many(e, pairs):
    for a, rep in pairs:
        e = substitute(e, a, rep)
    return e


# ---------------------------------------------------------------------------
# Collection by monomials
# ---------------------------------------------------------------------------

class LinearForm:
    """Affine form  const + sum(coeffs[p] * p)  over Param unknowns."""

    __slots__ = ("const", "coeffs")

    def __init__(self):
        self.const = Fraction(0)
        self.coeffs = {}

    def items(self):
        return sorted(self.coeffs.items(), key=lambda kv: kv[0].sort_key())

    def __repr__(self):
        parts = [str(self.const)] if self.const else []
        parts += [f"{c}*{p!r}" for p, c in self.items()]
        return " + ".join(parts) if parts else "0"


def collect(e, unknowns):
    """Partition e as sum over monomial keys of key * (affine form in the
    unknown parameters).  Keys are canonical factor tuples free of unknowns,
    in deterministic order.  Raises NonlinearError if any term has joint
    degree > 1 in the unknowns."""
    unknowns = frozenset(unknowns)
    found = {}
    for coeff, factors in e.terms:
        present = [(b, k) for b, k in factors if b in unknowns]
        if len(present) > 1 or (present and present[0][1] != 1):
            raise NonlinearError(
                f"term is nonlinear in the unknowns: {Expr(((coeff, factors),))!r}",
                term=(coeff, factors))
        if present:
            key = tuple(fe for fe in factors if fe[0] not in unknowns)
        else:
            key = factors
        form = found.get(key)
        if form is None:
            form = found[key] = LinearForm()
        if present:
            p = present[0][0]
            form.coeffs[p] = form.coeffs.get(p, Fraction(0)) + coeff
        else:
            form.const += coeff
    return {key: found[key] for key in sorted(found, key=_monokey)}


def key_expr(key):
    """The monomial Expr corresponding to a collect() key."""
    return Expr(((Fraction(1), key),))


# ---------------------------------------------------------------------------
# Symbol table
# ---------------------------------------------------------------------------

class SymbolTable:
    """Declared names for one model: ordered independent and dependent
    variables, unknown constants, and formal function symbols.  Tables are
    passed explicitly; there is no global state."""

    def __init__(self, indep, dep, params=(), funcs=()):
        self.indep = tuple(IndepVar(i, n) for i, n in enumerate(indep))
        self.dep_names = tuple(dep)
        self.params = {n: Param(n) for n in params}
        self.funcs = tuple(funcs)
        names = [v.name for v in self.indep] + list(dep) + list(params) + list(funcs)
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate declaration among {names}")
        self._by_name = {v.name: v for v in self.indep}

    @property
    def n(self):
        return len(self.indep)

    @property
    def m(self):
        return len(self.dep_names)

    def indep_var(self, name):
        v = self._by_name.get(name)
        if v is None:
            raise KeyError(f"not an independent variable: {name}")
        return v

    def jet(self, name, mi_names=()):
        alpha = self.dep_names.index(name)
        mi = tuple(self.indep_var(v) for v in mi_names)
        return Jet(alpha, name, mi)

    def jet_by_alpha(self, alpha, mi=()):
        return Jet(alpha, self.dep_names[alpha], mi)

    def param(self, name):
        if name not in self.params:
            self.params[name] = Param(name)
        return self.params[name]

    def fresh_param(self, prefix):
        i = 0
        while f"{prefix}{i}" in self.params:
            i += 1
        return self.param(f"{prefix}{i}")

    def func(self, name, order, arg):
        if name not in self.funcs:
            raise KeyError(f"not a declared function symbol: {name}")
        return FuncSym(name, order, arg)

    def extended(self, params=(), funcs=()):
        t = SymbolTable([v.name for v in self.indep], self.dep_names,
                        list(self.params) + list(params),
                        list(self.funcs) + list(funcs))
        return t


# ---------------------------------------------------------------------------
# Printing (the output re-parses under the input grammar)
# ---------------------------------------------------------------------------

def _exp_str(e):
    if e.denominator == 1:
        return str(e.numerator) if e > 0 else f"({e.numerator})"
    return f"({e.numerator}/{e.denominator})"


def _base_str(b):
    if isinstance(b, IndepVar) or isinstance(b, Param):
        return b.name
    if isinstance(b, Jet):
        if not b.mi:
            return b.name
        return f"{b.name}[{','.join(v.name for v in b.mi)}]"
    if isinstance(b, FuncSym):
        return f"{b.name}{b.order * chr(39)}({to_string(b.arg)})"
    return f"({to_string(b)})"


def _term_str(coeff, factors):
    pieces = []
    for b, e in factors:
        s = _base_str(b)
        if e != 1:
            s += f"^{_exp_str(e)}"
        pieces.append(s)
    mag = abs(coeff)
    if not pieces:
        num = str(mag)
    elif mag == 1:
        num = "*".join(pieces)
    elif mag.denominator == 1:
        num = "*".join([str(mag.numerator)] + pieces)
    else:
        num = "*".join([f"{mag.numerator}/{mag.denominator}"] + pieces)
    return num


def to_string(e):
    if e.is_zero:
        return "0"
    parts = []
    for i, (coeff, factors) in enumerate(e.terms):
        body = _term_str(coeff, factors)
        if i == 0:
            parts.append(("-" if coeff < 0 else "") + body)
        else:
            parts.append(("- " if coeff < 0 else "+ ") + body)
    return " ".join(parts)
