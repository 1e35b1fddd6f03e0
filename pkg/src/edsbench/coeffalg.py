"""Exact rational coefficients and sparse multivariate polynomials.

Every symbolic computation in the package bottoms out in :class:`Poly`, a
sparse map from exponent vectors to :class:`fractions.Fraction`.  Polynomials
are immutable; all operations return new objects.
"""

from __future__ import annotations

import re
from fractions import Fraction
from numbers import Rational as _RationalABC
from typing import Iterable, Mapping, Sequence

Rational = Fraction

__all__ = [
    "Rational",
    "Poly",
    "PolyError",
    "as_rational",
    "poly_add",
    "poly_mul",
    "poly_partial",
    "poly_eval",
    "parse_poly",
    "format_poly",
    "solve_exact",
    "inverse_exact",
    "det_exact",
    "nullspace_exact",
    "rank_exact",
]


class PolyError(ValueError):
    """Dimension mismatch, bad variable index or unparsable polynomial text."""


def as_rational(value) -> Fraction:
    """Coerce ints, Fractions, floats (exactly) and ``"a/b"`` strings."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, _RationalABC)):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot interpret {value!r} as a rational")


def _grlex_key(exp: tuple[int, ...]):
    return (sum(exp), exp)


class Poly:
    """Sparse polynomial in ``nvars`` variables with rational coefficients."""

    __slots__ = ("nvars", "_terms", "_hash")

    def __init__(self, nvars: int, terms: Mapping[tuple[int, ...], object] | None = None):
        if nvars < 0:
            raise PolyError("nvars must be non-negative")
        self.nvars = nvars
        clean: dict[tuple[int, ...], Fraction] = {}
        for exp, c in (terms or {}).items():
            exp = tuple(exp)
            if len(exp) != nvars or any(e < 0 for e in exp):
                raise PolyError(f"bad exponent vector {exp} for {nvars} variables")
            c = as_rational(c)
            if c:
                clean[exp] = clean.get(exp, Fraction(0)) + c
                if not clean[exp]:
                    del clean[exp]
        self._terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, nvars: int, terms: dict) -> "Poly":
        # trusted constructor: terms already canonical (no zeros, right lengths)
        p = object.__new__(cls)
        p.nvars = nvars
        p._terms = terms
        p._hash = None
        return p

    @classmethod
    def zero(cls, nvars: int) -> "Poly":
        return cls._raw(nvars, {})

    @classmethod
    def const(cls, nvars: int, c) -> "Poly":
        c = as_rational(c)
        return cls._raw(nvars, {(0,) * nvars: c} if c else {})

    @classmethod
    def var(cls, i: int, nvars: int) -> "Poly":
        """The coordinate function ``x_i`` (0-based)."""
        if not 0 <= i < nvars:
            raise PolyError(f"variable index {i} out of range for {nvars} variables")
        exp = [0] * nvars
        exp[i] = 1
        return cls._raw(nvars, {tuple(exp): Fraction(1)})

    @property
    def terms(self) -> dict[tuple[int, ...], Fraction]:
        return dict(self._terms)

    def items(self):
        """Terms in graded-lex order, highest degree first."""
        return sorted(self._terms.items(), key=lambda kv: _grlex_key(kv[0]), reverse=True)

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def is_constant(self) -> bool:
        return all(not any(e) for e in self._terms)

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise PolyError("polynomial is not constant")
        return self._terms.get((0,) * self.nvars, Fraction(0))

    def degree(self) -> int:
        return max((sum(e) for e in self._terms), default=-1)

    def _check(self, other: "Poly"):
        if self.nvars != other.nvars:
            raise PolyError(f"nvars mismatch: {self.nvars} vs {other.nvars}")

    def _coerce(self, other) -> "Poly":
        if isinstance(other, Poly):
            self._check(other)
            return other
        return Poly.const(self.nvars, other)

    def __add__(self, other) -> "Poly":
        other = self._coerce(other)
        if not other._terms:
            return self
        out = dict(self._terms)
        for exp, c in other._terms.items():
            s = out.get(exp)
            if s is None:
                out[exp] = c
            else:
                s = s + c
                if s:
                    out[exp] = s
                else:
                    del out[exp]
        return Poly._raw(self.nvars, out)

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly._raw(self.nvars, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other) -> "Poly":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Poly":
        return self._coerce(other) - self

    def scale(self, c) -> "Poly":
        c = as_rational(c)
        if not c:
            return Poly.zero(self.nvars)
        return Poly._raw(self.nvars, {e: v * c for e, v in self._terms.items()})

    def __mul__(self, other) -> "Poly":
        if not isinstance(other, Poly):
            return self.scale(other)
        self._check(other)
        if not self._terms or not other._terms:
            return Poly.zero(self.nvars)
        out: dict[tuple[int, ...], Fraction] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return Poly._raw(self.nvars, {e: c for e, c in out.items() if c})

    def __rmul__(self, other) -> "Poly":
        return self.scale(other)

    def __pow__(self, k: int) -> "Poly":
        if k < 0:
            raise PolyError("negative powers are not polynomials")
        result = Poly.const(self.nvars, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, Poly):
            return self.nvars == other.nvars and self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self._terms == ({(0,) * self.nvars: Fraction(other)} if other else {})
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.nvars, frozenset(self._terms.items())))
        return self._hash

    def partial(self, var: int) -> "Poly":
        """Formal derivative with respect to the 0-based variable ``var``."""
        if not 0 <= var < self.nvars:
            raise PolyError(f"variable index {var} out of range for {self.nvars} variables")
        out = {}
        for exp, c in self._terms.items():
            k = exp[var]
            if k:
                e = exp[:var] + (k - 1,) + exp[var + 1:]
                out[e] = c * k
        return Poly._raw(self.nvars, out)

    def __call__(self, pt: Sequence):
        return self.evaluate(pt)

    def evaluate(self, pt: Sequence):
        """Value at ``pt``; exact when every coordinate is int/Fraction."""
        if len(pt) != self.nvars:
            raise PolyError(f"point has {len(pt)} coordinates, expected {self.nvars}")
        exact = all(isinstance(v, (int, Fraction)) for v in pt)
        if exact:
            pt = [Fraction(v) for v in pt]
            total = Fraction(0)
        else:
            pt = [float(v) for v in pt]
            total = 0.0
        for exp, c in self._terms.items():
            term = c if exact else float(c)
            for v, k in zip(pt, exp):
                if k:
                    term = term * v**k
            total += term
        return total

    def compose(self, subs: Sequence["Poly"]) -> "Poly":
        """Substitute ``x_i -> subs[i]``; the result lives in ``subs``' ring."""
        if len(subs) != self.nvars:
            raise PolyError(f"need {self.nvars} substitutions, got {len(subs)}")
        if not subs:
            raise PolyError("cannot infer target ring from an empty substitution")
        target = subs[0].nvars
        for s in subs:
            if s.nvars != target:
                raise PolyError("substitutions live in different rings")
        powers: list[dict[int, Poly]] = [{0: Poly.const(target, 1)} for _ in subs]

        def power(i, k):
            cache = powers[i]
            if k not in cache:
                cache[k] = power(i, k - 1) * subs[i]
            return cache[k]

        total = Poly.zero(target)
        for exp, c in self._terms.items():
            term = Poly.const(target, c)
            for i, k in enumerate(exp):
                if k:
                    term = term * power(i, k)
            total = total + term
        return total

    def extend(self, nvars: int, offset: int = 0) -> "Poly":
        """Embed into a ring with more variables, shifting indices by ``offset``."""
        if offset + self.nvars > nvars:
            raise PolyError("target ring too small")
        pad_l, pad_r = (0,) * offset, (0,) * (nvars - offset - self.nvars)
        return Poly._raw(nvars, {pad_l + e + pad_r: c for e, c in self._terms.items()})

    def to_string(self, names: Sequence[str] | None = None) -> str:
        return format_poly(self, names)

    def __repr__(self) -> str:
        return f"Poly({self.nvars}, {format_poly(self)!r})"

    def __str__(self) -> str:
        return format_poly(self)


def poly_add(a: Poly, b: Poly) -> Poly:
    return a + b


def poly_mul(a: Poly, b: Poly) -> Poly:
    return a * b


def poly_partial(p: Poly, var: int) -> Poly:
    """Partial derivative with a 1-based variable index."""
    if not 1 <= var <= p.nvars:
        raise PolyError(f"variable index {var} out of range 1..{p.nvars}")
    return p.partial(var - 1)


def poly_eval(p: Poly, pt: Sequence):
    return p.evaluate(pt)


def _default_names(n: int) -> list[str]:
    if n <= 3:
        return ["x", "y", "z"][:n]
    return [f"x{i + 1}" for i in range(n)]


def _format_rational(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def format_poly(p: Poly, names: Sequence[str] | None = None) -> str:
    """Canonical text form, e.g. ``-1/2*x^2*y + 3*z``."""
    names = list(names) if names is not None else _default_names(p.nvars)
    if len(names) != p.nvars:
        raise PolyError(f"{len(names)} names for {p.nvars} variables")
    if not p._terms:
        return "0"
    pieces = []
    for exp, c in p.items():
        mono = "*".join(
            names[i] if k == 1 else f"{names[i]}^{k}" for i, k in enumerate(exp) if k
        )
        mag = abs(c)
        if not mono:
            body = _format_rational(mag)
        elif mag == 1:
            body = mono
        else:
            body = f"{_format_rational(mag)}*{mono}"
        pieces.append(("-" if c < 0 else "+", body))
    sign, body = pieces[0]
    out = ("-" if sign == "-" else "") + body
    for sign, body in pieces[1:]:
        out += f" {sign} {body}"
    return out


_TOKEN = re.compile(r"\s*(?:(\d+(?:/\d+)?)|([A-Za-z_][A-Za-z_0-9]*)|(\^)|(\*)|(\+)|(-))")


def _tokenize(text: str):
    pos, tokens = 0, []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise PolyError(f"unexpected character {text[pos:].strip()[:1]!r} at position {pos}")
        num, name, caret, star, plus, minus = m.groups()
        if num is not None:
            tokens.append(("num", num, m.start(1)))
        elif name is not None:
            tokens.append(("name", name, m.start(2)))
        else:
            tokens.append(("op", caret or star or plus or minus, m.start()))
        pos = m.end()
    return tokens


def parse_poly(text: str, names: Sequence[str]) -> Poly:
    """Parse the polynomial text grammar over the declared variable ``names``.

    Grammar: signed sums of products of rational literals (``3``, ``-1/2``)
    and variables with optional non-negative integer exponents (``x^2``).
    """
    names = list(names)
    index = {n: i for i, n in enumerate(names)}
    nvars = len(names)
    tokens = _tokenize(text)
    if not tokens:
        raise PolyError("empty polynomial")
    pos = 0
    total = Poly.zero(nvars)

    def peek():
        return tokens[pos] if pos < len(tokens) else None

    sign = 1
    expect_term = True
    while pos < len(tokens):
        kind, val, where = tokens[pos]
        if expect_term:
            if kind == "op" and val in "+-":
                if val == "-":
                    sign = -sign
                pos += 1
                continue
            coef = Fraction(sign)
            exp = [0] * nvars
            while True:
                tok = peek()
                if tok is None:
                    raise PolyError("expression ends with an operator")
                kind, val, where = tok
                if kind == "num":
                    coef *= Fraction(val)
                    pos += 1
                elif kind == "name":
                    if val not in index:
                        raise PolyError(f"unknown variable {val!r}")
                    pos += 1
                    k = 1
                    nxt = peek()
                    if nxt is not None and nxt[1] == "^":
                        pos += 1
                        num = peek()
                        if num is None or num[0] != "num" or "/" in num[1]:
                            raise PolyError(f"exponent after {val!r} must be a non-negative integer")
                        k = int(num[1])
                        pos += 1
                    exp[index[val]] += k
                else:
                    raise PolyError(f"unexpected {val!r} at position {where}")
                nxt = peek()
                if nxt is not None and nxt[1] == "*":
                    pos += 1
                    continue
                break
            total = total + Poly._raw(nvars, {tuple(exp): coef} if coef else {})
            sign = 1
            expect_term = False
        else:
            if kind == "op" and val in "+-":
                sign = 1 if val == "+" else -1
                pos += 1
                expect_term = True
            else:
                raise PolyError(f"expected '+' or '-' at position {where}, found {val!r}")
    if expect_term:
        raise PolyError("expression ends with an operator")
    return total


# -- small exact linear algebra over Q -------------------------------------


def _gauss_jordan(rows: list[list[Fraction]], ncols: int):
    """Reduce in place; returns pivot columns."""
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = 1 / rows[r][c]
        rows[r] = [v * inv for v in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return pivots


def solve_exact(A: Sequence[Sequence], b: Sequence) -> list[Fraction]:
    """Solve a square nonsingular system exactly over Q."""
    n = len(A)
    rows = [[as_rational(v) for v in row] + [as_rational(bi)] for row, bi in zip(A, b)]
    if any(len(r) != n + 1 for r in rows) or len(rows) != n:
        raise PolyError("solve_exact needs a square system")
    pivots = _gauss_jordan(rows, n)
    if len(pivots) < n:
        raise PolyError("singular matrix")
    return [rows[i][n] for i in range(n)]


def inverse_exact(A: Sequence[Sequence]) -> list[list[Fraction]]:
    n = len(A)
    rows = [
        [as_rational(v) for v in row] + [Fraction(int(i == j)) for j in range(n)]
        for i, row in enumerate(A)
    ]
    pivots = _gauss_jordan(rows, n)
    if len(pivots) < n:
        raise PolyError("singular matrix")
    return [row[n:] for row in rows]


def det_exact(A: Sequence[Sequence]) -> Fraction:
    rows = [[as_rational(v) for v in row] for row in A]
    n = len(rows)
    det = Fraction(1)
    for c in range(n):
        piv = next((i for i in range(c, n) if rows[i][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            rows[c], rows[piv] = rows[piv], rows[c]
            det = -det
        det *= rows[c][c]
        for i in range(c + 1, n):
            f = rows[i][c] / rows[c][c]
            if f:
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[c])]
    return det


def polys_from_strings(texts: Iterable[str], names: Sequence[str]) -> list[Poly]:
    return [parse_poly(t, names) for t in texts]


def nullspace_exact(rows: Sequence[Sequence], ncols: int) -> list[list[Fraction]]:
    """Basis of ``{x : rows · x = 0}`` over Q, one vector per free column."""
    work = [[as_rational(v) for v in row] for row in rows]
    pivots = _gauss_jordan(work, ncols) if work else []
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        vec = [Fraction(0)] * ncols
        vec[f] = Fraction(1)
        for r, pc in enumerate(pivots):
            vec[pc] = -work[r][f]
        basis.append(vec)
    return basis


def rank_exact(rows: Sequence[Sequence], ncols: int) -> int:
    work = [[as_rational(v) for v in row] for row in rows]
    return len(_gauss_jordan(work, ncols)) if work else 0
