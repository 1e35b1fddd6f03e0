"""Differential forms with polynomial coefficients on a coordinate chart.

A form is a sparse map from strictly increasing multi-indices (0-based
chart-variable indices) to coefficients.  :class:`Form` carries
:class:`~edsbench.coeffalg.Poly` coefficients; :class:`PointForm` carries the
numbers obtained by evaluating one at a point.  Both share the algebra in
:class:`_Alternating` since the coefficient types only need ``+``, ``*`` and
truthiness.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, permutations
from typing import Iterable, Mapping, Sequence

import numpy as np

from .coeffalg import Poly, as_rational, solve_exact
from .config import DEFAULT
from .numerics import numeric_rank

__all__ = [
    "FormError",
    "Form",
    "PointForm",
    "VectorField",
    "canonical_index",
    "wedge",
    "wedge_all",
    "exterior_d",
    "interior_product",
    "pullback",
    "eval_at",
    "apply",
    "cartan_decompose",
    "monomials",
    "format_form",
]


class FormError(ValueError):
    pass


def canonical_index(idx: Sequence[int]) -> tuple[int, tuple[int, ...]]:
    """Sort ``idx`` and return ``(sign, sorted)``; sign 0 on a repeat."""
    idx = list(idx)
    sign = 1
    # insertion sort, counting transpositions
    for i in range(1, len(idx)):
        j = i
        while j > 0 and idx[j - 1] > idx[j]:
            idx[j - 1], idx[j] = idx[j], idx[j - 1]
            sign = -sign
            j -= 1
    for a, b in zip(idx, idx[1:]):
        if a == b:
            return 0, ()
    return sign, tuple(idx)


def monomials(dim: int, degree: int) -> list[tuple[int, ...]]:
    return list(combinations(range(dim), degree))


class _Alternating:
    __slots__ = ("chart_dim", "degree", "_terms")

    def __init__(self, chart_dim: int, degree: int, terms: Mapping | None = None):
        if degree < 0:
            raise FormError("degree must be non-negative")
        self.chart_dim = chart_dim
        self.degree = degree
        clean = {}
        for idx, c in (terms or {}).items():
            idx = tuple(idx)
            if len(idx) != degree:
                raise FormError(f"multi-index {idx} does not have length {degree}")
            if any(not 0 <= i < chart_dim for i in idx):
                raise FormError(f"multi-index {idx} out of range for chart dimension {chart_dim}")
            if any(a >= b for a, b in zip(idx, idx[1:])):
                raise FormError(f"multi-index {idx} is not strictly increasing")
            c = self._coerce_coef(c)
            if c:
                clean[idx] = c
        self._terms = clean

    # subclasses decide what a coefficient is
    def _coerce_coef(self, c):
        return c

    def _zero_coef(self):
        return 0

    @classmethod
    def _raw(cls, chart_dim, degree, terms):
        obj = object.__new__(cls)
        obj.chart_dim = chart_dim
        obj.degree = degree
        obj._terms = terms
        return obj

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self):
        return sorted(self._terms.items())

    def coefficient(self, idx: Sequence[int]):
        sign, key = canonical_index(idx)
        if sign == 0 or len(key) != self.degree:
            return self._zero_coef()
        c = self._terms.get(key)
        if c is None:
            return self._zero_coef()
        return c if sign > 0 else -c

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self):
        return bool(self._terms)

    def _check(self, other):
        if type(other) is not type(self):
            raise FormError(f"cannot combine {type(self).__name__} with {type(other).__name__}")
        if other.chart_dim != self.chart_dim:
            raise FormError(f"chart mismatch: {self.chart_dim} vs {other.chart_dim}")

    def __add__(self, other):
        self._check(other)
        if other.degree != self.degree:
            if not other._terms:
                return self
            if not self._terms:
                return other
            raise FormError(f"cannot add forms of degree {self.degree} and {other.degree}")
        out = dict(self._terms)
        for idx, c in other._terms.items():
            s = out.get(idx)
            s = c if s is None else s + c
            if s:
                out[idx] = s
            else:
                out.pop(idx, None)
        return self._raw(self.chart_dim, self.degree, out)

    def __neg__(self):
        return self._raw(self.chart_dim, self.degree, {i: -c for i, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        out = {}
        for idx, v in self._terms.items():
            w = v * c
            if w:
                out[idx] = w
        return self._raw(self.chart_dim, self.degree, out)

    def __mul__(self, c):
        if isinstance(c, _Alternating):
            raise FormError("use wedge() or ^ for the exterior product")
        return self.scale(c)

    def __rmul__(self, c):
        out = {}
        for idx, v in self._terms.items():
            w = c * v
            if w:
                out[idx] = w
        return self._raw(self.chart_dim, self.degree, out)

    def wedge(self, other):
        self._check(other)
        deg = self.degree + other.degree
        out: dict = {}
        if deg <= self.chart_dim:
            for i1, c1 in self._terms.items():
                for i2, c2 in other._terms.items():
                    sign, key = canonical_index(i1 + i2)
                    if not sign:
                        continue
                    v = c1 * c2
                    if sign < 0:
                        v = -v
                    s = out.get(key)
                    out[key] = v if s is None else s + v
        return self._raw(self.chart_dim, deg, {k: v for k, v in out.items() if v})

    __xor__ = wedge

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        if self.chart_dim != other.chart_dim:
            return False
        if not self._terms and not other._terms:
            return True
        return self.degree == other.degree and self._terms == other._terms

    def __hash__(self):
        return hash((self.chart_dim, self.degree, frozenset(self._terms.items())))


class Form(_Alternating):
    """A degree-``k`` form on a ``chart_dim``-dimensional chart with Poly coefficients."""

    __slots__ = ()

    def _coerce_coef(self, c):
        if isinstance(c, Poly):
            if c.nvars != self.chart_dim:
                raise FormError(f"coefficient lives in {c.nvars} variables, chart has {self.chart_dim}")
            return c
        return Poly.const(self.chart_dim, c)

    def _zero_coef(self):
        return Poly.zero(self.chart_dim)

    @classmethod
    def zero(cls, chart_dim: int, degree: int) -> "Form":
        return cls._raw(chart_dim, degree, {})

    @classmethod
    def function(cls, p: Poly) -> "Form":
        return cls._raw(p.nvars, 0, {(): p} if p else {})

    @classmethod
    def constant(cls, chart_dim: int, c) -> "Form":
        return cls.function(Poly.const(chart_dim, c))

    @classmethod
    def dx(cls, i: int, chart_dim: int) -> "Form":
        """The coordinate differential of the 0-based variable ``i``."""
        if not 0 <= i < chart_dim:
            raise FormError(f"coordinate {i} out of range")
        return cls._raw(chart_dim, 1, {(i,): Poly.const(chart_dim, 1)})

    @classmethod
    def one_form(cls, coefs: Sequence) -> "Form":
        D = len(coefs)
        return cls(D, 1, {(i,): c for i, c in enumerate(coefs)})

    def as_function(self) -> Poly:
        if self.degree != 0:
            raise FormError("not a 0-form")
        return self._terms.get((), Poly.zero(self.chart_dim))

    def d(self) -> "Form":
        return exterior_d(self)

    def is_constant(self) -> bool:
        return all(c.is_constant() for c in self._terms.values())

    def at(self, pt) -> "PointForm":
        return eval_at(self, pt)

    def __repr__(self):
        return f"Form(D={self.chart_dim}, k={self.degree}, {format_form(self)!r})"


class PointForm(_Alternating):
    """A form evaluated at a point: an alternating tensor with numeric coefficients."""

    __slots__ = ()

    def _coerce_coef(self, c):
        if isinstance(c, Poly):
            raise FormError("PointForm coefficients are numbers")
        return c

    @classmethod
    def zero(cls, chart_dim: int, degree: int) -> "PointForm":
        return cls._raw(chart_dim, degree, {})

    @classmethod
    def covector(cls, values: Sequence) -> "PointForm":
        return cls(len(values), 1, {(i,): v for i, v in enumerate(values)})

    def is_exact(self) -> bool:
        return all(isinstance(c, (int, Fraction)) for c in self._terms.values())

    def to_float(self) -> "PointForm":
        return PointForm._raw(self.chart_dim, self.degree, {k: float(v) for k, v in self._terms.items() if float(v)})

    def interior(self, v: Sequence) -> "PointForm":
        """``v ⌟ self``: insert ``v`` into the first slot."""
        if self.degree == 0:
            raise FormError("interior product of a 0-form")
        if len(v) != self.chart_dim:
            raise FormError("vector length does not match chart dimension")
        out: dict = {}
        for idx, c in self._terms.items():
            for pos, i in enumerate(idx):
                vi = v[i]
                if not vi:
                    continue
                key = idx[:pos] + idx[pos + 1:]
                w = c * vi
                if pos % 2:
                    w = -w
                s = out.get(key)
                out[key] = w if s is None else s + w
        return PointForm._raw(self.chart_dim, self.degree - 1, {k: w for k, w in out.items() if w})

    def covector_array(self) -> list:
        if self.degree != 1:
            raise FormError("not a 1-form")
        return [self._terms.get((i,), 0) for i in range(self.chart_dim)]

    def apply(self, vectors: Sequence[Sequence]):
        return apply(self, vectors)

    def __repr__(self):
        body = " + ".join(f"{c} d{list(i)}" for i, c in self.items()) or "0"
        return f"PointForm(D={self.chart_dim}, k={self.degree}, {body})"


@dataclass(frozen=True)
class VectorField:
    """Components of a vector field in the coordinate frame."""

    components: tuple

    def __post_init__(self):
        comps = tuple(c if isinstance(c, Poly) else None for c in self.components)
        if any(c is None for c in comps):
            raise FormError("vector field components must be Poly")
        if len({c.nvars for c in comps}) > 1 or (comps and comps[0].nvars != len(comps)):
            raise FormError("vector field needs one Poly per chart variable")
        object.__setattr__(self, "components", comps)

    @property
    def chart_dim(self) -> int:
        return len(self.components)

    @classmethod
    def coordinate(cls, i: int, chart_dim: int) -> "VectorField":
        return cls(tuple(Poly.const(chart_dim, int(j == i)) for j in range(chart_dim)))

    def at(self, pt) -> list:
        return [c.evaluate(pt) for c in self.components]


# -- operations --------------------------------------------------------------


def wedge(a: _Alternating, b: _Alternating):
    return a.wedge(b)


def wedge_all(forms: Iterable[_Alternating], chart_dim: int | None = None, point: bool = False):
    forms = list(forms)
    if not forms:
        if chart_dim is None:
            raise FormError("empty wedge needs chart_dim")
        if point:
            return PointForm(chart_dim, 0, {(): 1})
        return Form.constant(chart_dim, 1)
    out = forms[0]
    for f in forms[1:]:
        out = out.wedge(f)
    return out


def exterior_d(a: Form) -> Form:
    D = a.chart_dim
    out: dict = {}
    for idx, c in a._terms.items():
        for v in range(D):
            if v in idx:
                continue
            dc = c.partial(v)
            if not dc:
                continue
            sign, key = canonical_index((v,) + idx)
            if sign < 0:
                dc = -dc
            s = out.get(key)
            out[key] = dc if s is None else s + dc
    return Form._raw(D, a.degree + 1, {k: v for k, v in out.items() if v})


def interior_product(X: VectorField, a: Form) -> Form:
    if a.degree == 0:
        raise FormError("interior product of a 0-form is not defined here")
    if X.chart_dim != a.chart_dim:
        raise FormError("vector field and form live on different charts")
    out: dict = {}
    for idx, c in a._terms.items():
        for pos, i in enumerate(idx):
            xi = X.components[i]
            if not xi:
                continue
            key = idx[:pos] + idx[pos + 1:]
            w = xi * c
            if pos % 2:
                w = -w
            s = out.get(key)
            out[key] = w if s is None else s + w
    return Form._raw(a.chart_dim, a.degree - 1, {k: w for k, w in out.items() if w})


def pullback(f: Sequence[Poly], a: Form) -> Form:
    """Pull ``a`` (on a ``len(f)``-chart) back along the polynomial map ``f``."""
    if len(f) != a.chart_dim:
        raise FormError(f"map has {len(f)} components, form lives on a {a.chart_dim}-chart")
    if not f:
        raise FormError("empty map")
    D = f[0].nvars
    dfs = [exterior_d(Form.function(fi)) if fi else Form.zero(D, 1) for fi in f]
    total = Form.zero(D, a.degree)
    for idx, c in a._terms.items():
        coef = c.compose(list(f))
        if not coef:
            continue
        term = Form.function(coef)
        for i in idx:
            term = term.wedge(dfs[i])
            if not term:
                break
        total = total + term
    if total.degree != a.degree:
        total = Form.zero(D, a.degree)
    return total


def eval_at(a: Form, pt: Sequence) -> PointForm:
    if len(pt) != a.chart_dim:
        raise FormError(f"point has {len(pt)} coordinates, chart has {a.chart_dim}")
    out = {}
    for idx, c in a._terms.items():
        v = c.evaluate(pt)
        if v:
            out[idx] = v
    return PointForm._raw(a.chart_dim, a.degree, out)


def _det(M: list[list]):
    k = len(M)
    if k == 0:
        return 1
    if k == 1:
        return M[0][0]
    if k == 2:
        return M[0][0] * M[1][1] - M[0][1] * M[1][0]
    total = 0
    for perm in permutations(range(k)):
        sign, _ = canonical_index(perm)
        prod = sign
        for r, c in enumerate(perm):
            prod = prod * M[r][c]
            if not prod:
                break
        total = total + prod
    return total


def apply(a: PointForm, vectors: Sequence[Sequence]):
    """Evaluate the alternating tensor on ``degree`` vectors."""
    if len(vectors) != a.degree:
        raise FormError(f"{a.degree}-form applied to {len(vectors)} vectors")
    for v in vectors:
        if len(v) != a.chart_dim:
            raise FormError("vector length does not match chart dimension")
    total = 0
    for idx, c in a._terms.items():
        minor = [[v[i] for v in vectors] for i in idx]
        d = _det(minor)
        if d:
            total = total + c * d
    return total


def cartan_decompose(thetas: Sequence[Form], omegas: Sequence[Form], pt, tol: float = DEFAULT.tol_zero):
    """Pointwise Cartan lemma: symmetric ``h`` with ``θ^i = h^i_j ω^j`` at ``pt``.

    Exact over Q when ``pt`` is rational, otherwise in floating point.
    """
    r = len(thetas)
    if len(omegas) != r:
        raise FormError("need as many θ's as ω's")
    if r == 0:
        return []
    for f in list(thetas) + list(omegas):
        if f.degree != 1 and f:
            raise FormError("Cartan lemma takes 1-forms")
    D = omegas[0].chart_dim
    th = [eval_at(t, pt) for t in thetas]
    om = [eval_at(o, pt) for o in omegas]
    exact = all(isinstance(v, (int, Fraction)) for v in pt)

    hyp = PointForm.zero(D, 2)
    for t, o in zip(th, om):
        hyp = hyp + t.wedge(o)
    bad = any(abs(float(c)) > tol for c in hyp._terms.values()) if not exact else bool(hyp)
    if bad:
        raise FormError("not in the Cartan-lemma locus: sum of θ^i∧ω^i does not vanish")

    W = [[o._terms.get((i,), 0) for i in range(D)] for o in om]
    if numeric_rank(np.array(W, dtype=float)) < r:
        raise FormError("ω's are linearly dependent at the point")
    # complete ω to a basis of the cotangent space with coordinate covectors
    basis = [list(w) for w in W]
    for i in range(D):
        if len(basis) == D:
            break
        cand = basis + [[int(j == i) for j in range(D)]]
        if numeric_rank(np.array(cand, dtype=float)) == len(cand):
            basis.append(cand[-1])
    # solve θ^i = Σ_b h^i_b basis^b (basis^T h = θ)
    BT = [[basis[b][c] for b in range(D)] for c in range(D)]
    h = []
    for t in th:
        rhs = [t._terms.get((c,), 0) for c in range(D)]
        if exact:
            coeffs = solve_exact(BT, [as_rational(v) for v in rhs])
        else:
            coeffs = list(np.linalg.solve(np.array(BT, dtype=float), np.array(rhs, dtype=float)))
        h.append(coeffs)
    # lemma: components along the completion vanish, h symmetric
    for row in h:
        for v in row[r:]:
            if (abs(float(v)) > tol) if not exact else v != 0:
                raise FormError("θ has components outside span(ω); hypothesis violated")
    return [row[:r] for row in h]


# -- text rendering ------------------------------------------------------------


def format_form(a: _Alternating, names: Sequence[str] | None = None) -> str:
    from .coeffalg import _default_names, format_poly

    names = list(names) if names is not None else _default_names(a.chart_dim)
    if not a._terms:
        return "0"
    parts = []
    for idx, c in a.items():
        if isinstance(c, Poly):
            cs = format_poly(c, names)
            if len(c._terms) > 1:
                cs = f"({cs})"
        else:
            cs = str(c)
        if not idx:
            parts.append(cs)
        else:
            parts.append(f"{cs} " + "^".join(f"d{names[i]}" for i in idx))
    return " + ".join(parts)
