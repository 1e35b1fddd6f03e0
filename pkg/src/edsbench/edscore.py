"""Exterior differential systems: closure, integral elements and Cartan's test.

Everything past :func:`close_system` and :func:`frobenius_check` is pointwise
linear algebra at a base point.  Values stay exact (Fractions) for
polynomial systems evaluated at rational points; ranks are always taken from
singular values with the threshold in :class:`~edsbench.config.Config`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np

from .coeffalg import nullspace_exact
from .config import DEFAULT, Config
from .extcalc import Form, FormError, PointForm, exterior_d, monomials, wedge_all
from .numerics import as_float_matrix, nullspace, numeric_rank

__all__ = [
    "EDSError",
    "ExteriorSystem",
    "IntegralElement",
    "Flag",
    "CartanReport",
    "close_system",
    "frobenius_check",
    "is_integral_element",
    "polar_space",
    "extension_rank",
    "cartan_characters",
    "characters_by_expansion",
    "codim_integral_variety",
    "cartan_test",
    "greedy_flag",
]


class EDSError(ValueError):
    pass


class ExteriorSystem:
    """A finite set of generators on a chart of dimension ``chart_dim``.

    ``structure`` marks an abstract coframe: it maps each coframe index ``A``
    to the constant-coefficient 2-form ``dθ^A`` at the base point.  Generators
    of an abstract system must have constant coefficients.  ``exact=False``
    switches pointwise zero tests to the float tolerance (for systems whose
    coefficients came from floating-point data).
    """

    def __init__(
        self,
        generators: Sequence[Form],
        chart_dim: int | None = None,
        *,
        abstract: bool = False,
        structure: Mapping[int, Form] | None = None,
        exact: bool = True,
        names: Sequence[str] | None = None,
    ):
        generators = list(generators)
        if chart_dim is None:
            if not generators:
                raise EDSError("empty system needs an explicit chart_dim")
            chart_dim = generators[0].chart_dim
        for g in generators:
            if not isinstance(g, Form):
                raise EDSError("generators must be Form instances")
            if g.chart_dim != chart_dim:
                raise EDSError("generators live on different charts")
            if g.degree == 0:
                raise EDSError("0-form generators are not supported (Cartan's test excludes functions)")
        self.chart_dim = chart_dim
        self.generators = tuple(g for g in generators if g)
        self.abstract = abstract or structure is not None
        self.structure = dict(structure) if structure is not None else None
        self.exact = exact
        self.names = list(names) if names is not None else None
        if self.abstract:
            for g in self.generators:
                if not g.is_constant():
                    raise EDSError("abstract-coframe generators must have constant coefficients")

    def d(self, form: Form) -> Form:
        if not self.abstract:
            return exterior_d(form)
        if self.structure is None:
            raise EDSError("abstract coframe without structure constants: d is undefined")
        D = self.chart_dim
        total = Form.zero(D, form.degree + 1)
        # d(c θ^{A1}∧…∧θ^{Ak}) = c Σ_s (-1)^s θ^{A1}∧…∧dθ^{As}∧…∧θ^{Ak}
        for idx, c in form.items():
            for s, A in enumerate(idx):
                dA = self.structure.get(A)
                if dA is None or not dA:
                    continue
                pieces = [Form.dx(B, D) for B in idx[:s]] + [dA] + [Form.dx(B, D) for B in idx[s + 1:]]
                term = wedge_all(pieces).scale(c.constant_value())
                total = total + (term if s % 2 == 0 else -term)
        return total

    def with_generators(self, generators: Sequence[Form]) -> "ExteriorSystem":
        return ExteriorSystem(
            generators,
            self.chart_dim,
            abstract=self.abstract,
            structure=self.structure,
            exact=self.exact,
            names=self.names,
        )

    def point_forms(self, pt=None) -> list[PointForm]:
        if self.abstract or pt is None:
            if not self.abstract and any(not g.is_constant() for g in self.generators):
                raise EDSError("a base point is required for non-constant generators")
            pt = [Fraction(0)] * self.chart_dim
        forms = [g.at(pt) for g in self.generators]
        if not self.exact:
            forms = [f.to_float() for f in forms]
        return forms

    def __len__(self):
        return len(self.generators)

    def __iter__(self):
        return iter(self.generators)


@dataclass(frozen=True)
class IntegralElement:
    base_pt: tuple
    basis: tuple

    @property
    def dim(self) -> int:
        return len(self.basis)


@dataclass(frozen=True)
class Flag:
    """Nested integral elements ``E_k = span(vectors[:k])`` at ``base_pt``."""

    base_pt: tuple | None
    vectors: tuple

    def __post_init__(self):
        object.__setattr__(self, "vectors", tuple(tuple(v) for v in self.vectors))
        if self.base_pt is not None:
            object.__setattr__(self, "base_pt", tuple(self.base_pt))
        if self.vectors and numeric_rank(as_float_matrix(self.vectors)) < len(self.vectors):
            raise EDSError("flag vectors are linearly dependent")

    @property
    def length(self) -> int:
        return len(self.vectors)

    def element(self, k: int) -> IntegralElement:
        return IntegralElement(self.base_pt, self.vectors[:k])

    @classmethod
    def from_elements(cls, elements: Sequence[IntegralElement]) -> "Flag":
        """Build from ``E_1 ⊂ … ⊂ E_n``; raises when the nesting is broken."""
        vectors: list = []
        base = elements[0].base_pt if elements else None
        for k, E in enumerate(elements, start=1):
            if E.dim != k:
                raise EDSError(f"flag element {k} has dimension {E.dim}")
            if E.base_pt != base:
                raise EDSError("flag elements have different base points")
            prev = as_float_matrix(vectors, len(E.basis[0])) if vectors else None
            span = as_float_matrix(E.basis)
            if prev is not None:
                # E_{k-1} ⊂ E_k iff stacking does not raise the rank
                if numeric_rank(np.vstack([span, prev])) != k:
                    raise EDSError(f"E_{k - 1} is not contained in E_{k}")
            new = None
            for v in E.basis:
                trial = vectors + [list(v)]
                if numeric_rank(as_float_matrix(trial)) == len(trial):
                    new = v
                    break
            if new is None:
                raise EDSError(f"E_{k} does not extend E_{k - 1}")
            vectors.append(list(new))
        return cls(base, vectors)


@dataclass
class CartanReport:
    characters: list
    extension_ranks: list
    sum_C: int
    codim_V: int
    ordinary: bool
    polar_dims: list = field(default_factory=list)
    cartan_kahler: bool = False
    regular_sampled: bool | None = None

    def as_dict(self) -> dict:
        return {
            "characters": list(self.characters),
            "extension_ranks": list(self.extension_ranks),
            "sum_C": self.sum_C,
            "codim_V": self.codim_V,
            "ordinary": self.ordinary,
            "polar_dims": list(self.polar_dims),
            "cartan_kahler": self.cartan_kahler,
            "regular_sampled": self.regular_sampled,
        }


# -- closure and Frobenius ---------------------------------------------------


def close_system(S: ExteriorSystem) -> ExteriorSystem:
    """``S ∪ dS`` with zero and duplicate forms dropped."""
    gens = list(S.generators)
    seen = set(gens)
    for g in S.generators:
        dg = S.d(g)
        if dg and dg.degree <= S.chart_dim and dg not in seen and -dg not in seen:
            gens.append(dg)
            seen.add(dg)
    return S.with_generators(gens)


@dataclass
class FrobeniusResult:
    integrable: bool
    witness: Form | None = None
    index: int | None = None


def frobenius_check(S: ExteriorSystem) -> FrobeniusResult:
    """Exact test of ``dω^i ∧ ω^1 ∧ … ∧ ω^r = 0`` for every generator."""
    gens = list(S.generators)
    if any(g.degree != 1 for g in gens):
        raise EDSError("Frobenius test needs a Pfaffian system (1-forms only)")
    if not gens:
        return FrobeniusResult(True)
    top = wedge_all(gens)
    for i, g in enumerate(gens):
        res = S.d(g).wedge(top)
        if res:
            return FrobeniusResult(False, res, i)
    return FrobeniusResult(True)


# -- pointwise machinery -----------------------------------------------------


def _is_zero(v, exact: bool, tol: float) -> bool:
    if exact and isinstance(v, (int, Fraction)):
        return v == 0
    return abs(float(v)) <= tol


def _vectors_exact(vectors) -> bool:
    return all(isinstance(c, (int, Fraction)) for v in vectors for c in v)


def _contract(form: PointForm, vectors) -> PointForm:
    out = form
    for v in vectors:
        out = out.interior(v)
        if not out:
            break
    return out


def is_integral_element(S: ExteriorSystem, E: IntegralElement, config: Config = DEFAULT) -> bool:
    """Every generator of degree ``d ≤ dim E`` vanishes on all ``d``-subsets of the basis."""
    forms = S.point_forms(E.base_pt)
    exact = S.exact and _vectors_exact(E.basis)
    for f in forms:
        if f.degree > E.dim:
            continue
        for sub in combinations(E.basis, f.degree):
            if not _is_zero(f.apply(sub), exact, config.tol_zero):
                return False
    return True


def _ideal_part(S: ExteriorSystem, forms: list[PointForm], degree: int) -> list[PointForm]:
    """A spanning set of the degree-``degree`` part of the ideal at the point."""
    D = S.chart_dim
    out = []
    for f in forms:
        if f.degree > degree:
            continue
        if f.degree == degree:
            out.append(f)
            continue
        for mono in monomials(D, degree - f.degree):
            basis = PointForm(D, len(mono), {mono: 1})
            w = f.wedge(basis)
            if w:
                out.append(w)
    return out


def _polar_rows(S: ExteriorSystem, E: IntegralElement) -> list[list]:
    forms = S.point_forms(E.base_pt)
    rows = []
    for psi in _ideal_part(S, forms, E.dim + 1):
        cov = _contract(psi, E.basis)
        if cov:
            rows.append(cov.covector_array())
    return rows


def _require_integral(S, E, config):
    if not is_integral_element(S, E, config):
        raise EDSError(f"{E.dim}-dimensional element is not integral")


def polar_space(S: ExteriorSystem, E: IntegralElement, config: Config = DEFAULT) -> list[list]:
    """Basis of ``H(E) = {v : φ(e_1,…,e_p, v) = 0 for φ in the degree-(p+1) ideal}``.

    The basis is exact over Q when the system and ``E`` are exact.
    """
    _require_integral(S, E, config)
    D = S.chart_dim
    rows = _polar_rows(S, E)
    rank = numeric_rank(as_float_matrix(rows, D), config.tol_rank)
    if S.exact and _vectors_exact(E.basis) and all(isinstance(c, (int, Fraction)) for r in rows for c in r):
        basis = nullspace_exact(rows, D)
        if len(basis) == D - rank:
            return basis
    ns = nullspace(as_float_matrix(rows, D), D, config.tol_rank)
    return [list(col) for col in ns.T]


def _polar_dim(S, E, config) -> int:
    D = S.chart_dim
    return D - numeric_rank(as_float_matrix(_polar_rows(S, E), D), config.tol_rank)


def extension_rank(S: ExteriorSystem, E: IntegralElement, config: Config = DEFAULT) -> int:
    _require_integral(S, E, config)
    return _polar_dim(S, E, config) - (E.dim + 1)


def _check_flag(S, flag, config):
    if flag.length and not is_integral_element(S, flag.element(flag.length), config):
        raise EDSError("top element of the flag is not integral")


def cartan_characters(S: ExteriorSystem, flag: Flag, config: Config = DEFAULT) -> list[int]:
    """``C_k = D − dim H(E_k)`` for ``k = 0 … n−1``."""
    _check_flag(S, flag, config)
    return [S.chart_dim - _polar_dim(S, flag.element(k), config) for k in range(flag.length)]


def _complement(vectors, D: int, complement=None) -> np.ndarray:
    E = as_float_matrix(vectors, D)
    if complement is None:
        comp = nullspace(E, D) if E.shape[0] else np.eye(D)
        return comp.T
    comp = as_float_matrix(complement, D)
    full = np.vstack([E, comp]) if E.shape[0] else comp
    if full.shape[0] != D or numeric_rank(full) < D:
        raise EDSError("chart is not transverse to the integral element")
    return comp


def characters_by_expansion(S: ExteriorSystem, flag: Flag, complement=None, config: Config = DEFAULT) -> list[int]:
    """Characters from the linear-in-π expansion of each generator.

    With the frame ``(e_1…e_n, f_1…f_s)`` adapted to ``E_n``, the 1-form
    ``π^J_ρ`` of a generator ``φ_ρ`` of degree ``|J|+1`` has components
    ``φ_ρ(f_a, e_J)``; ``C_p`` counts the independent ones with ``max J ≤ p``.
    This route never forms the ideal's wedge completions.
    """
    _check_flag(S, flag, config)
    D, n = S.chart_dim, flag.length
    comp = _complement(flag.vectors, D, complement)
    forms = S.point_forms(flag.base_pt)
    E = [list(map(float, v)) for v in flag.vectors]
    # rows tagged with max J (0 when J is empty)
    tagged: list[tuple[int, list]] = []
    for phi in forms:
        phi = phi.to_float()
        d = phi.degree - 1
        if d > n:
            continue
        for J in combinations(range(n), d):
            row = [phi.apply([list(f)] + [E[j] for j in J]) for f in comp]
            if any(row):
                tagged.append((J[-1] + 1 if J else 0, row))
    chars = []
    for p in range(n):
        rows = [r for t, r in tagged if t <= p]
        chars.append(numeric_rank(np.array(rows), config.tol_rank) if rows else 0)
    return chars


def codim_integral_variety(S: ExteriorSystem, flag_or_basis, base_pt=None, complement=None,
                           config: Config = DEFAULT) -> int:
    """Rank at ``E_n`` of the Jacobian of the integral-element equations.

    ``n``-planes near ``E_n`` are written as graphs ``e_k + Σ_a z_{ka} f_a``
    over ``E_n``; the equations are every generator of degree ``d ≤ n``
    evaluated on every ``d``-subset of the moving basis, differentiated in
    ``z`` at ``z = 0``.
    """
    if isinstance(flag_or_basis, Flag):
        vectors, base_pt = flag_or_basis.vectors, flag_or_basis.base_pt
    else:
        vectors = tuple(tuple(v) for v in flag_or_basis)
    D, n = S.chart_dim, len(vectors)
    E = IntegralElement(tuple(base_pt) if base_pt is not None else None, tuple(vectors))
    _require_integral(S, E, config)
    if n == 0:
        return 0
    comp = _complement(vectors, D, complement)
    s = comp.shape[0]
    forms = [f.to_float() for f in S.point_forms(base_pt)]
    Ef = [list(map(float, v)) for v in vectors]
    rows = []
    for phi in forms:
        d = phi.degree
        if d > n:
            continue
        for I in combinations(range(n), d):
            row = np.zeros(n * s)
            for pos, k in enumerate(I):
                for a in range(s):
                    args = [Ef[i] for i in I]
                    args[pos] = list(comp[a])
                    row[k * s + a] = phi.apply(args)
            rows.append(row)
    if not rows:
        return 0
    return numeric_rank(np.array(rows), config.tol_rank)


def _perturbed_flag(S, flag, pt, config):
    """An integral flag at ``pt`` built by projecting ``flag``'s vectors onto polar spaces."""
    D = S.chart_dim
    vecs: list = []
    for target in flag.vectors:
        E = IntegralElement(tuple(pt), tuple(vecs))
        rows = _polar_rows(S, E)
        H = nullspace(as_float_matrix(rows, D), D, config.tol_rank)
        t = np.array([float(c) for c in target])
        v = H @ (H.T @ t)
        if np.linalg.norm(v) < 1e-6 * max(1.0, np.linalg.norm(t)):
            return None
        vecs.append(list(v))
    return vecs


def _sample_regularity(S, flag, ranks, config):
    if S.abstract or flag.base_pt is None:
        return None
    rng = np.random.default_rng(config.seed)
    base = np.array([float(c) for c in flag.base_pt])
    loose = Config(**{**config.as_dict(), "tol_zero": max(config.tol_zero, 1e-7)})
    for _ in range(config.regularity_samples):
        pt = base + config.regularity_radius * rng.standard_normal(base.size)
        float_sys = S.with_generators(S.generators)
        float_sys.exact = False
        vecs = _perturbed_flag(float_sys, flag, pt, loose)
        if vecs is None:
            return False
        for k in range(flag.length + 1):
            E = IntegralElement(tuple(pt), tuple(vecs[:k]))
            if _polar_dim(float_sys, E, loose) - (k + 1) != ranks[k]:
                return False
    return True


def cartan_test(S: ExteriorSystem, flag: Flag, complement=None, config: Config = DEFAULT,
                sample_regularity: bool = True) -> CartanReport:
    """Characters, extension ranks and the codimension comparison along ``flag``."""
    _check_flag(S, flag, config)
    D = S.chart_dim
    polar_dims = [_polar_dim(S, flag.element(k), config) for k in range(flag.length + 1)]
    chars = [D - h for h in polar_dims[:-1]] if flag.length else []
    ranks = [h - (k + 1) for k, h in enumerate(polar_dims)]
    codim = codim_integral_variety(S, flag, complement=complement, config=config)
    sum_c = int(sum(chars))
    ordinary = sum_c == codim
    regular = _sample_regularity(S, flag, ranks, config) if sample_regularity else None
    return CartanReport(
        characters=chars,
        extension_ranks=ranks,
        sum_C=sum_c,
        codim_V=codim,
        ordinary=ordinary,
        polar_dims=polar_dims,
        cartan_kahler=ordinary,
        regular_sampled=regular,
    )


def greedy_flag(S: ExteriorSystem, base_pt=None, preferred: Sequence[Sequence] | None = None,
                length: int | None = None, config: Config = DEFAULT) -> Flag:
    """Extend ``E_k`` by the first preferred direction inside ``H(E_k)``.

    Falls back to a basis vector of ``H(E_k)`` when no preferred direction
    fits; stops when ``r(E_k) = −1``, raising if ``length`` is not reached.
    """
    D = S.chart_dim
    if preferred is None:
        preferred = [[int(i == j) for j in range(D)] for i in range(D)]
    pt = tuple(base_pt) if base_pt is not None else None
    vecs: list = []
    target = D if length is None else length
    while len(vecs) < target:
        E = IntegralElement(pt, tuple(vecs))
        rows = _polar_rows(S, E)
        exact = S.exact and _vectors_exact(vecs) and all(isinstance(c, (int, Fraction)) for r in rows for c in r)
        hdim = D - numeric_rank(as_float_matrix(rows, D), config.tol_rank)
        if hdim - (len(vecs) + 1) < 0:
            if length is None:
                break
            raise EDSError(f"flag cannot be extended past dimension {len(vecs)} (r = -1)")
        chosen = None
        for v in list(preferred) + _fallback_directions(rows, D, exact, config):
            in_h = all(_is_zero(sum(r[i] * v[i] for i in range(D)), exact and _vectors_exact([v]),
                                config.tol_zero) for r in rows)
            if not in_h:
                continue
            trial = vecs + [list(v)]
            if numeric_rank(as_float_matrix(trial), config.tol_rank) == len(trial):
                chosen = list(v)
                break
        if chosen is None:
            raise EDSError(f"no admissible direction found at dimension {len(vecs)}")
        vecs.append(chosen)
    flag = Flag(pt, vecs)
    return flag


def _fallback_directions(rows, D, exact, config):
    if exact:
        return nullspace_exact(rows, D) if rows else [[int(i == j) for j in range(D)] for i in range(D)]
    ns = nullspace(as_float_matrix(rows, D), D, config.tol_rank)
    return [list(c) for c in ns.T]
