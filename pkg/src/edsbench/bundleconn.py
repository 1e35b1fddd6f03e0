"""Connections on vector bundles over a chart: Cartan's structure equations.

Connections and curvatures are square matrices of forms in a fixed frame.
Everything is exact polynomial algebra except the Levi-Civita and
Christoffel solves for coframes with non-constant coefficients, which are
done pointwise (the dual frame leaves the polynomial ring).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .coeffalg import Poly, inverse_exact
from .extcalc import Form, FormError, PointForm, eval_at, exterior_d, pullback
from .numerics import numeric_rank

__all__ = [
    "BundleError",
    "CoFrame",
    "ConnectionForm",
    "CurvatureForm",
    "VValuedForm",
    "Christoffel",
    "curvature",
    "torsion",
    "is_metric_compatible",
    "bianchi_residuals",
    "covariant_exterior_derivative",
    "generalized_bianchi_residual",
    "levi_civita",
    "pullback_connection",
    "christoffel",
]


class BundleError(ValueError):
    """Shape mismatch or a degenerate coframe."""


def _exact_point(pt) -> bool:
    return all(isinstance(v, (int, Fraction)) for v in pt)


class CoFrame:
    """``m`` 1-forms on a ``D``-chart, assumed pointwise independent on the domain."""

    def __init__(self, eta: Sequence[Form]):
        eta = tuple(eta)
        if not eta:
            raise BundleError("empty coframe")
        D = eta[0].chart_dim
        for e in eta:
            if e.chart_dim != D or (e and e.degree != 1):
                raise BundleError("coframe entries must be 1-forms on one chart")
        self.eta = eta
        self.chart_dim = D

    def __len__(self):
        return len(self.eta)

    def __getitem__(self, i):
        return self.eta[i]

    def __iter__(self):
        return iter(self.eta)

    @classmethod
    def coordinate(cls, D: int) -> "CoFrame":
        return cls([Form.dx(i, D) for i in range(D)])

    def is_constant(self) -> bool:
        return all(e.is_constant() for e in self.eta)

    def matrix(self, pt=None) -> list[list]:
        """``A[i][mu]`` with ``η^i = A[i][mu] dx^mu``; symbolic Polys when ``pt`` is None."""
        D = self.chart_dim
        if pt is None:
            return [[e.coefficient((mu,)) for mu in range(D)] for e in self.eta]
        return [[e.coefficient((mu,)).evaluate(pt) for mu in range(D)] for e in self.eta]

    def dual_frame(self, pt=None) -> list[list]:
        """Vectors ``e_j`` (coordinate components) with ``η^i(e_j) = δ^i_j``.

        Without ``pt`` the coframe must have constant coefficients.
        """
        if len(self.eta) != self.chart_dim:
            raise BundleError("dual frame needs a square coframe")
        if pt is None:
            if not self.is_constant():
                raise BundleError("coframe has non-constant coefficients; a point is required")
            A = [[c.constant_value() for c in row] for row in self.matrix()]
            exact = True
        else:
            A = self.matrix(pt)
            exact = _exact_point(pt)
        if exact:
            try:
                inv = inverse_exact(A)
            except ValueError as exc:
                raise BundleError("degenerate coframe") from exc
        else:
            Af = np.array(A, dtype=float)
            if numeric_rank(Af) < len(A):
                raise BundleError("degenerate coframe")
            inv = np.linalg.inv(Af).tolist()
        # columns of A^{-1} are the dual vectors
        m = len(A)
        return [[inv[mu][j] for mu in range(m)] for j in range(m)]

    def volume_factor(self, pt=None):
        """``det A``: ``η^1∧…∧η^m = det(A) dx^1∧…∧dx^m``."""
        top = self.eta[0]
        for e in self.eta[1:]:
            top = top.wedge(e)
        c = top.coefficient(tuple(range(self.chart_dim)))
        return c if pt is None else c.evaluate(pt)


class _FormMatrix:
    def __init__(self, entries: Sequence[Sequence]):
        entries = tuple(tuple(row) for row in entries)
        n = len(entries)
        if any(len(row) != n for row in entries):
            raise BundleError("matrix of forms must be square")
        self.entries = entries

    @property
    def n(self) -> int:
        return len(self.entries)

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def rows(self):
        return self.entries

    def __eq__(self, other):
        return type(other) is type(self) and self.entries == other.entries

    def __repr__(self):
        return f"{type(self).__name__}(n={self.n})"


class ConnectionForm(_FormMatrix):
    """``ω^i_j`` stored as ``entries[i][j]`` (1-forms, or PointForms for pointwise results)."""

    @classmethod
    def zero(cls, n: int, D: int) -> "ConnectionForm":
        return cls([[Form.zero(D, 1) for _ in range(n)] for _ in range(n)])

    @property
    def chart_dim(self) -> int:
        return self.entries[0][0].chart_dim

    def at(self, pt) -> "ConnectionForm":
        return ConnectionForm([[eval_at(w, pt) for w in row] for row in self.entries])


class CurvatureForm(_FormMatrix):
    """``Ω^i_j`` stored as ``entries[i][j]`` (2-forms)."""

    @classmethod
    def from_tensor(cls, R, D: int, coframe: CoFrame | None = None) -> "CurvatureForm":
        """``Ω^i_j = ½ R[i][j][λ][μ] η^λ∧η^μ`` for a numeric/rational array ``R``."""
        coframe = coframe or CoFrame.coordinate(D)
        n = len(R)
        m = len(coframe)
        out = []
        for i in range(n):
            row = []
            for j in range(n):
                acc = Form.zero(D, 2)
                for lam in range(m):
                    for mu in range(lam + 1, m):
                        c = R[i][j][lam][mu]
                        if c:
                            acc = acc + coframe[lam].wedge(coframe[mu]).scale(c)
                row.append(acc)
            out.append(row)
        return cls(out)


@dataclass(frozen=True)
class VValuedForm:
    """``φ = E_i φ^i``: an ``n``-tuple of ``p``-forms."""

    phi: tuple

    def __post_init__(self):
        phi = tuple(self.phi)
        degs = {f.degree for f in phi if f}
        if len(degs) > 1:
            raise BundleError("components of a vector-valued form must share a degree")
        object.__setattr__(self, "phi", phi)

    @property
    def degree(self) -> int:
        return next((f.degree for f in self.phi if f), self.phi[0].degree if self.phi else 0)

    def __len__(self):
        return len(self.phi)

    def __getitem__(self, i):
        return self.phi[i]

    def __iter__(self):
        return iter(self.phi)


@dataclass(frozen=True)
class Christoffel:
    """``gamma[i][k][j] = Γ^i_{kj}`` with ``ω^i_j = Γ^i_{kj} η^k``."""

    gamma: tuple

    def reconstruct(self, eta: CoFrame) -> ConnectionForm:
        n = len(self.gamma)
        m = len(eta)
        D = eta.chart_dim
        out = []
        for i in range(n):
            row = []
            for j in range(n):
                acc = Form.zero(D, 1)
                for k in range(m):
                    g = self.gamma[i][k][j]
                    if g:
                        acc = acc + (eta[k] * g if isinstance(g, Poly) else eta[k].scale(g))
                row.append(acc)
            out.append(row)
        return ConnectionForm(out)


# -- structure equations -----------------------------------------------------


def _as_entries(omega) -> tuple:
    return omega.entries if isinstance(omega, _FormMatrix) else tuple(tuple(r) for r in omega)


def curvature(omega: ConnectionForm) -> CurvatureForm:
    """``Ω^i_j = dω^i_j + Σ_k ω^i_k ∧ ω^k_j``."""
    w = _as_entries(omega)
    n = len(w)
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            acc = exterior_d(w[i][j])
            for k in range(n):
                acc = acc + w[i][k].wedge(w[k][j])
            row.append(acc)
        out.append(row)
    return CurvatureForm(out)


def torsion(eta: CoFrame, omega: ConnectionForm) -> tuple:
    """``Θ^i = dη^i + Σ_j ω^i_j ∧ η^j``."""
    w = _as_entries(omega)
    if len(w) != len(eta):
        raise BundleError(f"connection is {len(w)}x{len(w)}, coframe has {len(eta)} entries")
    out = []
    for i in range(len(w)):
        acc = exterior_d(eta[i])
        for j in range(len(w)):
            acc = acc + w[i][j].wedge(eta[j])
        out.append(acc)
    return tuple(out)


def is_metric_compatible(omega: ConnectionForm) -> bool:
    w = _as_entries(omega)
    n = len(w)
    return all(not (w[i][j] + w[j][i]) for i in range(n) for j in range(i, n))


def bianchi_residuals(eta: CoFrame, omega: ConnectionForm):
    """Residuals of ``dΘ + ω∧Θ = Ω∧η`` and ``dΩ = Ω∧ω − ω∧Ω``; both vanish identically."""
    w = _as_entries(omega)
    n = len(w)
    Th = torsion(eta, omega)
    Om = curvature(omega).entries
    first = []
    for i in range(n):
        acc = exterior_d(Th[i])
        for j in range(n):
            acc = acc + w[i][j].wedge(Th[j]) - Om[i][j].wedge(eta[j])
        first.append(acc)
    second = []
    for i in range(n):
        row = []
        for j in range(n):
            acc = exterior_d(Om[i][j])
            for k in range(n):
                acc = acc - Om[i][k].wedge(w[k][j]) + w[i][k].wedge(Om[k][j])
            row.append(acc)
        second.append(row)
    return tuple(first), tuple(tuple(r) for r in second)


def covariant_exterior_derivative(omega: ConnectionForm, phi: VValuedForm, pt=None) -> VValuedForm:
    """``(d∇φ)^i = dφ^i + Σ_j ω^i_j ∧ φ^j``.

    With ``pt`` the result is evaluated there; ``omega`` may then hold
    PointForms (e.g. a pointwise Levi-Civita connection).
    """
    w = _as_entries(omega)
    if len(w) != len(phi):
        raise BundleError(f"connection is {len(w)}x{len(w)}, form has {len(phi)} components")
    if pt is not None:
        w = [[e if isinstance(e, PointForm) else eval_at(e, pt) for e in row] for row in w]
    out = []
    for i in range(len(w)):
        acc = exterior_d(phi[i])
        if pt is not None:
            acc = eval_at(acc, pt)
        for j in range(len(w)):
            f = phi[j] if pt is None else eval_at(phi[j], pt)
            acc = acc + w[i][j].wedge(f)
        out.append(acc)
    return VValuedForm(tuple(out))


def generalized_bianchi_residual(Omega: CurvatureForm, phi: VValuedForm) -> tuple:
    """``Σ_j Ω^i_j ∧ φ^j`` for each ``i``."""
    O = _as_entries(Omega)
    if len(O) != len(phi):
        raise BundleError("curvature and form sizes differ")
    out = []
    for i in range(len(O)):
        acc = None
        for j in range(len(O)):
            t = O[i][j].wedge(phi[j])
            acc = t if acc is None else acc + t
        out.append(acc)
    return tuple(out)


def pullback_connection(f: Sequence[Poly], omega_prime: ConnectionForm) -> ConnectionForm:
    w = _as_entries(omega_prime)
    return ConnectionForm([[pullback(f, e) for e in row] for row in w])


# -- Levi-Civita and Christoffel ----------------------------------------------


def _structure_coefficients(eta: CoFrame, frame, pt):
    """``c[i][j][k] = dη^i(e_j, e_k)``; Polys when ``pt`` is None."""
    m = len(eta)
    deta = [exterior_d(e) for e in eta]
    if pt is not None:
        deta = [eval_at(f, pt) for f in deta]
    c = [[[None] * m for _ in range(m)] for _ in range(m)]
    for i in range(m):
        for j in range(m):
            for k in range(m):
                c[i][j][k] = _apply_2form(deta[i], frame[j], frame[k])
    return c


def _apply_2form(f, u, v):
    total = None
    for (a, b), coef in f.terms.items():
        det = u[a] * v[b] - u[b] * v[a]
        if det:
            t = coef * det
            total = t if total is None else total + t
    if total is None:
        return Poly.zero(f.chart_dim) if isinstance(f, Form) else 0
    return total


def levi_civita(eta: CoFrame, pt=None) -> ConnectionForm:
    """The skew, torsion-free connection of an orthonormal coframe.

    Solved from the structure coefficients ``dη^i = ½ c^i_{jk} η^j∧η^k`` by
    ``ω^i_j(e_k) = ½(c^i_{jk} + c^j_{ki} − c^k_{ij})``.  Returns symbolic
    1-forms for constant-coefficient coframes; otherwise ``pt`` is required
    and the result holds PointForms at that point.
    """
    m = len(eta)
    if m != eta.chart_dim:
        raise BundleError("Levi-Civita needs a square coframe")
    symbolic = pt is None
    frame = eta.dual_frame(None if symbolic else pt)
    c = _structure_coefficients(eta, frame, None if symbolic else pt)
    etas = list(eta) if symbolic else [eval_at(e, pt) for e in eta]
    out = []
    for i in range(m):
        row = []
        for j in range(m):
            acc = Form.zero(eta.chart_dim, 1) if symbolic else PointForm.zero(eta.chart_dim, 1)
            for k in range(m):
                g = (c[i][j][k] + c[j][k][i] - c[k][i][j]) * Fraction(1, 2)
                if g:
                    acc = acc + (etas[k] * g)
            row.append(acc)
        out.append(row)
    return ConnectionForm(out)


def christoffel(eta: CoFrame, omega: ConnectionForm, pt=None) -> Christoffel:
    """``Γ^i_{kj} = ω^i_j(e_k)``; symbolic for constant coframes, else at ``pt``."""
    w = _as_entries(omega)
    n, m = len(w), len(eta)
    frame = eta.dual_frame(pt)
    pointwise = pt is not None or isinstance(w[0][0], PointForm)
    if pointwise and pt is None:
        raise BundleError("a pointwise connection needs the point it was evaluated at")
    gamma = []
    for i in range(n):
        gi = []
        for k in range(m):
            gk = []
            for j in range(n):
                form = w[i][j]
                if pointwise and isinstance(form, Form):
                    form = eval_at(form, pt)
                val = None
                for (mu,), coef in form.terms.items():
                    t = coef * frame[k][mu]
                    val = t if val is None else val + t
                if val is None:
                    val = 0 if pointwise else Poly.zero(eta.chart_dim)
                gk.append(val)
            gi.append(gk)
        gamma.append(gi)
    return Christoffel(tuple(tuple(tuple(g) for g in gi) for gi in gamma))
