"""Energy-momentum tensors as tangent-bundle-valued ``(m−1)``-forms.

A contravariant 2-tensor ``T = T^{ij} ξ_i ⊗ ξ_j``, written in the
orthonormal frame ``ξ`` dual to a coframe ``η``, becomes
``τ^i = T^{ij} (ξ_j ⌟ η^Λ)``.  Its covariant exterior derivative is a
multiple of the volume form, and the multiple is the covariant divergence.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .bundleconn import BundleError, CoFrame, ConnectionForm, VValuedForm, christoffel, covariant_exterior_derivative
from .coeffalg import Poly
from .extcalc import Form, wedge_all

__all__ = [
    "EnergyMomentum",
    "tensor_to_form",
    "covariant_divergence",
    "volume_coefficients",
    "EquivalenceReport",
    "verify_equivalence",
    "conservation_codomain_dim",
]


@dataclass(frozen=True)
class EnergyMomentum:
    """Components ``T^{ij}`` in the orthonormal frame dual to ``η``."""

    T: tuple

    @classmethod
    def from_rows(cls, rows, chart_dim: int) -> "EnergyMomentum":
        def lift(c):
            return c if isinstance(c, Poly) else Poly.const(chart_dim, c)
        return cls(tuple(tuple(lift(c) for c in row) for row in rows))

    @property
    def size(self) -> int:
        return len(self.T)

    def __getitem__(self, ij):
        i, j = ij
        return self.T[i][j]


def _as_tensor(T, chart_dim: int) -> EnergyMomentum:
    if isinstance(T, EnergyMomentum):
        return T
    return EnergyMomentum.from_rows(T, chart_dim)


def tensor_to_form(T, eta: CoFrame) -> VValuedForm:
    """``τ^i = Σ_j T^{ij} (−1)^{j+1} η^{Λ∖j}`` (1-based ``j``).

    This is ``T^{ij}(ξ_j ⌟ η^Λ)`` written out: contracting ``ξ_j`` into
    ``η^1∧…∧η^m`` removes the ``j``-th factor with the sign of its slot.
    """
    m = len(eta)
    T = _as_tensor(T, eta.chart_dim)
    if T.size != m or any(len(row) != m for row in T.T):
        raise BundleError(f"T must be {m}x{m} to match the coframe")
    faces = []
    for j in range(m):
        rest = [eta[k] for k in range(m) if k != j]
        face = wedge_all(rest, eta.chart_dim) if rest else Form.constant(eta.chart_dim, 1)
        faces.append(face if j % 2 == 0 else -face)
    out = []
    for i in range(m):
        acc = Form.zero(eta.chart_dim, m - 1)
        for j in range(m):
            if T[i, j]:
                acc = acc + Form.function(T[i, j]).wedge(faces[j])
        out.append(acc)
    return VValuedForm(tuple(out))


def _frame_derivative(f: Poly, e_j, pt):
    """``ξ_j(f) = Σ_μ e_j^μ ∂_μ f``."""
    acc = None
    for mu, c in enumerate(e_j):
        if not c:
            continue
        df = f.partial(mu)
        t = df * c if pt is None else df.evaluate(pt) * c
        acc = t if acc is None else acc + t
    if acc is None:
        return Poly.zero(f.nvars) if pt is None else 0
    return acc


def covariant_divergence(T, eta: CoFrame, omega: ConnectionForm, pt=None) -> list:
    """``∇_j T^{ij} = ξ_j(T^{ij}) + T^{ij}Γ^k_{kj} + T^{jk}Γ^i_{kj}``.

    Symbolic (Polys) for constant coframes when ``pt`` is None; otherwise
    values at ``pt``.
    """
    m = len(eta)
    T = _as_tensor(T, eta.chart_dim)
    if pt is None and not eta.is_constant():
        raise BundleError("coframe has non-constant coefficients; a point is required")
    frame = eta.dual_frame(pt)
    G = christoffel(eta, omega, pt).gamma
    Tv = T.T if pt is None else [[c.evaluate(pt) for c in row] for row in T.T]
    out = []
    for i in range(m):
        acc = None
        for j in range(m):
            t = _frame_derivative(T[i, j], frame[j], pt)
            acc = t if acc is None else acc + t
            for k in range(m):
                acc = acc + Tv[i][j] * G[k][k][j] + Tv[j][k] * G[i][k][j]
        out.append(acc)
    return out


def volume_coefficients(forms: VValuedForm, eta: CoFrame, pt=None) -> list:
    """The ``η^Λ`` coefficient of each top-degree component."""
    m = eta.chart_dim
    top = tuple(range(m))
    vol = eta.volume_factor(pt)
    if pt is None:
        if not vol.is_constant():
            raise BundleError("volume factor is not constant; a point is required")
        vol = vol.constant_value()
    if not vol:
        raise BundleError("degenerate coframe")
    out = []
    for f in forms:
        if f.degree != m:
            raise BundleError("component is not a top-degree form")
        extra = [idx for idx in f.terms if idx != top]
        if extra:
            raise BundleError("unexpected monomials in top-degree form")
        c = f.coefficient(top)
        if pt is None:
            out.append(c.scale(Fraction(1) / Fraction(vol)))
        else:
            out.append(c / vol)
    return out


@dataclass
class EquivalenceReport:
    divergence: list
    volume_coefficient: list
    residuals: list
    conserved: bool
    agree: bool

    def as_dict(self) -> dict:
        def show(v):
            return v.to_string() if isinstance(v, Poly) else float(v)
        return {
            "divergence": [show(v) for v in self.divergence],
            "volume_coefficient": [show(v) for v in self.volume_coefficient],
            "residuals": [show(v) for v in self.residuals],
            "conserved": self.conserved,
            "agree": self.agree,
        }


def _is_zero(v, tol):
    if isinstance(v, Poly):
        return v.is_zero()
    if isinstance(v, (int, Fraction)):
        return v == 0
    return abs(v) <= tol


def verify_equivalence(T, eta: CoFrame, omega: ConnectionForm, pt=None, tol: float = 1e-12) -> EquivalenceReport:
    """Compare the ``η^Λ`` coefficient of ``d∇τ`` with the covariant divergence.

    Exact comparison when everything stays polynomial (constant coframe, no
    point, or a rational point); otherwise agreement within ``tol``.
    """
    tau = tensor_to_form(T, eta)
    dtau = covariant_exterior_derivative(omega, tau, pt)
    lhs = volume_coefficients(dtau, eta, pt)
    rhs = covariant_divergence(T, eta, omega, pt)
    res = [a - b for a, b in zip(lhs, rhs)]
    agree = all(_is_zero(r, tol) for r in res)
    conserved = all(_is_zero(v, tol) for v in rhs)
    return EquivalenceReport(rhs, lhs, res, conserved, agree)


def conservation_codomain_dim(m: int) -> int:
    """``m + (m−1)²``: fiber rank ``m`` plus the minimal embedding codimension."""
    if m < 2:
        raise ValueError("m must be at least 2")
    return m + (m - 1) ** 2
