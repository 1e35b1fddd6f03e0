"""Generalized Gauss map for the conservation-law case ``p = m − 1``.

Array conventions (all 0-based):

* ``H[a, i, lam]``      second-fundamental-form candidate, shape ``(kappa, n, m)``
* ``R[i, j, lam, mu]``  curvature tensor, skew in ``(i, j)`` and ``(lam, mu)``
* ``psi[i, lam]``       coefficient of ``η^{Λ∖lam}`` in ``φ^i``, shape ``(n, m)``

The solver works in coordinates of the Cartan-identity nullspace, so every
iterate satisfies the linear constraints to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numpy as np

from .config import DEFAULT, Config
from .edscore import ExteriorSystem, Flag
from .extcalc import Form, PointForm, wedge_all
from .numerics import nullspace, numeric_rank, singular_values

__all__ = [
    "GaussError",
    "ProblemDims",
    "SolveReport",
    "kappa_min",
    "curvature_space_dim",
    "curvature_components",
    "curvature_from_components",
    "random_curvature",
    "gauss_map",
    "gauss_jacobian",
    "gauss_directional",
    "cartan_constraint_matrix",
    "cartan_identities_residual",
    "general_cartan_residual",
    "cartan_nullspace",
    "independence_ratio",
    "verify_submersion",
    "solve_gauss",
    "dimension_audit",
    "numeric_fiber_dim",
    "build_embedding_ideal",
    "naive_embedding_system",
    "EmbeddingIdeal",
]


class GaussError(ValueError):
    pass


def kappa_min(m: int, n: int) -> int:
    return (m - 1) * (n - 1)


def curvature_space_dim(m: int, n: int) -> int:
    return n * (n - 1) * m * (m - 1) // 4


@dataclass(frozen=True)
class ProblemDims:
    m: int
    n: int
    kappa: int
    p: int | None = None

    def __post_init__(self):
        if self.m < 2:
            raise GaussError("base dimension m must be at least 2")
        if self.n < 2:
            raise GaussError("fiber rank n must be at least 2 (line bundles are trivial)")
        if self.kappa < 1:
            raise GaussError("embedding codimension must be positive")
        if self.p is None:
            object.__setattr__(self, "p", self.m - 1)

    @property
    def below_bound(self) -> bool:
        return self.kappa < kappa_min(self.m, self.n)

    @property
    def dim_K(self) -> int:
        return curvature_space_dim(self.m, self.n)

    @property
    def ambient(self) -> int:
        return self.kappa * self.n * self.m


def _pairs(k: int):
    return list(combinations(range(k), 2))


def curvature_components(R: np.ndarray) -> np.ndarray:
    """Independent entries ``R[i, j, lam, mu]`` with ``i < j``, ``lam < mu``."""
    R = np.asarray(R, dtype=float)
    n, m = R.shape[0], R.shape[2]
    return np.array([R[i, j, l, u] for i, j in _pairs(n) for l, u in _pairs(m)])


def curvature_from_components(values, n: int, m: int) -> np.ndarray:
    values = list(values)
    if len(values) != curvature_space_dim(m, n):
        raise GaussError(f"expected {curvature_space_dim(m, n)} components, got {len(values)}")
    R = np.zeros((n, n, m, m))
    it = iter(values)
    for i, j in _pairs(n):
        for l, u in _pairs(m):
            v = next(it)
            R[i, j, l, u] = v
            R[j, i, l, u] = -v
            R[i, j, u, l] = -v
            R[j, i, u, l] = v
    return R


def random_curvature(n: int, m: int, rng: np.random.Generator, low=-1.0, high=1.0) -> np.ndarray:
    return curvature_from_components(rng.uniform(low, high, curvature_space_dim(m, n)), n, m)


def gauss_map(H: np.ndarray) -> np.ndarray:
    """``G[i, j, lam, mu] = Σ_a H[a,i,lam] H[a,j,mu] − H[a,i,mu] H[a,j,lam]``."""
    H = np.asarray(H, dtype=float)
    P = np.einsum("ail,ajm->ijlm", H, H)
    return P - P.transpose(0, 1, 3, 2)


def gauss_directional(H: np.ndarray, delta: np.ndarray) -> np.ndarray:
    """``dG(H)[δ]``; exact linearization of the quadratic map."""
    H = np.asarray(H, dtype=float)
    delta = np.asarray(delta, dtype=float)
    P = np.einsum("ail,ajm->ijlm", delta, H) + np.einsum("ail,ajm->ijlm", H, delta)
    return P - P.transpose(0, 1, 3, 2)


def gauss_jacobian(H: np.ndarray, reduced: bool = True) -> np.ndarray:
    """Matrix of ``dG`` at ``H`` acting on ``H.ravel()``-ordered perturbations.

    ``reduced`` keeps only the rows of independent components (``i<j``,
    ``lam<mu``), i.e. the map into the curvature space.
    """
    H = np.asarray(H, dtype=float)
    kappa, n, m = H.shape
    J = np.zeros((n, n, m, m, kappa, n, m))
    # dG[i,j,l,u] / dH[a,p,q]
    for i in range(n):
        for j in range(n):
            for l in range(m):
                for u in range(m):
                    J[i, j, l, u, :, i, l] += H[:, j, u]
                    J[i, j, l, u, :, j, u] += H[:, i, l]
                    J[i, j, l, u, :, i, u] -= H[:, j, l]
                    J[i, j, l, u, :, j, l] -= H[:, i, u]
    if not reduced:
        return J.reshape(n * n * m * m, kappa * n * m)
    rows = [J[i, j, l, u].ravel() for i, j in _pairs(n) for l, u in _pairs(m)]
    return np.array(rows).reshape(len(rows), kappa * n * m)


def _sign(lam: int) -> int:
    # (-1)^{λ+1} with 1-based λ
    return 1 if lam % 2 == 0 else -1


def cartan_constraint_matrix(psi: np.ndarray, kappa: int) -> np.ndarray:
    """Rows ``a`` of ``Σ_{i,lam} (−1)^{lam+1} H[a,i,lam] psi[i,lam] = 0``."""
    psi = np.asarray(psi, dtype=float)
    n, m = psi.shape
    signs = np.array([_sign(l) for l in range(m)])
    row = (psi * signs[None, :]).ravel()
    C = np.zeros((kappa, kappa * n * m))
    for a in range(kappa):
        C[a, a * n * m:(a + 1) * n * m] = row
    return C


def cartan_identities_residual(H: np.ndarray, psi: np.ndarray) -> np.ndarray:
    H = np.asarray(H, dtype=float)
    psi = np.asarray(psi, dtype=float)
    if H.shape[1:] != psi.shape:
        raise GaussError(f"H has shape {H.shape}, psi has shape {psi.shape}")
    signs = np.array([_sign(l) for l in range(psi.shape[1])])
    return np.einsum("ail,il,l->a", H, psi, signs)


def general_cartan_residual(H, phi: list) -> list[PointForm]:
    """``Σ_{i,lam} H[a,i,lam] η^lam ∧ φ^i`` for each ``a``, via wedge expansion.

    ``phi`` holds constant-coefficient ``p``-forms (PointForms) on the
    ``m``-dimensional coframe.  Valid for any ``p``.
    """
    H = np.asarray(H, dtype=float)
    kappa, n, m = H.shape
    if len(phi) != n:
        raise GaussError("need one form per fiber index")
    out = []
    for a in range(kappa):
        acc = None
        for i in range(n):
            for lam in range(m):
                c = H[a, i, lam]
                if not c:
                    continue
                t = PointForm(m, 1, {(lam,): c}).wedge(phi[i])
                acc = t if acc is None else acc + t
        out.append(acc if acc is not None else PointForm.zero(m, phi[0].degree + 1))
    return out


def psi_forms(psi: np.ndarray) -> list[PointForm]:
    """``φ^i = Σ_lam psi[i,lam] η^{Λ∖lam}`` as PointForms on the coframe."""
    psi = np.asarray(psi, dtype=float)
    n, m = psi.shape
    out = []
    for i in range(n):
        terms = {}
        for lam in range(m):
            if psi[i, lam]:
                terms[tuple(k for k in range(m) if k != lam)] = float(psi[i, lam])
        out.append(PointForm(m, m - 1, terms))
    return out


def cartan_nullspace(psi: np.ndarray, dims: ProblemDims, tol: float = DEFAULT.tol_rank) -> np.ndarray:
    """Orthonormal columns spanning ``{H : Cartan identities hold}`` (flattened ``H``)."""
    psi = np.asarray(psi, dtype=float)
    if psi.shape != (dims.n, dims.m):
        raise GaussError(f"psi must have shape ({dims.n}, {dims.m})")
    if not np.any(psi):
        raise GaussError("psi must be nonzero")
    C = cartan_constraint_matrix(psi, dims.kappa)
    return nullspace(C, dims.ambient, tol)


def independence_ratio(H: np.ndarray) -> float:
    """``σ_min/σ_max`` of the vectors ``H[:, i, lam]``, ``i < n−1``, ``lam < m−1``."""
    H = np.asarray(H, dtype=float)
    kappa, n, m = H.shape
    V = H[:, : n - 1, : m - 1].reshape(kappa, (n - 1) * (m - 1))
    if V.shape[1] == 0:
        return 1.0
    if V.shape[1] > kappa:
        return 0.0
    s = singular_values(V)
    return float(s[-1] / s[0]) if s[0] > 0 else 0.0


def verify_submersion(H: np.ndarray, psi: np.ndarray, dims: ProblemDims, config: Config = DEFAULT):
    """Rank of ``dG`` restricted to the Cartan nullspace; full rank ⇔ submersion at ``H``."""
    B = cartan_nullspace(psi, dims, config.tol_rank)
    J = gauss_jacobian(np.asarray(H, dtype=float).reshape(dims.kappa, dims.n, dims.m)) @ B
    rank = numeric_rank(J, config.tol_rank)
    return rank == dims.dim_K, rank


def numeric_fiber_dim(H: np.ndarray, psi: np.ndarray, dims: ProblemDims, config: Config = DEFAULT) -> int:
    """Nullity of ``dG`` on the Cartan nullspace at ``H``."""
    B = cartan_nullspace(psi, dims, config.tol_rank)
    _, rank = verify_submersion(H, psi, dims, config)
    return B.shape[1] - rank


def dimension_audit(dims: ProblemDims) -> dict:
    m, n, k = dims.m, dims.n, dims.kappa
    dim_sigma = m + n * (n - 1) // 2 + n * k
    dim_K = curvature_space_dim(m, n)
    ambient = (n * m - 1) * k
    fiber = ambient - dim_K
    return {
        "m": m,
        "n": n,
        "kappa": k,
        "kappa_min": kappa_min(m, n),
        "dim_sigma": dim_sigma,
        "dim_K": dim_K,
        "cartan_nullspace_dim": ambient,
        "dim_H": fiber,
        "dim_Z": dim_sigma + fiber,
    }


# -- solver ------------------------------------------------------------------


@dataclass
class SolveReport:
    H: np.ndarray
    residual_gauss: float
    residual_cartan: float
    jacobian_rank: int
    submersion: bool
    iterations: int
    seed: int
    independence: float
    converged: bool = True
    starts_tried: int = 1
    history: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "H": self.H.tolist(),
            "residual_gauss": self.residual_gauss,
            "residual_cartan": self.residual_cartan,
            "jacobian_rank": self.jacobian_rank,
            "submersion": self.submersion,
            "iterations": self.iterations,
            "seed": self.seed,
            "independence": self.independence,
            "converged": self.converged,
            "starts_tried": self.starts_tried,
        }


class SolveFailure(GaussError):
    def __init__(self, message, best_residual):
        super().__init__(message)
        self.best_residual = best_residual


def _check_curvature(R: np.ndarray, dims: ProblemDims):
    if R.shape != (dims.n, dims.n, dims.m, dims.m):
        raise GaussError(f"curvature must have shape {(dims.n, dims.n, dims.m, dims.m)}")
    scale = max(1.0, float(np.max(np.abs(R))) if R.size else 1.0)
    if np.max(np.abs(R + R.transpose(1, 0, 2, 3))) > 1e-12 * scale or \
            np.max(np.abs(R + R.transpose(0, 1, 3, 2))) > 1e-12 * scale:
        raise GaussError("curvature tensor lacks the skew symmetries")


def _gauss_newton(y, B, target, shape, config):
    """Damped Gauss–Newton with a Levenberg–Marquardt fallback; returns ``(y, resid, iters)``."""

    def residual(y):
        return curvature_components(gauss_map((B @ y).reshape(shape))) - target

    F = residual(y)
    norm = float(np.max(np.abs(F))) if F.size else 0.0
    mu = 1e-3
    it = 0
    for it in range(1, config.max_iters + 1):
        if norm <= config.tol_residual:
            # one extra step tightens the solution well below the tolerance
            J = gauss_jacobian((B @ y).reshape(shape)) @ B
            step = np.linalg.lstsq(J, -F, rcond=None)[0]
            y_new = y + step
            F_new = residual(y_new)
            n_new = float(np.max(np.abs(F_new)))
            if n_new < norm:
                y, F, norm = y_new, F_new, n_new
            return y, norm, it
        J = gauss_jacobian((B @ y).reshape(shape)) @ B
        step = np.linalg.lstsq(J, -F, rcond=None)[0]
        y_new = y + step
        F_new = residual(y_new)
        n_new = float(np.max(np.abs(F_new)))
        if n_new < norm:
            y, F, norm = y_new, F_new, n_new
            mu = max(mu / 10, 1e-12)
            continue
        # LM fallback: increase damping until the residual drops
        JtJ = J.T @ J
        g = J.T @ F
        accepted = False
        for _ in range(30):
            step = np.linalg.solve(JtJ + mu * np.eye(JtJ.shape[0]), -g)
            y_new = y + step
            F_new = residual(y_new)
            n_new = float(np.max(np.abs(F_new)))
            if n_new < norm:
                y, F, norm = y_new, F_new, n_new
                mu = max(mu / 10, 1e-12)
                accepted = True
                break
            mu *= 10
        if not accepted:
            break
    return y, norm, it


def solve_gauss(R, psi, dims: ProblemDims, seed: int = 0, config: Config = DEFAULT) -> SolveReport:
    """Find ``H`` in the Cartan nullspace with ``G(H) = R`` and independent ``H_{iλ}``.

    Starts use seeds ``seed, seed+1, …``; the first start that converges to an
    admissible ``H`` wins, so results are reproducible bit for bit.
    """
    R = np.asarray(R, dtype=float)
    psi = np.asarray(psi, dtype=float)
    _check_curvature(R, dims)
    B = cartan_nullspace(psi, dims, config.tol_rank)
    shape = (dims.kappa, dims.n, dims.m)
    target = curvature_components(R)
    scale = math.sqrt(max(1.0, float(np.max(np.abs(target))) if target.size else 1.0))
    best = math.inf
    total_iters = 0
    for s in range(config.starts):
        rng = np.random.default_rng(seed + s)
        y0 = None
        for _ in range(20):
            cand = scale * rng.standard_normal(B.shape[1])
            if independence_ratio((B @ cand).reshape(shape)) >= config.tol_independence:
                y0 = cand
                break
        if y0 is None:
            y0 = cand
        y, resid, iters = _gauss_newton(y0, B, target, shape, config)
        total_iters += iters
        best = min(best, resid)
        H = (B @ y).reshape(shape)
        if resid > config.tol_residual:
            continue
        ratio = independence_ratio(H)
        if ratio < config.tol_independence:
            continue
        sub, rank = verify_submersion(H, psi, dims, config)
        return SolveReport(
            H=H,
            residual_gauss=resid,
            residual_cartan=float(np.max(np.abs(cartan_identities_residual(H, psi)))),
            jacobian_rank=rank,
            submersion=sub,
            iterations=iters,
            seed=seed + s,
            independence=ratio,
            starts_tried=s + 1,
        )
    raise SolveFailure(f"no admissible solution after {config.starts} starts (best residual {best:.3e})", best)


# -- the embedding ideal on Σ ------------------------------------------------


@dataclass
class EmbeddingIdeal:
    system: ExteriorSystem
    flag: Flag
    labels: list
    dims: ProblemDims

    def index(self, label) -> int:
        return self.labels.index(label)


def _coframe_labels(dims: ProblemDims) -> list:
    labels = [("eta", l) for l in range(dims.m)]
    labels += [("omega", i, j) for i, j in _pairs(dims.n)]
    labels += [("omega_a", a, i) for a in range(dims.kappa) for i in range(dims.n)]
    return labels


def _exact(x) -> Fraction:
    return Fraction(float(x))


class _SigmaCoframe:
    """Coframe ``(η^λ; ω^i_j, i<j; ω^a_i)`` of Σ at a point, as coordinate 1-forms."""

    def __init__(self, dims: ProblemDims):
        self.dims = dims
        self.labels = _coframe_labels(dims)
        self.D = len(self.labels)
        self._pos = {lab: k for k, lab in enumerate(self.labels)}

    def eta(self, lam) -> Form:
        return Form.dx(self._pos[("eta", lam)], self.D)

    def omega(self, i, j) -> Form:
        """``ω^i_j`` (skew) among fiber indices."""
        if i == j:
            return Form.zero(self.D, 1)
        if i < j:
            return Form.dx(self._pos[("omega", i, j)], self.D)
        return -Form.dx(self._pos[("omega", j, i)], self.D)

    def omega_a(self, a, i) -> Form:
        return Form.dx(self._pos[("omega_a", a, i)], self.D)

    def eta_wedge(self, lams) -> Form:
        return wedge_all([self.eta(l) for l in lams], self.D)

    def curvature_2form(self, R, i, j) -> Form:
        acc = Form.zero(self.D, 2)
        m = self.dims.m
        for l, u in _pairs(m):
            if R[i, j, l, u]:
                acc = acc + self.eta_wedge((l, u)).scale(_exact(R[i, j, l, u]))
        return acc

    def phi(self, psi, i) -> Form:
        m = self.dims.m
        acc = Form.zero(self.D, m - 1)
        for lam in range(m):
            if psi[i, lam]:
                acc = acc + self.eta_wedge([k for k in range(m) if k != lam]).scale(_exact(psi[i, lam]))
        return acc

    def structure(self, R) -> dict:
        """``d`` of each coframe element at the point.

        Gauge: ``η^i_j`` and ``ω^a_b`` vanish at the point and ``dη^λ = 0``
        there, which keeps every coefficient constant to first order.
        """
        n, kappa = self.dims.n, self.dims.kappa
        table = {}
        for i, j in _pairs(n):
            acc = Form.zero(self.D, 2)
            for k in range(n):
                acc = acc - self.omega(i, k).wedge(self.omega(k, j))
            for a in range(kappa):
                acc = acc + self.omega_a(a, i).wedge(self.omega_a(a, j))
            acc = acc - self.curvature_2form(R, i, j)
            table[self._pos[("omega", i, j)]] = acc
        for a in range(kappa):
            for i in range(n):
                acc = Form.zero(self.D, 2)
                for j in range(n):
                    acc = acc - self.omega_a(a, j).wedge(self.omega(j, i))
                table[self._pos[("omega_a", a, i)]] = acc
        return table


def _plane_basis(cf: _SigmaCoframe, H) -> list:
    dims = cf.dims
    vecs = []
    for lam in range(dims.m):
        v = [Fraction(0)] * cf.D
        v[cf._pos[("eta", lam)]] = Fraction(1)
        for a in range(dims.kappa):
            for i in range(dims.n):
                v[cf._pos[("omega_a", a, i)]] = _exact(H[a, i, lam])
        vecs.append(v)
    return vecs


def _rotated(vecs, seed):
    rng = np.random.default_rng(seed)
    m = len(vecs)
    Q, _ = np.linalg.qr(rng.standard_normal((m, m)))
    V = np.array([[float(c) for c in v] for v in vecs])
    return [list(row) for row in Q.T @ V]


def naive_embedding_system(dims: ProblemDims, R, psi) -> ExteriorSystem:
    """``{ω^i_j − η^i_j, ω^a_i ∧ φ^i}`` with the Maurer–Cartan structure table."""
    R = np.asarray(R, dtype=float)
    psi = np.asarray(psi, dtype=float)
    cf = _SigmaCoframe(dims)
    gens = [cf.omega(i, j) for i, j in _pairs(dims.n)]
    for a in range(dims.kappa):
        acc = Form.zero(cf.D, dims.m)
        for i in range(dims.n):
            acc = acc + cf.omega_a(a, i).wedge(cf.phi(psi, i))
        gens.append(acc)
    return ExteriorSystem(gens, cf.D, structure=cf.structure(R), exact=False)


def build_embedding_ideal(dims: ProblemDims, R, psi, H, *, flag_seed: int | None = None,
                          config: Config = DEFAULT) -> EmbeddingIdeal:
    """The ideal ``{ω^i_j − η^i_j, ω^i_a∧ω^a_j + Ω^i_j, ω^a_i∧φ^i}`` at a point of Σ.

    Returns the system together with a flag inside the ``m``-plane on which
    every ``π^a_i = ω^a_i − H^a_{iλ}η^λ`` and every ``ω^i_j − η^i_j`` vanish.
    The flag follows the ``η`` order unless ``flag_seed`` asks for a
    generic rotation of it.
    """
    R = np.asarray(R, dtype=float)
    psi = np.asarray(psi, dtype=float)
    H = np.asarray(H, dtype=float).reshape(dims.kappa, dims.n, dims.m)
    _check_curvature(R, dims)
    g_res = float(np.max(np.abs(curvature_components(gauss_map(H) - R)))) if dims.dim_K else 0.0
    c_res = float(np.max(np.abs(cartan_identities_residual(H, psi))))
    if g_res > 10 * config.tol_residual:
        raise GaussError(f"H does not satisfy the Gauss equation (residual {g_res:.3e})")
    if c_res > 1e-10:
        raise GaussError(f"H violates the Cartan identities (residual {c_res:.3e})")
    if independence_ratio(H) < config.tol_independence:
        raise GaussError("vectors H_{iλ} (i<n, λ<m) are not independent")

    cf = _SigmaCoframe(dims)
    n, m, kappa = dims.n, dims.m, dims.kappa
    gens = [cf.omega(i, j) for i, j in _pairs(n)]
    for i, j in _pairs(n):
        acc = cf.curvature_2form(R, i, j)
        for a in range(kappa):
            # ω^i_a = −ω^a_i
            acc = acc - cf.omega_a(a, i).wedge(cf.omega_a(a, j))
        gens.append(acc)
    for a in range(kappa):
        acc = Form.zero(cf.D, m)
        for i in range(n):
            acc = acc + cf.omega_a(a, i).wedge(cf.phi(psi, i))
        gens.append(acc)
    system = ExteriorSystem(gens, cf.D, structure=cf.structure(R), exact=False)
    vecs = _plane_basis(cf, H)
    if flag_seed is not None:
        vecs = _rotated(vecs, flag_seed)
    return EmbeddingIdeal(system, Flag(None, vecs), cf.labels, dims)


def pi_forms(dims: ProblemDims, H) -> list:
    """``π^a_i = ω^a_i − H^a_{iλ} η^λ`` on the Σ coframe, indexed ``[a][i]``."""
    cf = _SigmaCoframe(dims)
    H = np.asarray(H, dtype=float)
    out = []
    for a in range(dims.kappa):
        row = []
        for i in range(dims.n):
            acc = cf.omega_a(a, i)
            for lam in range(dims.m):
                if H[a, i, lam]:
                    acc = acc - cf.eta(lam).scale(_exact(H[a, i, lam]))
            row.append(acc)
        out.append(row)
    return out
