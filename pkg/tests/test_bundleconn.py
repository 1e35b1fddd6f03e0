import random
from fractions import Fraction
from itertools import combinations, permutations

import numpy as np
import pytest

from edsbench.bundleconn import (BundleError, CoFrame, ConnectionForm, CurvatureForm, VValuedForm, bianchi_residuals,
                                 christoffel, covariant_exterior_derivative, curvature,
                                 generalized_bianchi_residual, is_metric_compatible, levi_civita, pullback_connection,
                                 torsion)
from edsbench.coeffalg import Poly, parse_poly
from edsbench.extcalc import Form, PointForm, eval_at, exterior_d, pullback

from conftest import random_form, random_poly


def random_connection(rng, n, D, skew=False, max_degree=2):
    w = [[random_form(rng, D, 1, max_degree) for _ in range(n)] for _ in range(n)]
    if skew:
        for i in range(n):
            w[i][i] = Form.zero(D, 1)
            for j in range(i):
                w[i][j] = -w[j][i]
    return ConnectionForm(w)


def coeff(form, idx):
    return form.coefficient(idx)


def curvature_oracle(w, D):
    """Ω^i_j on dx^a∧dx^b from components: ∂_a w_b − ∂_b w_a + Σ_k (w^i_k,a w^k_j,b − w^i_k,b w^k_j,a)."""
    n = len(w)
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            terms = {}
            for a, b in combinations(range(D), 2):
                c = coeff(w[i][j], (b,)).partial(a) - coeff(w[i][j], (a,)).partial(b)
                for k in range(n):
                    c = c + coeff(w[i][k], (a,)) * coeff(w[k][j], (b,)) - coeff(w[i][k], (b,)) * coeff(w[k][j], (a,))
                terms[(a, b)] = c
            row.append(Form(D, 2, terms))
        out.append(row)
    return out


def test_curvature_examples(rng):
    assert all(not f for row in curvature(ConnectionForm.zero(2, 3)).entries for f in row)
    # constant skew ω with ω∧ω = 0
    w = ConnectionForm([[Form.zero(2, 1), Form.dx(0, 2)], [-Form.dx(0, 2), Form.zero(2, 1)]])
    assert all(not f for row in curvature(w).entries for f in row)
    for _ in range(5):
        w = random_connection(rng, 3, 3)
        assert [list(r) for r in curvature(w).entries] == curvature_oracle(w.entries, 3)


def test_torsion_examples(rng):
    eta = CoFrame.coordinate(3)
    assert all(not t for t in torsion(eta, ConnectionForm.zero(3, 3)))
    r = parse_poly("r", ["r", "t"])
    polar = CoFrame([Form.dx(0, 2), Form.dx(1, 2).scale(r)])
    w = ConnectionForm([[Form.zero(2, 1), -Form.dx(1, 2)], [Form.dx(1, 2), Form.zero(2, 1)]])
    assert all(not t for t in torsion(polar, w))
    with pytest.raises(BundleError):
        torsion(eta, ConnectionForm.zero(2, 3))
    # independent expansion: Θ^i on dx^a∧dx^b
    for _ in range(5):
        D = 3
        eta = CoFrame([random_form(rng, D, 1) for _ in range(3)])
        w = random_connection(rng, 3, D)
        th = torsion(eta, w)
        for i in range(3):
            for a, b in combinations(range(D), 2):
                c = coeff(eta[i], (b,)).partial(a) - coeff(eta[i], (a,)).partial(b)
                for j in range(3):
                    c = c + coeff(w[i, j], (a,)) * coeff(eta[j], (b,)) - coeff(w[i, j], (b,)) * coeff(eta[j], (a,))
                assert th[i].coefficient((a, b)) == c


def test_metric_compatibility(rng):
    assert is_metric_compatible(random_connection(rng, 3, 2, skew=True))
    w = ConnectionForm([[Form.dx(0, 2), Form.zero(2, 1)], [Form.zero(2, 1), Form.zero(2, 1)]])
    assert not is_metric_compatible(w)


def test_bianchi_examples(rng):
    first, second = bianchi_residuals(CoFrame.coordinate(3), ConnectionForm.zero(3, 3))
    assert not any(first) and not any(f for row in second for f in row)
    for skew in (True, False):
        eta = CoFrame([random_form(rng, 3, 1) for _ in range(3)])
        first, second = bianchi_residuals(eta, random_connection(rng, 3, 3, skew=skew))
        assert not any(second[i][j] for i in range(3) for j in range(3))
        assert not any(first)


def test_covariant_derivative_reduces_to_torsion(rng):
    eta = CoFrame([random_form(rng, 3, 1) for _ in range(3)])
    w = random_connection(rng, 3, 3)
    assert tuple(covariant_exterior_derivative(w, VValuedForm(tuple(eta))).phi) == tuple(torsion(eta, w))
    closed = VValuedForm((exterior_d(random_form(rng, 3, 1)), Form.zero(3, 2)))
    assert not any(covariant_exterior_derivative(ConnectionForm.zero(2, 3), closed))
    with pytest.raises(BundleError):
        covariant_exterior_derivative(ConnectionForm.zero(2, 3), VValuedForm((Form.zero(3, 1),)))


def test_covariant_derivative_expansion(rng):
    w = random_connection(rng, 2, 3)
    phi = VValuedForm((random_form(rng, 3, 1), random_form(rng, 3, 1)))
    out = covariant_exterior_derivative(w, phi)
    for i in range(2):
        for a, b in combinations(range(3), 2):
            c = coeff(phi[i], (b,)).partial(a) - coeff(phi[i], (a,)).partial(b)
            for j in range(2):
                c = c + coeff(w[i, j], (a,)) * coeff(phi[j], (b,)) - coeff(w[i, j], (b,)) * coeff(phi[j], (a,))
            assert out[i].coefficient((a, b)) == c


def test_second_covariant_derivative_is_curvature(rng):
    for p in (0, 1, 2):
        w = random_connection(rng, 3, 4)
        phi = VValuedForm(tuple(random_form(rng, 4, p) for _ in range(3)))
        twice = covariant_exterior_derivative(w, covariant_exterior_derivative(w, phi))
        assert tuple(twice) == generalized_bianchi_residual(curvature(w), phi)


def test_generalized_bianchi_top_degree_is_trivial(rng):
    m = 3
    w = random_connection(rng, 2, m)
    phi = VValuedForm(tuple(random_form(rng, m, m - 1) for _ in range(2)))
    assert not any(generalized_bianchi_residual(curvature(w), phi))
    assert not any(generalized_bianchi_residual(CurvatureForm.from_tensor(np.zeros((2, 2, 3, 3)), 3),
                                                VValuedForm((Form.dx(0, 3), Form.dx(1, 3)))))


def _cyclic_oracle(R, i, p, q, r):
    """Coefficient of dx^p∧dx^q∧dx^r in ½ Σ_j R[i][j][a][b] dx^a∧dx^b∧dx^j."""
    total = Fraction(0)
    base = (p, q, r)
    for perm in permutations(range(3)):
        a, b, j = (base[k] for k in perm)
        inv = sum(1 for x in range(3) for y in range(x + 1, 3) if perm[x] > perm[y])
        total += Fraction(R[i][j][a][b]) * (-1) ** inv / 2
    return total


def test_generalized_bianchi_encodes_first_bianchi(rng):
    m = 4
    eta = VValuedForm(tuple(Form.dx(i, m) for i in range(m)))
    # Riemann-type tensor from a symmetric matrix: R_ijab = A_ia A_jb − A_ib A_ja
    A = [[Fraction(rng.randint(-3, 3)) for _ in range(m)] for _ in range(m)]
    A = [[A[i][j] + A[j][i] for j in range(m)] for i in range(m)]
    R = [[[[A[i][a] * A[j][b] - A[i][b] * A[j][a] for b in range(m)] for a in range(m)]
          for j in range(m)] for i in range(m)]
    assert not any(generalized_bianchi_residual(CurvatureForm.from_tensor(R, m), eta))
    # a tensor with only the (a,b) skew symmetry: residual equals the cyclic sum
    S = [[[[0] * m for _ in range(m)] for _ in range(m)] for _ in range(m)]
    for i in range(m):
        for j in range(m):
            for a in range(m):
                for b in range(a + 1, m):
                    v = rng.randint(-3, 3)
                    S[i][j][a][b], S[i][j][b][a] = v, -v
    res = generalized_bianchi_residual(CurvatureForm.from_tensor(S, m), eta)
    for i in range(m):
        for p, q, r in combinations(range(m), 3):
            assert res[i].coefficient((p, q, r)) == _cyclic_oracle(S, i, p, q, r)


def _brute_levi_civita(eta: CoFrame, pt):
    """Solve torsion(η, ω)(pt) = 0 for skew ω by least squares over all coefficients."""
    m = len(eta)
    D = eta.chart_dim
    pairs = list(combinations(range(m), 2))
    n_unk = len(pairs) * D
    deta = [eval_at(exterior_d(e), pt).to_float() for e in eta]
    et = [eval_at(e, pt).to_float() for e in eta]
    rows, rhs = [], []
    for i in range(m):
        for a, b in combinations(range(D), 2):
            row = np.zeros(n_unk)
            for k, (p, q) in enumerate(pairs):
                for mu in range(D):
                    # ω^p_q = Σ_mu u dx^mu; ω^q_p = −ω^p_q
                    for (s, t, sign) in ((p, q, 1), (q, p, -1)):
                        if s != i:
                            continue
                        w = [0.0] * D
                        w[mu] = sign
                        ea = et[t].coefficient((a,)) if (a,) in et[t].terms else 0.0
                        eb = et[t].coefficient((b,)) if (b,) in et[t].terms else 0.0
                        row[k * D + mu] += w[a] * eb - w[b] * ea
            rows.append(row)
            rhs.append(-(deta[i].terms.get((a, b), 0.0)))
    sol, *_ = np.linalg.lstsq(np.array(rows), np.array(rhs), rcond=None)
    return {pq: sol[k * D:(k + 1) * D] for k, pq in enumerate(pairs)}


def test_levi_civita_examples():
    w = levi_civita(CoFrame.coordinate(2))
    assert all(not f for row in w.entries for f in row)
    r = parse_poly("r", ["r", "t"])
    polar = CoFrame([Form.dx(0, 2), Form.dx(1, 2).scale(r)])
    for rv in (Fraction(1, 2), Fraction(3, 2), Fraction(7)):
        pt = [rv, Fraction(1, 5)]
        w = levi_civita(polar, pt)
        assert w[0, 1] == PointForm(2, 1, {(1,): -1})
        brute = _brute_levi_civita(polar, pt)
        assert np.allclose(brute[(0, 1)], [0.0, -1.0])


def test_levi_civita_closure_and_uniqueness(rng):
    for _ in range(5):
        # a near-identity polynomial coframe, invertible near the sample point
        eta = CoFrame([Form.dx(i, 3) + random_form(rng, 3, 1, 1).scale(Fraction(1, 10)) for i in range(3)])
        pt = [Fraction(rng.randint(-2, 2), 7) for _ in range(3)]
        w = levi_civita(eta, pt)
        assert is_metric_compatible(w)
        # torsion at the point: dη(pt) + ω(pt)∧η(pt)
        for i in range(3):
            t = eval_at(exterior_d(eta[i]), pt)
            for j in range(3):
                t = t + w[i, j].wedge(eval_at(eta[j], pt))
            assert not t
        brute = _brute_levi_civita(eta, pt)
        for (p, q), coefs in brute.items():
            ours = [float(w[p, q].coefficient((mu,))) if (mu,) in w[p, q].terms else 0.0 for mu in range(3)]
            assert np.allclose(ours, coefs, atol=1e-12)


def test_levi_civita_degenerate():
    D = 2
    eta = CoFrame([Form.dx(0, D), Form.dx(0, D)])
    with pytest.raises(BundleError):
        levi_civita(eta, [1, 1])


def test_pullback_connection(rng):
    D = 3
    ident = [Poly.var(i, D) for i in range(D)]
    w = random_connection(rng, 2, D)
    assert pullback_connection(ident, w) == w
    const = [Poly.const(D, 2)] * D
    assert all(not f for row in pullback_connection(const, w).entries for f in row)
    with pytest.raises(Exception):
        pullback_connection(ident[:2], w)


def test_curvature_commutes_with_pullback(rng):
    for _ in range(5):
        w = random_connection(rng, 2, 2)
        f = [random_poly(rng, 3, 2) for _ in range(2)]
        lhs = curvature(pullback_connection(f, w))
        rhs = [[pullback(f, c) for c in row] for row in curvature(w).entries]
        assert [list(r) for r in lhs.entries] == rhs


def test_christoffel_examples():
    names = ["x", "y"]
    eta = CoFrame.coordinate(2)
    g = christoffel(eta, ConnectionForm.zero(2, 2)).gamma
    assert all(not v for a in g for b in a for v in b)
    x = parse_poly("x", names)
    w = ConnectionForm([[Form.zero(2, 1), Form.dx(1, 2).scale(x)], [Form.zero(2, 1), Form.zero(2, 1)]])
    g = christoffel(eta, w).gamma
    for i in range(2):
        for k in range(2):
            for j in range(2):
                assert g[i][k][j] == (x if (i, k, j) == (0, 1, 1) else Poly.zero(2))


def test_christoffel_reconstructs(rng):
    eta = CoFrame([Form.dx(0, 3) + Form.dx(1, 3).scale(2), Form.dx(1, 3), Form.dx(2, 3).scale(3)])
    w = random_connection(rng, 3, 3)
    assert christoffel(eta, w).reconstruct(eta) == w
