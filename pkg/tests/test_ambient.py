import numpy as np
import pytest

from areavar import ambient, fd
from areavar.ambient import (
    ChartPoint,
    ConsistencyError,
    ddc_matrix,
    dc_one_form,
    field_jet,
    flat_model,
    fubini_study_distance,
    fubini_study_model,
    metric_from_pair,
    metric_from_pair_checked,
    squeezed_torus_model,
    taming_margin,
    unitary_taking_to_e0,
)
from areavar.potentials import BumpField, FourierField, NumericalField, PolyField

from conftest import random_points


def trig_field():
    return FourierField(
        [
            (0.3, (1, 0, -1, 0), 0.2),
            (-0.2, (0, 2, 0, 1), 1.1),
            (0.15, (1, 1, 1, -2), -0.4),
        ]
    )


# -- linear algebra of the standard pair -------------------------------------


def test_standard_pair_gives_identity_metric():
    for n in (1, 2, 3):
        W0 = ambient.standard_symplectic(n)
        J0 = ambient.standard_complex_structure(n)
        assert np.allclose(J0 @ J0, -np.eye(2 * n))
        assert np.allclose(W0, -W0.T)
        assert np.allclose(metric_from_pair(W0, J0), np.eye(2 * n))
        assert np.allclose(metric_from_pair(2.0 * W0, J0), 2.0 * np.eye(2 * n))


def test_metric_checked_flags_reversed_structure():
    W0 = ambient.standard_symplectic(2)
    J0 = ambient.standard_complex_structure(2)
    g, ok = metric_from_pair_checked(W0[None], J0[None])
    assert ok and np.allclose(g[0], np.eye(4))
    g, ok = metric_from_pair_checked(W0[None], -J0[None])
    assert not ok and np.allclose(g[0], -np.eye(4))


def test_complex_encoding_round_trip():
    rng = np.random.default_rng(3)
    x = rng.standard_normal((7, 4))
    z = ambient.to_complex(x)
    assert z.shape == (7, 2)
    assert np.allclose(ambient.from_complex(z), x)
    D = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    lhs = ambient.from_complex((z @ D.T))
    rhs = x @ ambient.complex_to_real_linear(D).T
    assert np.allclose(lhs, rhs)


def test_taming_margin_signs_and_empty():
    rng = np.random.default_rng(5)
    W0 = ambient.standard_symplectic(2)
    J0 = ambient.standard_complex_structure(2)
    v = rng.standard_normal((20, 4))
    Wb = np.broadcast_to(W0, (20, 4, 4))
    Jb = np.broadcast_to(J0, (20, 4, 4))
    assert taming_margin(Wb, Jb, v) > 0
    assert taming_margin(Wb, -Jb, v) < 0
    with pytest.raises(ValueError):
        taming_margin(Wb, Jb, np.zeros((0, 4)))


def test_chart_point_rejects_nonfinite():
    with pytest.raises(ValueError):
        ChartPoint(np.array([0.0, np.nan, 0.0, 0.0]))


# -- models ------------------------------------------------------------------


def test_flat_model_tensors():
    model = flat_model(2)
    rng = np.random.default_rng(0)
    x = random_points(rng, 6, 4)
    J = model.J(x)
    assert np.allclose(np.einsum("mab,mbc->mac", J, J), -np.eye(4)[None])
    assert np.allclose(model.christoffels(x), 0.0)
    assert np.allclose(model.metric(x), np.eye(4)[None])
    assert model.kahler and model.flat


@pytest.mark.parametrize("make", [lambda: fubini_study_model(2), squeezed_torus_model])
def test_model_structure_identities(make):
    model = make()
    rng = np.random.default_rng(11)
    x = random_points(rng, 8, model.dim)
    J = model.J(x)
    assert np.max(np.abs(np.einsum("mab,mbc->mac", J, J) + np.eye(model.dim)[None])) < 1e-12
    g, ok = model.metric_checked(x)
    assert ok
    # compatibility: the stored metric is the symmetrized pairing of (omega, J)
    assert np.max(np.abs(g - metric_from_pair(model.omega(x), J))) < 1e-12
    # J is an isometry of g
    gJ = np.einsum("mca,mcd,mdb->mab", J, g, J)
    assert np.max(np.abs(gJ - g)) < 1e-12


def test_squeezed_model_is_not_kahler():
    model = squeezed_torus_model()
    assert not model.kahler and not model.flat
    rng = np.random.default_rng(2)
    x = random_points(rng, 5, 4)
    NJ = model.nabla_J(x)
    assert np.max(np.abs(NJ)) > 0.05
    # differentiating J^2 = -I forces (nabla J) J + J (nabla J) = 0
    J = model.J(x)
    anti = np.einsum("macd,mdb->macb", NJ, J) + np.einsum("mcd,madb->macb", J, NJ)
    assert np.max(np.abs(anti)) < 1e-6


def test_fs_normalization_and_closedness():
    model = fubini_study_model(2)
    assert np.allclose(model.metric(np.zeros(4)), np.eye(4))
    rng = np.random.default_rng(7)
    x = random_points(rng, 6, 4)
    dW = fd.two_form_exterior(model._omega_b, x)
    assert np.max(np.abs(dW)) < 1e-6


def test_fs_christoffels_match_finite_differences():
    model = fubini_study_model(2)
    rng = np.random.default_rng(9)
    x = random_points(rng, 6, 4)
    gamma_fd = fd.christoffels_from_metric(model._metric_b, x)
    assert np.max(np.abs(model.christoffels(x) - gamma_fd)) < 1e-6


def test_fs_form_is_quarter_ddc_of_log_potential():
    model = fubini_study_model(2)

    def log_pot(x):
        z = ambient.to_complex(x)
        return np.log1p(np.sum(np.abs(z) ** 2, axis=1))

    jet = field_jet(model, NumericalField(log_pot))
    rng = np.random.default_rng(13)
    x = random_points(rng, 5, 4)
    M = ddc_matrix(model, jet, x)
    assert np.max(np.abs(0.25 * M - model.omega(x))) < 1e-5


# -- the d^c calculus --------------------------------------------------------


def test_dc_one_form_is_minus_dpsi_of_J():
    model = fubini_study_model(2)
    expr = BumpField([0.2, -0.1, 0.3, 0.05], 0.8)
    jet = field_jet(model, expr)
    rng = np.random.default_rng(1)
    x = random_points(rng, 6, 4)
    beta = dc_one_form(model, jet, x)
    J = model.J(x)
    JX = np.eye(4)
    for a in range(4):
        vals = np.einsum("mb,mb->m", beta, np.broadcast_to(JX[a], (6, 4)))
        # beta(X) = -dpsi(J X)
        expect = -np.einsum("mb,mb->m", jet.grad(x), np.einsum("mbc,c->mb", J, JX[a]))
        assert np.allclose(vals, expect)


def test_ddc_flat_quadratic_is_four_omega():
    model = flat_model(2)
    expr = PolyField([(1.0, (2, 0, 0, 0)), (1.0, (0, 2, 0, 0)),
                      (1.0, (0, 0, 2, 0)), (1.0, (0, 0, 0, 2))])
    jet = field_jet(model, expr)
    x = np.zeros((3, 4))
    M = ddc_matrix(model, jet, x)
    assert np.allclose(M, 4.0 * ambient.standard_symplectic(2)[None])


@pytest.mark.parametrize(
    "make,expr",
    [
        (lambda: flat_model(2), trig_field()),
        (lambda: fubini_study_model(2), BumpField([0.1, -0.2, 0.25, 0.0], 0.7)),
        (squeezed_torus_model, trig_field()),
    ],
)
def test_ddc_antisymmetric_and_matches_exterior_of_dc(make, expr):
    model = make()
    jet = field_jet(model, expr)
    rng = np.random.default_rng(21)
    x = random_points(rng, 6, 4)
    M = ddc_matrix(model, jet, x)
    assert np.max(np.abs(M + np.swapaxes(M, 1, 2))) < 1e-10
    M_fd = fd.one_form_exterior(lambda pts: dc_one_form(model, jet, pts), x)
    assert np.max(np.abs(M - M_fd)) < 1e-6


def test_ddc_is_connection_independent():
    model = flat_model(2)
    expr = trig_field()
    jet = field_jet(model, expr)

    def fake_metric(x):
        phi = 0.2 * np.sin(x[:, 0]) * np.cos(x[:, 2])
        return np.exp(2.0 * phi)[:, None, None] * np.eye(4)[None]

    def fake_connection(x):
        return fd.christoffels_from_metric(fake_metric, x)

    rng = np.random.default_rng(17)
    x = random_points(rng, 5, 4)
    M0 = ddc_matrix(model, jet, x)
    M1 = ddc_matrix(model, jet, x, connection=fake_connection)
    assert np.max(np.abs(M0 - M1)) < 1e-6


def test_jet_covariantizes_against_model_connection():
    model = fubini_study_model(2)
    expr = BumpField([0.3, 0.1, -0.2, 0.4], 0.9)
    jet = field_jet(model, expr)
    rng = np.random.default_rng(23)
    x = random_points(rng, 4, 4)
    H = jet.hess(x)
    plain = expr.partial_hess(x)
    gamma = model.christoffels(x)
    expect = plain - np.einsum("mcab,mc->mab", gamma, expr.grad(x))
    assert np.allclose(H, expect)
    # symmetric because the connection is torsion free
    assert np.max(np.abs(H - np.swapaxes(H, 1, 2))) < 1e-10


# -- chart motions on projective space ---------------------------------------


def test_unitary_taking_to_e0():
    rng = np.random.default_rng(31)
    vs = [rng.standard_normal(3) + 1j * rng.standard_normal(3) for _ in range(5)]
    vs.append(np.array([0.0, 1.0, 0.0], dtype=complex))
    vs.append(np.array([1.0, 0.0, 0.0], dtype=complex))
    vs.append(np.array([1e-9, 1.0, 1.0 + 1e-9j]))
    for v in vs:
        U = unitary_taking_to_e0(v)
        assert np.max(np.abs(U @ U.conj().T - np.eye(3))) < 1e-12
        w = U @ (v / np.linalg.norm(v))
        assert np.max(np.abs(w - np.array([1.0, 0.0, 0.0]))) < 1e-11


def test_normalize_at_is_a_pointed_isometry():
    model = fubini_study_model(2)
    rng = np.random.default_rng(37)
    for _ in range(4):
        q = 0.6 * rng.standard_normal(4)
        motion = model.normalize_at(q)
        assert np.max(np.abs(motion.apply_chart(q))) < 1e-12
        D = motion.real_jacobian(q)
        # target is the origin where the metric is the identity
        assert np.max(np.abs(D.T @ D - model.metric(q))) < 1e-10


def test_fs_distance_matches_arclength():
    model = fubini_study_model(2)
    r = 1.3
    p = np.array([r, 0.0, 0.0, 0.0])
    d = model.distance(np.zeros(4), p)
    assert abs(d - np.arctan(r)) < 1e-12
    # quadrature of the pulled-back metric along the chart segment
    ts = np.linspace(0.0, 1.0, 4001)
    pts = ts[:, None] * p[None, :]
    G = model.metric(pts)
    speed = np.sqrt(np.einsum("a,mab,b->m", p, G, p))
    assert abs(np.trapezoid(speed, ts) - d) < 1e-6


def test_fs_distance_symmetry_and_homogeneous_form():
    rng = np.random.default_rng(41)
    Z1 = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    Z2 = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    d12 = fubini_study_distance(Z1, Z2)
    assert abs(d12 - fubini_study_distance(Z2, Z1)) < 1e-12
    assert fubini_study_distance(Z1, 2.7j * Z1) < 1e-7
    assert 0.0 <= d12 <= np.pi / 2 + 1e-12


def test_chart_homogeneous_round_trip():
    x = np.array([0.3, -0.2, 0.1, 0.7])
    Z = ambient.homogeneous_from_chart(x)
    assert Z.shape == (3,) and Z[0] == 1.0
    assert np.allclose(ambient.chart_from_homogeneous(Z), x)
    with pytest.raises(ValueError):
        ambient.chart_from_homogeneous(np.array([0.0, 1.0, 0.0]))
