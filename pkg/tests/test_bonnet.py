import numpy as np
import pytest

from zmcsurf.bonnet import (FRAME_ETA, CoefficientMatrices, build_AB, centre_node,
                            integrability_report, integrability_residual, integrate_frame,
                            integrate_position, reconstruct, verify_reconstruction)
from zmcsurf.errors import DriftExceeded, ValidationError, ZeroModulus
from zmcsurf.geometry import auto_normal_frame, gauss_and_normal_curvature
from zmcsurf.grid import Grid, GridField, interior_max
from zmcsurf.minkowski import apply, boost, gram_defect, rotation, standard_frame
from zmcsurf.moore import MooreParams, _xy_rates, moore_canonical_parameters

P = MooreParams()


def _const(value, n=11):
    g = Grid(0.0, 1.0, 0.0, 1.0, n, n)
    return GridField(np.full(g.shape, float(value)), g)


def _curvatures(R):
    patch = R.patch
    frame = auto_normal_frame(patch, "stencil", orientation=R.orientation)
    cs = gauss_and_normal_curvature(patch, frame, method="stencil", route="ricci")
    return cs.K, cs.kappa


@pytest.fixture(scope="module")
def moore_fields(canonical101):
    return canonical101.fields


@pytest.fixture(scope="module")
def roundtrip(moore_fields):
    return reconstruct(moore_fields["mu"], moore_fields["nu"])


def test_coefficients_are_infinitesimal_isometries(moore_fields):
    M = build_AB(moore_fields["mu"], moore_fields["nu"])
    for X in (M.A, M.B):
        eX = FRAME_ETA @ X
        assert np.max(np.abs(eX + np.swapaxes(eX, -1, -2))) < 1e-12


def test_constant_fields_give_pure_couplings():
    M = build_AB(_const(2.0), _const(1.0))
    for name in ("gamma1", "gamma2", "beta1", "beta2"):
        assert np.max(np.abs(getattr(M, name))) < 1e-12
    s = 5.0**-0.25  # sqrt(G) = sqrt(-E) = rho^(-1/4), rho = 5
    A, B = M.A[3, 4], M.B[3, 4]
    assert A[0, 2] == pytest.approx(1.0 * s) and A[1, 3] == pytest.approx(2.0 * s)
    assert B[1, 2] == pytest.approx(1.0 * s) and B[0, 3] == pytest.approx(2.0 * s)
    assert np.count_nonzero(np.abs(A) > 1e-14) == 4 and np.count_nonzero(np.abs(B) > 1e-14) == 4


def test_integrability_of_constants_is_commutator():
    M = build_AB(_const(1.0), _const(1.0))
    A, B = M.A[5, 5], M.B[5, 5]
    AB = [[sum(A[i, k] * B[k, j] for k in range(4)) for j in range(4)] for i in range(4)]
    BA = [[sum(B[i, k] * A[k, j] for k in range(4)) for j in range(4)] for i in range(4)]
    brute = max(abs(AB[i][j] - BA[i][j]) for i in range(4) for j in range(4))
    assert brute > 0.1
    assert interior_max(integrability_residual(M).values) == pytest.approx(brute, rel=1e-12)


def test_moore_integrability_order_two(moore_fields):
    errs = []
    for n in (51, 101, 201):
        f = moore_canonical_parameters(P, n, n).fields
        errs.append(integrability_report(build_AB(f["mu"], f["nu"]))["max"])
    assert errs[1] < 1e-3
    for a, b in zip(errs, errs[1:]):
        assert 3.4 <= a / b <= 4.6


def test_random_fields_not_integrable():
    rng = np.random.default_rng(7)
    g = Grid(0.0, 1.0, 0.0, 1.0, 21, 21)
    mu = GridField(1 + 0.5 * rng.random(g.shape), g)
    nu = GridField(1 + 0.5 * rng.random(g.shape), g)
    rep = integrability_report(build_AB(mu, nu))
    assert rep["status"] == "NotIntegrable" and rep["max"] > 1e-3


def test_zero_modulus():
    with pytest.raises(ZeroModulus):
        build_AB(_const(0.0), _const(0.0))
    with pytest.raises(ValidationError):
        build_AB(np.ones((5, 5)), np.ones((5, 5)))


def test_beta_gamma_closed_form():
    errs = []
    for n in (51, 101):
        cm = moore_canonical_parameters(P, n, n)
        f = cm.fields
        M = build_AB(f["mu"], f["nu"])
        dX, dY = _xy_rates(cm.meridian, P)
        q = np.hypot(f["mu"].values, f["nu"].values)**0.5
        errs.append(max(np.max(np.abs(M.beta2 - q * (-0.5 * dY)[:, None])),
                        np.max(np.abs(M.gamma2 - 0.5 * q * dX[:, None]))))
        assert np.max(np.abs(M.beta1)) < 1e-12 and np.max(np.abs(M.gamma1)) < 1e-12
    h = moore_canonical_parameters(P, 101, 5).grid.h_u
    assert errs[1] < h**2
    assert errs[1] < errs[0] / 4


def test_single_node_grid():
    g = Grid(0.0, 0.0, 0.0, 0.0, 1, 1)
    z = np.zeros((1, 1))
    M = CoefficientMatrices(g, np.zeros((1, 1, 4, 4)), np.zeros((1, 1, 4, 4)), z - 1, z + 1,
                            z, z, z, z, z + 1, z + 1)
    Z0 = apply(boost(0.2), standard_frame())
    F = integrate_frame(M, Z0)
    assert np.array_equal(F.Z[0, 0], Z0)


def test_zero_coefficients_give_affine_surface():
    g = Grid(0.0, 1.0, 0.0, 2.0, 6, 9)
    z = np.zeros(g.shape)
    zero = np.zeros((*g.shape, 4, 4))
    M = CoefficientMatrices(g, zero, zero, z - 1, z + 1, z, z, z, z, z, z)
    F = integrate_frame(M, anchor=(0, 0))
    R = integrate_position(F, M)
    U, V = g.mesh()
    x, y = standard_frame()[:2]
    assert np.allclose(R.patch.positions, U[..., None] * x + V[..., None] * y, atol=1e-14)


def test_moore_frame_drift_and_paths(roundtrip):
    F = roundtrip.frame
    assert F.max_gram_defect < 1e-6
    assert not F.renormalized
    assert F.anchor == centre_node(roundtrip.patch.grid)
    assert F.path_discrepancy < 1e-4
    assert roundtrip.path_discrepancy < 1e-4
    assert F.orientation == -1.0


def test_path_discrepancy_order_two():
    d = []
    for n in (51, 101, 201):
        f = moore_canonical_parameters(P, n, n).fields
        d.append(reconstruct(f["mu"], f["nu"]).frame.path_discrepancy)
    for a, b in zip(d, d[1:]):
        assert 3.4 <= a / b <= 4.6


def test_translation_is_rigid(moore_fields, roundtrip):
    p0 = np.array([1.0, -2.0, 0.5, 3.0])
    R = reconstruct(moore_fields["mu"], moore_fields["nu"], p0=p0)
    assert np.max(np.abs(R.patch.positions - roundtrip.patch.positions - p0)) < 1e-12


def test_isometric_anchor_frames(moore_fields, roundtrip):
    L = boost(0.3, 3, 0) @ rotation(0.7, 1, 2)
    R = reconstruct(moore_fields["mu"], moore_fields["nu"], Z0=apply(L, standard_frame()))
    assert np.max(np.abs(R.patch.positions - apply(L, roundtrip.patch.positions))) < 1e-12
    K1, k1 = _curvatures(roundtrip)
    K2, k2 = _curvatures(R)
    # roundoff in positions is amplified by the second-difference stencils (1/h^2)
    assert interior_max(K1 - K2) < 1e-8 and interior_max(k1 - k2) < 1e-8


def test_anchor_choice_gives_same_invariants(moore_fields, roundtrip):
    R = reconstruct(moore_fields["mu"], moore_fields["nu"], anchor=(0, 0))
    a, b = verify_reconstruction(roundtrip), verify_reconstruction(R)
    for k in ("E", "K", "kappa"):
        assert abs(a["checks"][k]["max_error"] - b["checks"][k]["max_error"]) < 5e-5


def test_roundtrip_converges():
    rep = []
    for n in (101, 201):
        f = moore_canonical_parameters(P, n, n).fields
        rep.append(verify_reconstruction(reconstruct(f["mu"], f["nu"])))
    assert rep[1]["pass"], rep[1]["checks"]
    for k in ("E", "G", "H", "K", "kappa"):
        assert rep[0]["checks"][k]["max_error"] / rep[1]["checks"][k]["max_error"] > 3.0


def test_corrupted_mu_flagged(moore_fields, roundtrip):
    mu = GridField(1.1 * moore_fields["mu"].values, moore_fields["mu"].grid)
    rep = verify_reconstruction(roundtrip, mu, moore_fields["nu"])
    assert not rep["checks"]["K"]["pass"] and not rep["pass"]


def test_drift_budget_and_renormalization(moore_fields):
    with pytest.raises(DriftExceeded) as exc:
        reconstruct(moore_fields["mu"], moore_fields["nu"], drift_budget=1e-14)
    assert exc.value.solution is not None and exc.value.solution.max_gram_defect > 1e-14
    R = reconstruct(moore_fields["mu"], moore_fields["nu"], renorm=True)
    assert R.frame.renormalized and R.frame.max_gram_defect < 1e-13
    assert R.provenance["renormalized"] is True


def test_anchor_validation(moore_fields):
    M = build_AB(moore_fields["mu"], moore_fields["nu"])
    bad = standard_frame()
    bad[1] *= 2
    with pytest.raises(ValidationError):
        integrate_frame(M, bad)
    with pytest.raises(ValidationError):
        integrate_frame(M, standard_frame()[[1, 0, 2, 3]])
    with pytest.raises(ValidationError):
        integrate_frame(M, anchor=(500, 0))
    assert gram_defect(integrate_frame(M, anchor=(100, 100)).Z) < 1e-6
