import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import beta as beta_fn

from fracburg import Field, GridSpec, ModelParams, apply_K, correction_integral, heat_riesz, rquadrature, solve_profile
from fracburg.selfsimilar import (
    PicardDivergence,
    asymptotic_slope,
    envelope,
    fd_gradient,
    overlap_matrix,
    picard,
    profile_gradient,
    pushforward,
)
from fracburg.verify import gradient_order

P = ModelParams()
G = GridSpec(2, 256, 32.0)
RQ = rquadrature(24, P)


@pytest.fixture(scope="module")
def profile():
    return solve_profile(1e-6, P, G, RQ)


@settings(max_examples=25)
@given(k=st.integers(0, 2 * 16 - 1))
def test_rquadrature_exact_on_jacobi_polynomials(k):
    rq = rquadrature(16, P)
    a, e = P.d - P.beta, rq.endpoint
    # sum w_j g(r_j) = int_0^1 r^a g(r) dr for g = (1 - r)^e r^k
    got = np.sum(rq.weights * (1 - rq.nodes) ** e * rq.nodes**k)
    assert got == pytest.approx(beta_fn(a + k + 1, e + 1), rel=1e-10)


def test_rquadrature_plain_endpoint():
    rq = rquadrature(12, P, endpoint=0.0)
    assert np.sum(rq.weights * rq.nodes**3) == pytest.approx(1 / (P.d - P.beta + 4), rel=1e-12)
    assert np.all((rq.taus(P.alpha) > 0) & (rq.taus(P.alpha) < 1))
    assert len(rq) == 12


def test_overlap_matrix_at_identity_and_row_sums():
    g = GridSpec(2, 64, 8.0)
    np.testing.assert_array_equal(overlap_matrix(g, 1.0), np.eye(64))
    S = overlap_matrix(g, 0.25)
    interior = np.abs(g.x) + g.h / 2 <= 0.25 * (g.L - g.h / 2)
    np.testing.assert_allclose(S[interior].sum(axis=1), 4.0, rtol=1e-12)


@given(r=st.floats(0.02, 1.0))
def test_overlap_matrix_covers_every_source_cell(r):
    S = overlap_matrix(GridSpec(2, 128, 16.0), r)
    np.testing.assert_allclose(S.sum(axis=0), 1.0, rtol=1e-12)


@settings(max_examples=20, deadline=None)
@given(r=st.floats(0.02, 1.0), width=st.floats(0.3, 2.0))
def test_pushforward_conserves_mass(r, width):
    g = GridSpec(2, 128, 16.0)
    # support inside radius 3: preimages of the far-field cells start beyond L - h/2 - h/r >= 3.375
    G0 = np.where(g.radius < 3.0, np.exp(-g.radius**2 / (2 * width**2)), 0.0)
    out = pushforward(G0, g, r, lambda R, r: 0 * R)
    assert out.sum() == pytest.approx(G0.sum(), rel=1e-10)
    np.testing.assert_allclose(out[1:, 1:], out[1:, 1:][:, ::-1], atol=1e-12 * out.max())


def test_pushforward_resolves_smooth_densities():
    g = GridSpec(2, 128, 16.0)
    G0 = np.exp(-g.radius**2 / 8)
    for r in (0.9, 0.5):
        out = pushforward(G0, g, r, lambda R, r: 0 * R)
        exact = np.exp(-((g.radius / r) ** 2) / 8) / r**2
        assert np.abs(out - exact).max() < 1e-2 * exact.max()


def test_profile_converges(profile):
    U = profile.field
    assert profile.meta["converged"]
    assert profile.iterations <= 40
    assert profile.residual < 1e-6 * np.abs(U.values).max()
    ratios = np.array(profile.history[1:]) / np.array(profile.history[:-1])
    assert ratios[-5:].max() < 0.9


def test_profile_is_fixed_point(profile):
    U = profile.field
    KU = apply_K(U, P, RQ)
    m = G.trust_mask()
    assert np.abs(KU.values - U.values)[m].max() == pytest.approx(profile.residual, rel=1e-9)


def test_profile_mirror_symmetry(profile):
    v = profile.field.values
    np.testing.assert_allclose(v[:, 1:], v[:, 1:][:, ::-1], atol=1e-12)
    d2 = profile_gradient(profile)[1].values
    assert np.abs(d2[:, G.center]).max() < 1e-12


def test_profile_envelope(profile):
    e = envelope(profile.field, P.beta)
    assert e.min > 0 and max(e.max, 1 / e.min) < 20


def test_correction_integral_identity():
    h1 = heat_riesz(P, 1.0, G)
    h2 = apply_K(h1, P, RQ, h1)
    I = correction_integral(h1, P, RQ)
    assert np.abs(h2.values - h1.values - I.values).max() < 1e-8


def test_correction_carries_drift_factor():
    h1 = heat_riesz(P, 1.0, G)
    I1 = correction_integral(h1, P, RQ)
    I3 = correction_integral(h1, ModelParams(b=(3.0, 0.0)), RQ)
    np.testing.assert_allclose(I3.values, 3 * I1.values, atol=1e-14)


def test_no_drift_profile_is_heat_riesz():
    p0 = ModelParams(b=(0.0, 0.0))
    U = solve_profile(1e-8, p0, G, RQ).field
    np.testing.assert_array_equal(U.values, heat_riesz(p0, 1.0, G).values)


def test_gradient_spectral_against_fd(profile):
    s = profile_gradient(profile)
    f = fd_gradient(profile.field)
    m = G.trust_mask()
    assert max(np.abs(a.values - b.values)[m].max() for a, b in zip(s, f)) < 0.1
    assert 3.0 <= gradient_order(profile.field)["ratio"] <= 5.0


def test_asymptotic_slopes(profile):
    h1 = heat_riesz(P, 1.0, G)
    s = asymptotic_slope(profile.field - h1, 2.0, 8.0)
    assert s["slope"] < -(P.beta + P.alpha - 1) + 0.15
    assert not s["flagged"]


def test_picard_argument_checks():
    with pytest.raises(ValueError):
        picard(0, 1e-6, P, G, RQ)


def test_picard_diverges_for_strong_drift():
    with pytest.raises(PicardDivergence):
        picard(40, 1e-10, ModelParams(b=(40.0, 0.0)), GridSpec(2, 128, 32.0), rquadrature(16, P))
