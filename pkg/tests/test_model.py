import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wptlf.errors import ParameterError
from wptlf.model import (FrequencyGrid, RectennaParams, SystemDims, block_diag_extract, build_mq,
                         derive_beta, vout_compact, vout_direct, vout_table, vout_terms,
                         weighted_sum_vout)

from conftest import crandn, random_instance


def time_domain_vout(h, s, params, dims, grid, samples=None):
    """Average beta2*y^2 + beta4*y^4 of the received RF waveform over one period.

    With omega1 an integer multiple of delta_omega the waveform is periodic in
    2*pi/delta_omega, and sampling above the 4th-harmonic Nyquist rate makes
    the discrete average of the degree-4 trigonometric polynomial exact.
    """
    c = (h.reshape(dims.N, dims.M) * s.reshape(dims.N, dims.M)).sum(axis=1)
    top = int(round(grid.omegas[-1] / grid.delta_omega))
    K = samples or 8 * top + 8
    t = 2 * np.pi / grid.delta_omega * np.arange(K) / K
    y = np.sqrt(2) * np.real(np.exp(1j * np.outer(t, grid.omegas)) @ c)
    return params.beta2 * np.mean(y ** 2) + params.beta4 * np.mean(y ** 4)


def test_derive_beta_reference_values():
    b2, b4 = derive_beta(50, 1, 0.02585)
    assert b2 == pytest.approx(967.1179883945841, rel=1e-12)
    assert b4 == pytest.approx(50 ** 2 / (24 * 0.02585 ** 3), rel=1e-12)
    assert b4 == pytest.approx(6.0302e6, rel=1e-4)


def test_derive_beta_homogeneity():
    b2, b4 = derive_beta(50, 1, 0.03)
    c2, c4 = derive_beta(50, 1, 0.06)
    assert c2 == pytest.approx(b2 / 2)
    assert c4 == pytest.approx(b4 / 8)


@pytest.mark.parametrize("args", [(0, 1, 0.025), (50, 0, 0.025), (50, 1, -1)])
def test_derive_beta_rejects_nonpositive(args):
    with pytest.raises(ParameterError):
        derive_beta(*args)


def test_rectenna_params_recompute_and_linear():
    p = RectennaParams(r_ant=75, n_if=1.2, v_t=0.03)
    assert (p.beta2, p.beta4) == derive_beta(75, 1.2, 0.03)
    assert p.linear().beta4 == 0 and p.linear().beta2 == p.beta2
    with pytest.raises(ParameterError):
        RectennaParams(v_t=0)


def test_system_dims_validation():
    assert SystemDims(2, 3, 4).MN == 6
    for bad in [(0, 1, 1), (1, 0, 1), (1, 1, 0), (1.5, 2, 1)]:
        with pytest.raises(ParameterError):
            SystemDims(*bad)


def test_frequency_grid():
    g = FrequencyGrid(omega1=10.0, delta_omega=2.0, N=4)
    np.testing.assert_allclose(g.omegas, [10, 12, 14, 16])
    with pytest.raises(ParameterError):
        FrequencyGrid(omega1=1.0, delta_omega=2.0, N=4)
    with pytest.raises(ParameterError):
        FrequencyGrid(omega1=10.0, delta_omega=0.0, N=4)


def test_build_mq_examples(rng):
    np.testing.assert_allclose(build_mq(np.array([1, 1j])), [[1, 1j], [-1j, 1]])
    e1 = np.array([1, 0, 0], dtype=complex)
    expected = np.zeros((3, 3))
    expected[0, 0] = 1
    np.testing.assert_array_equal(build_mq(e1), expected)
    h = crandn(rng, 6)
    m = build_mq(h)
    explicit = np.array([[np.conj(h[i]) * h[j] for j in range(6)] for i in range(6)])
    np.testing.assert_allclose(m, explicit, rtol=1e-14)
    np.testing.assert_allclose(m, m.conj().T)
    assert np.linalg.matrix_rank(m) == 1


def test_block_diag_extract_pattern():
    dims = SystemDims(1, 2)
    m = np.arange(1, 5).reshape(2, 2).astype(complex)
    out = block_diag_extract(m, 1, dims)
    np.testing.assert_array_equal(out, [[0, 2], [0, 0]])
    with pytest.raises(IndexError):
        block_diag_extract(m, 2, dims)


def test_block_diag_extract_relations(rng):
    dims = SystemDims(2, 4)
    h = crandn(rng, dims.MN)
    mq = build_mq(h)
    m0 = block_diag_extract(mq, 0, dims)
    np.testing.assert_allclose(m0, m0.conj().T)
    assert np.linalg.eigvalsh(m0).min() > -1e-12
    mask = np.zeros_like(mq)
    for k in range(-(dims.N - 1), dims.N):
        mk = block_diag_extract(mq, k, dims)
        mask += mk
        if k:
            np.testing.assert_allclose(block_diag_extract(mq, -k, dims), mk.conj().T)
    np.testing.assert_allclose(mask, mq)


def test_vout_single_term(params):
    dims = SystemDims(1, 1)
    P = 2.0
    v = vout_compact(np.array([1.0 + 0j]), np.array([np.sqrt(P)]), params, dims)
    assert v == pytest.approx(params.beta2 * P + 1.5 * params.beta4 * P ** 2, rel=1e-14)
    assert vout_direct(np.array([1.0 + 0j]), np.array([np.sqrt(P)]), params, dims) == pytest.approx(v)
    assert vout_compact(np.zeros(1), np.array([1.0]), params, dims) == 0


def test_vout_two_tone_hand_enumeration(params):
    dims = SystemDims(1, 2)
    a = 0.3
    expected = params.beta2 * 2 * a ** 2 + 1.5 * params.beta4 * (2 * a ** 2) ** 2 + 3 * params.beta4 * a ** 4
    h = np.array([1, 1], dtype=complex)
    s = np.array([a, a], dtype=complex)
    assert vout_direct(h, s, params, dims) == pytest.approx(expected, rel=1e-13)
    assert vout_compact(h, s, params, dims) == pytest.approx(expected, rel=1e-13)


def test_vout_compact_matches_direct_m2n4(rng, params):
    dims, H, s = random_instance(rng, 2, 4, scale=1e-2)
    a, b = vout_compact(H[:, 0], s, params, dims), vout_direct(H[:, 0], s, params, dims)
    assert abs(a - b) <= 1e-9 * b


@pytest.mark.parametrize("M,N", [(1, 1), (1, 3), (2, 2), (1, 8), (3, 5)])
def test_vout_matches_time_domain_waveform(rng, params, M, N):
    dims, H, s = random_instance(rng, M, N, scale=1e-2)
    grid = FrequencyGrid(omega1=float(N + 3), delta_omega=1.0, N=N)
    ref = time_domain_vout(H[:, 0], s, params, dims, grid)
    assert vout_compact(H[:, 0], s, params, dims) == pytest.approx(ref, rel=1e-10)


def test_vout_is_independent_of_tone_placement(rng, params):
    dims, H, s = random_instance(rng, 1, 4, scale=1e-2)
    v1 = time_domain_vout(H[:, 0], s, params, dims, FrequencyGrid(7.0, 1.0, 4))
    v2 = time_domain_vout(H[:, 0], s, params, dims, FrequencyGrid(40.0, 1.0, 4))
    assert v1 == pytest.approx(v2, rel=1e-10)


def test_scale_law(rng, params):
    dims, H, s = random_instance(rng, 2, 3)
    second, fourth = vout_terms(H[:, 0], s, params, dims)
    second_c, fourth_c = vout_terms(H[:, 0], 1.7 * s, params, dims)
    assert second_c == pytest.approx(1.7 ** 2 * second, rel=1e-12)
    assert fourth_c == pytest.approx(1.7 ** 4 * fourth, rel=1e-12)


def test_weighted_sum(rng, params):
    dims, H, s = random_instance(rng, 2, 3, Q=2)
    v = [vout_compact(H[:, q], s, params, dims) for q in range(2)]
    assert weighted_sum_vout(H, s, [1, 1], params, dims) == pytest.approx(sum(v), rel=1e-13)
    assert weighted_sum_vout(H, s, [2, 0.5], params, dims) == pytest.approx(2 * v[0] + 0.5 * v[1])
    assert weighted_sum_vout(H, s, [0, 0], params, dims) == 0
    assert weighted_sum_vout(H[:, :1], s, None, params, dims) == pytest.approx(v[0], rel=1e-13)
    with pytest.raises(ParameterError):
        weighted_sum_vout(H, s, [1, -1], params, dims)


def test_vout_table_broadcasting(rng, params):
    dims, H, _ = random_instance(rng, 1, 4, Q=2, T=5)
    C = crandn(rng, 3, dims.MN)
    table = vout_table(H, C, None, params, dims)
    assert table.shape == (3, 5)
    for i in range(3):
        for t in range(5):
            assert table[i, t] == pytest.approx(weighted_sum_vout(H[t], C[i], None, params, dims))


@settings(max_examples=60, deadline=None)
@given(M=st.integers(1, 3), N=st.integers(1, 6), seed=st.integers(0, 2 ** 32 - 1))
def test_property_oracle_and_nonnegativity(M, N, seed):
    rng = np.random.default_rng(seed)
    params = RectennaParams()
    dims, H, s = random_instance(rng, M, N, scale=10 ** rng.uniform(-4, -1))
    a = vout_compact(H[:, 0], s, params, dims)
    b = vout_direct(H[:, 0], s, params, dims)
    assert a >= 0
    assert abs(a - b) <= 1e-9 * max(b, np.finfo(float).tiny)
