import numpy as np
import pytest

import oracles
from wsdsr import FilterState, InvalidInputError, StageParams, defaults, wsd
from wsdsr.blockmatch import build_match_table
from wsdsr.wsd_filter import aggregate, estimate_wiener, group, hard_threshold_3d, wiener_filter


@pytest.fixture(scope="module")
def params():
    return defaults(4)


def _table(plane, n1=4, n2=8):
    return build_match_table(plane, StageParams(n1=n1, n2=n2, ns0=3, ns_max=6, match_threshold=2000))


# --- grouping and aggregation ---------------------------------------------------


def test_group_then_aggregate_is_identity(rng):
    plane = np.cumsum(rng.normal(0, 8, (20, 20)), axis=1)
    t = _table(plane)
    np.testing.assert_allclose(aggregate(group(plane, t), t, plane.shape), plane, rtol=0, atol=1e-12)


def test_group_matches_copy_loop(rng):
    plane = np.cumsum(rng.normal(0, 8, (16, 16)), axis=0)
    t = _table(plane)
    for r, g in enumerate(group(plane, t)):
        for e, ((i, j), _) in enumerate(t.entries(r)):
            for a in range(4):
                for b in range(4):
                    assert g[e, a, b] == plane[i + a, j + b]


def test_single_entry_group_is_reference(rng):
    plane = rng.uniform(0, 255, (12, 12))
    t = build_match_table(plane, StageParams(n1=4, n2=1, match_threshold=0.0))
    for r, g in enumerate(group(plane, t)):
        i, j = t.refs[r]
        assert g.shape == (1, 4, 4)
        assert np.array_equal(g[0], plane[i : i + 4, j : j + 4])


def test_overlap_average():
    from wsdsr.blockmatch import MatchTable

    origins = np.array([[[0, 0], [0, 1]]])
    t = MatchTable(np.array([[0, 0]]), origins, np.zeros((1, 2)), np.array([2]), 2, (2, 3))
    out = aggregate([np.stack([np.full((2, 2), 4.0), np.full((2, 2), 10.0)])], t, (2, 3))
    np.testing.assert_array_equal(out, [[4.0, 7.0, 10.0], [4.0, 7.0, 10.0]])


def test_aggregate_naive_list_oracle(rng):
    plane = np.cumsum(rng.normal(0, 8, (14, 14)), axis=1)
    t = _table(plane)
    groups = [g + rng.normal(size=g.shape) for g in group(plane, t)]
    votes = {}
    for r, g in enumerate(groups):
        for e, ((i, j), _) in enumerate(t.entries(r)):
            for a in range(4):
                for b in range(4):
                    votes.setdefault((i + a, j + b), []).append(g[e, a, b])
    out = aggregate(groups, t, plane.shape)
    for (i, j), v in votes.items():
        assert out[i, j] == pytest.approx(np.mean(v), abs=1e-12)


def test_uncovered_pixel_is_an_error():
    from wsdsr.blockmatch import MatchTable

    t = MatchTable(np.array([[0, 0]]), np.array([[[0, 0]]]), np.zeros((1, 1)), np.array([1]), 2, (3, 3))
    with pytest.raises(AssertionError):
        aggregate([np.zeros((1, 2, 2))], t, (3, 3))


# --- hard thresholding ------------------------------------------------------------


def test_ht_zero_tau_identity(rng):
    g = rng.normal(size=(8, 6, 6))
    np.testing.assert_allclose(hard_threshold_3d(g, 0.0), g, atol=1e-9)


def test_ht_large_tau_keeps_group_mean(rng):
    g = rng.normal(size=(4, 6, 6))
    out = hard_threshold_3d(g, 1e6)
    np.testing.assert_allclose(out, g.mean(), atol=1e-12)


def test_ht_spelled_out(rng):
    g = rng.normal(size=(8, 5, 5)) * 20
    spec = oracles.spectrum_3d(g)
    tau = float(np.median(np.abs(spec)))
    kept = np.where(np.abs(spec) >= tau, spec, 0.0)
    kept[0, 0, 0] = spec[0, 0, 0]
    np.testing.assert_allclose(hard_threshold_3d(g, tau), oracles.inverse_3d(kept), atol=1e-9)


def test_ht_group_scaled_threshold(rng):
    g = rng.normal(size=(16, 4, 4)) * 10
    np.testing.assert_allclose(hard_threshold_3d(g, 2.0, group_scaled=True), hard_threshold_3d(g, 8.0), atol=1e-12)


# --- Wiener ---------------------------------------------------------------------------


def test_wiener_gain_values():
    pilot = np.zeros((2, 1, 1))
    pilot[0, 0, 0] = 3.0  # Haar -> [3/sqrt2, 3/sqrt2]
    w = estimate_wiener(pilot, 0.0, keep_dc=False)
    np.testing.assert_allclose(w.ravel(), [1.0, 1.0])
    w = estimate_wiener(pilot, 3.0 / np.sqrt(2.0), keep_dc=False)
    np.testing.assert_allclose(w.ravel(), [0.5, 0.5])
    w = estimate_wiener(np.ones((2, 1, 1)), 1.0, keep_dc=False)
    assert w[1, 0, 0] == 0.0  # zero coefficient
    assert estimate_wiener(np.zeros((4, 2, 2)), 0.0, keep_dc=False).max() == 0.0


def test_wiener_gain_range_and_dc(rng):
    w = estimate_wiener(rng.normal(size=(8, 4, 4)), 0.7)
    assert w.min() >= 0 and w.max() <= 1
    assert np.all(w[0] == 1.0)
    w = estimate_wiener(rng.normal(size=(8, 4, 4)), 0.7, dct=True)
    assert w[0, 0, 0] == 1.0 and w[0, 1, 1] < 1.0


def test_wiener_identity_and_zero(rng):
    g = rng.normal(size=(8, 3, 3))
    np.testing.assert_allclose(wiener_filter(g, np.ones_like(g)), g, atol=1e-9)
    np.testing.assert_allclose(wiener_filter(g, np.ones_like(g), dct=True), g, atol=1e-9)
    assert np.max(np.abs(wiener_filter(g, np.zeros_like(g)))) < 1e-12
    with pytest.raises(InvalidInputError):
        wiener_filter(g, np.ones((4, 3, 3)))


def test_wiener_fiber_energy_never_grows(rng):
    g = rng.normal(size=(16, 4, 4))
    w = estimate_wiener(g + rng.normal(size=g.shape), 1.5)
    out = wiener_filter(g, w)
    assert np.all((out**2).sum(axis=0) <= (g**2).sum(axis=0) + 1e-9)


# --- full wsd call --------------------------------------------------------------------


def test_wsd_matches_naive_reference(natural_crop, params):
    # Integer data puts some coefficients exactly on integer thresholds, where
    # rounding decides keep/zero; these strengths cannot hit such ties.
    for tau in (14.3, 3.7):
        got, _ = wsd(natural_crop, tau, 0, None, params)
        want = oracles.naive_wsd(natural_crop, tau, params)
        assert np.max(np.abs(got - want)) < 1e-6


def test_wsd_dct_variant_matches_naive_reference(natural_crop, params):
    p = params.replace(wiener_2d="dct")
    got, _ = wsd(natural_crop, 6.0, 0, None, p)
    assert np.max(np.abs(got - oracles.naive_wsd(natural_crop, 6.0, p))) < 1e-6


@pytest.mark.parametrize("c", [0.0, 117.0, 93.25, 255.0])
def test_constant_fixed_point(params, c):
    x = np.full((40, 36), c)
    st = None
    for k, tau in enumerate([50.0, 14.0, 3.0, 0.0]):
        out, st = wsd(x, tau, k, st, params)
        assert np.max(np.abs(out - c)) < 1e-9


def test_zero_tau_is_identity(natural_crop, params):
    out, _ = wsd(natural_crop, 0.0, 0, None, params)
    assert np.max(np.abs(out - natural_crop)) < 1e-9


def test_reuse_skips_matching(natural_crop, params):
    st = None
    out0, st = wsd(natural_crop, 10.0, 0, st, params)
    assert st.counters.block_matches == 2
    m_ht, m_pilot, pilot = st.m_ht, st.m_pilot, st.pilot
    for k in (1, 2, 3, 4):
        _, st = wsd(natural_crop + k, 10.0, k, st, params)
        assert st.counters.block_matches == 2
        assert st.m_ht is m_ht and st.m_pilot is m_pilot and st.pilot is pilot
    _, st = wsd(natural_crop, 10.0, 5, st, params)
    assert st.counters.block_matches == 3  # pilot table refreshed, HT table kept
    assert st.m_ht is m_ht and st.m_pilot is not m_pilot and st.last_pilot_iteration == 5


def test_reuse_off_matches_every_call(natural_crop, params):
    p = params.replace(reuse=False)
    st = None
    for k in range(3):
        _, st = wsd(natural_crop, 10.0, k, st, p)
    assert st.counters.block_matches == 6


def test_frozen_state_never_rematches(natural_crop, params):
    st = FilterState(frozen=True)
    st.m_ht = build_match_table(natural_crop, params.ht)
    st.m_pilot = build_match_table(natural_crop, params.wiener)
    for k in range(0, 11, 5):
        _, st = wsd(natural_crop, 8.0, k, st, params)
    assert st.counters.block_matches == 0


def test_stack_filters_each_channel_with_shared_tables(natural_crop, params):
    stack = np.stack([natural_crop, natural_crop * 0.5 + 20])
    out, _ = wsd(stack, 9.0, 0, None, params)
    alone, _ = wsd(natural_crop, 9.0, 0, None, params)
    np.testing.assert_array_equal(out[0], alone)
    assert out.shape == stack.shape and np.all(np.isfinite(out))


def test_too_small_plane(params):
    with pytest.raises(InvalidInputError):
        wsd(np.zeros((8, 40)), 1.0, 0, None, params)
