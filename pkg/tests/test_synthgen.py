import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from repselect.data import DataError
from repselect.synthgen import (
    BlobSpec,
    ParamSampler,
    SdeSpec,
    TrigSpec,
    gen_blobs,
    gen_sde,
    gen_sde_population,
    gen_trig,
    simulate_sde,
    trig_grid,
)


def test_blobs_shape_and_labels():
    out = gen_blobs(BlobSpec(seed=1))
    assert out.data.n == 180 and out.data.m == 2
    assert np.bincount(out.classes).tolist() == [90, 90]
    means = [out.data.rows[out.classes == c].mean(0) for c in (0, 1)]
    np.testing.assert_allclose(means[0], [0, 0], atol=0.8)
    np.testing.assert_allclose(means[1], [20, 0], atol=0.8)


def test_blobs_reproducible():
    a = gen_blobs(BlobSpec(seed=3)).data.rows
    b = gen_blobs(BlobSpec(seed=3)).data.rows
    c = gen_blobs(BlobSpec(seed=4)).data.rows
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_blob_spec_validation():
    with pytest.raises(DataError):
        BlobSpec(std_dev=0)
    with pytest.raises(DataError):
        BlobSpec(centers=())


def test_trig_noise_free_curves():
    out = gen_trig(TrigSpec(curves_per_class=3, num_samples=5, sigma=0.0))
    t = trig_grid(5)
    assert t[0] == 0.0 and t[-1] == pytest.approx(2 * np.pi)
    np.testing.assert_allclose(out.data.rows[0], np.sin(t))
    np.testing.assert_allclose(out.data.rows[5], np.cos(t))
    assert out.classes.tolist() == [0, 0, 0, 1, 1, 1]


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32), st.floats(0.01, 3.0))
def test_trig_residual_scale(seed, sigma):
    out = gen_trig(TrigSpec(curves_per_class=20, num_samples=50, sigma=sigma, seed=seed))
    clean = gen_trig(TrigSpec(curves_per_class=20, num_samples=50, sigma=0.0))
    resid = out.data.rows - clean.data.rows
    assert 0.8 * sigma < resid.std() < 1.2 * sigma


def test_sde_shape_and_start():
    spec = SdeSpec(seed=2)
    out = gen_sde(spec)
    assert out.data.rows.shape == (2, 254)
    np.testing.assert_array_equal(out.data.rows[:, 0], [1.0, 1.0])


def test_sde_zero_volatility_is_deterministic_growth():
    spec = SdeSpec(mu=(0.5,), sigma=((0.0,),), x0=(2.0,), dt=0.01, steps=10)
    path = simulate_sde(spec, 1, np.random.default_rng(0))[0, 0]
    np.testing.assert_allclose(path, 2.0 * 1.005 ** np.arange(11))


def test_sde_validation():
    with pytest.raises(DataError):
        SdeSpec(mu=(0.1, 0.2), sigma=((0.1,),))
    with pytest.raises(DataError):
        SdeSpec(x0=(1.0, -1.0))


def test_population_grouped_by_dimension():
    out = gen_sde_population(SdeSpec(seed=5), 7)
    assert out.data.n == 14
    assert out.classes.tolist() == [0] * 7 + [1] * 7
    np.testing.assert_array_equal(out.data.rows[:7, 0], 1.0)


def test_population_with_sampler():
    base = SdeSpec(seed=6)
    a = gen_sde_population(base, 4, ParamSampler("uniform", -0.5, 0.5))
    b = gen_sde_population(base, 4, ParamSampler("uniform", -0.5, 0.5))
    c = gen_sde_population(base, 4, ParamSampler("fixed"))
    assert np.array_equal(a.data.rows, b.data.rows)
    assert not np.array_equal(a.data.rows, c.data.rows)
    with pytest.raises(DataError):
        ParamSampler("beta")
    with pytest.raises(DataError):
        gen_sde_population(base, 0)


def test_blobs_tiny_spread_sits_on_centers():
    out = gen_blobs(BlobSpec(((1.0, 2.0), (-3.0, 4.0)), 5, 1e-12, seed=0))
    np.testing.assert_allclose(out.data.rows[:5], [[1.0, 2.0]] * 5, atol=1e-9)
    np.testing.assert_allclose(out.data.rows[5:], [[-3.0, 4.0]] * 5, atol=1e-9)


def test_blob_means_within_standard_error_bound():
    out = gen_blobs(BlobSpec(((0.0, 0.0), (20.0, 0.0)), 90, 2.0, seed=11))
    for c, center in enumerate(((0.0, 0.0), (20.0, 0.0))):
        mean = out.data.rows[out.classes == c].mean(0)
        assert np.all(np.abs(mean - center) < 4 * 2.0 / np.sqrt(90))


def test_trig_default_size_and_orthogonality():
    from repselect.distances import correlation_distance

    out = gen_trig(TrigSpec(sigma=0.0))
    assert out.data.n == 100 and out.data.m == 100
    assert abs(correlation_distance(out.data.rows[0], out.data.rows[50]) - 1.0) <= 1e-6


@pytest.mark.parametrize("sigma", [0.1, 0.3])
def test_trig_class_separation(sigma):
    from repselect.distances import build_distance_matrix

    out = gen_trig(TrigSpec(sigma=sigma, seed=4))
    d = build_distance_matrix(out.data, "correlation").entries
    same = out.classes[:, None] == out.classes[None, :]
    off = ~np.eye(len(d), dtype=bool)
    assert d[same & off].mean() < d[~same].mean()


def test_sde_constant_without_drift_or_noise():
    spec = SdeSpec(mu=(0.0, 0.0), sigma=((0.0, 0.0), (0.0, 0.0)), x0=(1.5, 3.0), steps=20)
    np.testing.assert_array_equal(gen_sde(spec).data.rows, [[1.5] * 21, [3.0] * 21])


def test_sde_noise_free_recurrence():
    spec = SdeSpec(mu=(0.2, 0.2), sigma=((0.0, 0.0), (0.0, 0.0)), x0=(1.0, 2.0), steps=253)
    rows = gen_sde(spec).data.rows
    np.testing.assert_allclose(rows[:, -1], np.array([1.0, 2.0]) * (1 + 0.2 / 253) ** 253, atol=1e-9)


def test_sde_monte_carlo_mean():
    spec = SdeSpec(mu=(0.3, -0.2), sigma=((0.25, 0.0), (0.0, 0.4)), steps=50, dt=0.01, seed=13)
    paths = simulate_sde(spec, 10_000, np.random.default_rng(13))
    ratio = paths[:, :, -1] / paths[:, :, 0]
    expected = (1 + np.array(spec.mu) * spec.dt) ** spec.steps
    se = ratio.std(0, ddof=1) / np.sqrt(10_000)
    assert np.all(np.abs(ratio.mean(0) - expected) < 3 * se)


def test_population_size_and_fixed_params():
    out = gen_sde_population(SdeSpec(seed=1), 50, ParamSampler("fixed"))
    assert out.data.n == 100
    assert np.bincount(out.classes).tolist() == [50, 50]
