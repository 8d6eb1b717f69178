import numpy as np
import pytest

from sinespikes import (
    MixtureInstance,
    SynthesisConfig,
    min_separation,
    signal_matrix,
    spread_total_outliers,
    synth_frequencies,
    synth_instance,
)
from sinespikes.errors import InvalidConfigurationError


def fig_config(seed=0, **overrides):
    kwargs = dict(
        n_sensors=50,
        n_snapshots=5,
        frequencies=(0.1, 0.4, 0.8),
        s_per_snapshot=3,
        outlier_mode="distinct-sensors-overall",
        seed=seed,
    )
    kwargs.update(overrides)
    return SynthesisConfig(**kwargs)


def test_single_exponential_all_ones():
    # f = 0 and unit amplitude make every sensor read exactly one
    inst = MixtureInstance.from_components([0.0], [[1.0]], np.zeros((6, 1)))
    np.testing.assert_allclose(inst.measurement, np.ones((6, 1)), atol=1e-15)


def test_distinct_sensor_support_size():
    inst = synth_instance(fig_config(seed=3))
    assert inst.outlier_rows.size == 15
    assert np.unique(inst.outlier_rows).size == 15


def test_same_seed_bit_identical():
    a = synth_instance(fig_config(seed=42))
    b = synth_instance(fig_config(seed=42))
    assert a.measurement.tobytes() == b.measurement.tobytes()
    assert a.outliers.tobytes() == b.outliers.tobytes()


def test_different_seeds_differ():
    supports = {tuple(synth_instance(fig_config(seed=s)).outlier_rows) for s in range(20)}
    assert len(supports) >= 19


def test_signal_reconstruction():
    inst = synth_instance(fig_config(seed=9))
    rebuilt = signal_matrix(inst.frequencies, inst.amplitudes, inst.n_sensors)
    np.testing.assert_allclose(rebuilt, inst.measurement - inst.outliers, atol=1e-12)


def test_column_counts_exact():
    for mode in ("per-snapshot", "distinct-sensors-overall"):
        inst = synth_instance(fig_config(seed=5, outlier_mode=mode))
        counts = (np.abs(inst.outliers) > 0).sum(axis=0)
        assert list(counts) == [3] * 5


def test_amplitude_models():
    gauss = synth_instance(fig_config(seed=1, amplitude_model="complex-gaussian"))
    unit = synth_instance(fig_config(seed=1, amplitude_model="unit-modulus-uniform-phase"))
    np.testing.assert_allclose(np.abs(unit.amplitudes), 1.0, atol=1e-12)
    assert np.abs(gauss.amplitudes).std() > 0.1


def test_outlier_magnitude_scale():
    inst = synth_instance(fig_config(seed=2, outlier_magnitude=3.5))
    nz = inst.outliers[np.abs(inst.outliers) > 0]
    np.testing.assert_allclose(np.abs(nz), 3.5, atol=1e-12)


def test_total_outlier_spread():
    rng = np.random.default_rng(0)
    counts = spread_total_outliers(10, 3, rng)
    assert counts.sum() == 10
    assert counts.max() - counts.min() <= 1
    inst = synth_instance(
        fig_config(seed=7, s_per_snapshot=0, total_outliers=10, n_snapshots=3)
    )
    assert (np.abs(inst.outliers) > 0).sum() == 10
    assert inst.outlier_rows.size == 10  # distinct sensors


class TestSynthFrequencies:
    def test_pair_within_torus_bounds(self):
        f = synth_frequencies(2, 0.4, 0)
        d = min_separation(f)
        assert 0.4 <= d <= 0.5

    def test_single_frequency(self):
        f = synth_frequencies(1, 0.9, 1)
        assert f.shape == (1,) and 0.0 <= f[0] < 1.0

    def test_separation_holds_across_seeds(self):
        delta = 2.52 / 49
        for seed in range(1000):
            f = synth_frequencies(3, delta, seed)
            assert min_separation(f) >= delta

    def test_infeasible_target_rejected(self):
        with pytest.raises(InvalidConfigurationError):
            synth_frequencies(3, 0.5, 0)


def test_distinct_mode_overflow_rejected():
    with pytest.raises(InvalidConfigurationError):
        SynthesisConfig(
            n_sensors=10,
            n_snapshots=4,
            frequencies=(0.1,),
            s_per_snapshot=3,
            outlier_mode="distinct-sensors-overall",
        )


def test_unknown_model_rejected():
    with pytest.raises(InvalidConfigurationError):
        SynthesisConfig(n_sensors=8, n_snapshots=1, frequencies=(0.1,),
                        amplitude_model="cauchy")


def test_rejection_sampled_instance():
    cfg = SynthesisConfig(
        n_sensors=40, n_snapshots=2, n_frequencies=4, min_separation=0.05,
        s_per_snapshot=2, seed=10,
    )
    inst = synth_instance(cfg)
    assert min_separation(inst.frequencies) >= 0.05
