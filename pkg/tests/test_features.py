import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eegval import errors
from eegval.eeg_io import DEFAULT_CHANNELS, EegTrial
from eegval.features import (DEFAULT_BANDS, FeatureMatrix, SelectionMask, apply_selector,
                             apply_standardizer, band_energies, band_ratio, bands_from_mapping, build_feature_matrix,
                             extract_features, fit_preprocessor, fit_selector, fit_standardizer,
                             normalize_band_energies, normalize_maxabs, spectrum_energy,
                             stat_features)

from conftest import make_trial


def dft_energy(x):
    """O(N^2) DFT energies on all N bins."""
    n = x.size
    k = np.arange(n)
    W = np.exp(-2j * np.pi * np.outer(k, k) / n)
    return np.abs(W @ x) ** 2


def full_from_half(energy, n):
    """Mirror rfft bins 0..N//2 to all N bins."""
    inner = energy[1:(n + 1) // 2]
    return np.concatenate([energy[: n // 2 + 1], inner[::-1]])


def test_normalize_maxabs():
    assert normalize_maxabs([2, -4, 1]).tolist() == [0.5, -1.0, 0.25]
    assert normalize_maxabs([1, 1, 1]).tolist() == [1, 1, 1]
    with pytest.raises(errors.AllZeroSignal):
        normalize_maxabs([0, 0])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=50)
       .filter(lambda v: max(abs(a) for a in v) > 1e-300))
def test_normalize_peak_is_one(v):
    assert np.max(np.abs(normalize_maxabs(v))) == 1.0


def test_stat_features():
    mu, sd, k = stat_features([1, -1, 1, -1])
    assert (mu, sd, k) == (0.0, 1.0, 1.0)
    with pytest.raises(errors.ZeroVariance):
        stat_features([0, 0, 0])


def test_gaussian_kurtosis_monte_carlo():
    x = np.random.default_rng(12).standard_normal(100_000)
    assert stat_features(x)[2] == pytest.approx(3.0, abs=0.1)


def test_spectrum_dc_and_pure_bin():
    f, e = spectrum_energy(np.full(64, 3.0), 64.0)
    assert e[0] == pytest.approx((3 * 64) ** 2)
    assert np.all(e[1:] < 1e-18 * e[0])
    n, k = 256, 17
    x = np.cos(2 * np.pi * k * np.arange(n) / n)
    f, e = spectrum_energy(x, 256.0)
    assert int(np.argmax(e)) == k and f[k] == 17.0
    assert np.all(np.delete(e, k) < 1e-9 * e[k])


def test_spectrum_matches_brute_force_dft():
    rng = np.random.default_rng(0)
    for n in (7, 16, 33, 256):
        x = rng.standard_normal(n)
        _, e = spectrum_energy(x, 256.0)
        np.testing.assert_allclose(full_from_half(e, n), dft_energy(x), rtol=1e-9, atol=1e-9)


def test_parseval_on_random_signals():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        n = int(rng.integers(2, 300))
        x = rng.standard_normal(n) * rng.uniform(0.1, 100)
        _, e = spectrum_energy(x, 256.0)
        total = full_from_half(e, n).sum()
        assert abs(total - n * np.sum(x ** 2)) <= 1e-8 * n * np.sum(x ** 2)


def _sines(freqs, n=256, fs=256.0, amps=None):
    t = np.arange(n) / fs
    amps = amps or [1.0] * len(freqs)
    return sum(a * np.sin(2 * np.pi * f * t + 0.3) for a, f in zip(amps, freqs))


def test_band_energies():
    E = band_energies(*spectrum_energy(_sines([10]), 256.0))
    assert E["alpha"] > 0
    assert max(E["delta"], E["theta"], E["beta"]) < 1e-20 * E["alpha"]
    E = band_energies(*spectrum_energy(_sines([40, 60]), 256.0))
    assert max(E.values()) < 1e-18
    E = band_energies(*spectrum_energy(_sines([5, 20]), 256.0))
    assert E["theta"] == pytest.approx(E["beta"], rel=1e-9)


def test_band_edges_half_open_and_dc_excluded():
    freqs = np.array([0.0, 0.5, 4.0, 8.0, 13.0, 30.0])
    energy = np.array([100.0, 1, 2, 3, 4, 5])
    E = band_energies(freqs, energy)
    assert E == {"delta": 1.0, "theta": 2.0, "alpha": 3.0, "beta": 4.0}
    E = band_energies(np.array([0.0]), np.array([5.0]), bands_from_mapping({
        "delta": [0, 4], "theta": [4, 8], "alpha": [8, 13], "beta": [13, 30]}))
    assert E["delta"] == 0.0


def test_normalize_band_energies():
    assert normalize_band_energies({"d": 1, "t": 1, "a": 1, "b": 1}) == {
        "d": 0.25, "t": 0.25, "a": 0.25, "b": 0.25}
    assert normalize_band_energies({"d": 0, "t": 0, "a": 4, "b": 0})["a"] == 1.0
    E = {"d": 0.3, "t": 2.0, "a": 1.1, "b": 7.0}
    a = normalize_band_energies(E)
    b = normalize_band_energies({k: 1000 * v for k, v in E.items()})
    assert all(a[k] == pytest.approx(b[k], rel=1e-15) for k in E)
    with pytest.raises(errors.ZeroTotalBandEnergy):
        normalize_band_energies({"d": 0, "t": 0, "a": 0, "b": 0})


def test_band_ratio():
    assert band_ratio(2, 4, 1e-10) == pytest.approx(0.5)
    assert band_ratio(0, 0, 1e-10) == 0
    assert band_ratio(1, 0, 1e-10) == pytest.approx(1e10)


def test_normalized_energies_sum_to_one_on_1000_trials():
    rng = np.random.default_rng(2)
    for _ in range(1000):
        x = rng.standard_normal(256) * rng.uniform(1, 50) + rng.uniform(-5, 5)
        nE = normalize_band_energies(band_energies(*spectrum_energy(normalize_maxabs(x), 256.0)))
        assert abs(sum(nE.values()) - 1.0) < 1e-9


def test_extract_features_names_and_length():
    t = make_trial(channels=DEFAULT_CHANNELS, n=256)
    fv = extract_features(t)
    assert fv.values.shape == (160,)
    assert fv.names[0] == "FP1_mean" and fv.names[-1] == "O2_ratio_theta_alpha"


def test_scale_invariance_per_channel():
    rng = np.random.default_rng(3)
    for i in range(50):
        t = make_trial(channels=("FP1", "CZ", "O1", "O2"), n=256, seed=i)
        factors = rng.uniform(0.01, 100, size=(4, 1))
        s = EegTrial(t.subject_id, t.class_label, t.channels, t.samples * factors, 256.0, "s")
        np.testing.assert_allclose(extract_features(s).values, extract_features(t).values,
                                   rtol=1e-9, atol=1e-12)


def test_alpha_only_trial():
    x = np.tile(_sines([9, 10, 11, 12]), (3, 1))
    t = EegTrial("co2a0000001", 1, ("CZ", "PZ", "O1"), x, 256.0, "a")
    fv = extract_features(t)
    alpha = [v for v, n in zip(fv.values, fv.names) if n.endswith("nE_alpha")]
    np.testing.assert_allclose(alpha, 1.0, atol=1e-6)


def test_extract_is_pure():
    t = make_trial(n=128)
    assert extract_features(t).values.tobytes() == extract_features(t).values.tobytes()


def test_extract_reports_channel_on_failure():
    t = make_trial(channels=("FP1", "CZ"), n=32)
    s = t.samples.copy()
    s[1] = 0.0
    with pytest.raises(errors.AllZeroSignal, match="CZ"):
        extract_features(EegTrial(t.subject_id, 1, t.channels, s, 256.0, "z"))


def test_selector_drops_duplicates():
    rng = np.random.default_rng(4)
    a = rng.standard_normal((50, 3))
    X = np.column_stack([a[:, 0], a[:, 1], a[:, 0] * 2 + 1, a[:, 2]])
    mask = fit_selector(X, 0.95)
    assert mask.kept_indices == (0, 1, 3)
    # affine copy: |r| = 1 up to rounding, never above 1
    assert fit_selector(X, 1.0).kept_indices == (0, 1, 2, 3)
    D = np.column_stack([a, a[:, 1]])
    assert fit_selector(D, 1.0).kept_indices == (0, 1, 2)
    assert fit_selector(D, 0.95).kept_indices == (0, 1, 2)
    Y = np.column_stack([a, a[:, 0] + 0.1 * rng.standard_normal(50)])
    assert fit_selector(Y, 1.0).kept_indices == (0, 1, 2, 3)


def test_selector_keeps_low_correlation_columns():
    X = np.random.default_rng(5).standard_normal((200, 20))
    R = np.abs(np.corrcoef(X, rowvar=False))
    assert (R - np.eye(20)).max() < 0.95
    assert fit_selector(X).kept_indices == tuple(range(20))


def test_selector_greedy_chain():
    # 0~1 and 1~2 correlated but 0,2 are not: dropping 1 keeps 2
    rng = np.random.default_rng(6)
    u, v = rng.standard_normal(400), rng.standard_normal(400)
    X = np.column_stack([u, u + 0.2 * v, u + 0.4 * v])
    R = np.abs(np.corrcoef(X, rowvar=False))
    assert R[0, 1] > 0.97 and R[1, 2] > 0.97 and R[0, 2] > 0.9
    thr = (R[0, 2] + min(R[0, 1], R[1, 2])) / 2
    assert fit_selector(X, thr).kept_indices == (0, 2)


def test_apply_selector_and_standardizer():
    X = np.arange(12.0).reshape(3, 4)
    mask = fit_selector(np.random.default_rng(0).standard_normal((10, 4)))
    m = SelectionMask((0, 2), 0.95, 4)
    np.testing.assert_array_equal(apply_selector(m, X), X[:, [0, 2]])
    with pytest.raises(errors.DimensionMismatch):
        apply_selector(mask, X[:, :3])
    rng = np.random.default_rng(7)
    T = np.column_stack([rng.normal(5, 3, 40), np.full(40, 2.0), rng.normal(-1, 0.1, 40)])
    s = fit_standardizer(T)
    Z = apply_standardizer(s, T)
    assert np.all(np.abs(Z.mean(axis=0)) < 1e-9)
    assert np.all(Z[:, 1] == 0)
    np.testing.assert_allclose(Z[:, [0, 2]].std(axis=0), 1.0)


def test_preprocessor_fits_training_rows_only(small_fm):
    X = small_fm.values
    pre = fit_preprocessor(X[:30])
    poisoned = X.copy()
    poisoned[30:] = 1e6 * np.random.default_rng(8).standard_normal(poisoned[30:].shape)
    assert fit_preprocessor(poisoned[:30]).mask == pre.mask
    np.testing.assert_array_equal(pre.transform(X[:30]), fit_preprocessor(poisoned[:30]).transform(X[:30]))


def test_feature_matrix_csv_roundtrip(tmp_path, small_fm):
    p = tmp_path / "f.csv"
    small_fm.to_csv(p)
    back = FeatureMatrix.from_csv(p, trial_ids=small_fm.trial_ids)
    np.testing.assert_array_equal(back.values, small_fm.values)
    assert back.names == small_fm.names
    assert back.subjects.tolist() == small_fm.subjects.tolist()
    assert back.labels.tolist() == small_fm.labels.tolist()
    small_fm.to_csv(p, include_trial_id=True)
    assert FeatureMatrix.from_csv(p).trial_ids.tolist() == small_fm.trial_ids.tolist()
    again = FeatureMatrix.from_dict(small_fm.to_dict())
    np.testing.assert_array_equal(again.values, small_fm.values)


def test_build_feature_matrix_metadata():
    trials = [make_trial(seed=i, n=64, trial_id=f"t{i}") for i in range(3)]
    fm = build_feature_matrix(trials, DEFAULT_BANDS)
    assert fm.shape == (3, 24)
    assert fm.trial_ids.tolist() == ["t0", "t1", "t2"]
    assert fm.rows([2, 0]).trial_ids.tolist() == ["t2", "t0"]
