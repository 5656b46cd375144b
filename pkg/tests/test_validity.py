import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import naive_silhouette
from trilemma.dataset import DIMENSIONS, FeatureMatrix, embedded_reference, select_features
from trilemma.kmeans import KMeansConfig
from trilemma.validity import WcssCurve, detect_knee, select_k, silhouette, wcss_curve


def test_wcss_endpoints():
    x = np.random.default_rng(0).normal(size=(8, 2))
    curve = wcss_curve(x, 8, "lloyd", KMeansConfig(k=1, restarts=5))
    assert curve.ks == list(range(1, 9))
    assert curve.values[0] == pytest.approx(((x - x.mean(axis=0)) ** 2).sum(), rel=1e-12)
    assert curve.values[-1] == 0.0
    assert curve.clustering(3).k == 3


def test_wcss_exact_is_non_increasing():
    fm = select_features(embedded_reference(), ["equity"])
    curve = wcss_curve(fm, 12, "exact-1d")
    assert all(a >= b for a, b in zip(curve.values, curve.values[1:]))
    assert curve.warnings == ()


def test_wcss_errors():
    x = np.zeros((4, 2))
    with pytest.raises(ValueError, match="k_max"):
        wcss_curve(x, 5)
    with pytest.raises(ValueError, match="d=1"):
        wcss_curve(x, 2, "exact-1d")


def test_knee_second_difference_example():
    # second differences: k=2 -> 80-10=70, k=3 -> 10-2=8, k=4 -> 2-1=1
    knee = detect_knee([100, 20, 10, 8, 7], method="second-difference")
    assert knee.k == 2
    assert knee.score == 70
    assert knee.distinct
    assert knee.scores == {2: 70.0, 3: 8.0, 4: 1.0}


def test_knee_chord_distance_example():
    # normalized: x = 0,.25,.5,.75,1 ; y = 1, 13/93, 3/93, 1/93, 0
    knee = detect_knee([100, 20, 10, 8, 7], method="chord-distance")
    assert knee.k == 2
    assert knee.score == pytest.approx(0.75 - 13 / 93, abs=1e-12)


@pytest.mark.parametrize("method", ["second-difference", "chord-distance"])
def test_knee_linear_has_no_distinct_knee(method):
    knee = detect_knee([50, 40, 30, 20, 10, 0], method=method)
    assert knee.k == 2
    assert not knee.distinct
    assert knee.score == pytest.approx(0.0, abs=1e-12)


def test_knee_too_short():
    with pytest.raises(ValueError, match="at least 3"):
        detect_knee([3, 1])


def test_knee_unknown_method():
    with pytest.raises(ValueError, match="unknown knee method"):
        detect_knee([3, 2, 1], method="kneedle2")


def test_knee_ties_toward_smaller_k():
    # second differences 5, 5: both interior points tie
    assert detect_knee([20, 10, 5, 5], method="second-difference").k == 2


convex = st.lists(st.floats(0.01, 100), min_size=3, max_size=10).map(
    lambda steps: list(np.cumsum(sorted(steps, reverse=True))[::-1])
)


@settings(max_examples=200, deadline=None)
@given(convex, st.floats(0.1, 1000), st.floats(-1e4, 1e4), st.sampled_from(["second-difference", "chord-distance"]))
def test_knee_affine_invariance(w, a, b, method):
    base = detect_knee(w, method=method)
    moved = detect_knee([a * v + b for v in w], method=method)
    assert moved.k == base.k


def test_silhouette_two_singletons():
    rep = silhouette([[0.0], [3.0]], [0, 1])
    assert rep.per_point.tolist() == [0.0, 0.0]


def test_silhouette_hand_example():
    # a(i) = 0.1 for every point; b(i) = 10.05 for the outer points, 9.95 inner
    rep = silhouette([0.0, 0.1, 10.0, 10.1], [0, 0, 1, 1])
    expected = [(10.05 - 0.1) / 10.05, (9.95 - 0.1) / 9.95, (9.95 - 0.1) / 9.95, (10.05 - 0.1) / 10.05]
    assert np.allclose(rep.per_point, expected, atol=1e-12, rtol=0)
    assert rep.per_point[1] == pytest.approx(0.98995, abs=5e-6)
    assert rep.mean == pytest.approx(np.mean(expected), abs=1e-12)


def test_silhouette_errors():
    with pytest.raises(ValueError, match="two clusters"):
        silhouette([1.0, 2.0, 3.0], [0, 0, 0])
    with pytest.raises(ValueError, match="two points"):
        silhouette([1.0], [0])


def test_silhouette_sign_cases():
    # a(i) = b(i) for the middle point -> 0
    rep = silhouette([0.0, 1.0, 2.0], [0, 0, 1])
    assert rep.per_point[1] == 0.0
    rep = silhouette([0.0, 1.0, 5.0, 6.0], [0, 0, 1, 1])
    assert np.all(rep.per_point > 0)


def test_silhouette_matches_naive_on_random():
    rng = np.random.default_rng(1)
    for _ in range(25):
        n = int(rng.integers(2, 60))
        d = int(rng.integers(1, 5))
        x = rng.normal(size=(n, d))
        labels = rng.integers(0, int(rng.integers(2, 6)), size=n)
        if len(set(labels.tolist())) < 2:
            labels[0], labels[-1] = 0, 1
        rep = silhouette(x, labels)
        assert np.max(np.abs(rep.per_point - naive_silhouette(x, labels))) <= 1e-12
        assert abs(rep.mean - rep.per_point.mean()) <= 1e-12
        assert np.all(np.abs(rep.per_point) <= 1)


def test_silhouette_rigid_motion_and_scale():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(40, 3))
    labels = rng.integers(0, 3, size=40)
    base = silhouette(x, labels).per_point
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    moved = silhouette(x @ q.T + np.array([4.0, -2.0, 7.0]), labels).per_point
    scaled = silhouette(x * 12.5, labels).per_point
    assert np.max(np.abs(moved - base)) < 1e-9
    assert np.max(np.abs(scaled - base)) < 1e-9


def test_select_k_two_blobs():
    x = np.array([0.0, 1.0, 2.0, 100.0, 101.0, 102.0])
    fm = FeatureMatrix.from_array(x)
    # brute force: mean silhouette of the blob split vs the best 5-cluster split
    blob = np.mean(naive_silhouette(x, [0, 0, 0, 1, 1, 1]))
    five = max(
        np.mean(naive_silhouette(x, lab))
        for lab in ([0, 0, 1, 2, 3, 4], [0, 1, 1, 2, 3, 4], [0, 1, 2, 3, 3, 4], [0, 1, 2, 3, 4, 4])
    )
    assert blob > five
    sel = select_k(fm, [2, 5], KMeansConfig(k=1, restarts=10))
    assert sel.k == 2
    assert sel.scores[2] == pytest.approx(blob, abs=1e-12)


def test_select_k_single_and_empty():
    fm = FeatureMatrix.from_array([0.0, 1.0, 5.0, 6.0])
    assert select_k(fm, [2]).k == 2
    with pytest.raises(ValueError, match="no candidate"):
        select_k(fm, [])
    with pytest.raises(ValueError, match="outside"):
        select_k(fm, [4])


def test_select_k_reuses_curve():
    fm = select_features(embedded_reference(), DIMENSIONS)
    cfg = KMeansConfig(k=1, restarts=20, rng_seed=3)
    curve = wcss_curve(fm, 5, "lloyd", cfg)
    a = select_k(fm, [3, 4], cfg, curve=curve)
    expected = silhouette(fm.points, curve.clustering(3).assignments).mean
    assert a.scores[3] == expected


def test_curve_json_shape():
    curve = wcss_curve(FeatureMatrix.from_array([0.0, 1.0, 5.0, 6.0, 20.0]), 4, "exact-1d")
    d = curve.to_dict()
    assert [e["k"] for e in d["entries"]] == [1, 2, 3, 4]
    assert d["knee"]["method"] == "chord-distance"
    assert isinstance(WcssCurve.from_values([3, 2, 1]).entries[0].wcss, float)
