"""Choosing k: the WCSS elbow and mean silhouette."""
# %%
from trilemma.dataset import DIMENSIONS, embedded_reference, select_features
from trilemma.kmeans import KMeansConfig
from trilemma.svg import emit_elbow_svg
from trilemma.validity import detect_knee, select_k, wcss_curve

ds = embedded_reference()
cfg = KMeansConfig(k=1, restarts=100, rng_seed=0)

for scaling in ("none", "zscore"):
    fm = select_features(ds, DIMENSIONS, scaling)
    curve = wcss_curve(fm, 10, "lloyd", cfg)
    print(scaling, [round(v, 2) for v in curve.values])
    for method in ("chord-distance", "second-difference"):
        knee = detect_knee(curve, method)
        print(f"  {method:18s} knee at k={knee.k} (score {knee.score:.3f})")
    sel = select_k(fm, [3, 4], cfg, curve=curve)
    print("  silhouette", {k: round(s, 4) for k, s in sel.scores.items()}, "-> k =", sel.k)

# %% the chart, with the knee highlighted
emit_elbow_svg(curve, "elbow.svg")
print("wrote elbow.svg")
