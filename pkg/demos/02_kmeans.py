"""Lloyd's k-means against the exact 1-D optimum."""
# %%
import numpy as np

from trilemma.dataset import DIMENSIONS, embedded_reference, select_features
from trilemma.kmeans import KMeansConfig, kmeans_1d_exact, lloyd, relabel_by_centroid

ds = embedded_reference()
tri = select_features(ds, ["trilemma"])

exact = relabel_by_centroid(kmeans_1d_exact(tri, 3))
print("exact SSE", exact.total_sse)
for j, c in enumerate(exact.centroids[:, 0]):
    members = [n for n, lab in zip(tri.names, exact.assignments) if lab == j]
    print(f"centroid {c:6.2f}: {', '.join(members)}")

# %% best-of-R Lloyd never beats the exact optimum and usually reaches it
for restarts in (1, 5, 100):
    best = lloyd(tri, KMeansConfig(k=3, restarts=restarts, rng_seed=0))
    print(f"R={restarts:3d}  SSE={best.total_sse:.6f}  gap={best.total_sse - exact.total_sse:.2e}")

# %% SSE falls monotonically within a single run
run = lloyd(select_features(ds, DIMENSIONS), KMeansConfig(k=4, restarts=1, rng_seed=3))
print(np.round(run.sse_history, 2), "converged" if run.converged else "hit max_iterations")
