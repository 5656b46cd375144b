"""Agglomerative clustering of each index, exported as Newick and SVG."""
# %%
from trilemma.dataset import DIMENSIONS, embedded_reference, select_features
from trilemma.hier import LINKAGES, agglomerate, cut
from trilemma.svg import emit_dendrogram_svg

ds = embedded_reference()
fm = select_features(ds, ["equity"])

for link in LINKAGES:
    dg = agglomerate(fm, link)
    first = dg.merges[0]
    print(f"{link:8s} first merge {fm.names[first.left]} + {fm.names[first.right]}"
          f" at {first.height:.3f}, root at {dg.merges[-1].height:.2f}")

# %% three-group cuts of the ward tree, one per index
for d in DIMENSIONS:
    f = select_features(ds, [d])
    labels = cut(agglomerate(f, "ward"), 3)
    sizes = [int((labels == g).sum()) for g in range(3)]
    print(f"{d:15s} group sizes {sizes}")

# %% exports
dg = agglomerate(select_features(ds, ["trilemma"]), "average")
print(dg.to_newick(2)[:120], "...")
emit_dendrogram_svg(dg, "dendrogram_trilemma.svg")
