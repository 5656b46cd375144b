"""Loading the embedded index table, validating a user CSV, and building
feature matrices."""
# %%
import io

from trilemma.dataset import (
    DIMENSIONS,
    DatasetError,
    embedded_reference,
    parse_dataset,
    rank_column,
    select_features,
)

ds = embedded_reference()
print(ds.count, "countries from", ds.source)
print(ds["Sweden"])

# %% ranks are 1 = best; equal scores keep dataset order
for name, rank in sorted(rank_column(ds, "trilemma"), key=lambda r: r[1])[:5]:
    print(f"{rank:2d}  {name}")

# %% raw and z-scored views of the four columns
raw = select_features(ds, DIMENSIONS)
z = select_features(ds, DIMENSIONS, "zscore")
print(raw.points.shape, z.points.mean(axis=0).round(12), z.points.std(axis=0, ddof=1))
print("round trip max error:", abs(z.inverse_transform(z.points) - raw.points).max())

# %% validation errors carry the row number (header is row 1)
bad = "country,security,equity,sustainability,trilemma\nA,10,20,30,40\nB,10,20,300,40\n"
try:
    parse_dataset(io.StringIO(bad), source="bad.csv")
except DatasetError as exc:
    print("rejected:", exc)
