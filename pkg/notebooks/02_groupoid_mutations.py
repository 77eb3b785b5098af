# %% [markdown]
# # Mutations on groupoid fibers
#
# A groupoid point is a base point plus a fiber. Mutation moves both, and
# the six chart groupoids (families G, B, D over the A and X sides) should
# all return to the start, up to the permutation, after a period.

# %%
import numpy as np

from clustergpd.core_algebra import MutationTrace, a2_pair, b2_pair
from clustergpd.groupoids import FAMILIES, SIDES, GroupoidPoint
from clustergpd.gpd_mutations import (
    gpd_periodicity_check,
    gpd_separation,
    mutate_groupoid,
    mutate_groupoid_composed,
    sample_point,
    walk_groupoid,
)

rng = np.random.default_rng(0)
pair = a2_pair()
seed = MutationTrace.seed(pair)

# %% [markdown]
# A hand-sized example: the D family over the A side at `x = (1, 1)`.

# %%
pt = GroupoidPoint("D", "A", [1, 1], [2, 5])
out = mutate_groupoid(pt, seed, 1)
print("closed form", out.base, out.fiber)
print("flow then tropical", mutate_groupoid_composed(pt, seed, 1).fiber)

# %% [markdown]
# Walking the pentagon on every family. The residual is relative, against
# the permuted starting point.

# %%
for side in SIDES:
    for fam in FAMILIES:
        p = sample_point(rng, pair, side, fam)
        end = walk_groupoid(p, seed, (1, 2, 1, 2, 1))[0][-1]
        print(f"{fam}_{side}: start {np.round(p.fiber, 4)}  end {np.round(end.fiber, 4)}")

print(gpd_periodicity_check(b2_pair(), (1, 2) * 3, (1, 2), 10, rng).line())

# %% [markdown]
# Separation of additions on the groupoid: a closed form in the F-polynomials
# and the dual c/g-vectors, compared here with step-by-step mutation.

# %%
p = sample_point(rng, b2_pair(), "X", "B")
path = (2, 1, 2, 1)
closed = gpd_separation(b2_pair(), path, p)
stepped = walk_groupoid(p, MutationTrace.seed(b2_pair()), path)[0][-1]
print(np.max(np.abs(closed.fiber - stepped.fiber)))
