# %% [markdown]
# # Dilogarithm sums from periods
#
# Periodicity of the groupoid mutation forces the accumulated `a`-coordinate
# drift to vanish. Written out, that drift is a signed sum of integrals
# `int u^(j-1) / Z(u) du` along the mutation sequence. This script checks
# which of those sums actually vanish.

# %%
import numpy as np

from clustergpd.core_algebra import a2_pair
from clustergpd.gpd_mutations import dilog_identity_sum, sample_point
from clustergpd.numerics import PoleError

rng = np.random.default_rng(1)


def worst(pair, seq, ell, j, variant, samples=10):
    out = 0.0
    for _ in range(samples):
        pt = sample_point(rng, pair, "X", "D")
        out = max(out, abs(dilog_identity_sum(pair, seq, ell, j, pt, variant)))
    return out


# %% [markdown]
# The pentagon in direction 1, and a generalized seed with `r = (2, 1)`
# where `j = 1 < r_1` corresponds to a genuine `a` coordinate.

# %%
for variant in ("source_target", "zero"):
    print("pentagon   l=1 j=1", variant, f"{worst(a2_pair(), (1, 2, 1, 2, 1), 1, 1, variant):.1e}")
    print("r=(2,1)    l=1 j=1", variant, f"{worst(a2_pair((2, 1)), (1, 2) * 3, 1, 1, variant):.1e}")

# %% [markdown]
# At the top index `j = r_ell` there is no `a` coordinate behind the sum.
# The pentagon sum at `l = 1` above is such a case and vanishes, but the one
# at `l = 2` does not, nor does the `r = (2, 1)` sum at `j = 2`. Under the
# zero-based variant the integrals can also diverge.

# %%
print("pentagon   l=2 j=1", f"{worst(a2_pair(), (1, 2, 1, 2, 1), 2, 1, 'source_target'):.2f}")
print("r=(2,1)    l=1 j=2", f"{worst(a2_pair((2, 1)), (1, 2) * 3, 1, 2, 'source_target'):.2f}")
try:
    worst(a2_pair(), (2, 1, 2, 1, 2), 2, 1, "zero")
except PoleError as exc:
    print("(2,1,2,1,2) l=2 zero:", exc)
