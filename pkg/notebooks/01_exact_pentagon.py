# %% [markdown]
# # The A2 pentagon, exactly
#
# Walk the A2 seed through five mutations and watch the exchange matrix,
# the tropical signs, the c/g-matrices and the F-polynomials. Everything
# here is exact rational arithmetic.

# %%
from clustergpd.core_algebra import MutationTrace, a2_pair, b2_pair, g2_pair, walk
from clustergpd.laurent import FPolyFamily, periodicity_exact, separation_a, separation_x, walk_F

pair = a2_pair()
traces = walk(MutationTrace.seed(pair), (1, 2, 1, 2, 1))
for step, tr in enumerate(traces):
    print(step, "signs", [eps for _, eps in tr.path], "C", tr.C, "G", tr.G)

# %% [markdown]
# After five steps `C` and `G` are the identity with the two columns
# swapped. The F-polynomials along the way:

# %%
fams = walk_F(FPolyFamily.seed(traces[0]), (1, 2, 1, 2, 1))
for step, fam in enumerate(fams):
    print(step, [f.to_text() for f in fam.F])

# %% [markdown]
# Separation of additions rebuilds the cluster coordinates from `F` and the
# g-vectors. At the end of the pentagon they are the seed coordinates swapped.

# %%
print([x.to_text() for x in separation_a(fams[-1])])
print([y.num.to_text() + " / " + y.den.to_text() for y in separation_x(fams[-1])])

# %% [markdown]
# The same check for the rank-2 finite types, with the exact periodicity
# report counting violated equalities.

# %%
for name, p, seq, sigma in [("A2", a2_pair(), (1, 2, 1, 2, 1), (2, 1)),
                            ("B2", b2_pair(), (1, 2) * 3, (1, 2)),
                            ("G2", g2_pair(), (1, 2) * 4, (1, 2)),
                            ("A2, too short", a2_pair(), (1, 2), (1, 2))]:
    rep = periodicity_exact(p, seq, sigma)
    print(f"{name:<14s} {'period' if rep.passed else 'not a period'}  {rep.notes['failures'][:1]}")
