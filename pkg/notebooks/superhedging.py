# %% [markdown]
# # Superhedging in a one-period binomial market
#
# The asset starts at 1 and moves to 2 or 1/2. Claims that can be
# superhedged from capital 1 form a polyhedron; its polar probabilities are
# exactly the martingale measures.

# %%
from importlib.resources import files

from qsbipolar.finance import verify_dual_martingale
from qsbipolar.rational import fmt
from qsbipolar.scenario import load_scenario

fixtures = files("qsbipolar") / "fixtures"
market = load_scenario(fixtures / "binomial.json").market

rep = verify_dual_martingale(market)
C = rep.superhedge.body.canonical()
for row in C.constraints:
    print("superhedgeable:", [fmt(c) for c in row.coeffs], "<=", fmt(row.offset))
print("polar probabilities:", [[fmt(v) for v in p] for p in rep.polar_vertices])
print("martingale measures:", [[fmt(v) for v in p] for p in rep.martingale_vertices])

# %% [markdown]
# When both moves go up there is an arbitrage: every claim is superhedgeable
# and no martingale measure exists.

# %%
arb = verify_dual_martingale(load_scenario(fixtures / "arbitrage.json").market)
print("match:", arb.match, "vertices:", arb.polar_vertices, arb.martingale_vertices)

# %% [markdown]
# A two-period trinomial tree has a six-vertex martingale polytope.

# %%
tri = verify_dual_martingale(load_scenario(fixtures / "trinomial.json").market)
print("match:", tri.match, "vertices:", len(tri.martingale_vertices))
