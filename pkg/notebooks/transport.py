# %% [markdown]
# # Transport duality on a 2 x 2 product
#
# Both marginals must have total mass at most 1. Maximising a payoff over
# couplings equals minimising the sum of marginal budgets that dominate it.

# %%
from qsbipolar.core import FiniteSpace, PriorSet
from qsbipolar.rational import fmt
from qsbipolar.sets import bounded_by
from qsbipolar.transport import (MarginalSystem, ProductModel, check_no_gap,
                                 marginal_polar_identity)

P1 = PriorSet.all_diracs(FiniteSpace(("a", "b")))
P2 = PriorSet.all_diracs(FiniteSpace(("x", "y")))
C1, C2 = bounded_by(P1, (1, 1)), bounded_by(P2, (1, 1))
system = MarginalSystem.from_sets(ProductModel(P1, P2), C1, C2)

# %%
for goal in [(1, 1, 1, 1), (1, 0, 0, 1), (0, 2, 1, 0)]:
    rep = check_no_gap(goal, system)
    print(goal, "primal", fmt(rep.primal_value), "dual", fmt(rep.dual_value),
          "C = D:", rep.C_equals_D)

# %% [markdown]
# The split-budget set integrates each coupling to the larger of its two
# marginal suprema.

# %%
ident = marginal_polar_identity(system, C1, C2)
for mu, lhs, rhs in ident.probes[:6]:
    print([fmt(v) for v in mu], fmt(lhs), fmt(rhs))
