# %% [markdown]
# # Polars and bipolars of a two-point set
#
# Two atoms, both charged by the priors. The set holds the payoffs (2, 0)
# and (0, 2) and nothing else, so it is neither convex nor solid.

# %%
from fractions import Fraction

from qsbipolar.core import FiniteSpace, PriorSet, ProbabilityMeasure, diracs
from qsbipolar.duality import bipolar_lifted, check_bipolar_theorem, polar_ca
from qsbipolar.oracle import oracle_membership
from qsbipolar.rational import fmt
from qsbipolar.sets import from_generators

space = FiniteSpace(("a", "b"))
priors = PriorSet.all_diracs(space)
S = from_generators(priors, [(2, 0), (0, 2)])

# %% [markdown]
# The polar collects the non-negative measures integrating every member to
# at most 1.

# %%
P = polar_ca(S).poly.canonical()
for row in P.constraints:
    print([fmt(c) for c in row.coeffs], "<=", fmt(row.offset))

# %% [markdown]
# Lifting through the Diracs sees each coordinate separately and returns the
# box [0, 2]^2. A single full-support model sees the pair jointly and returns
# the solid triangle under x + y <= 2.

# %%
half = ProbabilityMeasure((Fraction(1, 2), Fraction(1, 2)))
for name, Qs in (("diracs", diracs(priors)), ("half-half", (half,))):
    B = bipolar_lifted(S, Qs).body.canonical()
    rows = [([fmt(c) for c in r.coeffs], fmt(r.offset)) for r in B.constraints]
    print(name, rows)

# %% [markdown]
# The theorem checker names the failing properties and a witness in the
# bipolar but outside S. Here the witness is the midpoint of the two
# members, so the certificate is that pair rather than a separating measure.

# %%
rep = check_bipolar_theorem(S, (half,))
print("equal:", rep.equal)
print("properties:", rep.properties)
print("witness:", [fmt(v) for v in rep.witness], "reason:", rep.witness_reason)
print("certificate:", rep.certificate["kind"],
      [[fmt(v) for v in X] for X in rep.certificate["pair"]])

# %% [markdown]
# The brute-force oracle agrees on a few probes.

# %%
for X in [(1, 1), (2, 1), (Fraction(3, 2), Fraction(1, 2))]:
    print(X, oracle_membership(S, X), bipolar_lifted(S, (half,)).contains_point(X))
