# %% [markdown]
# # Random tilings: closed forms against simulation
#
# For Markov-random sequences every curve is closed with probability one.
# The argument runs through exact formulas; here each is set beside a
# Monte Carlo estimate.

# %%
from fractions import Fraction

from truchet.cocycle import (
    L11_sequence,
    first_below,
    gamma_sequence,
    matrix_Mpq,
    nu_On_sequence,
    s_k,
    step_measure_vector,
)
from truchet.montecarlo import (
    MeasureSpec,
    closed_fraction_report,
    estimate_step_measures,
    estimate_transport,
)

SEED = 11

# %% [markdown]
# Step-class frequencies.

# %%
rep = estimate_step_measures(0.3, 0.7, 400_000, SEED)
for label, e, a, z in zip(rep.labels, rep.estimates, rep.analytic, rep.z_scores):
    print(f"{label}: {e.value:.4f} vs {a:.4f}  z={z:+.2f}")
print("exact:", [str(x) for x in step_measure_vector(Fraction(3, 10), Fraction(7, 10))])

# %% [markdown]
# Collapsing ``mu_p`` gives ``p * mu_q`` with ``q = 1/(2-p)``.

# %%
rep = estimate_transport(0.5, 400_000, SEED)
for label in ["collapsible", "cyl[^++]", "cyl[^+−]", "collapsed_match", "insertion[−+]", "insertion[++]"]:
    e, a, z = rep.get(label)
    print(f"{label:16s} {e.value:.4f} vs {float(a):.4f}  z={z:+.2f}")

# %% [markdown]
# The expected step-count matrix at ``p = q = 1/2``.

# %%
M = matrix_Mpq(Fraction(1, 2), Fraction(1, 2))
for row in M:
    print("  ".join(f"{str(x):>5s}" for x in row))

# %% [markdown]
# Probability of surviving ``k`` renormalizations, and the two sequences
# that bound it.

# %%
nu = nu_On_sequence(1, 1, 10)
print("nu(O_k), k=0..10:", [f"{float(x):.4f}" for x in nu])
gam = gamma_sequence(2000, exact=False)
l11 = list(L11_sequence(2000, exact=False))
for k in (1, 10, 100, 1000, 2000):
    print(f"k={k:5d}  gamma={gam[k]:.5f}  2 s_k={2 * float(s_k(k)):.5f}  L11={l11[k - 1]:.5f}")
print("L11 below 0.05 from k =", first_below(l11, 0.05) + 1)

# %% [markdown]
# Closed fraction against budget: it keeps growing, with no visible
# plateau, and drift suppresses it.

# %%
for spec in (MeasureSpec("markov", 0.5, 0.5), MeasureSpec("bernoulli", 0.8, 0.8)):
    rep = closed_fraction_report(spec, [100, 1000, 10_000], 5000, SEED)
    row = ", ".join(f"{b}: {e.value:.3f}" for b, e in zip(rep.params["budgets"], rep.estimates))
    print(f"{spec.kind} {spec.p}: {row}")
