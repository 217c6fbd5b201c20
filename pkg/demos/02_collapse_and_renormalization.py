# %% [markdown]
# # Collapsing sequences and renormalizing curves
#
# Deleting every ``−+`` pair from a sequence and re-indexing gives its
# collapse.  Doing this to both sequences of a state shrinks the tiling,
# and the curve of the big tiling returns to the kept squares exactly when
# the small curve takes one step.

# %%
from collections import Counter

from truchet import Sequence, State, phi
from truchet.cocycle import block_counts
from truchet.collapse import (
    collapse,
    first_return_full,
    in_r1,
    insert,
    renormalization_report,
    repeated_renormalize,
    rho,
)
from truchet.dynamics import step_class
from truchet.montecarlo import MeasureSpec, sample_state

# %% [markdown]
# A worked collapse.  The kept indices are the positions that survive.

# %%
w = Sequence.from_literal("−++−−−+−+^+−−+++")
c = collapse(w, 64)
print("omega         ", w.literal(-12, 8))
print("collapsed     ", c.eta.literal(-4, 4))
print("kept k_-3..k_3", c.kept_indices(-3, 3).tolist())
print("blocks n_-4..3", c.rule.counts(-4, 3))
print("insert undoes it:", insert(c.eta, c.rule).equals_on(w, -10, 8))

# %% [markdown]
# First returns: the return time is ``4n + 1`` and the step classes over a
# return block are fixed by the class of the collapsed step.

# %%
spec = MeasureSpec("markov", 0.5, 0.5)
times = Counter()
agree = 0
n = 0
for i in range(3000):
    x = sample_state(spec, 1, i)
    if not in_r1(x, 256):
        continue
    r = first_return_full(x)
    y = rho(x, 256)
    times[r.return_time] += 1
    agree += rho(r.state, 256).same_as(phi(y), 16)
    assert r.step_counts == block_counts(int(step_class(y)), (r.return_time - 1) // 4)
    n += 1
print(f"{n} states in R_1; conjugacy held for {agree}")
print("return-time histogram:", dict(sorted(times.items())))

# %% [markdown]
# Repeated renormalization.  A closed curve loses period at every level and
# ends as a loop of four squares.

# %%
runs = [repeated_renormalize(sample_state(spec, 2, i), 6, horizon=1024) for i in range(500)]
report = renormalization_report(runs)
for row in report["levels"]:
    print(f"level {row['level']}: {row['outcomes']}")

for i in range(2000):
    x = sample_state(spec, 3, i)
    out = repeated_renormalize(x, 6, track_period=True)
    if out[0].period and out[0].period >= 40:
        print("periods by level for one curve:", [o.period for o in out])
        break
