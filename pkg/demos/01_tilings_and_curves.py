# %% [markdown]
# # Tilings and the curves through them
#
# Two sign sequences fix a tiling of the plane: the tile at ``(m, n)`` is
# ``omega_m * omega'_n``.  Following one arc from square to square gives a
# curve, and the map ``phi`` moves a state one square along it.

# %%
import sys
from pathlib import Path

import numpy as np

from truchet import Sequence, State, phi, sample_markov, trace
from truchet.dynamics import NORMALS, invariant_m, step_class
from truchet.render import render_tiling

out_dir = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_output")
out_dir.mkdir(exist_ok=True)

# %% [markdown]
# Constant sequences give a staircase: every curve runs off to infinity.

# %%
one = Sequence.constant()
res = trace(State(one, one, (1, 0)), 1000)
print("constant tiling:", res.status.value, "after", res.steps, "steps, extent", res.extremes)

# %% [markdown]
# A random pair drawn from the Markov measure with persistence 1/2.

# %%
omega, omega_prime = sample_markov(0.5, 7), sample_markov(0.5, 8)
print("omega on -8..8:  ", omega.literal(-8, 9))
print("omega' on -8..8: ", omega_prime.literal(-8, 9))

for v in NORMALS:
    r = trace(State(omega, omega_prime, v), 100_000, record=False)
    print(f"start normal {v}: {r.status.value}, period {r.period}, step counts {r.step_counts}")

# %% [markdown]
# The quantity ``b * omega_0 + a * omega'_0`` never changes along an orbit.

# %%
x = State(omega, omega_prime, (0, 1))
values = set()
for _ in range(2000):
    values.add(invariant_m(x))
    x = phi(x)
print("invariant values seen over 2000 steps:", values)

# %% [markdown]
# Step classes along the first few steps.

# %%
x = State(omega, omega_prime, (1, 0))
classes = []
for _ in range(12):
    classes.append(int(step_class(x)))
    x = phi(x)
print("first 12 step classes:", classes)

# %% [markdown]
# Picture: tiles, the highlighted curve, grey collapsed rows and columns,
# and the dividing lines.

# %%
svg = render_tiling(omega, omega_prime, (-12, -12, 25, 25), highlight=(1, 0), shade=True, dividing_lines=True)
path = out_dir / "tiling.svg"
path.write_text(svg)
print("wrote", path, f"({len(svg)} bytes)")

# %% [markdown]
# How long do curves take to close?  A quick look at 2000 random starts.

# %%
periods = np.array(
    [trace(State(sample_markov(0.5, 2 * i), sample_markov(0.5, 2 * i + 1), (1, 0)), 20_000, record=False).period or 0 for i in range(2000)]
)
closed = periods[periods > 0]
print(f"closed within 20000 steps: {len(closed) / len(periods):.3f}")
print("period quartiles:", np.percentile(closed, [25, 50, 75]))
