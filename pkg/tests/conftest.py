import hypothesis
import numpy as np

# Solver-backed properties can be slow; never enforce per-example deadlines.
hypothesis.settings.register_profile(
    "default", max_examples=50, deadline=None, derandomize=True
)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.load_profile("default")

np.set_printoptions(precision=12)
