"""Physical constants shared across the toolkit (SI, angular frequencies)."""

import numpy as np

# Proton gyromagnetic ratio, rad/(s*T).
GAMMA = 2.0 * np.pi * 42.577e6

# Water-fat chemical shift at 1.5 T, rad/s.  Negative: fat precesses slower
# than water; the FID phase of a fat pixel advances at d_omega0 + OMEGA_CS.
OMEGA_CS = -2.0 * np.pi * 217.0
