"""Physical constants (CODATA 2018, SI units)."""

G_NEWTON = 6.67430e-11        # m^3 kg^-1 s^-2
HBAR = 1.054571817e-34        # J s
K_B = 1.380649e-23            # J K^-1
ATOMIC_MASS = 1.66053906660e-27  # kg

CESIUM_MASS = 133.0 * ATOMIC_MASS  # kg, reference atom species
