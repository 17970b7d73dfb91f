"""Physical constants and unit conversions (atomic units throughout)."""

# CODATA 2018 Hartree energy in eV, truncated to the precision used for v(E)
HARTREE_EV = 27.211386
# proton mass in electron masses (CODATA 2018)
PROTON_MASS = 1836.15267
# Bohr radius a0 = 0.529177211e-8 cm
BOHR_CM = 0.529177211e-8
# a0^2 in units of 1e-16 cm^2
BOHR2_1E16_CM2 = (BOHR_CM * 1e8) ** 2
