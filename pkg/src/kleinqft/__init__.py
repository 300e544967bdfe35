"""Space-time resolved quantum field dynamics in 1+1 dimensions.

Simulates spin-1/2 (Dirac) and spin-0 (Klein-Gordon, Feshbach-Villars form)
fields interacting with a static supercritical electrostatic barrier on a
periodic grid: vacuum pair production, exchange-suppressed pair densities,
fermionic saturation, bosonic superradiance, and wavepacket scattering in the
Klein tunneling regime.

All quantities are in atomic units (hbar = m = 1, c = 137.036) unless a run
uses boson-mass renormalized units, in which case the run manifest says so.
"""

__version__ = "0.1.0"

from .grid import Units, Grid1D, integrate
from .modes import ParticleKind, TwoComponentField, ModeBasis, build_basis, energy, project
from .potential import PotentialSpec, evaluate_potential, inside_momentum, resonant_width, rectangular_transmission
from .propagator import StepperConfig, step, evolve_mode
from .bogoliubov import BogoliubovAmplitudes, evolve_basis, check_algebra
