"""Continuous weak measurement of qudits with complementary-basis feedback.

Simulation and analysis toolkit: stochastic trajectory ensembles, exact
commuting-measurement statistics, feedback purification rates and speed-up
bounds, a numerical search over unbiased bases, and spin Wigner functions,
all reachable from the ``qpurify`` command line.
"""

__version__ = "0.1.0"

from . import analytic, basis_search, feedback, qcore, trajectories, wigner  # noqa: F401
