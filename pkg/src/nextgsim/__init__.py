"""Desk-scale simulation toolkit for access-network trade-off studies.

Five reproducible experiments behind one CLI:

* ``lsa_fig5``       - cost efficiency of renting antennas + shared spectrum
* ``smallcell_fig7`` - cell-splitting ASE gain and total transmit power
* ``fbmc_fig8``      - FBMC/OQAM SIR versus receive antennas and subcarriers
* ``pon_fig10``      - grouped assured-bandwidth PON backhaul delays
* ``entropy_table``  - self-organised channel grids and 2D excess entropy
"""

from .harness import __version__, run_experiment
from .config import ExperimentConfig, load_config
from .seeding import seeded_stream

__all__ = ["__version__", "run_experiment", "ExperimentConfig", "load_config", "seeded_stream"]
