"""Schedulability analysis and simulation for mixed-criticality systems of
Sporadic Servers and PIBS (priority-inheritance bandwidth-preserving servers).
"""

from .amc import (
    CLASSIC, EXTENDED, AmcOptions, AmcVerdict, Model, TESTS, amc_rtb, amc_steady_hi,
    amc_steady_lo, amc_ub, audsley_assign, get_test, io_amc_rtb, io_amc_steady, io_amc_ub,
)
from .model import (
    HI, LO, CritLevel, Pibs, SporadicServer, TaskSet, assign_rate_monotonic,
    ensure_priorities,
)
from .rta import RtaResult, pibs_interference, ss_pibs_rta, ss_rta

__version__ = "0.1.0"
