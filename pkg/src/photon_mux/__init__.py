"""Exact photon-number statistics and performance indices of multiplexed heralded single-photon sources."""
from .analytic import (
    PhotonDistribution,
    distribution,
    fl_snr,
    general_distribution,
    general_pn,
    amhps_pn,
    mhps_pn,
    smhps_gain,
    smhps_pn,
    smhps_snr_closed,
    snr_of,
)
from .arch import (
    ArchitectureError,
    Asymmetric,
    ChannelSpec,
    Efficiencies,
    FaintLaser,
    General,
    IdealMHPS,
    Symmetric,
    expand,
    from_dict,
    to_dict,
)
from .optimize import OptResult, best_symmetric, delta_percent, p1_max, solve_snr_threshold, two_crystal_ideal_opt
from .simulate import McEstimate, run_validation, simulate
from .sweep import SweepGrid, contour_grid, scalability_curve

__version__ = "0.1.0"
