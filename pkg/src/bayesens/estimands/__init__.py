"""Treatment-effect evaluation, posterior summaries, sweeps and tipping points."""
from .gformula import (
    DEFAULT_RULE,
    DEFAULT_TSB_MC,
    gformula_binary_l,
    gformula_tsb,
    gformula_with_u,
    sample_tsb_covariate,
    tsb_conditional_mean,
)
from .summary import EstimandSummary, FitResult, combined_mcse, fit, quantile7, summarize
from .sweep import SweepRow, SweepTable, grid_sweep, point_seed
from .tipping import crossing_cells, tipping_point
