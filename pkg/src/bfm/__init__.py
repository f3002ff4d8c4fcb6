"""Competing-risks reliability toolkit for the bi-failure-modes (BFM) lifetime model."""

from .dataio import (
    CensoredObservation,
    DataFormatError,
    Dataset,
    PlotSeries,
    bundled_names,
    empirical_risks,
    emit_series,
    load_bundled,
    parse_dataset,
    read_series,
)
from .distribution import (
    BfmParams,
    CauseLabel,
    LifetimeDraw,
    bfm_cdf,
    bfm_chf,
    bfm_frf,
    bfm_pdf,
    bfm_quantile,
    bfm_sample,
    bfm_sf,
    dhillon_quantile,
    exppower_quantile,
)
from .mle import MleFit, bfm_nll, bfm_nll_grad, fit_mle, observed_information

__version__ = "0.1.0"
