"""Spectral predictions and Monte Carlo checks for elementwise-transformed spiked matrices.

The model is Y = n^{-1/2} f(sqrt(n) X + Z): a low-rank signal X buried
in iid noise Z, pushed through an entrywise transform f.  The library
predicts where Y's outlying singular values (or eigenvalues, in the
symmetric setting) land and how well the leading singular vectors align
with the planted ones, then verifies those predictions by simulation.

Layers, bottom to top:

* :mod:`spiketx.measures`   noise measures (densities, moments, scores)
* :mod:`spiketx.orthopoly`  orthonormal polynomials and the effective SNR tau
* :mod:`spiketx.rmt`        bulk laws, biasing maps, spike predictions
* :mod:`spiketx.transforms` entrywise transforms and truncation tuning
* :mod:`spiketx.shrinkage`  singular-value shrinkage for denoising
* :mod:`spiketx.sim`        finite-n simulation engine
* :mod:`spiketx.cli`        `spiketx` command-line front end
"""

__version__ = "0.1.0"

from .errors import NumericalError, SpiketxError, ValidationError
from .measures import NoiseMeasure, cauchy, fisher_information, gaussian, gaussian_mixture
from .orthopoly import (
    OrthoBasis,
    SeriesTransform,
    TauReport,
    build_basis,
    optimal_series_preprocessor,
    tau,
)
from .rmt import (
    SpectralPrediction,
    SpikePrediction,
    mp_cdf,
    mp_cos_sq,
    mp_density,
    mp_edges,
    mp_lambda,
    mp_stieltjes,
    predict,
    predict_ell_star,
    semicircle_cdf,
    semicircle_density,
    wigner_cos_sq,
    wigner_lambda_bar,
)
from .shrinkage import DenoiseResult, ShrinkageRule, denoise, eta_star, rank_one_loss, t_squared
from .sim import (
    MonteCarloResult,
    ReplicateSpec,
    Signal,
    SimulationResult,
    SpikeConfig,
    binomial_simulate,
    gen_signal,
    monte_carlo,
    observe,
    rng_for,
    run_replicate,
)
from .transforms import (
    Transform,
    TruncationReport,
    binomial_link,
    heaviside_centered,
    identity,
    optimize_truncation,
    polynomial,
    relu_centered,
    score_transform,
    tau_trunc,
    truncate,
)

__all__ = [
    "__version__",
    "SpiketxError",
    "ValidationError",
    "NumericalError",
    "NoiseMeasure",
    "gaussian",
    "cauchy",
    "gaussian_mixture",
    "fisher_information",
    "OrthoBasis",
    "SeriesTransform",
    "TauReport",
    "build_basis",
    "tau",
    "optimal_series_preprocessor",
    "SpikePrediction",
    "SpectralPrediction",
    "mp_edges",
    "mp_lambda",
    "mp_cos_sq",
    "mp_density",
    "mp_cdf",
    "mp_stieltjes",
    "semicircle_density",
    "semicircle_cdf",
    "wigner_lambda_bar",
    "wigner_cos_sq",
    "predict",
    "predict_ell_star",
    "Transform",
    "TruncationReport",
    "identity",
    "relu_centered",
    "heaviside_centered",
    "truncate",
    "polynomial",
    "score_transform",
    "binomial_link",
    "tau_trunc",
    "optimize_truncation",
    "ShrinkageRule",
    "DenoiseResult",
    "t_squared",
    "eta_star",
    "denoise",
    "rank_one_loss",
    "SpikeConfig",
    "Signal",
    "ReplicateSpec",
    "SimulationResult",
    "MonteCarloResult",
    "rng_for",
    "gen_signal",
    "observe",
    "run_replicate",
    "monte_carlo",
    "binomial_simulate",
]
