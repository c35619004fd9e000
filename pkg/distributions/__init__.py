"""
Distributions package for dlglm bounds
"""

from .densities import (
    BernoulliLogit,
    DiagGaussian,
    GumbelSoftmax,
    bernoulli_logpmf,
    gaussian_log_density,
    gaussian_logpdf,
    gaussian_rsample,
    gumbel_noise,
    gumbel_softmax_logpdf,
    gumbel_softmax_sample,
    sigma_from_log,
    standard_normal_logpdf,
)

__all__ = [
    "BernoulliLogit",
    "DiagGaussian",
    "GumbelSoftmax",
    "bernoulli_logpmf",
    "gaussian_log_density",
    "gaussian_logpdf",
    "gaussian_rsample",
    "gumbel_noise",
    "gumbel_softmax_logpdf",
    "gumbel_softmax_sample",
    "sigma_from_log",
    "standard_normal_logpdf",
]
