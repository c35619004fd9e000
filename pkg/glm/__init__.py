"""
GLM package: response families, the deeply-learned head and classical fits
"""

from .family import Family, FamilyKind, inverse_link, link, validate_response, y_loglik
from .head import GlmHead, coefficient_table, extract_coefficients, glm_head_forward
from .irls import irls_fit, least_squares_fit, multinomial_fit

__all__ = [
    "Family",
    "FamilyKind",
    "GlmHead",
    "coefficient_table",
    "extract_coefficients",
    "glm_head_forward",
    "inverse_link",
    "irls_fit",
    "least_squares_fit",
    "link",
    "multinomial_fit",
    "validate_response",
    "y_loglik",
]
