"""Certificates for random constraint-satisfaction instances.

Spectral bounds on Fourier coefficients of induced distributions, strong
and delta refutation, an exact LP for t-wise supportability, and
hypergraph independence/chromatic certificates.
"""
__version__ = "0.1.0"

from .hypergraph import Hypergraph, certify_chromatic, certify_independence, sample_hypergraph
from .instances import (
    Instance,
    brute_force_opt,
    fixed_m_adapter,
    induced_distribution,
    induced_fourier,
    sample_fixed_m,
    sample_instance,
    sample_planted,
    value,
)
from .polynomials import (
    MultilinearPolynomial,
    SymmetricSpec,
    library_separator,
    scale_polynomial,
    univariate_from_symmetric,
    verify_separating,
)
from .predicates import (
    Predicate,
    fourier_expansion,
    mean,
    named_predicate,
    predicate_from_truth_table,
    zero_variability,
)
from .refute import (
    RefutationOutcome,
    certify_fourier_bound,
    certify_quasirandom,
    certify_t_quasirandom,
    delta_refute,
    refute,
    strong_refute,
    xor_strong_refute,
)
from .spectral import CoefficientTensor, SpectralCertificate, certified_norm_upper, certify_form, certify_sum_form
from .twise import LPResult, granularity_bound, twise_distance

__all__ = [name for name in dir() if not name.startswith("_")]
