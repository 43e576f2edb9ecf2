"""Goodness-of-fit testing with Euler characteristic curves.

The test statistic is the Euler characteristic curve (ECC) of a geometric
filtration built on the sample: a step function r -> chi(r) summarising how
components, loops and voids appear and cancel as balls of radius r grow
around the points.  One-sample tests compare a sample's ECC to the
Monte-Carlo expected ECC under the null; two-sample tests compare two ECCs
under permutation.  Classical Kolmogorov-Smirnov and Cramer-von Mises
baselines and a Monte-Carlo experiments harness are included.

Quick start::

    from ecc_gof import prepare_reference, one_sample_test, sample, parse_spec

    null = parse_spec("prod(normal(0,1),normal(0,1))")
    model = prepare_reference(null, n=100, seed=42)   # expensive, reusable
    x = sample(parse_spec("mg(0.5,2)"), 100, seed=7)
    report = one_sample_test(x, model)
    print(report.reject, report.p_value)
"""

from .curves import StepCurve, euler_curve, mean_curve, rescale_cloud, sup_distance
from .distributions import (
    ArctanRescale,
    Beta,
    Cauchy,
    CopulaPIT,
    Cosine,
    DistributionSpec,
    Identity,
    Laplace,
    Logistic,
    Mixture,
    MultivariateNormal,
    Normal,
    PiecewiseDensity,
    Product,
    StudentT,
    TransformSpec,
    Uniform,
    apply_transform,
    cdf,
    counterexample_pair,
    marginal_cdfs,
    mg_spec,
    parse_spec,
    parse_transform,
    sample,
    sample_rng,
    spec_to_string,
    transform_to_string,
)
from .errors import (
    BudgetExceeded,
    DegenerateInput,
    DimensionMismatch,
    DimensionUnsupported,
    EccGofError,
    InvalidConfig,
    InvalidSpec,
    NotUnivariate,
    ParseError,
    SizeMismatch,
    TooLarge,
)
from .estimators import TopoTestOneSample, TopoTestTwoSample
from .experiments import (
    ModelCache,
    PowerCell,
    PowerMatrix,
    cells_to_csv_text,
    default_specs,
    estimate_power,
    null_statistic_distribution,
    nulldist_to_csv_text,
    power_matrix,
    power_vs_n,
)
from .geometry import (
    FilteredComplex,
    PointCloud,
    alpha_filtration,
    as_point_cloud,
    cech_filtration_bruteforce,
    rips_filtration,
)
from .gof import (
    KsReferenceModel,
    ReferenceModel,
    TestReport,
    build_filtration,
    cloud_to_curve,
    cvm_one_sample_1d,
    ks_multivariate,
    ks_one_sample_1d,
    one_sample_test,
    prepare_ks_reference,
    prepare_reference,
    two_sample_test,
)
from .rand import derive_seed, stream

__version__ = "0.1.0"

__all__ = [
    "ArctanRescale", "Beta", "BudgetExceeded", "Cauchy", "CopulaPIT",
    "Cosine", "DegenerateInput", "DimensionMismatch", "DimensionUnsupported",
    "DistributionSpec", "EccGofError", "FilteredComplex", "Identity",
    "InvalidConfig", "InvalidSpec", "KsReferenceModel", "Laplace", "Logistic",
    "Mixture", "ModelCache", "MultivariateNormal", "Normal", "NotUnivariate",
    "ParseError", "PiecewiseDensity", "PointCloud", "PowerCell",
    "PowerMatrix", "Product", "ReferenceModel", "SizeMismatch", "StepCurve",
    "StudentT", "TestReport", "TooLarge", "TopoTestOneSample",
    "TopoTestTwoSample", "TransformSpec", "Uniform", "alpha_filtration",
    "apply_transform", "as_point_cloud", "build_filtration", "cdf",
    "cech_filtration_bruteforce", "cloud_to_curve", "counterexample_pair",
    "cells_to_csv_text", "cvm_one_sample_1d", "default_specs",
    "derive_seed", "estimate_power",
    "euler_curve", "ks_multivariate", "ks_one_sample_1d",
    "marginal_cdfs", "mean_curve", "mg_spec", "null_statistic_distribution",
    "nulldist_to_csv_text",
    "one_sample_test", "parse_spec", "parse_transform", "power_matrix",
    "power_vs_n", "prepare_ks_reference", "prepare_reference",
    "rescale_cloud", "rips_filtration", "sample", "sample_rng",
    "spec_to_string", "stream", "sup_distance", "transform_to_string",
    "two_sample_test",
]
