"""scikit-learn style wrappers around the functional testing API.

``TopoTestOneSample`` calibrates a null model in ``fit`` and then judges
whole samples in ``predict``/``test``.  ``TopoTestTwoSample`` stores a
reference sample in ``fit`` and runs the permutation test against it.
Both follow the estimator contract (``get_params``/``set_params``/clone)
so they compose with scikit-learn tooling; "X" is always one point cloud,
an (n, d) array, and a prediction concerns the sample as a whole rather
than individual rows.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .distributions import (
    DistributionSpec,
    TransformSpec,
    parse_spec,
    parse_transform,
)
from .errors import InvalidConfig
from .geometry import as_point_cloud
from .gof import one_sample_test, prepare_reference, two_sample_test


def _as_spec(value) -> DistributionSpec:
    if isinstance(value, DistributionSpec):
        return value
    return parse_spec(str(value))


def _as_transform(value) -> TransformSpec | None:
    if value is None or isinstance(value, TransformSpec):
        return value
    return parse_transform(str(value))


class TopoTestOneSample(BaseEstimator):
    """One-sample goodness-of-fit test with a Monte-Carlo calibrated null.

    Parameters
    ----------
    null : grammar string or DistributionSpec, the null distribution.
    n : sample size the model is calibrated for (tests require exactly n
        points).
    M, m : Monte-Carlo budget — M draws for the expected curve, m for the
        null statistic distribution.
    alpha : significance level used by ``predict``.
    complex_type : "alpha", "rips" or "cech" filtration backend.
    transform : optional support transform ("identity", "arctan(...)",
        "copula(...)"); applied to every sample before the filtration.
    random_state : integer seed; required before calling ``fit``.
    threads : worker threads for calibration (results identical for any
        value).

    Attributes
    ----------
    reference_ : the calibrated ReferenceModel, available after ``fit``.
    """

    def __init__(self, null="normal(0,1)", n=100, M=1000, m=1000, alpha=0.05,
                 complex_type="alpha", transform=None, random_state=None,
                 threads=None):
        self.null = null
        self.n = n
        self.M = M
        self.m = m
        self.alpha = alpha
        self.complex_type = complex_type
        self.transform = transform
        self.random_state = random_state
        self.threads = threads

    def fit(self, X=None, y=None):
        """Calibrate the null model.  X is unused (API compatibility)."""
        if self.random_state is None:
            raise InvalidConfig("random_state must be an integer seed; "
                                "calibration is Monte-Carlo")
        self.reference_ = prepare_reference(
            _as_spec(self.null), int(self.n), M=int(self.M), m=int(self.m),
            alpha=float(self.alpha), seed=int(self.random_state),
            complex_type=self.complex_type,
            transform=_as_transform(self.transform), threads=self.threads)
        return self

    def _check_fitted(self):
        if not hasattr(self, "reference_"):
            raise NotFittedError("call fit() before testing samples")

    def test(self, X, alpha=None):
        """Full TestReport for one sample (an (n, d) array)."""
        self._check_fitted()
        return one_sample_test(as_point_cloud(X), self.reference_, alpha=alpha)

    def predict(self, X):
        """True when the sample is rejected as coming from the null."""
        return bool(self.test(X).reject)

    def statistic(self, X) -> float:
        return float(self.test(X).statistic)

    def p_value(self, X) -> float:
        return float(self.test(X).p_value)


class TopoTestTwoSample(BaseEstimator):
    """Two-sample permutation test against a stored reference sample.

    ``fit(X)`` keeps X; ``test(Y)``/``predict(Y)`` run the permutation test
    of X against Y.  ``random_state`` seeds the permutations and is
    required at fit time.
    """

    def __init__(self, n_permutations=1000, alpha=0.05, complex_type="alpha",
                 conservative=False, random_state=None, threads=None):
        self.n_permutations = n_permutations
        self.alpha = alpha
        self.complex_type = complex_type
        self.conservative = conservative
        self.random_state = random_state
        self.threads = threads

    def fit(self, X, y=None):
        """Store the reference sample X (an (n, d) array)."""
        if self.random_state is None:
            raise InvalidConfig("random_state must be an integer seed; "
                                "the permutation test is Monte-Carlo")
        self.X_ = as_point_cloud(X)
        return self

    def _check_fitted(self):
        if not hasattr(self, "X_"):
            raise NotFittedError("call fit(X) before testing against Y")

    def test(self, Y, alpha=None):
        self._check_fitted()
        return two_sample_test(
            self.X_, as_point_cloud(Y),
            n_permutations=int(self.n_permutations),
            alpha=float(self.alpha if alpha is None else alpha),
            seed=int(self.random_state), conservative=bool(self.conservative),
            complex_type=self.complex_type, threads=self.threads)

    def predict(self, Y):
        """True when X and Y are rejected as sharing a distribution."""
        return bool(self.test(Y).reject)

    def p_value(self, Y) -> float:
        return float(self.test(Y).p_value)
