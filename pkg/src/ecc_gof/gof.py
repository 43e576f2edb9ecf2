"""Goodness-of-fit tests built on Euler characteristic curves.

One-sample testing is split into an expensive preparation step
(:func:`prepare_reference`: Monte-Carlo estimate of the expected ECC under
the null plus calibration of the test statistic's null distribution) and a
cheap decision step (:func:`one_sample_test`).  Two-sample testing
(:func:`two_sample_test`) is a permutation test and needs no preparation.

Classical baselines live here too: univariate Kolmogorov-Smirnov and
Cramer-von Mises against an explicit CDF, and a multivariate KS variant
whose critical values are calibrated by Monte Carlo with the same machinery
as the ECC test.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma as _gamma_fn
from scipy.special import kolmogorov, kv

from .curves import (
    StepCurve,
    euler_curve,
    normalize_curve,
    rescale_cloud,
    sup_distance,
    sup_distance_argmax,
)
from .distributions import (
    DistributionSpec,
    Identity,
    TransformSpec,
    apply_transform,
    cdf as spec_cdf,
    parse_spec,
    parse_transform,
    sample_rng,
    spec_to_string,
    transform_to_string,
)
from .errors import (
    DimensionMismatch,
    DimensionUnsupported,
    InvalidConfig,
    ParseError,
    SizeMismatch,
)
from .fileio import atomic_write_json
from .geometry import (
    PointCloud,
    alpha_filtration,
    as_point_cloud,
    cech_filtration_bruteforce,
    rips_filtration,
)
from .parallel import ordered_map
from .rand import NS_KS_CAL, NS_KS_REF, NS_MODEL_CAL, NS_MODEL_MEAN, NS_PERMUTE, stream

MODEL_SCHEMA = "ecc-gof-model-v1"
REPORT_SCHEMA = "ecc-gof-report-v1"

_COMPLEXES = ("alpha", "rips", "cech")


@dataclass(frozen=True)
class TestReport:
    """Outcome of a single test.

    ``threshold`` and ``argmax_radius`` are None when the method has no such
    notion (permutation and classical tests report p-values only).
    """

    method: str
    statistic: float
    p_value: float
    reject: bool
    alpha: float
    threshold: float | None = None
    argmax_radius: float | None = None
    details: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "version": REPORT_SCHEMA,
            "method": self.method,
            "statistic": float(self.statistic),
            "p_value": float(self.p_value),
            "reject": bool(self.reject),
            "alpha": float(self.alpha),
            "threshold": None if self.threshold is None else float(self.threshold),
            "argmax_radius": None if self.argmax_radius is None else float(self.argmax_radius),
            "details": self.details,
        }

    def save(self, path) -> None:
        atomic_write_json(path, self.to_json_dict())


def _order_statistic_threshold(sorted_stats: np.ndarray, alpha: float) -> float:
    if not 0.0 < alpha < 1.0:
        raise InvalidConfig("alpha must lie strictly between 0 and 1")
    m = sorted_stats.size
    k = int(math.ceil((1.0 - alpha) * m))
    k = min(max(k, 1), m)
    return float(sorted_stats[k - 1])


def _exceedance_p(sorted_stats: np.ndarray, statistic: float) -> float:
    m = sorted_stats.size
    return float(m - np.searchsorted(sorted_stats, statistic, side="right")) / m


def build_filtration(cloud, complex_type: str = "alpha", maxdim: int | None = None):
    """Filtration dispatch shared by the tests and the CLI."""
    if complex_type == "alpha":
        return alpha_filtration(cloud)
    if complex_type == "rips":
        return rips_filtration(cloud, maxdim=maxdim)
    if complex_type == "cech":
        return cech_filtration_bruteforce(cloud)
    raise InvalidConfig(f"complex must be one of {_COMPLEXES}, got {complex_type!r}")


def cloud_to_curve(cloud, complex_type: str = "alpha", transform: TransformSpec | None = None,
                   maxdim: int | None = None) -> StepCurve:
    """Transform, thermodynamically rescale and return the ECC of a cloud."""
    pc = as_point_cloud(cloud)
    if transform is not None and not isinstance(transform, Identity):
        pc = apply_transform(transform, pc)
    pc = rescale_cloud(pc)
    return euler_curve(build_filtration(pc, complex_type, maxdim))


@dataclass(frozen=True, eq=False)
class ReferenceModel:
    """Calibrated null model for the one-sample ECC test.

    ``mean_ecc`` estimates the expected ECC of a rescaled n-point null
    sample; ``null_stats`` holds the m calibration statistics sorted
    ascending; ``threshold`` is the decision threshold at ``alpha``.
    """

    null: DistributionSpec
    n: int
    dim: int
    M: int
    m: int
    alpha: float
    seed: int
    complex_type: str
    transform: TransformSpec
    mean_ecc: StepCurve
    null_stats: np.ndarray
    threshold: float

    def threshold_for(self, alpha: float) -> float:
        return _order_statistic_threshold(self.null_stats, alpha)

    def p_value(self, statistic: float) -> float:
        return _exceedance_p(self.null_stats, statistic)

    @property
    def null_name(self) -> str:
        return spec_to_string(self.null)

    def to_json_dict(self) -> dict:
        return {
            "version": MODEL_SCHEMA,
            "null": self.null_name,
            "n": int(self.n),
            "dim": int(self.dim),
            "M": int(self.M),
            "m": int(self.m),
            "alpha": float(self.alpha),
            "seed": int(self.seed),
            "complex": self.complex_type,
            "transform": transform_to_string(self.transform),
            "threshold": float(self.threshold),
            "null_stats": [float(s) for s in self.null_stats],
            "mean_ecc": self.mean_ecc.to_json_dict(),
        }

    def save(self, path) -> None:
        atomic_write_json(path, self.to_json_dict())

    @classmethod
    def from_json_dict(cls, obj: dict) -> "ReferenceModel":
        try:
            if obj["version"] != MODEL_SCHEMA:
                raise ParseError(f"unsupported model version {obj.get('version')!r}")
            stats = np.asarray(obj["null_stats"], dtype=np.float64)
            return cls(
                null=parse_spec(obj["null"]),
                n=int(obj["n"]),
                dim=int(obj["dim"]),
                M=int(obj["M"]),
                m=int(obj["m"]),
                alpha=float(obj["alpha"]),
                seed=int(obj["seed"]),
                complex_type=str(obj["complex"]),
                transform=parse_transform(obj["transform"]),
                mean_ecc=StepCurve.from_json_dict(obj["mean_ecc"]),
                null_stats=stats,
                threshold=float(obj["threshold"]),
            )
        except (KeyError, TypeError) as exc:
            raise ParseError(f"malformed model JSON: {exc}") from None

    @classmethod
    def load(cls, path) -> "ReferenceModel":
        with open(path, "r") as fh:
            return cls.from_json_dict(json.load(fh))


def prepare_reference(null_spec: DistributionSpec, n: int, M: int = 1000, m: int = 1000,
                      alpha: float = 0.05, seed: int | None = None,
                      complex_type: str = "alpha", transform: TransformSpec | None = None,
                      maxdim: int | None = None, threads: int | None = None) -> ReferenceModel:
    """Monte-Carlo calibration of the one-sample null model.

    Draws M null samples for the mean ECC and m more for the null
    distribution of the sup statistic.  Each draw uses its own derived
    stream, so results do not depend on thread count and any single draw can
    be reproduced in isolation.
    """
    if seed is None:
        raise InvalidConfig("seed is required")
    if M < 100 or m < 100:
        raise InvalidConfig("M and m must be >= 100")
    if not 0.0 < alpha < 1.0:
        raise InvalidConfig("alpha must lie strictly between 0 and 1")
    dim = null_spec.dim
    if complex_type == "alpha" and n < dim + 2:
        raise InvalidConfig(f"alpha complex needs n >= {dim + 2}")
    transform = transform if transform is not None else Identity()

    def draw_curve(args):
        ns, index = args
        pc = sample_rng(null_spec, n, stream(seed, ns, index))
        return cloud_to_curve(pc, complex_type, transform, maxdim)

    curves = ordered_map(draw_curve, [(NS_MODEL_MEAN, i) for i in range(M)], threads)
    from .curves import mean_curve

    mean = mean_curve(curves)
    root_n = math.sqrt(n)

    def calibrate(args):
        return sup_distance(draw_curve(args), mean) / root_n

    stats = np.sort(np.asarray(
        ordered_map(calibrate, [(NS_MODEL_CAL, j) for j in range(m)], threads)
    ))
    return ReferenceModel(
        null=null_spec, n=n, dim=dim, M=M, m=m, alpha=alpha, seed=seed,
        complex_type=complex_type, transform=transform, mean_ecc=mean,
        null_stats=stats, threshold=_order_statistic_threshold(stats, alpha),
    )


def one_sample_test(x, model: ReferenceModel, alpha: float | None = None) -> TestReport:
    """Test a cloud against a prepared null model.

    The statistic is sup_r |chi(x, r) - mean_ecc(r)| / sqrt(n); the decision
    compares it to the calibrated order-statistic threshold at ``alpha``
    (the model's alpha when not given).
    """
    pc = as_point_cloud(x)
    if pc.dim != model.dim:
        raise DimensionMismatch(f"sample has dim {pc.dim}, model expects {model.dim}")
    if pc.size != model.n:
        raise SizeMismatch(f"sample has {pc.size} points, model expects {model.n}")
    alpha = model.alpha if alpha is None else float(alpha)
    curve = cloud_to_curve(pc, model.complex_type, model.transform)
    raw, argmax_radius = sup_distance_argmax(curve, model.mean_ecc)
    statistic = raw / math.sqrt(model.n)
    threshold = model.threshold_for(alpha)
    return TestReport(
        method="topotest",
        statistic=statistic,
        p_value=model.p_value(statistic),
        reject=bool(statistic > threshold),
        alpha=alpha,
        threshold=threshold,
        argmax_radius=argmax_radius,
        details={"n": model.n, "dim": model.dim, "null": model.null_name,
                 "complex": model.complex_type, "M": model.M, "m": model.m},
    )


def _normalized_curve(points: np.ndarray, complex_type: str, maxdim: int | None) -> StepCurve:
    # Two-sample curves are built on the original coordinates: a per-sample
    # size^(1/d) rescale would cancel exactly the density differences the
    # test is meant to see for unequal sample sizes (for equal sizes it is a
    # common scale factor with no effect on the sup distance).
    pc = PointCloud(points)
    curve = euler_curve(build_filtration(pc, complex_type, maxdim))
    return normalize_curve(curve, pc.size)


def two_sample_test(x, y, n_permutations: int = 1000, alpha: float = 0.05,
                    seed: int | None = None, conservative: bool = False,
                    complex_type: str = "alpha", maxdim: int | None = None,
                    threads: int | None = None) -> TestReport:
    """Permutation test of whether two clouds share a distribution.

    The statistic is the sup distance between per-point-normalised ECCs
    built on the original coordinates.  Permutations pool the coordinates,
    reshuffle with a seeded Fisher-Yates pass and split back into the
    original sizes.  The p-value is the strict exceedance fraction c/K,
    or (c+1)/(K+1) when ``conservative`` is set.
    """
    if seed is None:
        raise InvalidConfig("seed is required")
    if n_permutations < 100:
        raise InvalidConfig("n_permutations must be >= 100")
    px, py = as_point_cloud(x), as_point_cloud(y)
    if px.dim != py.dim:
        raise DimensionMismatch(f"samples have dims {px.dim} and {py.dim}")
    size_x = px.size
    cx = _normalized_curve(px.points, complex_type, maxdim)
    cy = _normalized_curve(py.points, complex_type, maxdim)
    statistic, argmax_radius = sup_distance_argmax(cx, cy)

    pooled = np.concatenate([px.points, py.points], axis=0)
    total = pooled.shape[0]

    def one_permutation(p: int) -> float:
        perm = stream(seed, NS_PERMUTE, p).permutation(total)
        part_x = pooled[perm[:size_x]]
        part_y = pooled[perm[size_x:]]
        return sup_distance(
            _normalized_curve(part_x, complex_type, maxdim),
            _normalized_curve(part_y, complex_type, maxdim),
        )

    perm_stats = np.asarray(ordered_map(one_permutation, range(n_permutations), threads))
    exceed = int(np.count_nonzero(perm_stats > statistic))
    if conservative:
        p_value = (exceed + 1) / (n_permutations + 1)
    else:
        p_value = exceed / n_permutations
    return TestReport(
        method="topotest2",
        statistic=float(statistic),
        p_value=float(p_value),
        reject=bool(p_value <= alpha),
        alpha=float(alpha),
        argmax_radius=argmax_radius,
        details={"m": int(size_x), "n": int(py.size), "dim": int(px.dim),
                 "n_permutations": int(n_permutations), "conservative": bool(conservative),
                 "complex": complex_type, "seed": int(seed)},
    )


# -- classical univariate baselines ------------------------------------------


def _cdf_values(cdf_like, xs: np.ndarray) -> np.ndarray:
    if isinstance(cdf_like, DistributionSpec):
        return np.asarray(spec_cdf(cdf_like, xs), dtype=np.float64)
    out = cdf_like(xs)
    out = np.asarray(out, dtype=np.float64)
    if out.shape != xs.shape:
        out = np.asarray([float(cdf_like(v)) for v in xs])
    return out


def _validated_sorted_cdf(x, cdf_like):
    pc = as_point_cloud(x)
    if pc.dim != 1:
        raise DimensionUnsupported("univariate test needs 1-dimensional data")
    xs = np.sort(pc.points[:, 0])
    F = _cdf_values(cdf_like, xs)
    if np.any(F < -1e-12) or np.any(F > 1 + 1e-12):
        raise InvalidConfig("cdf values must lie in [0, 1]")
    if np.any(np.diff(F) < -1e-12):
        raise InvalidConfig("cdf must be non-decreasing")
    if F.size > 1 and float(F.max() - F.min()) == 0.0:
        raise InvalidConfig("cdf is constant on the sample; not a valid CDF")
    return xs, np.clip(F, 0.0, 1.0)


def ks_one_sample_1d(x, cdf_like, alpha: float = 0.05) -> TestReport:
    """Exact-statistic Kolmogorov-Smirnov test against an explicit CDF.

    p-value from the asymptotic Kolmogorov tail with the standard
    finite-sample correction lambda = (sqrt(n) + 0.12 + 0.11/sqrt(n)) D.
    """
    xs, F = _validated_sorted_cdf(x, cdf_like)
    n = xs.size
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - F)
    d_minus = np.max(F - (i - 1) / n)
    statistic = float(max(d_plus, d_minus))
    lam = (math.sqrt(n) + 0.12 + 0.11 / math.sqrt(n)) * statistic
    p_value = float(kolmogorov(lam))
    return TestReport(
        method="ks", statistic=statistic, p_value=p_value,
        reject=bool(p_value <= alpha), alpha=float(alpha),
        details={"n": int(n)},
    )


def _cvm_cdf(x: float) -> float:
    # limiting distribution of the W^2 statistic (Csorgo & Faraway 1996), 11 terms
    if x <= 0.0:
        return 0.0
    if x >= 10.0:
        return 1.0
    total = 0.0
    for j in range(11):
        q = (4 * j + 1) ** 2 / (16.0 * x)
        if q > 700.0:
            continue
        term = (_gamma_fn(j + 0.5) / math.factorial(j)
                * math.sqrt(4 * j + 1) * math.exp(-q) * kv(0.25, q))
        total += term
    return min(max(total / (math.pi ** 1.5 * math.sqrt(x)), 0.0), 1.0)


def cvm_one_sample_1d(x, cdf_like, alpha: float = 0.05) -> TestReport:
    """Cramer-von Mises test against an explicit CDF.

    Statistic W^2 = 1/(12n) + sum_i (F(x_(i)) - (2i-1)/(2n))^2; the p-value
    uses the asymptotic distribution of n W^2 and is approximate for small n.
    """
    xs, F = _validated_sorted_cdf(x, cdf_like)
    n = xs.size
    i = np.arange(1, n + 1)
    statistic = float(1.0 / (12 * n) + np.sum((F - (2 * i - 1) / (2 * n)) ** 2))
    p_value = 1.0 - _cvm_cdf(statistic)
    return TestReport(
        method="cvm", statistic=statistic, p_value=float(p_value),
        reject=bool(p_value <= alpha), alpha=float(alpha),
        details={"n": int(n), "p_value_approximation": "asymptotic"},
    )


# -- calibrated multivariate KS ----------------------------------------------


def _le_fractions(anchors: np.ndarray, pts: np.ndarray, sorted_cols=None,
                  exclude_self: bool = False) -> dict:
    """Fraction of ``pts`` dominated by each anchor on every coordinate
    subset (bitmask -> (n_anchors,) array).

    With ``exclude_self`` the anchors must themselves be rows of ``pts``;
    each anchor is then left out of its own counts (denominator ``n - 1``).
    An anchor dominates itself on every coordinate, so this subtracts one
    from every subset count uniformly.
    """
    n_a, d = anchors.shape
    total = pts.shape[0]
    drop = 1 if exclude_self else 0
    denom = total - drop
    frac = {0: np.full(n_a, (total - drop) / denom)}
    le = []
    for j in range(d):
        if sorted_cols is not None:
            counts = np.searchsorted(sorted_cols[j], anchors[:, j], side="right")
            frac[1 << j] = (counts - drop) / denom
            le.append(None)
        else:
            mask = pts[None, :, j] <= anchors[:, j, None]
            frac[1 << j] = (mask.sum(axis=1) - drop) / denom
            le.append(mask)
    if d == 1:
        return frac
    if sorted_cols is not None:
        le = [pts[None, :, j] <= anchors[:, j, None] for j in range(d)]
    for mask_bits in range(1, 1 << d):
        if mask_bits in frac:
            continue
        j = (mask_bits & -mask_bits).bit_length() - 1
        combined = le[j].copy()
        for k in range(d):
            if k != j and (mask_bits >> k) & 1:
                combined &= le[k]
        frac[mask_bits] = (combined.sum(axis=1) - drop) / denom
    return frac


def _orthant_statistic(x_points: np.ndarray, ref_points: np.ndarray, sorted_cols) -> float:
    """Max over data anchors and 2^d orthant orientations of
    |empirical - reference| orthant mass."""
    d = x_points.shape[1]
    full = (1 << d) - 1
    emp = _le_fractions(x_points, x_points, exclude_self=True)
    ref = _le_fractions(x_points, ref_points, sorted_cols=sorted_cols)
    best = 0.0
    for orientation in range(1 << d):
        zeros_mask = ~orientation & full
        emp_p = np.zeros(x_points.shape[0])
        ref_p = np.zeros(x_points.shape[0])
        t = orientation
        while True:
            sign = -1.0 if bin(t).count("1") % 2 else 1.0
            emp_p += sign * emp[zeros_mask | t]
            ref_p += sign * ref[zeros_mask | t]
            if t == 0:
                break
            t = (t - 1) & orientation
        best = max(best, float(np.max(np.abs(emp_p - ref_p))))
    return best


@dataclass(frozen=True, eq=False)
class KsReferenceModel:
    """Calibrated null model for the multivariate KS variant."""

    null: DistributionSpec
    n: int
    dim: int
    n_ref: int
    m: int
    alpha: float
    seed: int
    ref_points: np.ndarray
    sorted_cols: tuple
    null_stats: np.ndarray
    threshold: float

    def threshold_for(self, alpha: float) -> float:
        return _order_statistic_threshold(self.null_stats, alpha)

    def p_value(self, statistic: float) -> float:
        return _exceedance_p(self.null_stats, statistic)


def prepare_ks_reference(null_spec: DistributionSpec, n: int, n_cal: int = 1000,
                         alpha: float = 0.05, seed: int | None = None,
                         n_ref: int = 100_000, threads: int | None = None) -> KsReferenceModel:
    """Calibrate the multivariate KS statistic under the null.

    Orthant probabilities under the null come from one large reference
    sample (``n_ref`` points); ``n_cal`` Monte-Carlo draws of size n give
    the statistic's null distribution, threshold and p-values, mirroring
    :func:`prepare_reference`.
    """
    if seed is None:
        raise InvalidConfig("seed is required")
    if n_cal < 100:
        raise InvalidConfig("n_cal must be >= 100")
    dim = null_spec.dim
    ref = sample_rng(null_spec, n_ref, stream(seed, NS_KS_REF)).points
    sorted_cols = tuple(np.sort(ref[:, j]) for j in range(dim))

    def calibrate(j: int) -> float:
        pts = sample_rng(null_spec, n, stream(seed, NS_KS_CAL, j)).points
        return _orthant_statistic(pts, ref, sorted_cols)

    stats = np.sort(np.asarray(ordered_map(calibrate, range(n_cal), threads)))
    return KsReferenceModel(
        null=null_spec, n=n, dim=dim, n_ref=n_ref, m=n_cal, alpha=alpha, seed=seed,
        ref_points=ref, sorted_cols=sorted_cols, null_stats=stats,
        threshold=_order_statistic_threshold(stats, alpha),
    )


def ks_multivariate(x, null_spec: DistributionSpec | None = None, n_cal: int = 1000,
                    seed: int | None = None, alpha: float = 0.05,
                    model: KsReferenceModel | None = None, n_ref: int = 100_000,
                    threads: int | None = None) -> TestReport:
    """Multivariate KS test: max orthant discrepancy over data anchors and
    all 2^d orientations, with Monte-Carlo calibrated critical values.

    Pass a prebuilt ``model`` to amortise calibration across many tests.
    """
    pc = as_point_cloud(x)
    if model is None:
        if null_spec is None:
            raise InvalidConfig("need a null spec or a prebuilt model")
        model = prepare_ks_reference(null_spec, pc.size, n_cal=n_cal, alpha=alpha,
                                     seed=seed, n_ref=n_ref, threads=threads)
    if pc.dim != model.dim:
        raise DimensionMismatch(f"sample has dim {pc.dim}, model expects {model.dim}")
    if pc.size != model.n:
        raise SizeMismatch(f"sample has {pc.size} points, model expects {model.n}")
    statistic = _orthant_statistic(pc.points, model.ref_points, model.sorted_cols)
    threshold = model.threshold_for(alpha)
    return TestReport(
        method="ks_multivariate", statistic=float(statistic),
        p_value=model.p_value(statistic), reject=bool(statistic > threshold),
        alpha=float(alpha), threshold=threshold,
        details={"n": int(model.n), "dim": int(model.dim), "n_ref": int(model.n_ref),
                 "m": int(model.m)},
    )
