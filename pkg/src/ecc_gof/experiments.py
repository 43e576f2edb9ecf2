"""Monte-Carlo power studies: single cells, all-to-all matrices, power-vs-n
sweeps and null-statistic distributions.

Every study is a pure function of its arguments plus one master seed.  Seeds
for individual models and trials are derived from canonical names (the
grammar strings of the distributions involved), never from call order, so a
shared :class:`ModelCache` is observationally transparent and results are
identical across thread counts.

Outputs are plain CSV texts: a long format (one row per power estimate) and
a wide matrix format per method for heatmaps, plus a TopoTest-minus-baseline
difference matrix.
"""

from __future__ import annotations

import csv
import io
import math
import zlib
from dataclasses import dataclass

import numpy as np
from scipy.stats import ks_2samp

from .distributions import (
    DistributionSpec,
    TransformSpec,
    parse_spec,
    sample_rng,
    spec_to_string,
    transform_to_string,
)
from .errors import DimensionMismatch, DimensionUnsupported, InvalidConfig
from .gof import (
    KsReferenceModel,
    ReferenceModel,
    cvm_one_sample_1d,
    ks_multivariate,
    ks_one_sample_1d,
    one_sample_test,
    prepare_ks_reference,
    prepare_reference,
    two_sample_test,
)
from .parallel import ordered_map
from .rand import NS_EXP_CELL, NS_EXP_MODEL, NS_TRIAL, derive_seed, stream

#: Methods understood by :func:`estimate_power`.  ``topotest`` is the
#: one-sample ECC test; ``ks``/``cvm`` are the univariate baselines;
#: ``ks_multivariate`` the orthant baseline for d in {2, 3}; ``topotest2``
#: and ``ks2`` are the two-sample variants (permutation ECC test and the
#: classical two-sample KS).
METHODS = ("topotest", "ks", "cvm", "ks_multivariate", "topotest2", "ks2")
_METHOD_CODES = {name: i for i, name in enumerate(METHODS)}

ONE_SAMPLE_METHODS = ("topotest", "ks", "cvm", "ks_multivariate")
TWO_SAMPLE_METHODS = ("topotest2", "ks2")


def _spec_tag(spec: DistributionSpec) -> int:
    """Stable 32-bit tag of a spec's canonical grammar string."""
    return zlib.crc32(spec_to_string(spec).encode("utf-8"))


@dataclass(frozen=True)
class PowerCell:
    """One Monte-Carlo power estimate.

    ``power`` is the rejection fraction over ``K`` independent trials and
    ``ci_halfwidth`` its 95% normal-approximation half width
    1.96 * sqrt(power * (1 - power) / K).
    """

    null: DistributionSpec
    alt: DistributionSpec
    n: int
    K: int
    alpha: float
    method: str
    power: float
    ci_halfwidth: float
    rejections: int

    @classmethod
    def from_rejections(cls, null, alt, n, K, alpha, method, rejections) -> "PowerCell":
        power = rejections / K
        ci = 1.96 * math.sqrt(power * (1.0 - power) / K)
        return cls(null=null, alt=alt, n=n, K=K, alpha=alpha, method=method,
                   power=power, ci_halfwidth=ci, rejections=rejections)

    @property
    def is_size_entry(self) -> bool:
        """True when null == alt, i.e. the estimate is a type-I error rate."""
        return spec_to_string(self.null) == spec_to_string(self.alt)


class ModelCache:
    """Caches calibrated reference models across power cells.

    Keys include every parameter that affects the model plus the master
    seed, and the model seed is derived from the same key, so cached and
    uncached runs produce identical numbers.
    """

    def __init__(self) -> None:
        self._topo: dict = {}
        self._ks: dict = {}

    def topo_model(self, null: DistributionSpec, n: int, M: int, m: int,
                   alpha: float, seed: int, complex_type: str,
                   transform: TransformSpec | None,
                   threads: int | None = None) -> ReferenceModel:
        key = (spec_to_string(null), n, M, m, complex_type,
               transform_to_string(transform), seed)
        if key not in self._topo:
            model_seed = derive_seed(seed, NS_EXP_MODEL, _spec_tag(null), n, 0)
            self._topo[key] = prepare_reference(
                null, n, M=M, m=m, alpha=alpha, seed=model_seed,
                complex_type=complex_type, transform=transform, threads=threads)
        return self._topo[key]

    def ks_model(self, null: DistributionSpec, n: int, n_cal: int, n_ref: int,
                 alpha: float, seed: int,
                 threads: int | None = None) -> KsReferenceModel:
        key = (spec_to_string(null), n, n_cal, n_ref, seed)
        if key not in self._ks:
            model_seed = derive_seed(seed, NS_EXP_MODEL, _spec_tag(null), n, 1)
            self._ks[key] = prepare_ks_reference(
                null, n, n_cal=n_cal, alpha=alpha, seed=model_seed,
                n_ref=n_ref, threads=threads)
        return self._ks[key]


def estimate_power(null: DistributionSpec, alt: DistributionSpec, n: int,
                   K: int, alpha: float = 0.05, method: str = "topotest",
                   seed: int | None = None, cache: ModelCache | None = None,
                   M: int = 1000, m: int = 1000, complex_type: str = "alpha",
                   transform: TransformSpec | None = None, n_cal: int = 1000,
                   n_ref: int = 100_000, n_permutations: int = 1000,
                   threads: int | None = None) -> PowerCell:
    """Rejection rate of ``method`` over K seeded trials of size n.

    One-sample methods draw each trial from ``alt`` and test it against
    ``null``; two-sample methods draw one sample from each and test them
    against each other.  Reference models are built once per (null, n) and
    reused across trials (and across calls when ``cache`` is shared).
    Trial k of each cell uses its own RNG stream derived from
    (seed, cell identity, k): extending K keeps earlier outcomes, and
    distinct cells never share a stream.
    """
    if seed is None:
        raise InvalidConfig("estimate_power requires an integer seed")
    if method not in _METHOD_CODES:
        raise InvalidConfig(f"unknown method {method!r}; choose from {METHODS}")
    if K < 1:
        raise InvalidConfig("K must be >= 1")
    if null.dim != alt.dim:
        raise DimensionMismatch(
            f"null has dim {null.dim}, alternative has dim {alt.dim}")
    if method in ("ks", "cvm", "ks2") and null.dim != 1:
        raise DimensionUnsupported(f"method {method!r} is univariate-only")
    if method == "ks_multivariate" and null.dim not in (2, 3):
        raise DimensionUnsupported("ks_multivariate supports d in {2, 3}")

    if cache is None:
        cache = ModelCache()
    cell_seed = derive_seed(seed, NS_EXP_CELL, _spec_tag(null), _spec_tag(alt),
                            n, _METHOD_CODES[method])

    if method == "topotest":
        model = cache.topo_model(null, n, M, m, alpha, seed, complex_type,
                                 transform, threads=threads)

        def trial(k: int) -> bool:
            x = sample_rng(alt, n, stream(cell_seed, NS_TRIAL, k))
            return one_sample_test(x, model, alpha=alpha).reject
    elif method == "ks":
        def trial(k: int) -> bool:
            x = sample_rng(alt, n, stream(cell_seed, NS_TRIAL, k))
            return ks_one_sample_1d(x, null, alpha=alpha).reject
    elif method == "cvm":
        def trial(k: int) -> bool:
            x = sample_rng(alt, n, stream(cell_seed, NS_TRIAL, k))
            return cvm_one_sample_1d(x, null, alpha=alpha).reject
    elif method == "ks_multivariate":
        model = cache.ks_model(null, n, n_cal, n_ref, alpha, seed,
                               threads=threads)

        def trial(k: int) -> bool:
            x = sample_rng(alt, n, stream(cell_seed, NS_TRIAL, k))
            return ks_multivariate(x, model=model, alpha=alpha).reject
    elif method == "topotest2":
        def trial(k: int) -> bool:
            x = sample_rng(null, n, stream(cell_seed, NS_TRIAL, k, 0))
            y = sample_rng(alt, n, stream(cell_seed, NS_TRIAL, k, 1))
            perm_seed = derive_seed(cell_seed, NS_TRIAL, k, 2)
            return two_sample_test(x, y, n_permutations=n_permutations,
                                   alpha=alpha, seed=perm_seed,
                                   complex_type=complex_type).reject
    else:  # ks2
        def trial(k: int) -> bool:
            x = sample_rng(null, n, stream(cell_seed, NS_TRIAL, k, 0))
            y = sample_rng(alt, n, stream(cell_seed, NS_TRIAL, k, 1))
            return bool(ks_2samp(x.points[:, 0], y.points[:, 0]).pvalue <= alpha)

    rejections = int(sum(ordered_map(trial, range(K), threads)))
    return PowerCell.from_rejections(null, alt, n, K, alpha, method, rejections)


@dataclass(frozen=True)
class PowerMatrix:
    """All-to-all power grid: one PowerCell per (null, alt, method).

    Diagonal entries (null == alt) are size estimates and should sit near
    the nominal alpha.
    """

    specs: tuple
    n: int
    K: int
    alpha: float
    methods: tuple
    cells: dict  # (null_index, alt_index, method) -> PowerCell

    def cell(self, null_index: int, alt_index: int, method: str) -> PowerCell:
        return self.cells[(null_index, alt_index, method)]

    def all_cells(self) -> list:
        return [self.cells[(i, j, method)]
                for method in self.methods
                for i in range(len(self.specs))
                for j in range(len(self.specs))]

    def average_power(self, method: str) -> float:
        """Mean off-diagonal power for one method."""
        vals = [self.cells[(i, j, method)].power
                for i in range(len(self.specs))
                for j in range(len(self.specs)) if i != j]
        if not vals:
            raise InvalidConfig("matrix has no off-diagonal cells")
        return float(np.mean(vals))

    def matrix_csv_text(self, method: str) -> str:
        """Wide CSV of powers for one method: rows null, columns alt."""
        names = [spec_to_string(s) for s in self.specs]
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["null"] + names)
        for i, row_name in enumerate(names):
            writer.writerow([row_name] + [
                repr(self.cells[(i, j, method)].power)
                for j in range(len(self.specs))])
        return buf.getvalue()

    def difference_csv_text(self, method_a: str, method_b: str) -> str:
        """Wide CSV of power(method_a) - power(method_b) per (null, alt)."""
        names = [spec_to_string(s) for s in self.specs]
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["null"] + names)
        for i, row_name in enumerate(names):
            writer.writerow([row_name] + [
                repr(self.cells[(i, j, method_a)].power
                     - self.cells[(i, j, method_b)].power)
                for j in range(len(self.specs))])
        return buf.getvalue()


def power_matrix(specs, n: int, K: int, alpha: float = 0.05,
                 methods=("topotest",), seed: int | None = None,
                 cache: ModelCache | None = None, **knobs) -> PowerMatrix:
    """Power of every (null, alt) pair drawn from ``specs``, per method.

    Reference models are cached per (null, n) so each null's calibration is
    done once regardless of how many alternatives it faces.  Extra keyword
    arguments are forwarded to :func:`estimate_power`.
    """
    specs = tuple(parse_spec(s) if isinstance(s, str) else s for s in specs)
    if not specs:
        raise InvalidConfig("power_matrix needs at least one spec")
    methods = tuple(methods)
    if cache is None:
        cache = ModelCache()
    cells = {}
    for method in methods:
        for i, null in enumerate(specs):
            for j, alt in enumerate(specs):
                cells[(i, j, method)] = estimate_power(
                    null, alt, n, K, alpha=alpha, method=method, seed=seed,
                    cache=cache, **knobs)
    return PowerMatrix(specs=specs, n=n, K=K, alpha=alpha, methods=methods,
                       cells=cells)


def power_vs_n(null: DistributionSpec, alt: DistributionSpec, n_list, K: int,
               alpha: float = 0.05, methods=("topotest",),
               seed: int | None = None, cache: ModelCache | None = None,
               **knobs) -> list:
    """One PowerCell per sample size per method, for a fixed (null, alt).

    ``n_list`` must be strictly ascending.
    """
    n_list = [int(v) for v in n_list]
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise InvalidConfig("n_list must be strictly ascending")
    if cache is None:
        cache = ModelCache()
    out = []
    for method in tuple(methods):
        for n in n_list:
            out.append(estimate_power(null, alt, n, K, alpha=alpha,
                                      method=method, seed=seed, cache=cache,
                                      **knobs))
    return out


def null_statistic_distribution(null: DistributionSpec, n_list, m: int,
                                seed: int | None = None, M: int | None = None,
                                alpha: float = 0.05,
                                complex_type: str = "alpha",
                                transform: TransformSpec | None = None,
                                cache: ModelCache | None = None,
                                threads: int | None = None) -> list:
    """Calibration statistics Delta_i of the one-sample test per sample size.

    Returns [(n, sorted ndarray of the m statistics), ...] — the raw
    material for histogramming how the null distribution of the statistic
    tightens as n grows.  ``m`` must be at least 500 for a usable picture.
    """
    if m < 500:
        raise InvalidConfig("null_statistic_distribution needs m >= 500")
    if seed is None:
        raise InvalidConfig("null_statistic_distribution requires a seed")
    n_list = [int(v) for v in n_list]
    if M is None:
        M = m
    if cache is None:
        cache = ModelCache()
    out = []
    for n in n_list:
        model = cache.topo_model(null, n, M, m, alpha, seed, complex_type,
                                 transform, threads=threads)
        out.append((n, np.asarray(model.null_stats, dtype=np.float64)))
    return out


# -- CSV output --------------------------------------------------------------

def cells_to_csv_text(cells) -> str:
    """Long-format CSV: null, alt, n, K, method, power, ci."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["null", "alt", "n", "K", "method", "power", "ci"])
    for c in cells:
        writer.writerow([spec_to_string(c.null), spec_to_string(c.alt),
                         c.n, c.K, c.method, repr(c.power),
                         repr(c.ci_halfwidth)])
    return buf.getvalue()


def nulldist_to_csv_text(results) -> str:
    """Long-format CSV of calibration statistics: n, delta."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["n", "delta"])
    for n, deltas in results:
        for value in np.asarray(deltas, dtype=np.float64):
            writer.writerow([n, repr(float(value))])
    return buf.getvalue()


# -- shipped benchmark batteries ---------------------------------------------

#: Default spec lists for all-to-all matrices, one battery per dimension.
#: Families differ in shape (tails, skew, support), never merely by a rigid
#: motion, since the one-sample statistic is isometry-invariant.
DEFAULT_SPECS_1D = (
    "normal(0,1)", "normal(0,1.5)", "t(5)", "cauchy(0,1)", "laplace(0,1)",
    "logistic(0,1)", "uniform(0,1)", "mix(0.7:normal(0,1),0.3:normal(1,2))",
)
DEFAULT_SPECS_2D = (
    "prod(normal(0,1),normal(0,1))", "mg(0.3,2)", "mg(0.5,2)", "mg(0.7,2)",
    "prod(t(3),t(3))", "prod(t(5),t(5))",
    "prod(laplace(0,1),laplace(0,1))", "prod(cauchy(0,1),cauchy(0,1))",
)
DEFAULT_SPECS_3D = (
    "prod(uniform(0,1),uniform(0,1),uniform(0,1))",
    "prod(beta(3,3),beta(3,3),beta(3,3))",
    "prod(cosine(),cosine(),cosine())",
    "prod(uniform(0,1),uniform(0,1),beta(3,3))",
    "prod(uniform(0,1),uniform(0,1),cosine())",
    "prod(beta(3,3),beta(3,3),uniform(0,1))",
    "prod(beta(3,3),beta(3,3),cosine())",
    "prod(cosine(),cosine(),uniform(0,1))",
    "prod(cosine(),cosine(),beta(3,3))",
)


def default_specs(dim: int):
    """The shipped benchmark battery for ``dim`` in {1, 2, 3}."""
    table = {1: DEFAULT_SPECS_1D, 2: DEFAULT_SPECS_2D, 3: DEFAULT_SPECS_3D}
    if dim not in table:
        raise DimensionUnsupported("benchmark batteries cover d in {1, 2, 3}")
    return tuple(parse_spec(s) for s in table[dim])
