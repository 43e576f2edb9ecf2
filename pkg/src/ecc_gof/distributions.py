"""Sampling specifications, CDFs, coordinate transforms and a text grammar.

A :class:`DistributionSpec` is a small immutable description of a sampling
distribution.  Everything stochastic flows through
``sample(spec, n, seed)`` so a draw is reproducible from the triple alone.

The text grammar used by the command line::

    normal(0,1)   uniform(0,1)   beta(3,3)   cosine()   t(5)
    cauchy(0,1)   laplace(0,1)   logistic(0,1)
    piecewise([0,2,3],[0.25,0.5])
    prod(t(5),t(5))
    mix(0.7:normal(0,1),0.3:normal(0,2))
    mvn([0,0],[[1,0.5],[0.5,1]])
    mg(0.5,2)        # shorthand: zero-mean mvn, unit variance, covariance a
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import betainc, ndtr, stdtr

from .errors import InvalidSpec, NotUnivariate, ParseError
from .geometry import PointCloud, as_point_cloud
from .rand import NS_SAMPLE, stream


class DistributionSpec:
    """Base class; concrete specs are frozen dataclasses below."""

    @property
    def dim(self) -> int:
        raise NotImplementedError


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise InvalidSpec(message)


@dataclass(frozen=True)
class Normal(DistributionSpec):
    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        _require(self.sigma > 0, "normal needs sigma > 0")

    @property
    def dim(self):
        return 1


@dataclass(frozen=True)
class Uniform(DistributionSpec):
    a: float = 0.0
    b: float = 1.0

    def __post_init__(self):
        _require(self.b > self.a, "uniform needs b > a")

    @property
    def dim(self):
        return 1


@dataclass(frozen=True)
class Beta(DistributionSpec):
    a: float
    b: float

    def __post_init__(self):
        _require(self.a > 0 and self.b > 0, "beta needs positive shape parameters")

    @property
    def dim(self):
        return 1


@dataclass(frozen=True)
class Cosine(DistributionSpec):
    """Raised-cosine bump on [0, 1]: density 1 - cos(2 pi x)."""

    @property
    def dim(self):
        return 1


@dataclass(frozen=True)
class StudentT(DistributionSpec):
    nu: float

    def __post_init__(self):
        _require(self.nu > 0, "t needs nu > 0")

    @property
    def dim(self):
        return 1


@dataclass(frozen=True)
class Cauchy(DistributionSpec):
    loc: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        _require(self.scale > 0, "cauchy needs scale > 0")

    @property
    def dim(self):
        return 1


@dataclass(frozen=True)
class Laplace(DistributionSpec):
    loc: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        _require(self.scale > 0, "laplace needs scale > 0")

    @property
    def dim(self):
        return 1


@dataclass(frozen=True)
class Logistic(DistributionSpec):
    loc: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        _require(self.scale > 0, "logistic needs scale > 0")

    @property
    def dim(self):
        return 1


@dataclass(frozen=True)
class PiecewiseDensity(DistributionSpec):
    """Piecewise-constant density on consecutive intervals.

    ``breakpoints`` has k+1 strictly increasing entries, ``heights`` the k
    non-negative densities; total mass must be 1 within 1e-12.
    """

    breakpoints: tuple
    heights: tuple

    def __post_init__(self):
        bp = tuple(float(b) for b in self.breakpoints)
        hs = tuple(float(h) for h in self.heights)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "heights", hs)
        _require(len(bp) == len(hs) + 1 and len(hs) >= 1, "need k+1 breakpoints for k heights")
        _require(all(b2 > b1 for b1, b2 in zip(bp, bp[1:])), "breakpoints must increase")
        _require(all(h >= 0 for h in hs), "heights must be non-negative")
        mass = sum(h * (b2 - b1) for h, b1, b2 in zip(hs, bp, bp[1:]))
        _require(abs(mass - 1.0) <= 1e-12, f"density mass {mass} != 1")

    @property
    def dim(self):
        return 1


@dataclass(frozen=True)
class Product(DistributionSpec):
    """Independent product of univariate components."""

    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        object.__setattr__(self, "components", comps)
        _require(len(comps) >= 1, "product needs at least one component")
        _require(all(isinstance(c, DistributionSpec) and c.dim == 1 for c in comps),
                 "product components must be univariate specs")

    @property
    def dim(self):
        return len(self.components)


@dataclass(frozen=True)
class Mixture(DistributionSpec):
    weights: tuple
    components: tuple

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        comps = tuple(self.components)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "components", comps)
        _require(len(w) == len(comps) and len(w) >= 1, "one weight per component")
        _require(all(x > 0 for x in w), "mixture weights must be positive")
        _require(abs(sum(w) - 1.0) <= 1e-12, "mixture weights must sum to 1")
        _require(all(isinstance(c, DistributionSpec) for c in comps), "components must be specs")
        dims = {c.dim for c in comps}
        _require(len(dims) == 1, "mixture components must share a dimension")

    @property
    def dim(self):
        return self.components[0].dim


@dataclass(frozen=True)
class MultivariateNormal(DistributionSpec):
    mean: tuple
    cov: tuple  # row tuples

    def __post_init__(self):
        mean = tuple(float(x) for x in self.mean)
        cov = tuple(tuple(float(x) for x in row) for row in self.cov)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        d = len(mean)
        _require(d >= 1, "mvn needs at least one coordinate")
        _require(len(cov) == d and all(len(row) == d for row in cov), "cov must be d x d")
        arr = np.asarray(cov)
        _require(np.allclose(arr, arr.T, atol=1e-12), "cov must be symmetric")
        try:
            np.linalg.cholesky(arr)
        except np.linalg.LinAlgError:
            raise InvalidSpec("cov must be positive definite") from None

    @property
    def dim(self):
        return len(self.mean)

    def cholesky(self) -> np.ndarray:
        return np.linalg.cholesky(np.asarray(self.cov))


def mg_spec(a: float, dim: int = 2) -> MultivariateNormal:
    """Equicorrelated zero-mean Gaussian: unit variances, covariance a."""
    _require(dim >= 2, "mg needs dim >= 2")
    _require(-1.0 / (dim - 1) < a < 1.0, "mg covariance outside the positive-definite range")
    cov = np.full((dim, dim), float(a))
    np.fill_diagonal(cov, 1.0)
    return MultivariateNormal(tuple(0.0 for _ in range(dim)), tuple(map(tuple, cov)))


def counterexample_pair():
    """Two distinct densities whose alpha-complex ECCs agree in expectation.

    Both have super-level-set mass 1 for t <= 1/4, 1/2 for 1/4 < t <= 1/2 and
    0 above, which is what drives the expected Euler curve; a distribution
    test built on the ECC cannot separate them, while plain KS does easily.
    """
    f = PiecewiseDensity((0.0, 2.0, 3.0), (0.25, 0.5))
    g = PiecewiseDensity((0.0, 1.0, 2.0, 3.0), (0.25, 0.5, 0.25))
    return f, g


# -- sampling ---------------------------------------------------------------


def _cosine_ppf(u: np.ndarray) -> np.ndarray:
    # invert F(x) = x - sin(2 pi x) / (2 pi) by bisection; F' >= 0 on [0, 1]
    lo = np.zeros_like(u)
    hi = np.ones_like(u)
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        val = mid - np.sin(2 * np.pi * mid) / (2 * np.pi)
        take_hi = val < u
        lo = np.where(take_hi, mid, lo)
        hi = np.where(take_hi, hi, mid)
    return 0.5 * (lo + hi)


def _piecewise_ppf(spec: PiecewiseDensity, u: np.ndarray) -> np.ndarray:
    bp = np.asarray(spec.breakpoints)
    hs = np.asarray(spec.heights)
    cum = np.concatenate([[0.0], np.cumsum(hs * np.diff(bp))])
    cum[-1] = 1.0
    idx = np.clip(np.searchsorted(cum, u, side="right") - 1, 0, hs.size - 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        offset = np.where(hs[idx] > 0, (u - cum[idx]) / hs[idx], 0.0)
    return bp[idx] + offset


def sample_rng(spec: DistributionSpec, n: int, rng: np.random.Generator) -> PointCloud:
    """Draw n points from ``spec`` using an existing generator."""
    if n < 1:
        raise InvalidSpec("need n >= 1 draws")
    if isinstance(spec, Normal):
        x = spec.mu + spec.sigma * rng.standard_normal(n)
    elif isinstance(spec, Uniform):
        x = spec.a + (spec.b - spec.a) * rng.random(n)
    elif isinstance(spec, Beta):
        x = rng.beta(spec.a, spec.b, size=n)
    elif isinstance(spec, Cosine):
        x = _cosine_ppf(rng.random(n))
    elif isinstance(spec, StudentT):
        z = rng.standard_normal(n)
        v = rng.chisquare(spec.nu, size=n)
        x = z / np.sqrt(v / spec.nu)
    elif isinstance(spec, Cauchy):
        x = spec.loc + spec.scale * np.tan(np.pi * (rng.random(n) - 0.5))
    elif isinstance(spec, Laplace):
        u = rng.random(n) - 0.5
        x = spec.loc - spec.scale * np.sign(u) * np.log1p(-2.0 * np.abs(u))
    elif isinstance(spec, Logistic):
        u = rng.random(n)
        x = spec.loc + spec.scale * (np.log(u) - np.log1p(-u))
    elif isinstance(spec, PiecewiseDensity):
        x = _piecewise_ppf(spec, rng.random(n))
    elif isinstance(spec, Product):
        cols = [sample_rng(c, n, rng).points[:, 0] for c in spec.components]
        return PointCloud(np.stack(cols, axis=1))
    elif isinstance(spec, Mixture):
        idx = rng.choice(len(spec.weights), size=n, p=np.asarray(spec.weights))
        out = np.empty((n, spec.dim))
        for j, comp in enumerate(spec.components):
            rows = np.nonzero(idx == j)[0]
            if rows.size:
                out[rows] = sample_rng(comp, rows.size, rng).points
        return PointCloud(out)
    elif isinstance(spec, MultivariateNormal):
        z = rng.standard_normal((n, spec.dim))
        return PointCloud(np.asarray(spec.mean) + z @ spec.cholesky().T)
    else:
        raise InvalidSpec(f"unknown spec {spec!r}")
    return PointCloud(x[:, None])


def sample(spec: DistributionSpec, n: int, seed: int) -> PointCloud:
    """Draw n points; identical output for identical (spec, n, seed)."""
    return sample_rng(spec, n, stream(seed, NS_SAMPLE))


# -- CDFs -------------------------------------------------------------------


def cdf(spec: DistributionSpec, x):
    """Vectorised CDF of a univariate spec; NotUnivariate otherwise."""
    arr = np.asarray(x, dtype=np.float64)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if isinstance(spec, Normal):
        out = ndtr((arr - spec.mu) / spec.sigma)
    elif isinstance(spec, Uniform):
        out = np.clip((arr - spec.a) / (spec.b - spec.a), 0.0, 1.0)
    elif isinstance(spec, Beta):
        out = betainc(spec.a, spec.b, np.clip(arr, 0.0, 1.0))
    elif isinstance(spec, Cosine):
        t = np.clip(arr, 0.0, 1.0)
        out = t - np.sin(2 * np.pi * t) / (2 * np.pi)
    elif isinstance(spec, StudentT):
        out = stdtr(spec.nu, arr)
    elif isinstance(spec, Cauchy):
        out = 0.5 + np.arctan((arr - spec.loc) / spec.scale) / np.pi
    elif isinstance(spec, Laplace):
        z = (arr - spec.loc) / spec.scale
        out = np.where(z < 0, 0.5 * np.exp(z), 1.0 - 0.5 * np.exp(-z))
    elif isinstance(spec, Logistic):
        out = 1.0 / (1.0 + np.exp(-(arr - spec.loc) / spec.scale))
    elif isinstance(spec, PiecewiseDensity):
        bp = np.asarray(spec.breakpoints)
        hs = np.asarray(spec.heights)
        cum = np.concatenate([[0.0], np.cumsum(hs * np.diff(bp))])
        t = np.clip(arr, bp[0], bp[-1])
        idx = np.clip(np.searchsorted(bp, t, side="right") - 1, 0, hs.size - 1)
        out = np.minimum(cum[idx] + hs[idx] * (t - bp[idx]), 1.0)
    elif isinstance(spec, Mixture):
        if spec.dim != 1:
            raise NotUnivariate("cdf needs a univariate spec")
        out = np.zeros_like(arr)
        for w, comp in zip(spec.weights, spec.components):
            out = out + w * cdf(comp, arr)
    elif isinstance(spec, DistributionSpec):
        raise NotUnivariate("cdf needs a univariate spec")
    else:
        raise InvalidSpec(f"unknown spec {spec!r}")
    return float(out[0]) if scalar else out


def marginal_cdfs(spec: DistributionSpec):
    """Per-coordinate marginal specs, where they have closed form."""
    if spec.dim == 1:
        return (spec,)
    if isinstance(spec, Product):
        return spec.components
    if isinstance(spec, MultivariateNormal):
        return tuple(Normal(m, math.sqrt(spec.cov[i][i])) for i, m in enumerate(spec.mean))
    if isinstance(spec, Mixture):
        per_comp = [marginal_cdfs(c) for c in spec.components]
        return tuple(
            Mixture(spec.weights, tuple(mc[j] for mc in per_comp))
            for j in range(spec.dim)
        )
    raise InvalidSpec(f"no closed-form marginals for {spec!r}")


# -- transforms -------------------------------------------------------------


class TransformSpec:
    """Base class for coordinatewise transforms applied before testing."""


@dataclass(frozen=True)
class Identity(TransformSpec):
    pass


@dataclass(frozen=True)
class ArctanRescale(TransformSpec):
    """x -> arctan(gamma * x) per coordinate; gamma scalar or per-coordinate."""

    gamma: tuple

    def __post_init__(self):
        g = self.gamma
        if np.isscalar(g):
            g = (float(g),)
        g = tuple(float(x) for x in g)
        _require(all(x > 0 for x in g), "arctan gamma must be positive")
        object.__setattr__(self, "gamma", g)

    @staticmethod
    def gamma_for_std(sigma: float) -> float:
        """Pick gamma so 10 standard deviations land in [-2, 2]."""
        _require(sigma > 0, "sigma must be positive")
        return 1.0 / (5.0 * sigma)


@dataclass(frozen=True)
class CopulaPIT(TransformSpec):
    """Probability integral transform: coordinate j maps through marginal j."""

    marginals: tuple

    def __post_init__(self):
        m = tuple(self.marginals)
        _require(len(m) >= 1 and all(isinstance(s, DistributionSpec) and s.dim == 1 for s in m),
                 "copula needs univariate marginal specs")
        object.__setattr__(self, "marginals", m)


def apply_transform(t: TransformSpec, cloud) -> PointCloud:
    pc = as_point_cloud(cloud)
    if isinstance(t, Identity):
        return pc
    if isinstance(t, ArctanRescale):
        g = np.asarray(t.gamma)
        if g.size == 1:
            g = np.full(pc.dim, g[0])
        if g.size != pc.dim:
            raise InvalidSpec(f"arctan needs 1 or {pc.dim} gammas, got {g.size}")
        return PointCloud(np.arctan(pc.points * g))
    if isinstance(t, CopulaPIT):
        if len(t.marginals) != pc.dim:
            raise InvalidSpec(f"copula needs {pc.dim} marginals, got {len(t.marginals)}")
        cols = [cdf(m, pc.points[:, j]) for j, m in enumerate(t.marginals)]
        return PointCloud(np.stack(cols, axis=1))
    raise InvalidSpec(f"unknown transform {t!r}")


# -- text grammar -----------------------------------------------------------


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, message: str):
        raise ParseError(f"{message} at position {self.pos} in {self.text!r}",
                         position=self.pos)

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self):
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str):
        if self.peek() != ch:
            self.error(f"expected {ch!r}")
        self.pos += 1

    def name(self) -> str:
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.text) and (self.text[self.pos].isalnum() or self.text[self.pos] == "_"):
            self.pos += 1
        if start == self.pos:
            self.error("expected a name")
        return self.text[start:self.pos].lower()

    def number(self) -> float:
        self.skip_ws()
        start = self.pos
        allowed = "+-0123456789.eE"
        while self.pos < len(self.text) and self.text[self.pos] in allowed:
            if self.text[self.pos] in "+-" and self.pos > start and self.text[self.pos - 1] not in "eE":
                break
            self.pos += 1
        token = self.text[start:self.pos]
        try:
            return float(token)
        except ValueError:
            self.error(f"bad number {token!r}")

    def list_of_numbers(self):
        self.expect("[")
        out = []
        if self.peek() == "]":
            self.pos += 1
            return tuple(out)
        while True:
            out.append(self.number())
            ch = self.peek()
            if ch == ",":
                self.pos += 1
            elif ch == "]":
                self.pos += 1
                return tuple(out)
            else:
                self.error("expected ',' or ']'")

    def matrix(self):
        self.expect("[")
        rows = []
        while True:
            rows.append(self.list_of_numbers())
            ch = self.peek()
            if ch == ",":
                self.pos += 1
            elif ch == "]":
                self.pos += 1
                return tuple(rows)
            else:
                self.error("expected ',' or ']'")

    def arguments_end(self) -> bool:
        return self.peek() == ")"


_SIMPLE_FAMILIES = {
    "normal": (Normal, 2, (0.0, 1.0)),
    "uniform": (Uniform, 2, (0.0, 1.0)),
    "beta": (Beta, 2, None),
    "t": (StudentT, 1, None),
    "cauchy": (Cauchy, 2, (0.0, 1.0)),
    "laplace": (Laplace, 2, (0.0, 1.0)),
    "logistic": (Logistic, 2, (0.0, 1.0)),
}


def _parse_spec_inner(p: _Parser) -> DistributionSpec:
    name = p.name()
    p.expect("(")
    if name in _SIMPLE_FAMILIES:
        cls, argc, defaults = _SIMPLE_FAMILIES[name]
        args = []
        while not p.arguments_end():
            args.append(p.number())
            if p.peek() == ",":
                p.pos += 1
        p.expect(")")
        if not args and defaults is not None:
            args = list(defaults)
        if len(args) != argc:
            p.error(f"{name} takes {argc} arguments")
        return cls(*args)
    if name == "cosine":
        p.expect(")")
        return Cosine()
    if name == "piecewise":
        bp = p.list_of_numbers()
        p.expect(",")
        hs = p.list_of_numbers()
        p.expect(")")
        return PiecewiseDensity(bp, hs)
    if name == "prod":
        comps = []
        while not p.arguments_end():
            comps.append(_parse_spec_inner(p))
            if p.peek() == ",":
                p.pos += 1
        p.expect(")")
        return Product(tuple(comps))
    if name == "mix":
        weights = []
        comps = []
        while not p.arguments_end():
            weights.append(p.number())
            p.expect(":")
            comps.append(_parse_spec_inner(p))
            if p.peek() == ",":
                p.pos += 1
        p.expect(")")
        return Mixture(tuple(weights), tuple(comps))
    if name == "mvn":
        mean = p.list_of_numbers()
        p.expect(",")
        cov = p.matrix()
        p.expect(")")
        return MultivariateNormal(mean, cov)
    if name == "mg":
        a = p.number()
        d = 2
        if p.peek() == ",":
            p.pos += 1
            d = int(p.number())
        p.expect(")")
        return mg_spec(a, d)
    p.error(f"unknown family {name!r}")


def parse_spec(text: str) -> DistributionSpec:
    """Parse the distribution grammar; raises ParseError on bad input."""
    p = _Parser(text)
    try:
        spec = _parse_spec_inner(p)
    except InvalidSpec as exc:
        raise ParseError(f"{exc} in {text!r}") from None
    p.skip_ws()
    if p.pos != len(p.text):
        p.error("trailing input")
    return spec


def _fmt(x: float) -> str:
    return repr(float(x))


def spec_to_string(spec: DistributionSpec) -> str:
    """Canonical grammar string; parse_spec(spec_to_string(s)) == s."""
    if isinstance(spec, Normal):
        return f"normal({_fmt(spec.mu)},{_fmt(spec.sigma)})"
    if isinstance(spec, Uniform):
        return f"uniform({_fmt(spec.a)},{_fmt(spec.b)})"
    if isinstance(spec, Beta):
        return f"beta({_fmt(spec.a)},{_fmt(spec.b)})"
    if isinstance(spec, Cosine):
        return "cosine()"
    if isinstance(spec, StudentT):
        return f"t({_fmt(spec.nu)})"
    if isinstance(spec, Cauchy):
        return f"cauchy({_fmt(spec.loc)},{_fmt(spec.scale)})"
    if isinstance(spec, Laplace):
        return f"laplace({_fmt(spec.loc)},{_fmt(spec.scale)})"
    if isinstance(spec, Logistic):
        return f"logistic({_fmt(spec.loc)},{_fmt(spec.scale)})"
    if isinstance(spec, PiecewiseDensity):
        bp = ",".join(_fmt(b) for b in spec.breakpoints)
        hs = ",".join(_fmt(h) for h in spec.heights)
        return f"piecewise([{bp}],[{hs}])"
    if isinstance(spec, Product):
        return "prod(" + ",".join(spec_to_string(c) for c in spec.components) + ")"
    if isinstance(spec, Mixture):
        parts = [f"{_fmt(w)}:{spec_to_string(c)}" for w, c in zip(spec.weights, spec.components)]
        return "mix(" + ",".join(parts) + ")"
    if isinstance(spec, MultivariateNormal):
        mean = ",".join(_fmt(x) for x in spec.mean)
        rows = ",".join("[" + ",".join(_fmt(x) for x in row) + "]" for row in spec.cov)
        return f"mvn([{mean}],[{rows}])"
    raise InvalidSpec(f"unknown spec {spec!r}")


def parse_transform(text: str) -> TransformSpec:
    """Parse 'identity', 'arctan(g[,g2,...])' or 'copula(m1,m2,...)'."""
    p = _Parser(text)
    name = p.name()
    if name == "identity":
        p.skip_ws()
        if p.pos != len(p.text):
            p.error("trailing input")
        return Identity()
    p.expect("(")
    if name == "arctan":
        gammas = []
        while not p.arguments_end():
            gammas.append(p.number())
            if p.peek() == ",":
                p.pos += 1
        p.expect(")")
        if not gammas:
            p.error("arctan needs at least one gamma")
        return ArctanRescale(tuple(gammas))
    if name == "copula":
        marginals = []
        while not p.arguments_end():
            marginals.append(_parse_spec_inner(p))
            if p.peek() == ",":
                p.pos += 1
        p.expect(")")
        return CopulaPIT(tuple(marginals))
    p.error(f"unknown transform {name!r}")


def transform_to_string(t: TransformSpec | None) -> str:
    if t is None or isinstance(t, Identity):
        return "identity"
    if isinstance(t, ArctanRescale):
        return "arctan(" + ",".join(_fmt(g) for g in t.gamma) + ")"
    if isinstance(t, CopulaPIT):
        return "copula(" + ",".join(spec_to_string(m) for m in t.marginals) + ")"
    raise InvalidSpec(f"unknown transform {t!r}")
