"""Euler characteristic curves and exact step-function algebra.

A :class:`StepCurve` is a right-continuous, eventually constant step function
on [0, inf).  Curves are never sampled on a grid: averaging and sup-distance
work on the exact union of breakpoints, so equal-radius events merge and
nothing is lost to discretisation.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidConfig, ParseError
from .geometry import FilteredComplex, PointCloud, as_point_cloud


@dataclass(frozen=True, eq=False)
class StepCurve:
    """Right-continuous step function on [0, inf).

    ``breakpoints`` is a strictly increasing (k,) array of positive radii and
    ``values`` a (k+1,) array; the function equals ``values[i]`` on
    ``[breakpoints[i-1], breakpoints[i])`` (with breakpoints[-1] read as 0 and
    breakpoints[k] as infinity).  Events at radius 0 are folded into
    ``values[0]``.
    """

    breakpoints: np.ndarray
    values: np.ndarray
    integer_valued: bool = False

    def __post_init__(self):
        bp = np.ascontiguousarray(np.asarray(self.breakpoints, dtype=np.float64))
        va = np.ascontiguousarray(np.asarray(self.values, dtype=np.float64))
        if bp.ndim != 1 or va.ndim != 1 or va.size != bp.size + 1:
            raise InvalidConfig("need k breakpoints and k+1 values")
        if not (np.all(np.isfinite(bp)) and np.all(np.isfinite(va))):
            raise InvalidConfig("curve data must be finite")
        if bp.size and (bp[0] <= 0 or np.any(np.diff(bp) <= 0)):
            raise InvalidConfig("breakpoints must be strictly increasing and positive")
        if self.integer_valued and not np.all(va == np.round(va)):
            raise InvalidConfig("integer_valued curve has non-integer values")
        bp.setflags(write=False)
        va.setflags(write=False)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", va)

    def __call__(self, r):
        arr = np.asarray(r, dtype=np.float64)
        if np.any(arr < 0):
            raise InvalidConfig("step curves are defined on [0, inf)")
        idx = np.searchsorted(self.breakpoints, arr, side="right")
        out = self.values[idx]
        return float(out) if np.isscalar(r) or arr.ndim == 0 else out

    def __eq__(self, other):
        return (
            isinstance(other, StepCurve)
            and np.array_equal(self.breakpoints, other.breakpoints)
            and np.array_equal(self.values, other.values)
        )

    @property
    def initial_value(self) -> float:
        return float(self.values[0])

    @property
    def final_value(self) -> float:
        return float(self.values[-1])

    @classmethod
    def from_events(cls, initial: float, radii, jumps, integer_valued: bool = False) -> "StepCurve":
        """Build a canonical curve from jump events.

        Events at radius <= 0 fold into the initial value, events sharing a
        radius merge, and merged events with zero net jump are dropped.
        """
        radii = np.asarray(radii, dtype=np.float64)
        jumps = np.asarray(jumps, dtype=np.float64)
        if radii.shape != jumps.shape:
            raise InvalidConfig("radii and jumps must align")
        at_zero = radii <= 0.0
        initial = float(initial) + float(jumps[at_zero].sum())
        radii, jumps = radii[~at_zero], jumps[~at_zero]
        uniq, inverse = np.unique(radii, return_inverse=True)
        total = np.zeros(uniq.size)
        np.add.at(total, inverse, jumps)
        nonzero = total != 0.0
        bp = uniq[nonzero]
        values = np.empty(bp.size + 1)
        values[0] = initial
        if bp.size:
            np.cumsum(total[nonzero], out=values[1:])
            values[1:] += initial
        return cls(bp, values, integer_valued=integer_valued)

    # -- serialization ----------------------------------------------------

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        buf.write("r,value\n")
        buf.write(f"{0.0!r},{float(self.values[0])!r}\n")
        for r, v in zip(self.breakpoints, self.values[1:]):
            buf.write(f"{float(r)!r},{float(v)!r}\n")
        return buf.getvalue()

    @classmethod
    def from_csv_text(cls, text: str) -> "StepCurve":
        rows = []
        for rownum, row in enumerate(csv.reader(io.StringIO(text))):
            cells = [c.strip() for c in row if c.strip() != ""]
            if not cells:
                continue
            if len(cells) != 2:
                raise ParseError(f"row {rownum + 1}: expected two columns", position=(rownum, 0))
            try:
                rows.append((float(cells[0]), float(cells[1])))
            except ValueError:
                if rownum == 0:
                    continue  # header
                raise ParseError(f"row {rownum + 1}: non-numeric value", position=(rownum, 0)) from None
        if not rows:
            raise ParseError("no data rows in curve file")
        if rows[0][0] != 0.0:
            raise ParseError("first curve row must give the value at r = 0")
        bp = np.array([r for r, _ in rows[1:]])
        values = np.array([v for _, v in rows])
        integer = bool(np.all(values == np.round(values)))
        return cls(bp, values, integer_valued=integer)

    def to_csv(self, path) -> None:
        from .fileio import atomic_write_text

        atomic_write_text(path, self.to_csv_text())

    @classmethod
    def from_csv(cls, path) -> "StepCurve":
        with open(path, "r") as fh:
            return cls.from_csv_text(fh.read())

    def to_json_dict(self) -> dict:
        return {
            "breakpoints": [float(b) for b in self.breakpoints],
            "values": [float(v) for v in self.values],
            "integer_valued": bool(self.integer_valued),
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "StepCurve":
        try:
            bp = obj["breakpoints"]
            values = obj["values"]
        except (KeyError, TypeError):
            raise ParseError("curve JSON needs 'breakpoints' and 'values'") from None
        return cls(np.asarray(bp), np.asarray(values),
                   integer_valued=bool(obj.get("integer_valued", False)))

    def to_json(self, path) -> None:
        from .fileio import atomic_write_json

        atomic_write_json(path, self.to_json_dict())

    @classmethod
    def from_json(cls, path) -> "StepCurve":
        with open(path, "r") as fh:
            return cls.from_json_dict(json.load(fh))


def euler_curve(fc: FilteredComplex) -> StepCurve:
    """Euler characteristic curve r -> chi of the subcomplex at radius r."""
    initial = 0.0
    radii_parts = []
    jump_parts = []
    for k in fc.dims():
        radii = fc.radii(k)
        sign = 1.0 if k % 2 == 0 else -1.0
        born = radii <= 0.0
        initial += sign * float(np.count_nonzero(born))
        later = radii[~born]
        radii_parts.append(later)
        jump_parts.append(np.full(later.size, sign))
    radii = np.concatenate(radii_parts) if radii_parts else np.empty(0)
    jumps = np.concatenate(jump_parts) if jump_parts else np.empty(0)
    return StepCurve.from_events(initial, radii, jumps, integer_valued=True)


def rescale_cloud(cloud) -> PointCloud:
    """Thermodynamic rescaling: multiply coordinates by n^(1/d)."""
    pc = as_point_cloud(cloud)
    return PointCloud(pc.points * pc.size ** (1.0 / pc.dim))


def mean_curve(curves) -> StepCurve:
    """Exact pointwise average of step curves, on the union of breakpoints.

    For integer-valued inputs every partial sum is an exact float64 integer,
    so the result is the correctly rounded average at every radius.
    """
    curves = list(curves)
    if not curves:
        raise InvalidConfig("mean_curve needs at least one curve")
    m = float(len(curves))
    init_sum = 0.0
    bp_parts = []
    jump_parts = []
    for c in curves:
        if not isinstance(c, StepCurve):
            raise InvalidConfig("mean_curve takes StepCurve inputs")
        init_sum += c.values[0]
        bp_parts.append(c.breakpoints)
        jump_parts.append(np.diff(c.values))
    summed = StepCurve.from_events(
        init_sum,
        np.concatenate(bp_parts) if bp_parts else np.empty(0),
        np.concatenate(jump_parts) if jump_parts else np.empty(0),
    )
    return StepCurve(summed.breakpoints, summed.values / m)


def normalize_curve(curve: StepCurve, n: int) -> StepCurve:
    """Divide values by the sample size n (per-point normalisation)."""
    if n < 1:
        raise InvalidConfig("n must be >= 1")
    return StepCurve(curve.breakpoints, curve.values / float(n))


def _sup_union(a: StepCurve, b: StepCurve):
    grid = np.concatenate([[0.0], a.breakpoints, b.breakpoints])
    diff = np.abs(a(grid) - b(grid))
    i = int(np.argmax(diff))
    return float(diff[i]), float(grid[i])


def _sup_segmented(small: StepCurve, big: StepCurve) -> float:
    """Sup distance via segment extrema of the larger curve.

    For each constant segment of ``small``, the extreme values of ``big``
    over that segment are found with one reduceat pass, avoiding the full
    union grid.  Exact: the compared value set equals the union-grid one.
    """
    A, Va = small.breakpoints, small.values
    B, Vb = big.breakpoints, big.values
    if A.size == 0:
        v = Va[0]
        return float(max(abs(v - Vb.max()), abs(v - Vb.min())))
    starts = np.empty(A.size + 1, dtype=np.intp)
    starts[0] = 0
    starts[1:] = np.searchsorted(B, A, side="right")
    last = np.empty(A.size + 1, dtype=np.intp)
    last[:-1] = np.searchsorted(B, A, side="left")
    last[-1] = Vb.size - 1
    seg_max = np.maximum.reduceat(Vb, starts)
    seg_min = np.minimum.reduceat(Vb, starts)
    np.maximum(seg_max, Vb[last], out=seg_max)
    np.minimum(seg_min, Vb[last], out=seg_min)
    return float(np.maximum(np.abs(Va - seg_min), np.abs(seg_max - Va)).max())


def sup_distance(a: StepCurve, b: StepCurve) -> float:
    """Supremum of |a - b| over [0, inf), computed exactly."""
    la, lb = a.breakpoints.size, b.breakpoints.size
    if max(la, lb) > 4096 and min(la, lb) * 8 <= max(la, lb):
        return _sup_segmented(a, b) if la <= lb else _sup_segmented(b, a)
    return _sup_union(a, b)[0]


def sup_distance_argmax(a: StepCurve, b: StepCurve):
    """Sup distance together with a radius attaining it."""
    return _sup_union(a, b)
