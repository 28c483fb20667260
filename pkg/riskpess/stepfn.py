"""Exact arithmetic on right-continuous step functions.

A ``StepFn`` is the carrier for every CDF in the package: true policy CDFs,
conditional reward CDFs and all off-policy estimates. Values are held in
read-only numpy arrays; every operation returns a new object.

Semantics: ``f(t) = base`` for ``t < t_1`` and ``f(t) = v_j`` for the largest
breakpoint ``t_j <= t``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Dict, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .infrastructure.error_handler import InputValidationError, InvalidCDFError


ArrayLike = Union[float, Sequence[float], np.ndarray]

# Terminal values this close to 1 count as proper CDFs.
PROPER_TOL = 1e-12


class SupportInterval(BaseModel):
    """Reward support ``[0, D]``."""

    model_config = ConfigDict(frozen=True)

    upper: float = Field(..., gt=0.0, description="Upper end D of the reward support")

    @property
    def lower(self) -> float:
        return 0.0

    def contains(self, value: float) -> bool:
        return 0.0 <= value <= self.upper


def _frozen(values: Any) -> np.ndarray:
    arr = np.array(values, dtype=float).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class StepFn:
    """Piecewise-constant right-continuous function on the real line."""

    base: float
    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        bps = _frozen(self.breakpoints)
        vals = _frozen(self.values)
        if bps.shape != vals.shape:
            raise InvalidCDFError(
                f"step function has {bps.size} breakpoints but {vals.size} values"
            )
        if not np.all(np.isfinite(bps)) or not np.all(np.isfinite(vals)) or not np.isfinite(self.base):
            raise InvalidCDFError("step function must be finite")
        if bps.size > 1 and np.any(np.diff(bps) <= 0):
            raise InvalidCDFError("breakpoints must be strictly increasing")
        object.__setattr__(self, "base", float(self.base))
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "values", vals)

    def __call__(self, t: ArrayLike) -> Union[float, np.ndarray]:
        """Evaluate at ``t`` (scalar or array), right-continuously."""
        t_arr = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.breakpoints, t_arr, side="right") - 1
        if self.values.size == 0:
            out = np.full(t_arr.shape, self.base)
        else:
            out = np.where(idx < 0, self.base, self.values[np.clip(idx, 0, None)])
        return float(out) if out.ndim == 0 else out

    def left_limit(self, t: ArrayLike) -> Union[float, np.ndarray]:
        """Value of ``f(t-)``."""
        t_arr = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.breakpoints, t_arr, side="left") - 1
        if self.values.size == 0:
            out = np.full(t_arr.shape, self.base)
        else:
            out = np.where(idx < 0, self.base, self.values[np.clip(idx, 0, None)])
        return float(out) if out.ndim == 0 else out

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StepFn):
            return NotImplemented
        return (
            self.base == other.base
            and np.array_equal(self.breakpoints, other.breakpoints)
            and np.array_equal(self.values, other.values)
        )

    def __repr__(self) -> str:
        return (
            f"StepFn(base={self.base!r}, breakpoints={self.breakpoints.tolist()!r}, "
            f"values={self.values.tolist()!r})"
        )

    @property
    def terminal(self) -> float:
        """Value on the last segment (``f(+inf)``)."""
        return float(self.values[-1]) if self.values.size else self.base

    @property
    def is_monotone_unit(self) -> bool:
        """Nondecreasing with all values in ``[0, 1]`` (base may be positive)."""
        chain = np.concatenate(([self.base], self.values))
        return bool(np.all(np.diff(chain) >= 0) and chain.min() >= 0.0 and chain.max() <= 1.0)

    @property
    def is_cdf(self) -> bool:
        """Base 0, nondecreasing, values in ``[0, 1]``; possibly a sub-CDF."""
        return self.base == 0.0 and self.is_monotone_unit

    @property
    def is_proper(self) -> bool:
        return self.is_cdf and abs(self.terminal - 1.0) <= PROPER_TOL

    def to_dict(self) -> Dict[str, Any]:
        return {
            "base": self.base,
            "breakpoints": self.breakpoints.tolist(),
            "values": self.values.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> StepFn:
        try:
            return cls(doc["base"], doc["breakpoints"], doc["values"])
        except (KeyError, TypeError) as e:
            raise InputValidationError(f"malformed step function: {e}")


def compact(base: float, breakpoints: np.ndarray, values: np.ndarray) -> StepFn:
    """Build a ``StepFn`` dropping breakpoints that do not change the value."""
    breakpoints = np.asarray(breakpoints, dtype=float)
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return StepFn(base, breakpoints, values)
    previous = np.concatenate(([base], values[:-1]))
    keep = values != previous
    return StepFn(base, breakpoints[keep], values[keep])


def constant(value: float) -> StepFn:
    return StepFn(value, [], [])


def from_atoms(rewards: Sequence[float], probs: Sequence[float]) -> StepFn:
    """CDF of a discrete distribution given as atoms ``(y_j, p_j)``.

    Atoms at the same reward are merged; a total mass within 1e-9 of one is
    completed to exactly 1.
    """
    ys = np.asarray(rewards, dtype=float)
    ps = np.asarray(probs, dtype=float)
    if ys.shape != ps.shape or ys.size == 0:
        raise InputValidationError("atoms need matching, nonempty reward and probability lists")
    if np.any(ps < 0):
        raise InputValidationError("atom probabilities must be nonnegative")
    support, inverse = np.unique(ys, return_inverse=True)
    mass = np.bincount(inverse, weights=ps, minlength=support.size)
    values = np.minimum(np.cumsum(mass), 1.0)
    if abs(values[-1] - 1.0) <= 1e-9:
        values[-1] = 1.0
    return compact(0.0, support, values)


def merged_grid(*fns: StepFn) -> np.ndarray:
    """Sorted union of all breakpoints."""
    if not fns:
        return np.empty(0)
    return np.unique(np.concatenate([f.breakpoints for f in fns]))


def linear_combination(
    coefficients: Sequence[float], fns: Sequence[StepFn], offset: float = 0.0
) -> StepFn:
    """``offset + sum_k c_k f_k`` evaluated exactly on the merged grid."""
    if len(coefficients) != len(fns):
        raise InputValidationError("one coefficient per step function is required")
    grid = merged_grid(*fns)
    base = offset + sum(c * f.base for c, f in zip(coefficients, fns))
    values = np.full(grid.shape, offset, dtype=float)
    for c, f in zip(coefficients, fns):
        values = values + c * f(grid)
    return compact(base, grid, values)


def eval_step(f: StepFn, t: float) -> float:
    return float(f(t))


def sup_abs(f: StepFn) -> float:
    """``sup_t |f(t)|``."""
    if f.values.size == 0:
        return abs(f.base)
    return float(max(abs(f.base), np.abs(f.values).max()))


def sup_norm_distance(f: StepFn, g: StepFn) -> float:
    """``sup_t |f(t) - g(t)|``, exact.

    Both functions are constant between merged breakpoints, so the supremum is
    attained on the base segment or at some merged breakpoint. Left limits are
    the previous segment's value and are therefore already covered.
    """
    grid = merged_grid(f, g)
    diff = abs(f.base - g.base)
    if grid.size:
        diff = max(diff, float(np.abs(f(grid) - g(grid)).max()))
    return float(diff)


def clip_unit(f: StepFn) -> StepFn:
    """Pointwise ``min(max(f, 0), 1)``."""
    return compact(
        float(np.clip(f.base, 0.0, 1.0)), f.breakpoints, np.clip(f.values, 0.0, 1.0)
    )


def monotonize_clip(f: StepFn) -> StepFn:
    """Running maximum followed by clipping to ``[0, 1]``.

    Never moves ``f`` further from any proper CDF in sup norm.
    """
    chain = np.maximum.accumulate(np.concatenate(([f.base], f.values)))
    chain = np.clip(chain, 0.0, 1.0)
    return compact(float(chain[0]), f.breakpoints, chain[1:])


def complete_mass(f: StepFn, support: SupportInterval) -> StepFn:
    """Move the mass deficit of a sub-CDF to the support end ``D``."""
    if f.terminal >= 1.0:
        return f
    D = support.upper
    grid = np.union1d(f.breakpoints, [D])
    values = np.where(grid >= D, 1.0, f(grid))
    return compact(f.base, grid, values)


def quantile_step_approx(f: StepFn, m: int) -> StepFn:
    """Equal-mass ``m``-atom approximation of a proper CDF.

    Atom ``j`` sits at the first point where ``f`` reaches ``(2j - 1) / (2m)``,
    which keeps the sup-norm error at most ``1 / (2m)``.
    """
    if m < 1:
        raise InputValidationError(f"m must be a positive integer, got {m}")
    if not f.is_proper:
        raise InvalidCDFError("quantile approximation needs a proper CDF")
    levels = (2.0 * np.arange(1, m + 1) - 1.0) / (2.0 * m)
    idx = np.searchsorted(f.values, levels, side="left")
    atoms = f.breakpoints[idx]
    support, counts = np.unique(atoms, return_counts=True)
    return compact(0.0, support, np.cumsum(counts) / m)


def wasserstein1(f: StepFn, g: StepFn, support: SupportInterval) -> float:
    """``int_0^D |f(t) - g(t)| dt`` for two proper CDFs on ``[0, D]``."""
    for name, fn in (("first", f), ("second", g)):
        if fn.terminal < 1.0 - PROPER_TOL:
            raise InvalidCDFError(
                f"{name} argument is a sub-CDF (terminal value {fn.terminal!r}); complete its mass first"
            )
    D = support.upper
    grid = np.union1d(merged_grid(f, g), [0.0, D])
    grid = grid[(grid >= 0.0) & (grid <= D)]
    left = grid[:-1]
    widths = np.diff(grid)
    return float(np.sum(np.abs(f(left) - g(left)) * widths))
