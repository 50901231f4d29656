"""Switched system and activation-ratio bound containers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matlib import MAX_DIM, InvalidInput, as_mat

# slack when checking sum(lower) <= 1 <= sum(upper)
BOUNDS_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SwitchedSystem:
    """``x(t+1) = A_{r(t)} x(t)`` with modes numbered 1..M."""

    matrices: tuple

    def __post_init__(self):
        mats = tuple(as_mat(a, square=True, name=f"A_{i + 1}") for i, a in enumerate(self.matrices))
        if not mats:
            raise InvalidInput("a switched system needs at least one mode")
        n = mats[0].shape[0]
        if any(a.shape != (n, n) for a in mats):
            raise InvalidInput("all mode matrices must share one dimension")
        if n > MAX_DIM:
            raise InvalidInput(f"dimension {n} exceeds the cap of {MAX_DIM}")
        object.__setattr__(self, "matrices", mats)

    @property
    def M(self) -> int:
        return len(self.matrices)

    @property
    def n(self) -> int:
        return self.matrices[0].shape[0]

    def stacked(self) -> np.ndarray:
        return np.ascontiguousarray(np.stack(self.matrices))

    def __getitem__(self, mode: int) -> np.ndarray:
        if not 1 <= mode <= self.M:
            raise InvalidInput(f"mode {mode} outside 1..{self.M}")
        return self.matrices[mode - 1]

    def __eq__(self, other):
        return (isinstance(other, SwitchedSystem) and self.M == other.M
                and all(np.array_equal(a, b) for a, b in zip(self.matrices, other.matrices)))


@dataclass(frozen=True, eq=False)
class ActivationBounds:
    """Long-run activation ratio bounds ``lower[s] <= freq(s) <= upper[s]``."""

    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float).ravel()
        hi = np.asarray(self.upper, dtype=float).ravel()
        if lo.shape != hi.shape or lo.size == 0:
            raise InvalidInput("lower and upper bounds must be nonempty and of equal length")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise InvalidInput("bounds must be finite")
        if np.any(lo < 0.0) or np.any(hi > 1.0) or np.any(lo > hi):
            raise InvalidInput(f"need 0 <= lower <= upper <= 1, got lower={lo.tolist()} upper={hi.tolist()}")
        if lo.sum() > 1.0 + BOUNDS_TOL or hi.sum() < 1.0 - BOUNDS_TOL:
            raise InvalidInput(
                f"no mode signal fits: sum(lower)={lo.sum():.6g}, sum(upper)={hi.sum():.6g} must bracket 1"
            )
        object.__setattr__(self, "lower", tuple(float(v) for v in lo))
        object.__setattr__(self, "upper", tuple(float(v) for v in hi))

    @property
    def M(self) -> int:
        return len(self.lower)

    def __eq__(self, other):
        return isinstance(other, ActivationBounds) and self.lower == other.lower and self.upper == other.upper

    def __repr__(self):
        return f"ActivationBounds(lower={list(self.lower)}, upper={list(self.upper)})"
