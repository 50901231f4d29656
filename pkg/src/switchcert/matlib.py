"""Small dense matrix helpers: validation, the supported matrix norms, spectral radius."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_DIM = 64

ONE, INFINITY, SPECTRAL, FROBENIUS, WEIGHTED = "one", "inf", "spectral", "frobenius", "weighted"
_NORM_CODES = {ONE: 0, INFINITY: 1, SPECTRAL: 2, FROBENIUS: 3, WEIGHTED: 4}


class InvalidInput(ValueError):
    """Raised on malformed matrices, dimension mismatches and non-SPD weights."""


def as_mat(m, *, square: bool = False, name: str = "matrix") -> np.ndarray:
    """Return ``m`` as a finite 2-D float array (read-only copy)."""
    try:
        arr = np.array(m, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InvalidInput(f"{name}: not a numeric matrix ({exc})") from None
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidInput(f"{name}: expected a 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput(f"{name}: entries must be finite")
    if square and arr.shape[0] != arr.shape[1]:
        raise InvalidInput(f"{name}: expected a square matrix, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


def cholesky_lower(p) -> np.ndarray:
    """Cholesky factor ``L`` with ``P = L L^T``; rejects P that is not SPD.

    A pivot below ``1e-12 * max(diag(P))`` counts as failure.
    """
    p = as_mat(p, square=True, name="weight")
    if not np.allclose(p, p.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(p).max())):
        raise InvalidInput("weight: matrix is not symmetric")
    n = p.shape[0]
    floor = 1e-12 * max(float(np.max(np.diag(p))), 0.0)
    L = np.zeros((n, n))
    for j in range(n):
        d = p[j, j] - L[j, :j] @ L[j, :j]
        if not d > floor:
            raise InvalidInput("weight: matrix is not positive definite")
        L[j, j] = np.sqrt(d)
        for i in range(j + 1, n):
            L[i, j] = (p[i, j] - L[i, :j] @ L[j, :j]) / L[j, j]
    return L


@dataclass(frozen=True)
class NormKind:
    """Which matrix norm to use; ``weight`` is the SPD ``P`` for the weighted norm."""

    variant: str = SPECTRAL
    weight: tuple | None = None

    def __post_init__(self):
        if self.variant not in _NORM_CODES:
            raise InvalidInput(f"unknown norm {self.variant!r}; choose from {sorted(_NORM_CODES)}")
        if (self.variant == WEIGHTED) != (self.weight is not None):
            raise InvalidInput("a weight matrix is required exactly for the weighted norm")
        if self.weight is not None:
            w = np.asarray(self.weight, dtype=float)
            object.__setattr__(self, "weight", tuple(tuple(float(v) for v in row) for row in w))
            cholesky_lower(w)

    @classmethod
    def weighted(cls, p) -> "NormKind":
        return cls(WEIGHTED, tuple(map(tuple, np.asarray(p, dtype=float))))

    @property
    def code(self) -> int:
        return _NORM_CODES[self.variant]

    @property
    def weight_matrix(self) -> np.ndarray | None:
        return None if self.weight is None else np.array(self.weight)

    def transforms(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """``(L^T, L^{-T})`` for the weighted norm, identities otherwise."""
        if self.weight is None:
            return np.eye(n), np.eye(n)
        L = cholesky_lower(self.weight_matrix)
        if L.shape[0] != n:
            raise InvalidInput(f"weight is {L.shape[0]}x{L.shape[0]}, matrices are {n}x{n}")
        lt = np.ascontiguousarray(L.T)
        return lt, np.ascontiguousarray(np.linalg.inv(lt))

    def __str__(self):
        return self.variant


def norm_kind(name: str, weight=None) -> NormKind:
    """Parse a config-style norm name ("one", "inf", "spectral", "frobenius", "weighted")."""
    if name == WEIGHTED:
        if weight is None:
            raise InvalidInput("norm 'weighted' needs a weight matrix P")
        return NormKind.weighted(weight)
    return NormKind(name)


def mat_mul(a, b) -> np.ndarray:
    a = as_mat(a, name="a")
    b = as_mat(b, name="b")
    if a.shape[1] != b.shape[0]:
        raise InvalidInput(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def sym_max_eigenvalue(s, tol: float = 1e-14, max_sweeps: int = 60) -> float:
    """Largest eigenvalue of a symmetric matrix by cyclic Jacobi rotations."""
    s = np.array(s, dtype=float)
    n = s.shape[0]
    if n > MAX_DIM:
        raise InvalidInput(f"dimension {n} exceeds the cap of {MAX_DIM}")
    for _ in range(max_sweeps):
        off = np.sum(np.triu(s, 1) ** 2)
        if off <= tol * tol * (np.sum(np.diag(s) ** 2) + 2.0 * off):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = s[p, q]
                if apq == 0.0:
                    continue
                theta = (s[q, q] - s[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = np.copysign(1.0, theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                sn = t * c
                cp, cq = s[:, p].copy(), s[:, q].copy()
                s[:, p], s[:, q] = c * cp - sn * cq, sn * cp + c * cq
                rp, rq = s[p, :].copy(), s[q, :].copy()
                s[p, :], s[q, :] = c * rp - sn * rq, sn * rp + c * rq
    return float(np.max(np.diag(s)))


def _spectral(m: np.ndarray) -> float:
    scale = float(np.max(np.abs(m)))
    if scale == 0.0:
        return 0.0
    g = m / scale
    return scale * float(np.sqrt(max(sym_max_eigenvalue(g.T @ g), 0.0)))


def mat_norm(m, kind: NormKind | str = SPECTRAL) -> float:
    """Matrix norm of ``m``; One/Infinity/Spectral/Weighted are induced norms."""
    if isinstance(kind, str):
        kind = NormKind(kind)
    m = as_mat(m)
    if max(m.shape) > MAX_DIM:
        raise InvalidInput(f"dimension exceeds the cap of {MAX_DIM}")
    if kind.variant == ONE:
        return float(np.abs(m).sum(axis=0).max())
    if kind.variant == INFINITY:
        return float(np.abs(m).sum(axis=1).max())
    if kind.variant == FROBENIUS:
        scale = float(np.max(np.abs(m)))
        return 0.0 if scale == 0.0 else scale * float(np.sqrt(np.sum((m / scale) ** 2)))
    if kind.variant == WEIGHTED:
        if m.shape[0] != m.shape[1]:
            raise InvalidInput("weighted norm needs a square matrix")
        lt, lt_inv = kind.transforms(m.shape[0])
        return _spectral(lt @ m @ lt_inv)
    return _spectral(m)


def spectral_radius(m) -> float:
    m = as_mat(m, square=True)
    if m.shape[0] > MAX_DIM:
        raise InvalidInput(f"dimension exceeds the cap of {MAX_DIM}")
    return float(np.max(np.abs(np.linalg.eigvals(m))))


def is_zero(m) -> bool:
    """Exact test: every entry is 0.0."""
    return not np.any(np.asarray(m))
