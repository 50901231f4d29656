"""Networked control loops under jamming mapped to switched systems with activation bounds.

Delay-free loop: mode 1 = transmission succeeded (``A + BK``), mode 2 = failed (``A``).
Two-channel loop on the state ``[x(t+1); x(t)]``: mode 1 = delay-free channel
succeeded, mode 2 = it failed and the one-step-delayed channel succeeded,
mode 3 = both failed (``u(0) = 0``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_discrete_lyapunov
from scipy.optimize import minimize

from .certify import Verdict, certify
from .matlib import InvalidInput, NormKind, as_mat, cholesky_lower, mat_norm, spectral_radius
from .model import ActivationBounds, SwitchedSystem

PSD_SLACK = 1e-9

EXAMPLE1_A = ((1.0, 0.1), (-0.5, 1.1))
EXAMPLE1_B = ((0.1,), (1.2,))
EXAMPLE1_K = ((-2.9012, -0.9411),)
EXAMPLE2_KD = ((-0.04, -0.3),)
EXAMPLE3_MODES = (((0.0, 1.0), (0.0, 0.0)), ((0.0, 1.0), (2.0, 1.0)))


@dataclass(frozen=True, eq=False)
class Plant:
    """``x(t+1) = A x(t) + B u(t)``."""

    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = as_mat(self.A, square=True, name="A")
        B = as_mat(self.B, name="B")
        if B.shape[0] != A.shape[0]:
            raise InvalidInput(f"B has {B.shape[0]} rows, A is {A.shape[0]}x{A.shape[0]}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    def gain(self, K, name="K") -> np.ndarray:
        K = as_mat(np.atleast_2d(np.asarray(K, dtype=float)), name=name)
        if K.shape != (self.m, self.n):
            raise InvalidInput(f"{name} must be {self.m}x{self.n}, got {K.shape[0]}x{K.shape[1]}")
        return K


def example1_plant() -> Plant:
    return Plant(EXAMPLE1_A, EXAMPLE1_B)


@dataclass(frozen=True)
class BinaryBounds:
    """Long-run average bounds ``lower <= avg(indicator) <= upper`` of a binary process."""

    lower: float
    upper: float

    def __post_init__(self):
        lo, hi = float(self.lower), float(self.upper)
        if not (0.0 <= lo <= hi <= 1.0):
            raise InvalidInput(f"need 0 <= lower <= upper <= 1, got ({lo}, {hi})")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    def complement(self) -> "BinaryBounds":
        return BinaryBounds(1.0 - self.upper, 1.0 - self.lower)


@dataclass(frozen=True, eq=False)
class LyapunovCertificate:
    P: np.ndarray
    beta: float
    phi: float

    def __post_init__(self):
        P = as_mat(self.P, square=True, name="P")
        cholesky_lower(P)
        if not 0.0 < self.beta < 1.0:
            raise InvalidInput(f"beta must lie in (0, 1), got {self.beta}")
        if not self.phi >= 1.0:
            raise InvalidInput(f"phi must be >= 1, got {self.phi}")
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "phi", float(self.phi))

    def threshold(self) -> float:
        """Largest failure ratio with ``(1 - rho) ln beta + rho ln phi <= 0``."""
        lb, lp = math.log(self.beta), math.log(self.phi)
        return -lb / (lp - lb)


def lyapunov_weight(A1, Q=None) -> np.ndarray:
    """``P`` solving ``A1^T P A1 - P + Q = 0`` (``Q = I`` by default), scaled to unit max entry.

    Any SPD ``P`` gives a valid induced norm; this one makes ``A1`` a contraction.
    """
    A1 = as_mat(A1, square=True, name="A1")
    n = A1.shape[0]
    Q = np.eye(n) if Q is None else as_mat(Q, square=True, name="Q")
    if spectral_radius(A1) >= 1.0:
        raise InvalidInput("the Lyapunov weight needs a Schur matrix")
    P = solve_discrete_lyapunov(A1.T, Q)
    P = 0.5 * (P + P.T)
    return P / np.max(np.abs(P))


def _check_rho(rho):
    if not 0.0 <= rho <= 1.0:
        raise InvalidInput(f"failure ratio must lie in [0, 1], got {rho}")


def build_delay_free(plant: Plant, K, rho: float) -> tuple[SwitchedSystem, ActivationBounds]:
    _check_rho(rho)
    K = plant.gain(K)
    system = SwitchedSystem((plant.A + plant.B @ K, plant.A))
    return system, ActivationBounds((1.0 - rho, 0.0), (1.0, rho))


def combine_binary_bounds(b1: BinaryBounds, b2: BinaryBounds) -> BinaryBounds:
    """Bounds on the average of the product of two binary processes."""
    hi = min(b1.upper, b2.upper)
    # tight inputs can round the lower bound one ulp above the upper one
    return BinaryBounds(min(max(0.0, b1.lower + b2.lower - 1.0), hi), hi)


def prop2_bounds(sigma_N: float, rho_N: float, sigma_D: float, rho_D: float) -> ActivationBounds:
    """Three-mode activation bounds from per-channel failure-ratio bounds."""
    fail_n = BinaryBounds(sigma_N, rho_N)
    fail_d = BinaryBounds(sigma_D, rho_D)
    m1 = fail_n.complement()
    m2 = combine_binary_bounds(fail_n, fail_d.complement())
    m3 = combine_binary_bounds(fail_n, fail_d)
    return ActivationBounds((m1.lower, m2.lower, m3.lower), (m1.upper, m2.upper, m3.upper))


def build_two_channel(plant: Plant, K_N, K_D, bounds4) -> tuple[SwitchedSystem, ActivationBounds]:
    K_N = plant.gain(K_N, "K_N")
    K_D = plant.gain(K_D, "K_D")
    A, B, n = plant.A, plant.B, plant.n
    I, Z = np.eye(n), np.zeros((n, n))
    a1 = np.block([[A + B @ K_N, Z], [I, Z]])
    a2 = np.block([[A, B @ K_D], [I, Z]])
    a3 = np.block([[A, Z], [I, Z]])
    return SwitchedSystem((a1, a2, a3)), prop2_bounds(*bounds4)


def channel_modes(fail_N, fail_D) -> np.ndarray:
    """Mode signal (1-based) from binary failure indicators of the two channels."""
    fn = np.asarray(fail_N, dtype=bool)
    fd = np.asarray(fail_D, dtype=bool)
    if fn.shape != fd.shape:
        raise InvalidInput("channel signals must have equal length")
    return np.where(~fn, 1, np.where(~fd, 2, 3)).astype(np.int64)


def _min_eig(m):
    return float(np.linalg.eigvalsh(0.5 * (m + m.T)).min())


def check_lyapunov(cert: LyapunovCertificate, plant: Plant, K, rho: float) -> bool:
    """Both matrix inequalities (eigenvalue slack 1e-9) and the scalar log inequality."""
    _check_rho(rho)
    K = plant.gain(K)
    A1 = plant.A + plant.B @ K
    P = cert.P
    ok1 = _min_eig(cert.beta * P - A1.T @ P @ A1) >= -PSD_SLACK
    ok2 = _min_eig(cert.phi * P - plant.A.T @ P @ plant.A) >= -PSD_SLACK
    ok3 = (1.0 - rho) * math.log(cert.beta) + rho * math.log(cert.phi) < 0.0
    return bool(ok1 and ok2 and ok3)


def lyapunov_implies_lp(cert: LyapunovCertificate, plant: Plant, K, rho: float) -> bool:
    """Certify at ``h = 1`` in the ``P``-weighted norm with ``epsilon = sqrt(beta)``."""
    system, bounds = build_delay_free(plant, K, rho)
    result = certify(system, bounds, 1, NormKind.weighted(cert.P), math.sqrt(cert.beta))
    return result.verdict is Verdict.CERTIFIED_STABLE


def _cert_from_chol(params, n, A1, A):
    L = np.zeros((n, n))
    L[np.tril_indices(n)] = params
    d = np.diag_indices(n)
    L[d] = np.exp(L[d])
    P = L @ L.T
    P = P / np.max(np.abs(P))
    w = NormKind.weighted(P)
    beta = mat_norm(A1, w) ** 2
    phi = max(1.0, mat_norm(A, w) ** 2)
    return P, beta, phi


def find_lyapunov_certificate(plant: Plant, K, restarts: int = 4, seed: int = 0) -> LyapunovCertificate:
    """Search ``P`` maximizing the failure-ratio threshold, with ``beta = ||A+BK||_P^2``
    and ``phi = max(1, ||A||_P^2)``. Raises if the closed loop is not Schur.
    """
    K = plant.gain(K)
    n = plant.n
    A, A1 = plant.A, plant.A + plant.B @ K
    try:
        P0 = solve_discrete_lyapunov(A1.T, np.eye(n))
        L0 = cholesky_lower(0.5 * (P0 + P0.T))
    except (InvalidInput, np.linalg.LinAlgError, ValueError):
        raise InvalidInput("closed loop A+BK is not Schur; no certificate exists") from None

    def pack(L):
        L = L.copy()
        d = np.diag_indices(n)
        L[d] = np.log(L[d])
        return L[np.tril_indices(n)]

    def loss(params):
        try:
            _, beta, phi = _cert_from_chol(params, n, A1, A)
        except InvalidInput:
            return 1e3
        if beta >= 1.0:
            return 10.0 + beta
        lb = math.log(beta)
        lp = math.log(phi)
        return lb / (lp - lb) if lp > 0.0 else -1e3 * (1.0 - beta)

    rng = np.random.default_rng(seed)
    starts = [pack(L0), pack(np.eye(n))]
    starts += [pack(L0) + rng.normal(scale=0.5, size=starts[0].size) for _ in range(max(0, restarts - 2))]
    best = None
    for x0 in starts:
        res = minimize(loss, x0, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 20000})
        if best is None or res.fun < best.fun:
            best = res
    P, beta, phi = _cert_from_chol(best.x, n, A1, A)
    if beta >= 1.0:
        raise InvalidInput("no weighted norm contracts A+BK")
    return LyapunovCertificate(P, beta, phi)
