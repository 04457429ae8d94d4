"""The four-dimensional isotropic oscillator the Kepler shell maps onto.

Quantum levels come from a second-order (three-point) finite-difference
Hamiltonian on a Dirichlet box, solved per dimension as a symmetric
tridiagonal eigenproblem and composed over the four separable directions.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Literal

import numpy as np
from scipy import constants as codata
from scipy.linalg import eigh_tridiagonal

from .errors import DomainError, GridTooSmallError, PreconditionError
from .ks import KSState

M_HO = 0.25
OMEGA = 2.0
BOUNDARY_DECAY = 1e-8


@dataclass(frozen=True)
class OscillatorParams:
    m_ho: float = M_HO
    omega: float = OMEGA
    dims: int = 4

    def __post_init__(self):
        if (self.m_ho, self.omega, self.dims) != (M_HO, OMEGA, 4):
            raise PreconditionError(
                "oscillator parameters are fixed at m_ho = 1/4, omega = 2, dims = 4"
            )


@dataclass(frozen=True)
class GridSpec:
    half_width: float
    points: int

    def __post_init__(self):
        if not self.half_width > 0:
            raise PreconditionError(f"grid half-width must be positive, got {self.half_width}")
        if self.points < 3 or self.points % 2 == 0:
            raise PreconditionError(f"grid points must be odd and >= 3, got {self.points}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / (self.points - 1)

    def interior(self) -> np.ndarray:
        """Nodes strictly inside ``(-L, L)``; the wavefunction is pinned to 0 at +-L."""
        return np.linspace(-self.half_width, self.half_width, self.points)[1:-1]

    def coarsened(self) -> "GridSpec":
        return GridSpec(self.half_width, (self.points + 1) // 2)


@dataclass(frozen=True)
class SpectrumLevel:
    n: int
    analytic_energy: float
    numeric_energy: float
    degeneracy: int
    residual: float


@dataclass(frozen=True)
class SpectrumResult:
    levels: tuple[SpectrumLevel, ...]
    claim_comparison: float
    grid: GridSpec
    params: OscillatorParams = OscillatorParams()


CLAIM_NOTE = (
    "claim_comparison = numeric ground energy - 1. The quoted eigenvalues (n+1) "
    "of the mass operator are recorded next to the unconstrained 4D isotropic "
    "levels omega*(n+2); no constraint reduction is applied."
)


def classical_energy(ks: KSState, params: OscillatorParams = OscillatorParams()):
    """``(1/2) m_ho sdot^2 + (1/2) m_ho omega^2 s^2``; vectorized over stacked states."""
    s2 = np.sum(np.asarray(ks.s, dtype=float) ** 2, axis=-1)[()]
    sd2 = np.sum(np.asarray(ks.sdot, dtype=float) ** 2, axis=-1)[()]
    return 0.5 * params.m_ho * sd2 + 0.5 * params.m_ho * params.omega**2 * s2


def _solve_1d(grid: GridSpec, params: OscillatorParams, count: int, vectors: bool):
    if count < 1:
        raise PreconditionError("count must be >= 1")
    if count > grid.points / 4:
        raise PreconditionError(f"count={count} exceeds N/4 = {grid.points / 4}")
    s = grid.interior()
    h = grid.spacing
    kin = 1.0 / (2.0 * params.m_ho * h * h)
    diag = 2.0 * kin + 0.5 * params.m_ho * params.omega**2 * s * s
    off = np.full(s.size - 1, -kin)
    # eigenvectors are always computed: the boundary decay check needs them
    w, v = eigh_tridiagonal(diag, off, select="i", select_range=(0, count - 1))
    v = v / np.linalg.norm(v, axis=0)
    turn = np.sqrt(2.0 * w / (params.m_ho * params.omega**2))
    if turn[-1] >= grid.half_width:
        raise GridTooSmallError(
            f"classical turning point {turn[-1]:.4g} of level {count - 1} lies outside "
            f"half-width {grid.half_width}; enlarge the box"
        )
    edge = np.maximum(v[0] ** 2, v[-1] ** 2)
    bad = np.flatnonzero(edge > BOUNDARY_DECAY)
    if bad.size:
        k = int(bad[0])
        raise GridTooSmallError(
            f"eigenfunction {k} has boundary weight {edge[k]:.3g} > {BOUNDARY_DECAY:g} "
            f"at half-width {grid.half_width}; enlarge the box"
        )
    return (s, w, v) if vectors else w


def fd_eigenvalues_1d(grid: GridSpec, params: OscillatorParams = OscillatorParams(), count: int = 1) -> np.ndarray:
    """Lowest ``count`` eigenvalues of ``-(1/2m) d^2/ds^2 + (1/2) m omega^2 s^2``, ascending.

    Raises ``GridTooSmallError`` when the box does not enclose the classical
    turning point of the highest level, or when any returned eigenvector
    (unit discrete norm) puts more than ``BOUNDARY_DECAY`` probability on a
    boundary-adjacent node.
    """
    return _solve_1d(grid, params, count, vectors=False)


def fd_eigenvectors_1d(grid: GridSpec, params: OscillatorParams = OscillatorParams(), count: int = 1):
    """``(nodes, eigenvalues, eigenvectors)`` with unit discrete norm per column."""
    return _solve_1d(grid, params, count, vectors=True)


def richardson_eigenvalues(grid: GridSpec, params: OscillatorParams = OscillatorParams(), count: int = 1) -> np.ndarray:
    """Second-order Richardson extrapolation from ``grid`` and its 2h coarsening."""
    fine = fd_eigenvalues_1d(grid, params, count)
    coarse = fd_eigenvalues_1d(grid.coarsened(), params, count)
    return (4.0 * fine - coarse) / 3.0


def compositions(n: int, parts: int) -> Iterator[tuple[int, ...]]:
    """All ordered tuples of ``parts`` nonnegative ints summing to ``n``."""
    for cuts in itertools.combinations(range(n + parts - 1), parts - 1):
        bounds = (-1,) + cuts + (n + parts - 1,)
        yield tuple(bounds[i + 1] - bounds[i] - 1 for i in range(parts))


def degeneracy(n: int, dims: int = 4) -> int:
    return math.comb(n + dims - 1, dims - 1)


def spectrum_4d(grid: GridSpec, params: OscillatorParams = OscillatorParams(), n_max: int = 3) -> SpectrumResult:
    """Compose 1D levels into 4D shells ``n = k1 + k2 + k3 + k4``.

    ``numeric_energy`` is the mean of the composed sums over the shell; the
    finite-difference error splits the exact degeneracy slightly.
    """
    if n_max < 0:
        raise PreconditionError("n_max must be >= 0")
    e1 = fd_eigenvalues_1d(grid, params, n_max + 1)
    levels = []
    for n in range(n_max + 1):
        sums = [sum(e1[k] for k in combo) for combo in compositions(n, params.dims)]
        numeric = float(np.mean(sums))
        analytic = params.omega * (n + params.dims / 2)
        levels.append(SpectrumLevel(
            n=n,
            analytic_energy=analytic,
            numeric_energy=numeric,
            degeneracy=degeneracy(n, params.dims),
            residual=numeric - analytic,
        ))
    return SpectrumResult(
        levels=tuple(levels),
        claim_comparison=levels[0].numeric_energy - 1.0,
        grid=grid,
        params=params,
    )


def uncertainty_product_1d(grid: GridSpec, params: OscillatorParams = OscillatorParams(), k: int = 0) -> float:
    """``Delta s * Delta p`` of the k-th finite-difference eigenvector (hbar = 1).

    ``<p^2>`` is the quadratic form of the same discrete Laplacian the
    Hamiltonian uses, i.e. the squared norm of the forward difference with
    zero boundary values. ``<p>`` vanishes for a real eigenvector.
    """
    s, _, v = fd_eigenvectors_1d(grid, params, max(k + 1, 1))
    psi = v[:, k]
    prob = psi * psi
    mean_s = float(np.sum(s * prob))
    var_s = float(np.sum(s * s * prob)) - mean_s**2
    padded = np.concatenate(([0.0], psi, [0.0]))
    var_p = float(np.sum(np.diff(padded) ** 2)) / grid.spacing**2
    return math.sqrt(var_s * var_p)


def mass_time_bound(
    delta_m: float,
    units: Literal["geometric", "SI"] = "geometric",
    hbar: float | None = None,
    c: float | None = None,
) -> float:
    """Smallest proper-time spread ``hbar / (2 c^2 delta_m)`` allowed for a mass spread."""
    if not delta_m > 0:
        raise DomainError(f"delta_m must be positive, got {delta_m}")
    if units == "geometric":
        hbar_default, c_default = 1.0, 1.0
    elif units == "SI":
        hbar_default, c_default = codata.hbar, codata.c
    else:
        raise PreconditionError(f"unknown units {units!r}")
    hbar = hbar_default if hbar is None else hbar
    c = c_default if c is None else c
    return hbar / (2.0 * c * c * delta_m)
