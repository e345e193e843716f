"""Uniform interval mesh, nodal functions, lumped integration, nonlinearities.

Functions are identified with their values at the n interior nodes of a
uniform mesh on (a, b); the continuous object is the piecewise-linear
interpolant vanishing at both endpoints and extended by zero outside.
All local integrals use mass lumping with weight h per interior node, which
keeps nonlinear terms separable and sign decompositions exact.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import GridMismatchError, InvalidDomainError, MissingFileError

__all__ = [
    "Grid",
    "GridFunction",
    "EnergyParams",
    "make_grid",
    "lp_norm",
    "phi_map",
    "phi_inv",
    "g_map",
    "pos_part",
    "neg_part",
]


@dataclass(frozen=True)
class Grid:
    """Uniform mesh on (a, b) with n interior nodes and spacing h = (b-a)/(n+1)."""

    a: float
    b: float
    n: int

    def __post_init__(self):
        if not (self.b > self.a):
            raise InvalidDomainError(f"need b > a, got ({self.a}, {self.b})")
        if self.n < 8:
            raise InvalidDomainError(f"need at least 8 interior nodes, got {self.n}")

    @property
    def h(self) -> float:
        return (self.b - self.a) / (self.n + 1)

    @cached_property
    def nodes(self) -> np.ndarray:
        x = self.a + self.h * np.arange(1, self.n + 1)
        x.setflags(write=False)
        return x

    def function(self, values: np.ndarray) -> "GridFunction":
        return GridFunction(self, values)

    def interpolate(self, f) -> "GridFunction":
        """Nodal interpolant of a callable f(x)."""
        return GridFunction(self, np.asarray(f(self.nodes), dtype=float))

    def zeros(self) -> "GridFunction":
        return GridFunction(self, np.zeros(self.n))


@dataclass(frozen=True)
class GridFunction:
    """Nodal values of a function vanishing at a, b and outside (a, b)."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=float)
        if v.shape != (self.grid.n,):
            raise GridMismatchError(
                f"expected {self.grid.n} nodal values, got shape {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("nodal values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def same_grid(self, other: "GridFunction") -> None:
        if self.grid != other.grid:
            raise GridMismatchError("grid mismatch between operands")

    def __neg__(self) -> "GridFunction":
        return GridFunction(self.grid, -self.values)

    def to_csv(self, path) -> None:
        """Two-column CSV `x,value`, interior nodes only, 17 significant digits."""
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(serialize_csv(self))

    @staticmethod
    def from_csv(grid: Grid, path) -> "GridFunction":
        try:
            data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        except FileNotFoundError as exc:
            raise MissingFileError(str(exc)) from exc
        if data.shape[0] != grid.n:
            raise GridMismatchError(
                f"file has {data.shape[0]} rows, grid expects {grid.n}"
            )
        return GridFunction(grid, data[:, 1])


def serialize_csv(f: GridFunction) -> str:
    buf = io.StringIO()
    buf.write("x,value\n")
    for x, v in zip(f.grid.nodes, f.values):
        buf.write(f"{x:.17g},{v:.17g}\n")
    return buf.getvalue()


@dataclass(frozen=True)
class EnergyParams:
    """Exponents (s, m) with q = (m+1)/m derived, and the linear-term weight alpha.

    The admissible range m > 1 forces 1 < q < 2; alpha > 0 is free (the
    parabolic rescaling uses alpha = 1/(m-1)).
    """

    s: float
    m: float
    alpha: float

    def __post_init__(self):
        if not (0.0 < self.s < 1.0):
            raise InvalidDomainError(f"need 0 < s < 1, got s={self.s}")
        if not (self.m > 1.0):
            raise InvalidDomainError(f"need m > 1, got m={self.m}")
        if not (self.alpha > 0.0):
            raise InvalidDomainError(f"need alpha > 0, got alpha={self.alpha}")

    @property
    def q(self) -> float:
        return (self.m + 1.0) / self.m

    @staticmethod
    def with_default_alpha(s: float, m: float) -> "EnergyParams":
        """Parameters of the rescaled flow: alpha = 1/(m-1)."""
        return EnergyParams(s=s, m=m, alpha=1.0 / (m - 1.0))


def make_grid(a: float, b: float, n: int) -> Grid:
    """Uniform grid on (a, b) with n interior nodes."""
    return Grid(float(a), float(b), int(n))


def lp_norm(f: GridFunction, p: float) -> float:
    """Lumped L^p norm (sum_i h |f_i|^p)^(1/p), p >= 1."""
    if p < 1.0:
        raise ValueError(f"need p >= 1, got {p}")
    return float(np.sum(f.grid.h * np.abs(f.values) ** p) ** (1.0 / p))


def _odd_power(v: np.ndarray, e: float) -> np.ndarray:
    """|v|^(e-1) * v with the continuous extension 0 at v = 0 (valid for e > 0)."""
    out = np.zeros_like(v)
    nz = v != 0.0
    out[nz] = np.abs(v[nz]) ** (e - 1.0) * v[nz]
    return out


def phi_map(v: GridFunction, m: float) -> GridFunction:
    """Pointwise |v|^(m-1) v, the porous-medium nonlinearity."""
    return GridFunction(v.grid, _odd_power(v.values, m))


def phi_inv(phi: GridFunction, q: float) -> GridFunction:
    """Pointwise |phi|^(q-2) phi, inverse of phi_map when q = (m+1)/m."""
    return GridFunction(phi.grid, _odd_power(phi.values, q - 1.0))


def g_map(v: GridFunction, m: float) -> GridFunction:
    """Pointwise |v|^((m-1)/2) v, the dissipation nonlinearity."""
    return GridFunction(v.grid, _odd_power(v.values, (m + 1.0) / 2.0))


def pos_part(f: GridFunction) -> GridFunction:
    return GridFunction(f.grid, np.maximum(f.values, 0.0))


def neg_part(f: GridFunction) -> GridFunction:
    """Nonnegative negative part: f = pos_part(f) - neg_part(f) exactly."""
    return GridFunction(f.grid, np.maximum(-f.values, 0.0))
