"""Assembly of the nonlocal Dirichlet form on the zero-extended hat basis.

The matrix realizes the bare double integral

    a(u, v) = iint_{R x R} (u(x)-u(y)) (v(x)-v(y)) / |x-y|^(1+2s) dx dy

for continuous piecewise-linear functions vanishing at the interval
endpoints and outside.  No renormalization factor is applied, so
u^T A u is exactly the squared Gagliardo seminorm of the interpolant.

Structure exploited by the assembly: on a uniform mesh the hats are
translates of each other, and the *full-plane* pair interaction is
translation invariant, so A is exactly symmetric Toeplitz and one exact
kernel integral per inter-node offset suffices.  (The restriction of the
double integral to Omega x Omega is *not* translation invariant near the
boundary; its deviation is exactly compensated by the position-dependent
exterior term 2 int u v rho, which is kept separately as a tridiagonal
diagnostic block.)

Quadrature: element pairs at small offset are integrated exactly via the
change of variable z = x - y and power moments of the piecewise-cubic
integrand (with a logarithmic antiderivative when an exponent hits -1,
which happens at s = 1/2); well-separated pairs use tensor Gauss rules,
which are spectrally accurate there.  The moment formulas are evaluated
in integer arithmetic before the final division, so coefficients that
cancel analytically cancel exactly and divergent moments are never touched.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.linalg import cho_factor, cho_solve, toeplitz

from .errors import (
    AssemblyFailureError,
    DomainBoundaryError,
    GridMismatchError,
    NoConvergenceError,
)
from .grid import Grid, GridFunction

__all__ = [
    "StiffnessForm",
    "MStructureReport",
    "exterior_density",
    "assemble_form",
    "bilinear",
    "seminorm_sq",
    "check_m_structure",
    "spectral_bound",
    "dump_matrix",
    "load_matrix",
]

# Element-index distance up to which pair integrals use exact moments.
# Beyond it the moment differences lose ~D^4 digits to cancellation while
# tensor Gauss is already accurate to machine precision.
_FAR_EXACT = 8

MATRIX_MAGIC = b"FPMEA001"


def _power_moment(e: float, lo: float, hi: float) -> float:
    """int_lo^hi t^e dt for 0 <= lo < hi, with the log branch at e = -1."""
    if abs(e + 1.0) < 1e-13:
        if lo == 0.0:
            raise ArithmeticError("divergent moment reached with nonzero weight")
        return math.log(hi / lo)
    ep = e + 1.0
    if lo == 0.0:
        if ep <= 0.0:
            raise ArithmeticError("divergent moment reached with nonzero weight")
        return hi**ep / ep
    return (hi**ep - lo**ep) / ep


def _kernel_integral(six_coeffs: np.ndarray, zl: float, zr: float, s: float) -> float:
    """int_zl^zr P(z) |z|^(-1-2s) dz where 6 P has the given z-coefficients."""

    def one_side(coeffs, lo, hi):
        if hi - lo <= 0.0:
            return 0.0
        out = 0.0
        for t, c in enumerate(coeffs):
            if c == 0.0:
                continue
            out += c * _power_moment(t - 1.0 - 2.0 * s, lo, hi)
        return out

    val = 0.0
    if zl < 0.0:
        mirrored = [c * (-1.0) ** t for t, c in enumerate(six_coeffs)]
        val += one_side(mirrored, max(0.0, -zr), -zl)
    if zr > 0.0:
        val += one_side(six_coeffs, max(0.0, zl), zr)
    return val / 6.0


def _pair_exact(pj, rk, uj, vk, j: int, k: int, s: float) -> float:
    """Exact integral over e_j x e_k of (p(x)-r(y)) (u(x)-v(y)) |x-y|^(-1-2s).

    p, r are the linear pieces of the first hat on e_j, e_k and u, v those
    of the second; elements are unit intervals e_j = [j, j+1].  All
    polynomial algebra below runs on integers, so analytic cancellations
    at the kernel singularity are exact.
    """
    p0, p1 = pj
    r0, r1 = rk
    u0, u1 = uj
    v0, v1 = vk
    alpha = np.array([p0 - r0, r1], dtype=float)  # p(x) - r(x - z), x-free part
    gamma = np.array([u0 - v0, v1], dtype=float)
    beta = float(p1 - r1)
    delta = float(u1 - v1)
    offset = j - k
    total = 0.0
    branches = (
        # z in [offset-1, offset]: x from j to k+1+z
        (offset - 1.0, float(offset), np.array([float(j)]), np.array([k + 1.0, 1.0])),
        # z in [offset, offset+1]: x from k+z to j+1
        (float(offset), offset + 1.0, np.array([float(k), 1.0]), np.array([j + 1.0])),
    )
    for zl, zr, x0, x1 in branches:
        d1 = npoly.polysub(x1, x0)
        d2 = npoly.polysub(npoly.polymul(x1, x1), npoly.polymul(x0, x0))
        d3 = npoly.polysub(npoly.polypow(x1, 3), npoly.polypow(x0, 3))
        six_p = npoly.polyadd(
            npoly.polyadd(
                6.0 * npoly.polymul(npoly.polymul(alpha, gamma), d1),
                3.0 * npoly.polymul(npoly.polyadd(delta * alpha, beta * gamma), d2),
            ),
            (2.0 * beta * delta) * d3,
        )
        total += _kernel_integral(six_p, zl, zr, s)
    return total


@lru_cache(maxsize=32)
def _gauss_rule(order: int):
    xs, ws = np.polynomial.legendre.leggauss(order)
    return 0.5 * xs + 0.5, 0.5 * ws


def _pair_gauss(pj, rk, uj, vk, j: int, k: int, s: float, order: int) -> float:
    """Tensor Gauss integral over e_j x e_k; accurate for well-separated pairs."""
    t, w = _gauss_rule(order)
    x = (j + t)[:, None]
    y = (k + t)[None, :]
    fx = (pj[0] + pj[1] * x) - (rk[0] + rk[1] * y)
    gx = (uj[0] + uj[1] * x) - (vk[0] + vk[1] * y)
    kern = np.abs(x - y) ** (-1.0 - 2.0 * s)
    return float(np.einsum("i,j,ij->", w, w, fx * gx * kern))


def _segment_integral(t: float) -> float:
    """J(t) = int_1^2 u^t du with the log branch at t = -1."""
    if abs(t + 1.0) < 1e-13:
        return math.log(2.0)
    return (2.0 ** (t + 1.0) - 1.0) / (t + 1.0)


def _tail_same(s: float) -> float:
    """Contribution of |z| beyond the support hull for the offset-0 pair."""
    j = _segment_integral
    inner = 1.0 / (3.0 - 2.0 * s) + 4.0 * j(-2.0 * s) - 4.0 * j(1.0 - 2.0 * s) + j(2.0 - 2.0 * s)
    return 2.0 / s * inner


def _tail_adjacent(s: float) -> float:
    """Same for the offset-1 pair (hats overlap on one element)."""
    j = _segment_integral
    inner = -j(2.0 - 2.0 * s) + 3.0 * j(1.0 - 2.0 * s) - 2.0 * j(-2.0 * s)
    return 2.0 / s * inner


def _unit_generator(d: int, s: float, quad_order: int) -> float:
    """Full-plane interaction of two unit-grid hats at node distance d."""
    psi0 = {-1: (1.0, 1.0), 0: (1.0, -1.0)}
    psid = {d - 1: (1.0 - d, 1.0), d: (d + 1.0, -1.0)}
    zero = (0.0, 0.0)
    if d >= 4:
        pairs = [(j, k) for j in (-1, 0) for k in (d - 1, d)]
    else:
        pairs = [
            (j, k)
            for j in range(-1, d + 1)
            for k in range(j, d + 1)
            if (j in psi0 or k in psi0) and (j in psid or k in psid)
        ]
    total = 0.0
    for j, k in pairs:
        args = (psi0.get(j, zero), psi0.get(k, zero), psid.get(j, zero), psid.get(k, zero))
        if k - j <= _FAR_EXACT:
            val = _pair_exact(*args, j, k, s)
        else:
            val = _pair_gauss(*args, j, k, s, quad_order)
        total += val if j == k else 2.0 * val
    if d == 0:
        total += _tail_same(s)
    elif d == 1:
        total += _tail_adjacent(s)
    return total


def _exterior_tridiagonal(grid: Grid, s: float) -> tuple[np.ndarray, np.ndarray]:
    """Tridiagonal E with E_ij = 2 int_Omega psi_i psi_j rho dx.

    Integrated exactly: per element the product is quadratic and each of
    the two power kernels in rho has a closed-form moment; the right
    kernel follows from the left by mirror symmetry of the uniform mesh.
    """
    n, h = grid.n, grid.h
    two_s = 2.0 * s
    diag_left = np.zeros(n)
    off_left = np.zeros(n - 1)
    for e in range(n + 1):  # element [e h, (e+1) h] in xi = x - a coordinates
        lo, hi = e * h, (e + 1) * h
        pieces = []
        if e >= 1:
            pieces.append((e, np.array([e + 1.0, -1.0 / h])))  # right piece of hat e
        if e <= n - 1:
            pieces.append((e + 1, np.array([-float(e), 1.0 / h])))  # left piece of hat e+1
        for ia, (i, pa) in enumerate(pieces):
            for i2, pb in pieces[ia:]:
                coeffs = npoly.polymul(pa, pb)
                val = 0.0
                for t, c in enumerate(coeffs):
                    if c == 0.0:
                        continue
                    val += c * _power_moment(t - two_s, lo, hi)
                val /= two_s
                if i == i2:
                    diag_left[i - 1] += val
                else:
                    off_left[min(i, i2) - 1] += val
    diag = 2.0 * (diag_left + diag_left[::-1])
    off = 2.0 * (off_left + off_left[::-1])
    return diag, off


class _ExteriorDensity:
    """Closed-form density rho(x) of the exterior kernel mass.

    rho(x) = [(x-a)^(-2s) + (b-x)^(-2s)] / (2s); the exterior contribution
    to the bilinear form is 2 int_Omega u v rho.  Evaluable strictly inside
    (a, b) only.
    """

    def __init__(self, grid: Grid, s: float):
        self.grid = grid
        self.s = s

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x <= self.grid.a) or np.any(x >= self.grid.b):
            raise DomainBoundaryError("density defined strictly inside (a, b)")
        two_s = 2.0 * self.s
        val = ((x - self.grid.a) ** (-two_s) + (self.grid.b - x) ** (-two_s)) / two_s
        return float(val) if val.ndim == 0 else val

    def on_nodes(self) -> GridFunction:
        return GridFunction(self.grid, self(self.grid.nodes))


def exterior_density(grid: Grid, s: float) -> _ExteriorDensity:
    if not (0.0 < s < 1.0):
        raise AssemblyFailureError(f"need 0 < s < 1, got s={s}")
    return _ExteriorDensity(grid, s)


@dataclass(frozen=True)
class MStructureReport:
    max_offdiag: float
    min_rowsum: float
    tol: float
    offdiag_ok: bool
    rowsum_ok: bool

    @property
    def passed(self) -> bool:
        return self.offdiag_ok and self.rowsum_ok


@dataclass(frozen=True)
class StiffnessForm:
    """Assembled dense Gagliardo form with its Toeplitz generator.

    `matrix` is the full form (exactly symmetric Toeplitz on a uniform
    mesh); `ext_diag`/`ext_off` hold the tridiagonal exterior block, so the
    Omega x Omega restriction of the double integral is matrix minus that
    block.  Immutable after construction; safe to share across threads.
    """

    grid: Grid
    s: float
    quad_order: int
    matrix: np.ndarray = field(repr=False)
    toeplitz_row: np.ndarray = field(repr=False)
    ext_diag: np.ndarray = field(repr=False)
    ext_off: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.grid.n

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ x

    @cached_property
    def _cho(self):
        try:
            return cho_factor(self.matrix, lower=True)
        except np.linalg.LinAlgError as exc:  # pragma: no cover - PD is structural
            raise AssemblyFailureError(f"matrix not positive definite: {exc}") from exc

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """A^{-1} rhs via the cached dense Cholesky factor."""
        return cho_solve(self._cho, rhs)

    @cached_property
    def lipschitz_bound(self) -> float:
        return spectral_bound(self)

    def exterior_matrix(self) -> np.ndarray:
        e = np.diag(self.ext_diag)
        idx = np.arange(self.n - 1)
        e[idx, idx + 1] = self.ext_off
        e[idx + 1, idx] = self.ext_off
        return e

    def omega_part(self) -> np.ndarray:
        """Restriction of the double integral to Omega x Omega (diagnostic)."""
        return self.matrix - self.exterior_matrix()


def assemble_form(grid: Grid, s: float, quad_order: int = 8) -> StiffnessForm:
    """Assemble the dense form; validates the structural invariants.

    One exact/Gauss kernel integral per inter-node offset plus the
    closed-form exterior block; raises assembly-failure if the sign
    pattern or positive definiteness fails beyond tolerance.
    """
    if not (0.0 < s < 1.0):
        raise AssemblyFailureError(f"need 0 < s < 1, got s={s}")
    if quad_order < 4:
        raise AssemblyFailureError(f"need quad_order >= 4, got {quad_order}")
    h = grid.h
    scale = h ** (1.0 - 2.0 * s)
    row = scale * np.array([_unit_generator(d, s, quad_order) for d in range(grid.n)])
    matrix = toeplitz(row)
    ext_diag, ext_off = _exterior_tridiagonal(grid, s)
    for arr in (row, matrix, ext_diag, ext_off):
        arr.setflags(write=False)
    form = StiffnessForm(
        grid=grid,
        s=s,
        quad_order=quad_order,
        matrix=matrix,
        toeplitz_row=row,
        ext_diag=ext_diag,
        ext_off=ext_off,
    )
    report = check_m_structure(form)
    if not report.passed:
        raise AssemblyFailureError(
            f"M-structure violated: max offdiag {report.max_offdiag:.3e}, "
            f"min rowsum {report.min_rowsum:.3e}, tol {report.tol:.3e}"
        )
    form._cho  # noqa: B018 - positive definiteness check via Cholesky
    return form


def bilinear(form: StiffnessForm, f: GridFunction, g: GridFunction) -> float:
    if f.grid != form.grid or g.grid != form.grid:
        raise GridMismatchError("grid mismatch with assembled form")
    return float(f.values @ form.matvec(g.values))


def seminorm_sq(form: StiffnessForm, f: GridFunction) -> float:
    return bilinear(form, f, f)


def check_m_structure(form: StiffnessForm, rel_tol: float = 1e-12) -> MStructureReport:
    a = form.matrix
    tol = rel_tol * float(np.max(np.abs(a)))
    off = a[~np.eye(form.n, dtype=bool)]
    max_offdiag = float(off.max()) if off.size else 0.0
    min_rowsum = float(a.sum(axis=1).min())
    return MStructureReport(
        max_offdiag=max_offdiag,
        min_rowsum=min_rowsum,
        tol=tol,
        offdiag_ok=max_offdiag <= tol,
        rowsum_ok=min_rowsum >= -tol,
    )


def spectral_bound(form: StiffnessForm, rel_tol: float = 1e-6, max_iter: int = 10_000) -> float:
    """Upper bound on lambda_max via power iteration, with 1% safety factor."""
    a = form.matrix
    x = np.ones(form.n) / math.sqrt(form.n)
    lam_prev = 0.0
    for _ in range(max_iter):
        y = a @ x
        lam = float(x @ y)
        x = y / np.linalg.norm(y)
        if lam_prev > 0.0 and abs(lam - lam_prev) <= rel_tol * lam:
            return 1.01 * lam
        lam_prev = lam
    raise NoConvergenceError("power iteration did not converge")


def dump_matrix(matrix: np.ndarray, path) -> None:
    """Binary cache: magic, two little-endian int64 dims, row-major float64."""
    m = np.ascontiguousarray(matrix, dtype=float)
    with open(path, "wb") as fh:
        fh.write(MATRIX_MAGIC)
        fh.write(struct.pack("<qq", m.shape[0], m.shape[1]))
        fh.write(m.astype("<f8").tobytes())


def load_matrix(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != MATRIX_MAGIC:
            raise AssemblyFailureError(f"bad matrix cache magic: {magic!r}")
        rows, cols = struct.unpack("<qq", fh.read(16))
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != rows * cols:
        raise AssemblyFailureError("matrix cache truncated")
    return data.reshape(rows, cols).astype(float)
