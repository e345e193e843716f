"""Pilot: which part of the 1D fractional stiffness matrix is Toeplitz?

Brute-force quadrature check at small n. A_ij is the full-plane Gagliardo
double integral over zero-extended hats; T_ij restricts the double integral
to Omega x Omega; E_ij = 2 int psi_i psi_j rho is the exterior part.
"""
import numpy as np
from scipy.integrate import quad

a, b = 0.0, 1.0
n = 7
h = (b - a) / (n + 1)
nodes = a + h * np.arange(1, n + 1)
s = 0.6


def hat(i, x):
    return np.maximum(0.0, 1.0 - np.abs(x - nodes[i]) / h)


def overlap_integral(i, j, z, lo, hi):
    # int_{lo}^{hi} (psi_i(x)-psi_i(x-z))(psi_j(x)-psi_j(x-z)) dx by fine Gauss
    if hi <= lo:
        return 0.0
    xs, ws = np.polynomial.legendre.leggauss(60)
    breaks = np.unique(np.clip(np.concatenate([
        nodes - h, nodes, nodes + h, nodes - h + z, nodes + z, nodes + h + z,
        [lo, hi]]), lo, hi))
    total = 0.0
    for p, q_ in zip(breaks[:-1], breaks[1:]):
        if q_ - p < 1e-15:
            continue
        xm = 0.5 * (p + q_) + 0.5 * (q_ - p) * xs
        wm = 0.5 * (q_ - p) * ws
        fi = hat(i, xm) - hat(i, xm - z)
        fj = hat(j, xm) - hat(j, xm - z)
        total += np.sum(wm * fi * fj)
    return total


def entry(i, j, full):
    # int |z|^{-1-2s} P(z) dz with P(z) the x-overlap integral
    zmax = (b - a) + 2 * h

    def P_times_kernel(z):
        if abs(z) < 1e-14:
            return 0.0
        if full:
            lo = min(nodes[i], nodes[j]) - h + min(0.0, z)
            hi = max(nodes[i], nodes[j]) + h + max(0.0, z)
        else:
            lo, hi = max(a, a + z), min(b, b + z)
        return overlap_integral(i, j, z, lo, hi) * abs(z) ** (-1 - 2 * s)

    val = 0.0
    for sign in (-1, 1):
        r, _ = quad(lambda t: P_times_kernel(sign * t), 0.0, zmax,
                    points=[h, 2 * h, 3 * h], limit=300)
        val += r
    if full:
        # tails |z| > zmax never overlap supports in the full case, but the
        # product term psi_i(x)psi_j(x) survives: 2 int psi_i psi_j tau(x) dx
        def tail(x):
            lo_t = x - (-zmax)
            return hat(i, x) * hat(j, x) * (
                (x - (min(nodes) - h - zmax)) ** 0 * 0)
        # tails handled by enlarging zmax instead:
        pass
    return val


def rho(x):
    return ((x - a) ** (-2 * s) + (b - x) ** (-2 * s)) / (2 * s)


def exterior_entry(i, j):
    if abs(i - j) > 1:
        return 0.0
    r, _ = quad(lambda x: 2 * hat(i, x) * hat(j, x) * rho(x), a, b,
                points=list(nodes), limit=300)
    return r


# full-space entries: use large zmax so tails are inside quadrature range
def entry_full(i, j):
    zmax = 60.0 * (b - a)

    def f(z):
        if abs(z) < 1e-14:
            return 0.0
        lo = min(nodes[i], nodes[j]) - h + min(0.0, z)
        hi = max(nodes[i], nodes[j]) + h + max(0.0, z)
        return overlap_integral(i, j, z, lo, hi) * abs(z) ** (-1 - 2 * s)

    val = 0.0
    for sign in (-1, 1):
        r, _ = quad(lambda t: f(sign * t), 0.0, zmax,
                    points=[h, 2 * h, 3 * h, 1.0, 10.0], limit=400)
        val += r
    return val


A = np.zeros((n, n))
T = np.zeros((n, n))
E = np.zeros((n, n))
for i in range(n):
    for j in range(i, n):
        A[i, j] = A[j, i] = entry_full(i, j)
        T[i, j] = T[j, i] = entry(i, j, full=False)
        E[i, j] = E[j, i] = exterior_entry(i, j)

np.set_printoptions(precision=6, suppress=False, linewidth=150)
print("A diag:", np.diag(A))
print("T diag:", np.diag(T))
print("E diag:", np.diag(E))
print("A = T + E check, max abs err:", np.max(np.abs(A - T - E)))
print("A Toeplitz deviation:",
      max(abs(A[i, j] - A[i + 1, j + 1]) for i in range(n - 1) for j in range(n - 1)))
print("T Toeplitz deviation:",
      max(abs(T[i, j] - T[i + 1, j + 1]) for i in range(n - 1) for j in range(n - 1)))
print("A offdiag max:", np.max(A - np.diag(np.diag(A))- np.diag(np.diag(A,1),1)*0))
print("A row sums:", A.sum(axis=1))
print("adjacent entries A[i,i+1]:", np.diag(A, 1))
