"""Independent reference implementations used by the tests.

These are written from the defining formulas and deliberately avoid the
package's helpers, so agreement is a genuine cross-check.
"""
import math

import numpy as np

HBAR = 1.054571817e-34
K_B = 1.380649e-23
C = 299792458.0


def bose(omega, T):
    if T == 0:
        return 0.0
    return 1.0 / (math.exp(HBAR * omega / (K_B * T)) - 1.0)


def branch(q, lam, L, r, odd, omega_n):
    """Even/odd mode frequency written out directly."""
    cL = C / L
    f = math.asin(r * math.cos(4 * math.pi * q / lam))
    if odd:
        return omega_n + math.pi * cL - cL * f - cL * math.asin(r)
    return omega_n + cL * f - cL * math.asin(r)


def lorentzian(alpha_L, kappa, delta):
    return alpha_L**2 / (kappa**2 + delta**2)


def cavity_from_empty(alpha_L, kappa, delta, t):
    """Cavity amplitude with frozen detuning, starting empty."""
    z = kappa + 1j * delta
    return -1j * alpha_L / z * (1 - np.exp(-z * t))


def drift_elementwise(omega_m, gamma, kappa, delta, G, Om):
    A = np.zeros((4, 4))
    A[0, 1] = omega_m
    A[1, 0] = -Om
    A[1, 1] = -gamma
    A[1, 2] = -G.real
    A[1, 3] = -G.imag
    A[2, 0] = G.imag
    A[2, 2] = -kappa
    A[2, 3] = delta
    A[3, 0] = -G.real
    A[3, 2] = -delta
    A[3, 3] = -kappa
    return A


def log_neg_eigen(V):
    """E_N from the eigenvalues of i*Omega*V after partial transposition of mode 2."""
    P = np.diag([1.0, 1.0, 1.0, -1.0])
    Vt = P @ V @ P
    w = np.array([[0, 1], [-1, 0]])
    Om = np.block([[w, np.zeros((2, 2))], [np.zeros((2, 2)), w]])
    nu = np.sort(np.abs(np.linalg.eigvals(1j * Om @ Vt)))
    return max(0.0, -math.log(2 * nu[0])), nu[0]


def symplectic_eigen(V):
    w = np.array([[0, 1], [-1, 0]])
    Om = np.block([[w, np.zeros((2, 2))], [np.zeros((2, 2)), w]])
    nu = np.sort(np.abs(np.linalg.eigvals(1j * Om @ V)))
    return nu[0], nu[-1]


def two_mode_squeezer(r):
    c, s = math.cosh(r), math.sinh(r)
    return np.array([[c, 0, s, 0], [0, c, 0, -s], [s, 0, c, 0], [0, -s, 0, c]])


def beam_splitter(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, 0, s, 0], [0, c, 0, s], [-s, 0, c, 0], [0, -s, 0, c]])


def rotation(phi1, phi2):
    def rot(p):
        return np.array([[math.cos(p), math.sin(p)], [-math.sin(p), math.cos(p)]])

    S = np.zeros((4, 4))
    S[:2, :2] = rot(phi1)
    S[2:, 2:] = rot(phi2)
    return S


def single_squeezer(r1, r2):
    return np.diag([math.exp(-r1), math.exp(r1), math.exp(-r2), math.exp(r2)])


def random_gaussian_state(rng, max_squeeze=1.0, max_thermal=3.0):
    """Physical two-mode covariance S diag(a,a,b,b) S^T with a random symplectic S."""
    a = 0.5 + rng.uniform(0, max_thermal)
    b = 0.5 + rng.uniform(0, max_thermal)
    S = (rotation(*rng.uniform(0, 2 * math.pi, 2))
         @ beam_splitter(rng.uniform(0, math.pi))
         @ two_mode_squeezer(rng.uniform(0, max_squeeze))
         @ single_squeezer(*rng.uniform(-0.5, 0.5, 2))
         @ rotation(*rng.uniform(0, 2 * math.pi, 2)))
    V = S @ np.diag([a, a, b, b]) @ S.T
    return 0.5 * (V + V.T)
