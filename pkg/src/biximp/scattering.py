"""Reflection-amplitude poles of the impurity-dressed biexciton.

The first-order continued-fraction treatment of the scattering problem
gives a closed reflection amplitude for complex CM wavevector
K = K' + i K'':

    R_b(K) = 2 D V0 S / [(J^2 cos 2K' sinh 2|K''| - 2 D V0 S)
                          - i J^2 sin 2K' cosh 2|K''|]

with the relative-coordinate averaging function

    S(K', |K''|) = sum_{s = -N/2+1}^{N/2} e^{-2|K''| |s|}
                   phi_{K'-i|K''|}(s) phi_{K'+i|K''|}(s),

where phi at complex wavevector is the analytic continuation of the
closed pair wavefunction through alpha_K = 2 J cos K / D.  Note the
|s| damping: the bare-s continuation of the diagonal matrix element
grows with |K''| and the resulting pole condition has no solution in
the parameter range of interest, so the damped form, which behaves as
a genuine averaging factor (monotone in |K''|, bounded by S(K', 0)),
is used throughout.  Poles sit at K' = 0 when sgn(D) = sgn(V0) and at
K' = pi/2 otherwise, at the K'' root of

    sinh(2|K''|) = 2 D V0 S(K', |K''|) / (J^2 cos 2K').

First-order ingredients: beta = <V> = (4 V0/N) S and
gamma = i N D beta^2 / (2 J^2 sin 2K); the amplitude satisfies
R_b = gamma / (beta - gamma) identically.
"""

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import NumericalError, RangeError

POLE_RESIDUAL_TOL = 1e-10
_EXP_LIMIT = 690.0


def phi_complex_k(Kc, s, params):
    """Pair wavefunction continued to complex CM wavevector (even branch).

    alpha and the decay constant k_c = -log(alpha) go complex; the
    even/odd distinction is exponentially small in N and the even form
    is used.  phi(0) = 0 by the hard core.
    """
    if s == 0:
        return 0.0 + 0.0j
    a = 2.0 * params.J * cmath.cos(Kc) / params.D
    if a == 0:
        raise RangeError("alpha = 0 at complex K: delta limit not continuable")
    k_c = -cmath.log(a)
    N = params.N
    if abs(k_c.real) * (N - 1) > _EXP_LIMIT:
        raise RangeError(
            f"hyperbolic overflow: |Re k_c| (N-1) = {abs(k_c.real) * (N - 1):.1f}")
    norm2 = (N - 1) + cmath.sinh(k_c * (N - 1)) / cmath.sinh(k_c)
    return cmath.cosh(k_c * (N / 2.0 - abs(s))) / cmath.sqrt(norm2)


def s_function(k_prime, k_doubleprime, params):
    """Averaged-potential function S(K', |K''|); real by construction.

    An imaginary residue above 1e-10 of the magnitude raises
    NumericalError instead of being silently dropped.
    """
    kpp = abs(k_doubleprime)
    N = params.N
    tot = 0.0 + 0.0j
    for s in range(-N // 2 + 1, N // 2 + 1):
        if s == 0:
            continue
        damp = math.exp(-2.0 * kpp * abs(s))
        tot += damp * phi_complex_k(k_prime - 1j * kpp, s, params) \
            * phi_complex_k(k_prime + 1j * kpp, s, params)
    if abs(tot.imag) > 1e-10 * max(abs(tot), 1e-300):
        raise NumericalError(f"S not real: {tot}", residual=abs(tot.imag))
    return tot.real


def biexciton_reflection_amplitude(Kc, params):
    """R_b at complex K; returns complex infinity at the pole."""
    if params.V0 == 0.0:
        return 0.0 + 0.0j
    p = params
    kp, kpp = Kc.real, abs(Kc.imag)
    S = s_function(kp, kpp, p)
    num = 2.0 * p.D * p.V0 * S
    den = (p.J ** 2 * math.cos(2 * kp) * math.sinh(2 * kpp) - num) \
        - 1j * p.J ** 2 * math.sin(2 * kp) * math.cosh(2 * kpp)
    if abs(den) < 1e-12 * max(abs(num), 1.0):
        return complex(math.inf, 0.0)
    return num / den


@dataclass(frozen=True)
class PoleResult:
    K_prime: float
    K_doubleprime: float
    energy: float
    residual: float

    @property
    def K(self):
        return complex(self.K_prime, self.K_doubleprime)


def pole_branch(params):
    """K' = 0 for sgn(D) = sgn(V0), K' = pi/2 for opposite signs."""
    if params.V0 == 0.0 or params.D == 0.0:
        from .errors import ParameterError
        raise ParameterError("pole branch undefined for D V0 = 0")
    return 0.0 if params.D * params.V0 > 0 else math.pi / 2


def find_pole(params, k_max=4.0, n_scan=800):
    """Root of sinh(2 K'') = 2 D V0 S / (J^2 cos 2K') on the sign branch.

    The equation is scanned for a sign change and polished with Brent;
    S is re-evaluated at every K'', so the self-consistency is exact at
    the root.  The pole energy follows from the large-N dispersion at
    complex K.
    """
    p = params
    kp = pole_branch(p)
    c2 = math.cos(2.0 * kp)

    def f(k):
        return math.sinh(2.0 * k) - 2.0 * p.D * p.V0 * s_function(kp, k, p) / (p.J ** 2 * c2)

    ks = np.linspace(1e-6, k_max, n_scan)
    vals = np.array([f(k) for k in ks])
    for i in range(len(ks) - 1):
        if vals[i] * vals[i + 1] < 0:
            k = brentq(f, ks[i], ks[i + 1], xtol=1e-14)
            resid = abs(f(k))
            if resid > POLE_RESIDUAL_TOL:
                raise NumericalError("pole residual above tolerance", residual=resid)
            Kc = kp + 1j * k
            a = 2.0 * p.J * cmath.cos(Kc) / p.D
            energy = 2.0 * p.E0 + (p.D * (1.0 + a * a)).real
            return PoleResult(kp, k, energy, resid)
    raise NumericalError(
        f"no pole found on branch K'={kp:.4f} for D={p.D}, V0={p.V0} "
        f"(scanned K'' up to {k_max})")


@dataclass(frozen=True)
class FirstOrderScattering:
    beta0: complex
    gamma1: complex
    reflection: complex
    correction: np.ndarray   # scattered-state coefficients over the K grid


def continued_fraction_first_order(Kc, params, modes=None):
    """First-order continued-fraction ingredients at (complex) K.

    Returns beta = (4 V0/N) S, gamma = i N D beta^2 / (2 J^2 sin 2K),
    the reconstructed reflection gamma/(beta - gamma), and the
    first-order scattered-state coefficients
    c_Q = [beta/(beta-gamma)] V_QK / (E(K) - E(Q)) over the real grid.
    """
    p = params
    Kc = complex(Kc)
    if p.V0 == 0.0:
        n = p.N if modes is None else len(modes)
        return FirstOrderScattering(0.0, 0.0, 0.0, np.zeros(n, dtype=complex))
    sin2K = cmath.sin(2.0 * Kc)
    if abs(sin2K) < 1e-12:
        raise RangeError("sin 2K = 0: first-order correction singular")
    S = s_function(Kc.real, Kc.imag, p)
    beta = 4.0 * p.V0 * S / p.N
    gamma = 1j * p.N * p.D * beta * beta / (2.0 * p.J ** 2 * sin2K)
    refl = gamma / (beta - gamma)
    correction = np.zeros(0, dtype=complex)
    if modes is not None:
        a = 2.0 * p.J * cmath.cos(Kc) / p.D
        eK = 2.0 * p.E0 + p.D * (1.0 + a * a)
        pref = beta / (beta - gamma)
        correction = np.zeros(len(modes), dtype=complex)
        for q in range(len(modes)):
            de = eK - modes.energies[q]
            if abs(de) < 1e-12:
                correction[q] = 0.0
                continue
            # V_QK continued to complex K on the one-period window
            v = 0.0 + 0.0j
            N = p.N
            for s in range(-N // 2 + 1, N // 2 + 1):
                if s == 0:
                    continue
                v += modes.phi[q, s + N - 1] * phi_complex_k(Kc, s, p) \
                    * cmath.exp(1j * (Kc - modes.K[q]) * s)
            v *= 4.0 * p.V0 / N
            correction[q] = pref * v / de
    return FirstOrderScattering(beta, gamma, refl, correction)
