"""Impurity-free biexciton eigenbasis on the ring.

For CM wavevector K the relative wavefunction is, up to normalization,

    phi_K(s) = cosh k_i (N/2 - |s|) / Norm_e   (l_K even)
    phi_K(s) = sinh k_i (N/2 - |s|) / Norm_o   (l_K odd)

with phi_K(0) = 0 (hard core) and the twist symmetry
phi_K(N - |s|) = (-1)^{l_K} phi_K(|s|).  The decay constant k_i solves
the pairing condition obtained by matching the s = 1 hopping equation:

    cosh(k_i N/2) / cosh(k_i (N/2-1)) = 1/alpha_K   (even branch)
    sinh(k_i N/2) / sinh(k_i (N/2-1)) = 1/alpha_K   (odd branch)

where alpha_K = 2 J cos K / D.  For large N both reduce to
k_i = |ln|alpha_K||.  The pair energy is E = 2 E0 + 4 J cos K cosh k_i,
which in the large-N form becomes 2 E0 + D (1 + alpha_K^2).  At
K = pi/2 (alpha = 0) the relative wavefunction collapses onto
|s| = 1 and |s| = N-1 with weight 1/2 each and the energy is 2 E0 + D.

All hyperbolic evaluations run in log space so that N up to several
hundred does not overflow.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import ExistenceError, NumericalError
from .params import WavevectorIndex, k_grid

_LN2 = math.log(2.0)

# k_i values above this are treated as the delta-localized limit; the
# closed form is exact to ~e^{-2 k_i} there and the finite forms would
# overflow the normalization.  Only the K = pi/2 grid point (alpha at
# floating-point noise level) ever reaches it.
DELTA_LIMIT_KI = 30.0


def log_cosh(x):
    ax = abs(x)
    return ax - _LN2 + math.log1p(math.exp(-2.0 * ax))


def log_sinh(x):
    """log sinh(x) for x > 0."""
    return x - _LN2 + math.log1p(-math.exp(-2.0 * x))


def alpha(K, params):
    """Dimensionless pairing parameter alpha_K = 2 J cos K / D."""
    if params.D == 0.0:
        from .errors import ParameterError
        raise ParameterError("alpha undefined for D = 0")
    return 2.0 * params.J * math.cos(K) / params.D


def _ratio_residual(k_i, inv_alpha_log, N, parity):
    if parity == 0:
        return log_cosh(k_i * N / 2) - log_cosh(k_i * (N / 2 - 1)) - inv_alpha_log
    return log_sinh(k_i * N / 2) - log_sinh(k_i * (N / 2 - 1)) - inv_alpha_log


def solve_relative_decay(K, params, parity, method="exact"):
    """Decay constant k_i of the bound relative wavefunction at CM mode K.

    Returns math.inf at K = pi/2 (delta-localized limit).  Raises
    ExistenceError when the finite-N pairing condition has no bound
    root: the even branch needs 1/alpha >= 1, the odd branch
    1/alpha >= N/(N-2).
    """
    a = alpha(K, params)
    if a == 0.0:
        return math.inf
    if a < 0.0:
        raise ExistenceError(
            "alpha_K < 0: K outside the folded zone for this sign convention")
    seed = abs(math.log(a))
    if seed > DELTA_LIMIT_KI:
        return math.inf
    if method == "large_n":
        if a > 1.0:
            raise ExistenceError(
                f"no bound relative solution: |2J cos K| > |D| at K={K:.6f}")
        return seed if seed > 0 else 0.0
    if method != "exact":
        raise ValueError(f"unknown method {method!r}")

    N = params.N
    inv_alpha_log = -math.log(a)
    threshold = 0.0 if parity == 0 else math.log(N / (N - 2.0))
    if inv_alpha_log <= threshold:
        raise ExistenceError(
            f"no bound relative root at K={K:.6f} "
            f"(parity {parity}, 1/alpha={1/a:.6f} below finite-N threshold)")

    lo = 1e-14
    hi = max(2.0 * seed, 1.0)
    f = lambda k: _ratio_residual(k, inv_alpha_log, N, parity)
    while f(hi) < 0.0:
        hi *= 2.0
        if hi > 1e6:
            raise NumericalError("bound-root bracket expansion failed", residual=f(hi))
    root = brentq(f, lo, hi, xtol=1e-15, rtol=8.9e-16)
    resid = f(root)
    if abs(resid) > 1e-12:
        raise NumericalError(
            f"pairing-condition residual {resid:.2e} above tolerance", residual=resid)
    return root


def solve_relative_wavevector(K, params, parity, method="exact"):
    """Complex relative wavevector k = i k_i (k_r = 0 convention)."""
    k_i = solve_relative_decay(K, params, parity, method)
    return complex(0.0, k_i)


def biexciton_energy(K, params, parity=0, method="exact"):
    """Pair energy at CM mode K.

    exact:   2 E0 + 4 J cos K cosh k_i with the finite-N root,
    large_n: 2 E0 + D (1 + alpha_K^2).
    Both give 2 E0 + D at K = pi/2.
    """
    a = alpha(K, params)
    if method == "large_n":
        return 2.0 * params.E0 + params.D * (1.0 + a * a)
    k_i = solve_relative_decay(K, params, parity, method)
    if math.isinf(k_i):
        return 2.0 * params.E0 + params.D
    return 2.0 * params.E0 + 4.0 * params.J * math.cos(K) * math.cosh(k_i)


def continuum_energy(K, k, params):
    """Two-exciton energy 2 E0 + 4 J cos K cos k for real relative k."""
    return 2.0 * params.E0 + 4.0 * params.J * math.cos(K) * math.cos(k)


def free_relative_roots(K, params, parity):
    """Real relative roots k in (0, pi) of the pairing condition.

    Uses the division-free form 2 J cos K cos(kN/2) = D cos(k(N/2-1))
    so that D = 0 is allowed.  Used for validation against full
    diagonalization; trivial roots with identically vanishing
    wavefunction are dropped.
    """
    N = params.N
    c = 2.0 * params.J * math.cos(K)

    def g(k):
        if parity == 0:
            return c * math.cos(k * N / 2) - params.D * math.cos(k * (N / 2 - 1))
        return c * math.sin(k * N / 2) - params.D * math.sin(k * (N / 2 - 1))

    ks = np.linspace(1e-9, math.pi - 1e-9, 8 * N)
    vals = np.array([g(k) for k in ks])
    roots = []
    for i in range(len(ks) - 1):
        if vals[i] == 0.0:
            roots.append(ks[i])
        elif vals[i] * vals[i + 1] < 0:
            roots.append(brentq(g, ks[i], ks[i + 1], xtol=1e-14))
    # drop roots whose sampled wavefunction vanishes identically
    out = []
    for k in roots:
        s = np.arange(1, N)
        w = np.cos(k * (N / 2 - s)) if parity == 0 else np.sin(k * (N / 2 - s))
        if np.max(np.abs(w)) > 1e-9:
            out.append(k)
    return out


def phi_samples(index, k_i, params):
    """phi_K(s) sampled on s in [-N+1, N-1] (index s + N - 1), unit norm.

    Normalized so that sum_s phi^2 = 1 over the sampled range; the full
    state norm over the even r+s sublattice then equals one with the
    sqrt(2/N) CM prefactor.  At the delta limit (k_i = inf) the closed
    half-half form on |s| = 1 and |s| = N-1 is used.
    """
    N = params.N
    s = np.arange(-N + 1, N)
    out = np.zeros(2 * N - 1)
    if math.isinf(k_i):
        out[np.abs(s) == 1] = 0.5
        out[np.abs(s) == N - 1] += 0.5 * (-1) ** index.l_K
        # |s| = 1 and |s| = N-1 coincide only for N = 2, excluded by params
        return out
    x = k_i * (N / 2.0 - np.abs(s))
    if index.parity == 0:
        log_norm2 = np.logaddexp(math.log(N - 1.0),
                                 log_sinh(k_i * (N - 1)) - log_sinh(k_i))
        out = np.exp(np.array([log_cosh(v) for v in x]) - 0.5 * log_norm2)
    else:
        big = log_sinh(k_i * (N - 1)) - log_sinh(k_i)
        log_norm2 = big + math.log1p(-math.exp(math.log(N - 1.0) - big))
        vals = np.zeros_like(x)
        nz = x != 0.0
        vals[nz] = np.sign(x[nz]) * np.exp(
            np.array([log_sinh(abs(v)) for v in x[nz]]) - 0.5 * log_norm2)
        out = vals
    out[s == 0] = 0.0
    return out


@dataclass(frozen=True)
class BiexcitonMode:
    """One CM mode with its relative-coordinate solution."""

    index: WavevectorIndex
    alpha: float
    k: complex             # i * k_i; imag part inf marks the delta limit
    energy: float
    phi: np.ndarray        # phi_K(s), s in [-N+1, N-1]
    norm: float            # normalization constant of the closed form

    @property
    def K(self):
        return self.index.K

    @property
    def delta_limit(self):
        return math.isinf(self.k.imag)

    def phi_at(self, s, N):
        if not -N < s < N:
            from .errors import ParameterError
            raise ParameterError(f"s={s} outside (-N, N)")
        return self.phi[s + N - 1]


def default_method(params):
    """large_n when |D/2J| > 2 and N >= 40, exact otherwise."""
    if abs(params.D / (2.0 * params.J)) > 2.0 and params.N >= 40:
        return "large_n"
    return "exact"


def build_mode(index, params, method="exact"):
    a = alpha(index.K, params)
    k_i = solve_relative_decay(index.K, params, index.parity, method)
    if math.isinf(k_i):
        energy = 2.0 * params.E0 + params.D
        norm = 2.0
    else:
        energy = (2.0 * params.E0 + params.D * (1.0 + a * a) if method == "large_n"
                  else 2.0 * params.E0
                  + 4.0 * params.J * math.cos(index.K) * math.cosh(k_i))
        N = params.N
        half_log = 0.5 * (log_sinh(k_i * (N - 1)) - log_sinh(k_i))
        if half_log > 350.0:
            norm = math.inf
        else:
            ratio = math.exp(2.0 * half_log)
            norm = math.sqrt((N - 1) + ratio) if index.parity == 0 \
                else math.sqrt(ratio - (N - 1))
    return BiexcitonMode(index=index, alpha=a, k=complex(0.0, k_i),
                         energy=energy, phi=phi_samples(index, k_i, params),
                         norm=norm)


class ModeBasis:
    """All N biexciton modes of one parameter set, with sampled arrays.

    Attributes are plain numpy arrays ordered by increasing K:
    K (N,), l_K (N,), parity (N,), energies (N,), phi (N, 2N-1) with the
    s axis running over [-N+1, N-1].
    """

    def __init__(self, params, method="auto"):
        params.validate_biexciton_regime()
        if method == "auto":
            method = default_method(params)
        self.params = params
        self.method = method
        self.modes = [build_mode(ix, params, method) for ix in k_grid(params)]
        self.K = np.array([m.K for m in self.modes])
        self.l_K = np.array([m.index.l_K for m in self.modes])
        self.parity = np.array([m.index.parity for m in self.modes])
        self.energies = np.array([m.energy for m in self.modes])
        self.phi = np.array([m.phi for m in self.modes])
        self.s = np.arange(-params.N + 1, params.N)

    def __len__(self):
        return len(self.modes)

    def __iter__(self):
        return iter(self.modes)

    def __getitem__(self, i):
        return self.modes[i]

    def band_edges(self):
        """Min/max of the discrete pair-energy band over the K grid."""
        return float(self.energies.min()), float(self.energies.max())

    def group_velocity(self, K):
        """dE/dK of the large-N dispersion: -(4 J^2 / D) sin 2K."""
        p = self.params
        return -4.0 * p.J * p.J * math.sin(2.0 * K) / p.D

    def pair_amplitudes(self, mode_i):
        """Coefficients of mode i over ordered site pairs (m < n).

        c_{mn} = (2/sqrt(N)) e^{iK(m+n)} phi_K(n-m); unit norm.
        """
        p = self.params
        m = self.modes[mode_i]
        sites = p.sites
        out = []
        for a in range(p.N):
            for b in range(a + 1, p.N):
                ma, nb = sites[a], sites[b]
                out.append(np.exp(1j * m.K * (ma + nb)) * m.phi_at(nb - ma, p.N))
        return 2.0 / math.sqrt(p.N) * np.array(out)
