"""Exact two-excitation sector: brute-force ground truth and bound-state taxonomy.

The basis is all ordered site pairs (m, n), m < n, on the ring window
[-N/2+1, N/2]; hard core holds by construction, so the dimension is
N(N-1)/2.  Hopping moves one excitation to an empty neighbour (periodic
wrap); the diagonal carries 2 E0, the nearest-neighbour attraction D and
the impurity V0 on pairs touching site 0.

Eigenstates fall into four families: pairs bound only in the relative
coordinate (free biexciton), pairs whose CM is pinned to the impurity
but internally unbound, states with a single excitation pinned, and
states bound in both coordinates.  The doubly-bound family admits the
closed-form energies

    E_{b1,b2} = 2 E0 + D V0 (D + V0 -+ sqrt(4 J^2 + (D - V0)^2))
                / (2 (D V0 - J^2)),

one of which generically sits inside the two-exciton continuum
[2 E0 - 4|J|, 2 E0 + 4|J|]: a bound state in the continuum.  The same
energies follow from an antisymmetric product ansatz sin(K_a r) phi(s)
with complex CM wavevector K_a on either the imaginary axis or the
line Re K_a = pi/2.
"""

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ExistenceError, NumericalError, ParameterError
from .params import wrap_site
from .projected import SpectrumResult, fit_ring_decay

SCHMIDT_FACTORIZED = 1.1  # effective rank below this counts as factorized
LOCALIZED_TAIL = 1e-10
TAIL_BOUND_MAX = 0.10    # far-tail mass gate for binding in a coordinate
SITE_CORE_MIN = 0.30     # occupation within 2 sites of the impurity


class PairBasis:
    """Ordered site pairs (m, n), m < n, with index lookup."""

    def __init__(self, N):
        self.N = N
        sites = np.arange(-N // 2 + 1, N // 2 + 1)
        self.pairs = [(int(m), int(n)) for i, m in enumerate(sites)
                      for n in sites[i + 1:]]
        self.index = {p: i for i, p in enumerate(self.pairs)}

    def __len__(self):
        return len(self.pairs)

    def locate(self, a, b):
        a, b = wrap_site(a, self.N), wrap_site(b, self.N)
        if a == b:
            return None
        return self.index[(min(a, b), max(a, b))]


def build_pair_hamiltonian(params, basis=None):
    """Dense real symmetric Hamiltonian over the pair basis."""
    N = params.N
    basis = basis or PairBasis(N)
    H = np.zeros((len(basis), len(basis)))
    for i, (m, n) in enumerate(basis.pairs):
        ringsep = (n - m) % N
        adjacent = ringsep == 1 or ringsep == N - 1
        H[i, i] = 2.0 * params.E0 + (params.D if adjacent else 0.0) \
            + params.V0 * ((m == 0) + (n == 0))
        for a, b in ((m + 1, n), (m - 1, n), (m, n + 1), (m, n - 1)):
            j = basis.locate(a, b)
            if j is not None:
                H[i, j] += params.J
    return basis, H


def diagonalize_full(params, basis=None):
    basis, H = build_pair_hamiltonian(params, basis)
    herm = np.max(np.abs(H - H.T))
    if herm > 1e-12 * max(1.0, abs(params.J)):
        raise NumericalError(f"pair Hamiltonian asymmetry {herm:.2e}")
    w, u = np.linalg.eigh(H)
    return basis, SpectrumResult(w, u, ["unclassified"] * len(w))


def reflection_expectation(vec, basis):
    """<v| P |v> for the site reflection P: (m, n) -> (-n, -m)."""
    out = 0.0
    for i, (m, n) in enumerate(basis.pairs):
        j = basis.locate(-n, -m)
        out += vec[i] * vec[j]
    return float(out)


def in_continuum(energy, params):
    return abs(energy - 2.0 * params.E0) <= 4.0 * abs(params.J)


# ---------------------------------------------------------------------------
# coordinate profiles


def folded_amplitudes(vec, basis):
    """Map pair amplitudes onto folded CM/relative coordinates.

    Every pair is represented once, at the smaller ring separation
    sigma = min(s, N - s) <= N/2 with the CM coordinate of that
    representation; returns a dict {(r, sigma): amplitude}.
    """
    N = basis.N
    out = {}
    for i, (m, n) in enumerate(basis.pairs):
        r, s = m + n, n - m
        if s > N // 2:
            # re-express through the wrapped pair ordering
            r = r - N if r > 0 else r + N
            s = N - s
        out[(r, s)] = vec[i]
    return out


def cm_ring_profile(vec, basis, s_max=2):
    """|amplitude|^2 vs CM ring distance, restricted to small separations."""
    N = basis.N
    prof = {}
    for (r, s), a in folded_amplitudes(vec, basis).items():
        if s > s_max:
            continue
        d = min(abs(r), 2 * N - abs(r))
        prof[d] = prof.get(d, 0.0) + a * a
    ds = np.array(sorted(prof))
    return ds, np.array([prof[d] for d in ds])


def separation_profile(vec, basis, r_max=None):
    """|amplitude|^2 vs ring separation sigma, restricted to CM near 0."""
    prof = {}
    for (r, s), a in folded_amplitudes(vec, basis).items():
        if r_max is not None and abs(r) > r_max:
            continue
        prof[s] = prof.get(s, 0.0) + a * a
    ds = np.array(sorted(prof))
    return ds, np.array([prof[d] for d in ds])


def site_profile(vec, basis):
    """Occupation probability vs site ring distance from the impurity."""
    N = basis.N
    prof = {}
    for i, (m, n) in enumerate(basis.pairs):
        w = vec[i] ** 2
        for x in (m, n):
            d = min(abs(x), N - abs(x))
            prof[d] = prof.get(d, 0.0) + w
    ds = np.array(sorted(prof))
    return ds, np.array([prof[d] for d in ds])


def _fit_decay(ds, ps, period_half, d_lo, d_hi):
    """Ring-aware decay fit; returns (rate, r2, localized_shortcut)."""
    tot = ps.sum()
    if tot <= 0:
        return 0.0, 0.0, False
    tail = ps[ds >= d_lo].sum()
    if tail <= LOCALIZED_TAIL * tot:
        return math.inf, 1.0, True
    m = (ds >= d_lo) & (ds <= d_hi) & (ps > 1e-12 * ps.max())
    if m.sum() < 4:
        return 0.0, 0.0, False
    kappa, r2 = fit_ring_decay(ds, ps, period_half, d_lo=d_lo, d_hi=d_hi)
    return kappa, r2, False


@dataclass
class StateClassification:
    type: str                 # free_biexciton | cm_bound_pair |
    #                           one_exciton_bound | fully_bound | unclassified*
    in_continuum: bool
    schmidt_number: float
    decay_r: float
    decay_s: float
    antisymmetric: float      # <v|P|v>, -1 antisym / +1 sym
    diagnostics: dict = field(default_factory=dict)


def schmidt_number(vec, basis):
    """Effective rank exp(H(sigma^2)) of the folded amplitude matrix.

    Computed per (r, s) parity block on the fundamental separation
    window; the maximum over blocks is reported, so a genuine product
    state scores ~1 in spite of the sublattice structure.
    """
    N = basis.N
    amps = folded_amplitudes(vec, basis)
    ranks = []
    for par in (0, 1):
        rows = [r for r in range(-N + 1, N + 1) if abs(r) % 2 == par]
        cols = [s for s in range(1, N // 2 + 1) if s % 2 == par]
        if not cols:
            continue
        M = np.array([[amps.get((r, s), 0.0) for s in cols] for r in rows])
        fro = np.linalg.norm(M)
        if fro < 1e-8:
            continue
        sv = np.linalg.svd(M / fro, compute_uv=False)
        p = sv ** 2
        p = p[p > 1e-16]
        ranks.append(float(np.exp(-np.sum(p * np.log(p)))))
    return max(ranks) if ranks else 1.0


def classify_state(energy, vec, params, basis):
    """Assign one of the four bound-state families (or unclassified).

    Binding in a coordinate is gated on its far-tail mass (robust
    against node structure and beating); the ring fits supply the decay
    rates.  A state bound in neither collective coordinate but with the
    occupation pinned at the impurity is a single bound exciton.
    """
    N = params.N
    amps = folded_amplitudes(vec, basis)
    tot = sum(a * a for a in amps.values())
    tail_r = sum(a * a for (r, s), a in amps.items()
                 if min(abs(r), 2 * N - abs(r)) > N // 2) / tot
    tail_s = sum(a * a for (r, s), a in amps.items() if s > N // 4) / tot

    ds_r, ps_r = cm_ring_profile(vec, basis, s_max=2)
    kr, r2r, _ = _fit_decay(ds_r, ps_r, N, d_lo=4, d_hi=N - 6)
    ds_s, ps_s = separation_profile(vec, basis, r_max=3)
    ks, r2s, _ = _fit_decay(ds_s, ps_s, N // 2, d_lo=3, d_hi=N // 2 - 3)

    r_bound = tail_r < TAIL_BOUND_MAX
    s_bound = tail_s < TAIL_BOUND_MAX

    sym = reflection_expectation(vec, basis)
    diag = {"tail_r": tail_r, "tail_s": tail_s, "r2_r": r2r, "r2_s": r2s}

    if r_bound and s_bound:
        label = "fully_bound"
    elif s_bound and not r_bound:
        label = "free_biexciton"
    elif r_bound and not s_bound:
        # distinguish a pinned CM (mass stays near r = 0 at all
        # separations) from one pinned excitation (mass rides the
        # r = +-sigma diagonals, away from r = 0 at large sigma)
        far = [(r, s, a) for (r, s), a in amps.items() if s >= 8]
        far_tot = sum(a * a for _, _, a in far)
        near0 = sum(a * a for r, s, a in far
                    if min(abs(r), 2 * N - abs(r)) <= 6)
        diag["cm_fraction_at_large_s"] = near0 / far_tot if far_tot > 0 else 1.0
        if far_tot > 1e-6 and near0 / far_tot < 0.2:
            label = "one_exciton_bound"
        else:
            label = "cm_bound_pair"
    else:
        ds_x, ps_x = site_profile(vec, basis)
        core = ps_x[ds_x <= 2].sum() / ps_x.sum()
        diag["site_core"] = core
        if core >= SITE_CORE_MIN:
            label = "one_exciton_bound"
        else:
            label = "unclassified"
    if label == "unclassified" and abs(sym - 1.0) < 1e-6:
        label = "unclassified-symmetric"
    return StateClassification(
        type=label,
        in_continuum=in_continuum(energy, params),
        schmidt_number=schmidt_number(vec, basis),
        decay_r=kr, decay_s=ks, antisymmetric=sym, diagnostics=diag)


# ---------------------------------------------------------------------------
# doubly-bound closed forms


def bic_energies(params):
    """Closed-form doubly-bound energies (E_b1, E_b2), including 2 E0."""
    p = params
    den = 2.0 * (p.D * p.V0 - p.J ** 2)
    if abs(den) < 1e-12 * p.J ** 2:
        raise ParameterError("D V0 = J^2: doubly-bound closed form singular")
    disc = math.sqrt(4.0 * p.J ** 2 + (p.D - p.V0) ** 2)
    e1 = p.D * p.V0 * (p.D + p.V0 - disc) / den
    e2 = p.D * p.V0 * (p.D + p.V0 + disc) / den
    return 2.0 * p.E0 + e1, 2.0 * p.E0 + e2


@dataclass(frozen=True)
class CMBoundMode:
    K_a: complex
    energy: float
    branch: str        # "imaginary_axis" | "half_pi_axis"
    refined: bool
    residual: float
    reliable: bool


def _cm_residual(Ka, params):
    """Antisymmetric CM quantization residual at complex K_a.

    F = 2J (cos K_a - sin K_a / tan(K_a (N/2-1))) cos k - V0 with the
    relative closure cos k = (alpha + 1/alpha)/2, alpha = 2J cos K_a / D.
    """
    p = params
    a = 2.0 * p.J * cmath.cos(Ka) / p.D
    cosk = (a + 1.0 / a) / 2.0
    z = Ka * (p.N / 2.0 - 1.0)
    t = 1j * np.sign(z.imag) if abs(z.imag) > 20.0 else cmath.tan(z)
    return 2.0 * p.J * (cmath.cos(Ka) - cmath.sin(Ka) / t) * cosk - p.V0


def _refine_cm_root(Ka0, params, max_step=0.3, tol=1e-12):
    """Damped complex Newton on the finite-N residual; None if divergent."""
    Ka = Ka0
    h = 1e-7
    for _ in range(200):
        try:
            F = _cm_residual(Ka, params)
            dF = (_cm_residual(Ka + h, params) - _cm_residual(Ka - h, params)) / (2 * h)
        except (OverflowError, ZeroDivisionError):
            return None
        if dF == 0:
            return None
        step = F / dF
        if abs(step) > max_step:
            step *= max_step / abs(step)
        Ka = Ka - step
        if abs(Ka - Ka0) > 0.5:
            return None
        if abs(step) < tol:
            break
    res = abs(_cm_residual(Ka, params))
    return (Ka, res) if res < 1e-9 * max(1.0, abs(params.V0)) else None


def antisymmetric_cm_wavevector(params):
    """Complex CM wavevectors of the antisymmetric doubly-bound modes.

    Seeds come from inverting the dispersion at the closed-form
    energies; each is refined on the finite-N quantization when the
    damped Newton stays on the branch (at large N the correction is
    exponentially small, so an unrefined seed is already the root).
    Requires |D V0| > J^2, else no CM-bound antisymmetric mode exists.
    """
    p = params
    if p.V0 == 0.0 or abs(p.D * p.V0) <= p.J ** 2:
        raise ExistenceError(
            "no CM-bound antisymmetric mode: requires |D V0| > J^2")
    ratio = abs(p.V0) / abs(p.D)
    reliable = ratio >= 1.5 or ratio <= 1.0 / 1.5
    out = []
    for e_full in bic_energies(params):
        e = e_full - 2.0 * p.E0
        y = cmath.sqrt(complex(p.D * (e - p.D)))
        Ka = cmath.acos(y / (2.0 * p.J))
        # canonical representative: Re in [0, pi/2], Im >= 0
        Ka = complex(abs(Ka.real) % math.pi, abs(Ka.imag))
        if Ka.real > math.pi / 2 + 1e-9:
            Ka = complex(math.pi - Ka.real, Ka.imag)
        branch = "imaginary_axis" if Ka.real < math.pi / 4 else "half_pi_axis"
        refined = _refine_cm_root(Ka, params)
        if refined is not None:
            Ka_r, res = refined
            a = 2.0 * p.J * cmath.cos(Ka_r) / p.D
            e_r = (p.D * (1.0 + a * a)).real + 2.0 * p.E0
            out.append(CMBoundMode(Ka_r, e_r, branch, True, res, reliable))
        else:
            out.append(CMBoundMode(Ka, e_full, branch, False,
                                   abs(_cm_residual(Ka, params)), reliable))
    return out


def find_bic_state(params, window=0.05):
    """Most doubly-localized eigenstate near the in-band closed-form energy.

    Candidates within +-window of E_b1 (or E_b2 when that one is in
    band) are ranked by the probability mass concentrated near the
    impurity in both coordinates (separation <= 3, CM ring distance
    <= 8).  Returns (energy, vector, classification).
    """
    e1, e2 = bic_energies(params)
    target = e1 if in_continuum(e1, params) else e2
    if not in_continuum(target, params):
        raise ExistenceError("neither closed-form energy lies in the continuum")
    basis, spec = diagonalize_full(params)
    cands = np.where(np.abs(spec.energies - target) < window)[0]
    if len(cands) == 0:
        raise NumericalError(f"no eigenvalue within {window} of {target:.6f}")
    N = basis.N
    best, best_core = None, -1.0
    for c in cands:
        amps = folded_amplitudes(spec.states[:, c], basis)
        core = sum(a * a for (r, s), a in amps.items()
                   if s <= 3 and min(abs(r), 2 * N - abs(r)) <= 8)
        if core > best_core:
            best, best_core = int(c), core
    vec = spec.states[:, best]
    cls = classify_state(spec.energies[best], vec, params, basis)
    return spec.energies[best], vec, cls
