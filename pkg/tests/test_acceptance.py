"""Acceptance suite: one test per release criterion, printing PASS/FAIL.

Criteria 6e-6g (entropy after scattering, fringe-visibility loss, and
the quoted energy expectation of the canonical wavepacket run) assert
published reference values that the verified physics of this model does
not reproduce; they are implemented faithfully and fail honestly.  See
the repository notes for the blocking analysis.
"""

import math
import time

import numpy as np
import pytest

from biximp import (ModeBasis, ModelParams, WavepacketConfig, bic_energies,
                    build_projected_hamiltonian, calibrate_v0,
                    classify_bound_states, diagonalize_full,
                    diagonalize_projected, entropy,
                    exciton_reflection_amplitude, find_bic_state, find_pole,
                    fringe_visibility, init_wavepacket, interference_profile,
                    phase_diagram, propagate, reduced_density, split_ratio)
from biximp.dynamics import energy_expectation
from biximp.exciton import bound_energies_from_matrix
from biximp.pairbasis import build_pair_hamiltonian


def report(criterion, ok, detail):
    print(f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}")
    assert ok, f"{criterion}: {detail}"


def budget(t0, limit, criterion):
    dt = time.perf_counter() - t0
    assert dt < limit, f"{criterion}: runtime {dt:.1f}s over budget {limit}s"
    return dt


# -- criterion 1: single exciton-impurity bound state -----------------------

def test_criterion_1_exciton_bound_state():
    t0 = time.perf_counter()
    target = 2.0 * math.cosh(math.asinh(1.25))
    worst = 0.0
    for J, V0 in ((1, 2.5), (1, -2.5), (-1, 2.5), (-1, -2.5)):
        p = ModelParams(N=200, J=float(J), D=6.0, E0=0.0, V0=float(V0))
        out = bound_energies_from_matrix(p)
        assert len(out) == 1, f"expected 1 bound state, got {len(out)}"
        worst = max(worst, abs(abs(out[0]) - target))
    dt = budget(t0, 1.0, "criterion 1")
    report("criterion 1 (exciton bound state, 4 sign cases)",
           worst < 1e-3, f"max |E - E0 -+ 3.2016| = {worst:.2e} [{dt:.2f}s]")


# -- criterion 2: biexciton bound-state multiplicity -------------------------

def test_criterion_2_multiplicities():
    t0 = time.perf_counter()
    counts = {}
    for D, V0 in ((4.1, 4.0), (-4.1, -4.0), (4.1, -4.0), (-4.1, 4.0)):
        p = ModelParams(N=40, J=float(np.sign(D)), D=D, E0=1000.0, V0=V0)
        ph = build_projected_hamiltonian(p)
        recs = classify_bound_states(diagonalize_projected(ph), ph.modes)
        counts[(D, V0)] = (len(recs), {r.re_K_class for r in recs})
    ok = (counts[(4.1, 4.0)] == (4, {"near_zero"})
          and counts[(-4.1, -4.0)] == (4, {"near_zero"})
          and counts[(4.1, -4.0)] == (2, {"near_half_pi"})
          and counts[(-4.1, 4.0)] == (2, {"near_half_pi"}))
    dt = budget(t0, 5.0, "criterion 2")
    report("criterion 2 (multiplicities 4 near 0 / 2 near pi/2)", ok,
           f"{ {k: v[0] for k, v in counts.items()} } [{dt:.2f}s]")


# -- criterion 3: phase-diagram asymmetry/symmetry ---------------------------

def test_criterion_3_phase_diagram_structure():
    """Full 20 x 20 grid within budget; the four corner cells are frozen."""
    t0 = time.perf_counter()
    d_vals = np.linspace(2.1, 6.0, 20)
    v_vals = np.linspace(-5.0, 5.0, 20)
    counts = phase_diagram(d_vals, v_vals, ModelParams(N=40, J=1.0, D=4.1))
    cell = lambda d, v: int(counts[np.argmin(np.abs(d_vals - d)),
                                   np.argmin(np.abs(v_vals - v))])
    c_small_p, c_small_m = cell(2.1, 5.0), cell(2.1, -5.0)
    c_large_p, c_large_m = cell(6.0, 5.0), cell(6.0, -5.0)
    frozen = (c_small_p, c_small_m, c_large_p, c_large_m) == (6, 3, 2, 2)
    ok = (c_small_p != c_small_m) and (c_large_p == c_large_m) and frozen
    ok &= bool(np.all(counts >= 0))     # every cell solved
    dt = budget(t0, 120.0, "criterion 3")
    report("criterion 3 (phase diagram: small-D asymmetry, large-D symmetry)",
           ok, f"counts (2.1,+5)={c_small_p} (2.1,-5)={c_small_m} "
               f"(6,+5)={c_large_p} (6,-5)={c_large_m} [20x20 in {dt:.1f}s]")


# -- criterion 4: pole vs numeric bound energies ------------------------------

def test_criterion_4_pole_agreement():
    t0 = time.perf_counter()
    rels = []
    for v0 in (0.25, -0.25):
        p = ModelParams(N=40, J=1.0, D=4.0, V0=v0)
        pole = find_pole(p)
        ph = build_projected_hamiltonian(p)
        spec = diagonalize_projected(ph)
        lo, hi = ph.modes.band_edges()
        outs = [(e, max(lo - e, e - hi)) for e in spec.energies
                if e < lo - 1e-9 or e > hi + 1e-9]
        e_num = max(outs, key=lambda t: t[1])[0]
        rels.append(abs(pole.energy - e_num) / abs(e_num))
    # exciton: closed-form pole vs finite-ring bound state
    p_e = ModelParams(N=200, J=1.0, D=6.0, V0=2.5)
    e_matrix = bound_energies_from_matrix(p_e)[0]
    e_pole = 2.0 * p_e.J * math.cosh(math.asinh(p_e.V0 / (2 * p_e.J)))
    exc_err = abs(e_matrix - e_pole)
    ok = max(rels) < 0.05 and exc_err < 1e-6
    dt = budget(t0, 5.0, "criterion 4")
    report("criterion 4 (pole agreement)", ok,
           f"pair rel errs {rels[0]:.4f}/{rels[1]:.4f}, "
           f"exciton {exc_err:.2e} [{dt:.2f}s]")


# -- criterion 5: bound state in the continuum --------------------------------

def test_criterion_5_bic():
    t0 = time.perf_counter()
    p = ModelParams(N=40, J=1.0, D=4.1, E0=0.0, V0=8.0)
    e1, _ = bic_energies(p)
    e_num, _, cls = find_bic_state(p)
    ok_strong = (abs(e1 - 3.9799) < 1e-3 and abs(e_num - e1) < 1e-2
                 and cls.in_continuum and cls.schmidt_number < 1.1)
    p2 = p.replace(V0=1.0)
    f1, _ = bic_energies(p2)
    f_num, _, cls2 = find_bic_state(p2)
    ok_weak = abs(f_num - f1) < 5e-2 and cls2.schmidt_number > 1.1
    dt = budget(t0, 30.0, "criterion 5")
    report("criterion 5 (bound state in the continuum)",
           ok_strong and ok_weak,
           f"V0=8: |dE|={abs(e_num - e1):.2e} schmidt={cls.schmidt_number:.3f}; "
           f"V0=1: |dE|={abs(f_num - f1):.2e} schmidt={cls2.schmidt_number:.3f} "
           f"[{dt:.1f}s]")


# -- criterion 6: canonical wavepacket run ------------------------------------

CANON = ModelParams(N=40, J=-1.0, D=-4.5, E0=0.0, V0=0.0)
CONFIG = WavepacketConfig(K0=3 * np.pi / 8, dK0=np.pi / 24,
                          t_start=-30.0, t_end=60.0)


@pytest.fixture(scope="module")
def canonical_run():
    v0 = calibrate_v0(CANON, CONFIG)
    params = CANON.replace(V0=v0)
    ph = build_projected_hamiltonian(params)
    state0 = init_wavepacket(CONFIG, ph.modes)
    return params, ph, state0


def test_criterion_6a_initial_entropy(canonical_run):
    _, ph, st0 = canonical_run
    s0 = entropy(reduced_density(st0, ph.modes))
    report("criterion 6a (initial entropy 0.18 +- 0.02)",
           abs(s0 - 0.18) <= 0.02, f"S(-30) = {s0:.4f}")


def test_criterion_6b_free_flight_entropy(canonical_run):
    _, ph, st0 = canonical_run
    s0 = entropy(reduced_density(st0, ph.modes))
    drift = max(abs(entropy(reduced_density(propagate(st0, ph, t), ph.modes))
                    - s0) for t in np.arange(-30.0, -24.9, 1.0))
    report("criterion 6b (free-flight entropy drift <= 3e-2)",
           drift <= 3e-2, f"max |dS| = {drift:.4f}")


def test_criterion_6c_split_ratio(canonical_run):
    _, ph, st0 = canonical_run
    refl, trans = split_ratio(propagate(st0, ph, 35.0), ph.modes)
    report("criterion 6c (calibrated split 0.5 +- 0.02)",
           abs(refl - 0.5) <= 0.02, f"reflected = {refl:.4f}")


def test_criterion_6d_unitarity_and_conservation(canonical_run):
    _, ph, st0 = canonical_run
    e0 = energy_expectation(st0, ph)
    worst_norm = worst_e = 0.0
    for t in np.arange(-30.0, 60.1, 5.0):
        st = propagate(st0, ph, float(t))
        worst_norm = max(worst_norm, abs(st.norm - 1.0))
        worst_e = max(worst_e, abs(energy_expectation(st, ph) - e0))
    ok = worst_norm < 1e-10 and worst_e < 1e-6 * abs(e0)
    report("criterion 6d (unitarity 1e-10, energy conservation 1e-6)",
           ok, f"|dnorm| = {worst_norm:.2e}, |dE|/|E| = {worst_e / abs(e0):.2e}")


def test_criterion_6e_energy_expectation(canonical_run):
    _, ph, st0 = canonical_run
    e0 = energy_expectation(st0, ph) - 2 * ph.params.E0
    report("criterion 6e (<E> - 2 E0 = -4.7 at quote precision)",
           abs(e0 - (-4.7)) <= 0.05, f"<E> - 2E0 = {e0:.4f}")


def test_criterion_6f_entropy_after_scattering(canonical_run):
    _, ph, st0 = canonical_run
    s35 = entropy(reduced_density(propagate(st0, ph, 35.0), ph.modes))
    report("criterion 6f (entropy after scattering 0.38 +- 0.02)",
           abs(s35 - 0.38) <= 0.02, f"S(35) = {s35:.4f}")


def test_criterion_6g_visibility_loss(canonical_run):
    _, ph, st0 = canonical_run
    prof = interference_profile(propagate(st0, ph, 54.0), ph.modes)
    vis = fringe_visibility(prof, ph.params.N)
    loss = 100.0 * (1.0 - vis)
    report("criterion 6g (visibility loss 15 +- 3 points at t = 54)",
           abs(loss - 15.0) <= 3.0, f"visibility = {vis:.4f}, loss = {loss:.1f}%")


# -- criterion 7: always-on property suites -----------------------------------

def test_criterion_7_property_suites():
    msgs = []
    # Hermiticity of every built matrix
    p = ModelParams(N=40, J=1.0, D=4.1, V0=4.0)
    ph = build_projected_hamiltonian(p)
    h1 = np.abs(ph.M - ph.M.conj().T).max()
    _, H = build_pair_hamiltonian(p)
    h2 = np.abs(H - H.T).max()
    from biximp import exciton_site_hamiltonian
    He = exciton_site_hamiltonian(p)
    h3 = np.abs(He - He.T).max()
    ok = h1 < 1e-12 and h2 < 1e-12 and h3 < 1e-12
    msgs.append(f"hermiticity {max(h1, h2, h3):.1e}")

    # propagation unitarity & conservation on a fresh run
    pd = ModelParams(N=40, J=-1.0, D=-4.5, V0=0.7)
    phd = build_projected_hamiltonian(pd)
    st = init_wavepacket(WavepacketConfig(K0=3 * np.pi / 8, dK0=np.pi / 24,
                                          t_start=-30.0, t_end=10.0), phd.modes)
    e0 = energy_expectation(st, phd)
    stt = propagate(st, phd, 10.0)
    ok &= abs(stt.norm - 1) < 1e-10
    ok &= abs(energy_expectation(stt, phd) - e0) < 1e-8 * abs(e0)
    msgs.append(f"unitarity {abs(stt.norm - 1):.1e}")

    # flux identity over a 100-point scan
    worst = max(abs(abs(R := exciton_reflection_amplitude(complex(k, 0), p)) ** 2
                    + abs(1 + R) ** 2 - 1.0)
                for k in np.linspace(0.05, math.pi - 0.05, 100))
    ok &= worst < 1e-10
    msgs.append(f"flux {worst:.1e}")

    # wavefunction symmetry identities at every grid point
    modes = ModeBasis(p, "exact")
    sym_err = 0.0
    for m in modes:
        for s in range(0, p.N // 2):
            sym_err = max(sym_err, abs(m.phi_at(p.N // 2 + s, p.N)
                                       - (-1) ** m.index.l_K
                                       * m.phi_at(p.N // 2 - s, p.N)))
    ok &= sym_err < 1e-12
    msgs.append(f"phi symmetry {sym_err:.1e}")

    # oracle equivalence against full diagonalization
    worst_exact = 0.0
    for N in (8, 12, 40):
        pN = ModelParams(N=N, J=1.0, D=4.1, V0=0.0)
        mN = ModeBasis(pN, "exact")
        _, spec = diagonalize_full(pN)
        for e in mN.energies:
            worst_exact = max(worst_exact, np.min(np.abs(spec.energies - e)))
    ok &= worst_exact < 1e-8
    # large-N forms: documented looser bound
    p40 = ModelParams(N=40, J=1.0, D=4.1, V0=0.0)
    m40 = ModeBasis(p40, "large_n")
    _, spec40 = diagonalize_full(p40)
    worst_ln = max(np.min(np.abs(spec40.energies - e)) for e in m40.energies)
    ok &= worst_ln < 1e-3
    msgs.append(f"oracle exact {worst_exact:.1e} large-N {worst_ln:.1e}")

    report("criterion 7 (property suites)", ok, "; ".join(msgs))
