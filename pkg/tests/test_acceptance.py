"""Acceptance suite: one test per release criterion, with a PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines and timings.  Tolerances are pinned here and nowhere else.
"""

import math
import time

import numpy as np

from cvshadow.bounds import delta0, truncation_error_bound
from cvshadow.entropy import entropy_poly, entropy_reference, matrix_entropy
from cvshadow.measurement import (
    sample_heterodyne_batch,
    sample_homodyne_batch,
)
from cvshadow.phase_space import char_fock_dyad, displacement_oracle
from cvshadow.qmc import BoxDomain, qmc_integrate
from cvshadow.reconstruction import (
    reconstruct_pair_section,
    reconstruct_single_mode,
)
from cvshadow.shadows import (
    WindowSpec,
    average_entries,
    default_window,
    f_mu_homodyne,
    project_PM,
    project_PM_tilde,
    shadow_batch_entries,
)
from cvshadow.states import (
    CatStateSpec,
    ChainSpec,
    GaussianStateSpec,
    chain_ground_state,
    fock_matrix_of,
)
from test_qmc import gaussian_family_error

UNBIASEDNESS_STATES = {
    "vacuum": GaussianStateSpec.vacuum(),
    "thermal": GaussianStateSpec.thermal(0.5),
    "cat": CatStateSpec(1 + 1j, "zero"),
}


def report(criterion: int, label: str, passed: bool, detail: str = ""):
    status = "PASS" if passed else "FAIL"
    print(f"[{status}] criterion {criterion:2d}: {label} {detail}")
    assert passed, f"criterion {criterion} failed: {label} {detail}"


def test_criterion_01_oracle_equivalence():
    t0 = time.perf_counter()
    axis = np.linspace(-3.0, 3.0, 21)
    worst = 0.0
    for ux in axis:
        for up in axis:
            u = np.array([ux, up])
            m_osc = 2 * 6 + math.ceil(10.0 * float(u @ u))
            oracle = displacement_oracle(u, m_osc)
            for n1 in range(7):
                for n2 in range(7):
                    worst = max(worst, abs(char_fock_dyad(n1, n2, u) - oracle[n2, n1]))
    elapsed = time.perf_counter() - t0
    report(
        1,
        "char_fock_dyad vs displacement oracle",
        worst <= 1e-9 and elapsed < 10.0,
        f"(max err {worst:.2e}, {elapsed:.1f}s)",
    )


def test_criterion_02_plancherel(dyad_grid):
    _, weights, dyad = dyad_grid
    worst = 0.0
    for n1 in range(6):
        for n2 in range(6):
            for n3 in range(6):
                for n4 in range(6):
                    val = np.sum(weights * np.conj(dyad(n1, n2)) * dyad(n3, n4)) / (
                        2.0 * np.pi
                    )
                    expected = float(n1 == n3 and n2 == n4)
                    worst = max(worst, abs(val - expected))
    report(2, "quantum Plancherel orthonormality", worst <= 1e-6, f"(max dev {worst:.2e})")


def test_criterion_03_master_unbiasedness():
    t0 = time.perf_counter()
    truncation, n = 3, 100_000
    w = default_window(truncation)
    worst = 0.0
    for name, state in UNBIASEDNESS_STATES.items():
        exact = fock_matrix_of(state, 24)
        target_hom = project_PM(exact, truncation).entries
        batch = sample_homodyne_batch(state, n, f"acc3/hom/{name}")
        avg = average_entries(
            shadow_batch_entries(batch, [0], truncation), (0,), truncation, "homodyne"
        )
        z = np.abs(avg.mean - target_hom) / np.maximum(avg.stderr, 1e-12)
        worst = max(worst, float(z.max()))

        target_het = project_PM_tilde(state, truncation, w).entries
        batch = sample_heterodyne_batch(state, n, f"acc3/het/{name}")
        avg = average_entries(
            shadow_batch_entries(batch, [0], truncation, w),
            (0,),
            truncation,
            "heterodyne",
        )
        z = np.abs(avg.mean - target_het) / np.maximum(avg.stderr, 1e-12)
        worst = max(worst, float(z.max()))
    elapsed = time.perf_counter() - t0
    report(
        3,
        "master unbiasedness (both protocols, M=3, N=1e5)",
        worst <= 4.0 and elapsed < 300.0,
        f"(max |z| {worst:.2f}, {elapsed:.0f}s)",
    )


def test_criterion_04_bernstein_consistency():
    truncation, n, reps = 3, 10_000, 50
    w = default_window(truncation)
    outside = 0
    total = 0
    for name, state in UNBIASEDNESS_STATES.items():
        exact = fock_matrix_of(state, 24)
        target_hom = project_PM(exact, truncation).entries
        target_het = project_PM_tilde(state, truncation, w).entries
        for rep in range(reps):
            batch = sample_homodyne_batch(state, n, f"acc4/hom/{name}/{rep}")
            avg = average_entries(
                shadow_batch_entries(batch, [0], truncation),
                (0,),
                truncation,
                "homodyne",
            )
            z = np.abs(avg.mean - target_hom) / np.maximum(avg.stderr, 1e-12)
            outside += int(np.sum(z > 3.0))
            total += z.size
            batch = sample_heterodyne_batch(state, n, f"acc4/het/{name}/{rep}")
            avg = average_entries(
                shadow_batch_entries(batch, [0], truncation, w),
                (0,),
                truncation,
                "heterodyne",
            )
            z = np.abs(avg.mean - target_het) / np.maximum(avg.stderr, 1e-12)
            outside += int(np.sum(z > 3.0))
            total += z.size
    fraction = outside / total
    report(
        4,
        "Bernstein-consistent concentration (50 reps, N=1e4)",
        fraction <= 0.02,
        f"(fraction outside 3 s.e. {fraction:.4f} over {total} entries)",
    )


def test_criterion_05_vacuum_figure():
    t0 = time.perf_counter()
    state = GaussianStateSpec.vacuum()
    v50, v1000 = [], []
    for seed in range(20):
        small = sample_heterodyne_batch(state, 50, f"acc5/{seed}/50")
        big = sample_heterodyne_batch(state, 1000, f"acc5/{seed}/1000")
        _, _, v_s = reconstruct_single_mode(small, state)
        _, _, v_b = reconstruct_single_mode(big, state)
        v50.append(v_s)
        v1000.append(v_b)
    med50, med1000 = float(np.median(v50)), float(np.median(v1000))
    elapsed = time.perf_counter() - t0
    report(
        5,
        "vacuum reconstruction variance shrinks with N",
        med1000 < med50 and med1000 <= 0.05 and elapsed < 60.0,
        f"(median V: N=50 {med50:.2e}, N=1000 {med1000:.2e}, {elapsed:.0f}s)",
    )


def test_criterion_06_cat_reconstruction():
    worst = 0.0
    for logical in ("zero", "one"):
        state = CatStateSpec(1 + 1j, logical)
        batch = sample_heterodyne_batch(state, 200, f"acc6/{logical}")
        _, _, v_val = reconstruct_single_mode(batch, state)
        worst = max(worst, v_val)
    report(6, "cat-state reconstruction (N=200)", worst <= 0.2, f"(max V {worst:.3f})")


def test_criterion_07_harmonic_chain():
    t0 = time.perf_counter()
    state = chain_ground_state(ChainSpec(1000, 0.99))
    x_block = state.cov[:1000, :1000]
    decays = [abs(x_block[0, sep]) for sep in (1, 5, 50, 500)]
    monotone = all(b < a for a, b in zip(decays, decays[1:]))
    batch = sample_heterodyne_batch(state, 1000, "acc7/chain")
    _, _, v_val = reconstruct_pair_section(batch, state, (0, 500))
    elapsed = time.perf_counter() - t0
    report(
        7,
        "harmonic chain m=1000 pair reconstruction + correlation decay",
        v_val <= 0.05 and monotone and elapsed < 300.0,
        f"(V {v_val:.2e}, decay {['%.1e' % d for d in decays]}, {elapsed:.0f}s)",
    )


def test_criterion_08_truncation_bounds():
    nu = 1.0
    n_all = np.arange(0, 2000)
    probs = (nu / (nu + 1.0)) ** n_all / (nu + 1.0)
    e_n = float(np.sum(probs * (1.0 + n_all) ** 2))
    ok = True
    detail = []
    for alpha in (0.0, 1.0):
        for m_trunc in range(1, 7):
            measured = float(
                np.sum(probs[m_trunc + 1 :] * (1.0 + n_all[m_trunc + 1 :]) ** alpha)
            )
            bound = truncation_error_bound(e_n, m_trunc, alpha, 2.0)
            ok = ok and measured <= bound
            detail.append(measured <= bound)
    report(8, "Fock truncation bounds dominate exact thermal tails", ok, f"({sum(detail)}/12)")


def test_criterion_09_double_truncation():
    ok = True
    worst_ratio = 0.0
    for eta in (4.0, 6.0, 8.0):
        w = WindowSpec(eta, eta + 2.0)
        for truncation in (0, 1, 2, 3):
            bound = delta0(eta, truncation, 0.0, 1)
            for state in UNBIASEDNESS_STATES.values():
                sharp = project_PM(fock_matrix_of(state, 24), truncation)
                tilde = project_PM_tilde(state, truncation, w)
                trace_norm = float(
                    np.linalg.svd(sharp.entries - tilde.entries, compute_uv=False).sum()
                )
                ok = ok and trace_norm <= bound
                worst_ratio = max(worst_ratio, trace_norm / bound)
    # the two closed forms of delta0 are cross-asserted inside delta0 itself;
    # exercise the grid here so a disagreement turns into a failure
    for eta in np.linspace(0.0, 12.0, 13):
        for truncation in range(7):
            delta0(float(eta), truncation, 0.0, 1)
    report(
        9,
        "double-truncation lemma dominates measured window bias",
        ok,
        f"(worst measured/bound {worst_ratio:.2e})",
    )


def test_criterion_10_f_mu_identities():
    from scipy.integrate import quad

    ok = True
    details = []
    for s in (0.5, 1.0, 2.0):
        total, _ = quad(lambda r: r * f_mu_homodyne(r, s), 0.0, 400.0, limit=800)
        square, _ = quad(lambda r: r * f_mu_homodyne(r, s) ** 2, 0.0, 400.0, limit=800)
        l1 = 2.0 * math.pi * total
        l2 = 2.0 * math.pi * square
        ok = ok and abs(l1 - 2.0 * math.pi) <= 1e-4 and l2 <= math.pi
        details.append(f"s={s}: L1 dev {abs(l1 - 2 * math.pi):.1e}, L2 {l2:.3f}")
    report(10, "damping-kernel integral identities", ok, "(" + "; ".join(details) + ")")


def test_criterion_11_entropy_pipeline():
    # polynomial approximation layer on the exact projection (the theorem's
    # full sample complexity lives at the eps' scale and is NOT reproducible
    # at desk scale; see plan_entropy, which reports it in log10)
    nu, truncation, d_p = 1.0, 6, 500
    fock = project_PM(fock_matrix_of(GaussianStateSpec.thermal(nu), 40), truncation)
    s_exact = entropy_reference(GaussianStateSpec.thermal(nu))
    s_block = matrix_entropy(fock.entries)  # -tr(sigma ln sigma), subnormalized
    h_val = entropy_poly(fock, d_p)
    # the surrogate converges to the subnormalized block entropy; the exact
    # normalization correction is the (computable) gap |S(rho) - S(P_M rho)|
    surrogate_ok = abs(s_block - h_val) <= (truncation + 1) / d_p
    correction = abs(s_exact - s_block)
    full_ok = abs(s_exact - h_val) <= (truncation + 1) / d_p + correction
    pure = np.zeros((2, 2), dtype=complex)
    pure[0, 0] = 1.0
    telescoping_ok = abs(entropy_poly(pure, 1000)) <= 2e-3
    sanity = abs(s_exact - 2.0 * math.log(2.0)) < 1e-12
    report(
        11,
        "entropy surrogate accuracy + pure-state telescoping",
        surrogate_ok and full_ok and telescoping_ok and sanity,
        f"(|S_block - H| {abs(s_block - h_val):.2e} <= {(truncation + 1) / d_p:.2e}, "
        f"norm corr {correction:.2e}, pure {abs(entropy_poly(pure, 1000)):.1e})",
    )


def test_criterion_12_qmc():
    box = BoxDomain([6.0, 6.0])
    val, _ = qmc_integrate(
        lambda p: np.exp(-0.5 * np.sum(p * p, axis=-1)), box, 2**16
    )
    gauss_ok = abs(val - 2.0 * math.pi) <= 1e-3
    errors = {k: gaussian_family_error(k) for k in (2**10, 2**12, 2**14, 2**16)}
    decay_ok = all(errors[4 * k] <= errors[k] / 2.0 for k in (2**10, 2**12, 2**14))
    report(
        12,
        "QMC Gaussian integral + error decay scan",
        gauss_ok and decay_ok,
        f"(|I - 2pi| {abs(val - 2 * math.pi):.1e}; decay {decay_ok})",
    )
