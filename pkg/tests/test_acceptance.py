"""Acceptance gate: ten checks, one per release criterion.

Each test prints a single PASS line (visible under pytest -s or -v via
the test name); a failure of any assertion fails the criterion.  Run:

    pytest tests/test_acceptance.py -v
"""

import json
import math
import time

import numpy as np
import pytest

from fsbclab import (
    BsbcFamilySpec,
    DegradingKernel,
    JointInputLaw,
    OptimConfig,
    boundary_from_support,
    bsc_matrix,
    build_bsbc_family,
    build_codebook,
    check_indecomposable,
    check_physical_degraded,
    cli,
    estimate_error,
    factorization_deviation,
    fano_diagnostic,
    find_degrading_kernel,
    intersect_regions,
    lambda_grid,
    optimize_support,
    per_state_regions,
    rate_pair,
    supadditivity_check,
    sweep_support,
    validate_kernel,
    verify_block_degrading,
)

CHAIN = [[0.9, 0.1], [0.2, 0.8]]


def h2(p):
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def two_state_family():
    return build_bsbc_family(
        BsbcFamilySpec(state_chain=CHAIN, eps1=[0.10, 0.18], eps12=[0.0625, 0.0625])
    )


def single_state_family():
    return build_bsbc_family(
        BsbcFamilySpec(state_chain=[[1.0]], eps1=[0.1], eps12=[0.0625])
    )


def fresh_noise_kernel():
    probs = np.einsum("xy,xz->xyz", bsc_matrix(0.1), bsc_matrix(0.15))
    return validate_kernel(probs[None, :, :, :, None])


def test_c01_degrading_kernel_recovery():
    t0 = time.perf_counter()
    report = find_degrading_kernel(two_state_family())
    elapsed = time.perf_counter() - t0
    assert report.verdict == "feasible"
    assert report.residual < 1e-9
    assert np.max(np.abs(report.degrading_kernel.probs - bsc_matrix(0.0625))) < 1e-9
    assert elapsed < 1.0
    print(
        f"PASS 1: degrading kernel = BSC(0.0625), residual {report.residual:.1e}, "
        f"{elapsed:.2f} s"
    )


def test_c02_physical_degradedness_and_counterexample():
    kernels = [
        two_state_family(),
        single_state_family(),
        build_bsbc_family(
            BsbcFamilySpec(
                state_chain=[[0.5, 0.3, 0.2], [0.1, 0.8, 0.1], [0.3, 0.3, 0.4]],
                eps1=[0.05, 0.1, 0.2],
                eps12=[0.1, 0.1, 0.1],
            )
        ),
    ]
    worst_fact = 0.0
    for kernel in kernels:
        assert check_physical_degraded(kernel, n_max=3).verdict == "holds"
        for n in (1, 2, 3):
            for s0 in range(kernel.s_size):
                worst_fact = max(worst_fact, factorization_deviation(kernel, n, s0))
    assert worst_fact < 1e-10
    counter = check_physical_degraded(fresh_noise_kernel(), n_max=2)
    assert counter.verdict == "fails"
    assert counter.worst_violation > 1e-3
    print(
        f"PASS 2: family kernels hold (worst factorization {worst_fact:.1e}), "
        f"fresh-noise violation {counter.worst_violation:.2f}"
    )


def test_c03_two_path_block_agreement():
    kernel = two_state_family()
    dk = DegradingKernel(bsc_matrix(0.0625))
    worst = max(
        verify_block_degrading(kernel, dk, n, s0)
        for n in (1, 2, 3)
        for s0 in range(2)
    )
    assert worst < 1e-10
    print(f"PASS 3: composed vs marginalized z-laws agree to {worst:.1e} for n <= 3")


def test_c04_support_endpoints():
    t0 = time.perf_counter()
    kernel = single_state_family()
    targets = {0.0: 1 - h2(0.15), 1.0: 1 - h2(0.1)}
    for lam, want in targets.items():
        point = optimize_support(kernel, lam, 1)
        assert abs(point.value - want) < 1e-3
        assert point.grid_value is not None
        assert abs(point.grid_value - want) < 1e-3
        assert not point.below_grid
    elapsed = time.perf_counter() - t0
    assert elapsed < 10.0
    print(
        f"PASS 4: F1(0) and F1(1) within 1e-3 of closed forms "
        f"({targets[0.0]:.5f}, {targets[1.0]:.5f}), {elapsed:.1f} s"
    )


def test_c05_supadditivity():
    cfg = OptimConfig(starts=8)
    memoryless = single_state_family()
    two_state = two_state_family()
    for lam in (0.0, 0.5, 1.0):
        rep = supadditivity_check(two_state, lam, 2, config=cfg)
        assert all(c["ok"] for c in rep.checks)
        assert rep.bound_ok and rep.bound_margin >= -1e-9
        mem = supadditivity_check(memoryless, lam, 2, config=cfg)
        assert abs(mem.f_by_length[2] - mem.f_by_length[1]) < 2e-3
        assert mem.bound_ok
    print("PASS 5: 2F2 >= 2F1 - 2e-3 on the state chain, equality memoryless, bound holds")


def test_c06_region_shape_and_containment():
    cfg = OptimConfig(starts=8)
    lams = lambda_grid(11)
    worst_gap = -np.inf
    for kernel in (single_state_family(), two_state_family()):
        sf = sweep_support(kernel, 1, lambdas=lams, config=cfg)
        assert np.all(sf.values <= sf.per_state.min(axis=0) + 1e-3)
        regions = per_state_regions(sf)
        maxmin = boundary_from_support(sf)
        inter = intersect_regions(regions, minmax_region=maxmin)
        for region in regions + [maxmin, inter]:
            region.validate(tol=1e-9)
        r1_grid = np.linspace(0.0, max(float(inter.boundary_r1.max()), 0.5), 30)
        inter_b = inter.boundary_at(r1_grid)
        for region in regions:
            assert np.all(inter_b <= region.boundary_at(r1_grid) + 1e-12)
        worst_gap = max(worst_gap, float(np.max(sf.values - sf.per_state.min(axis=0))))
    print(
        f"PASS 6: boundaries nonincreasing+concave, intersection contained, "
        f"maxmin gap <= {worst_gap:.1e}"
    )


def test_c07_indecomposability_verdicts():
    report = check_indecomposable(two_state_family())
    assert report.verdict == "indecomposable"
    for n, d in enumerate(report.trace, start=1):
        assert abs(d - 0.7**n) < 1e-12
    frozen = check_indecomposable(
        build_bsbc_family(
            BsbcFamilySpec(state_chain=np.eye(2), eps1=[0.1, 0.2], eps12=[0.0, 0.0])
        )
    )
    assert frozen.verdict == "not-indecomposable"
    assert all(d == 1.0 for d in frozen.trace)
    print(
        f"PASS 7: d(n) = 0.7^n to 1e-12 (n_star={report.n_star}), "
        "frozen chain stays at 1"
    )


def test_c08_fano_bounds():
    useless = validate_kernel(np.full((1, 2, 2, 2, 1), 0.25))
    q_prod = JointInputLaw(n=1, table=np.full((2, 2), 0.25))
    q_gen = JointInputLaw(n=1, table=np.array([[0.35, 0.15], [0.15, 0.35]]))

    cb4 = build_codebook(q_prod, 2, 0.0, 1.0, seed=0)
    rep = fano_diagnostic(cb4, useless, 0)
    assert abs(rep.h_m2_given_z - 2.0) < 1e-12
    assert abs(rep.bound2 - 2.5) < 1e-12
    assert rep.ok1 and rep.ok2
    slack4 = rep.bound2 - rep.h_m2_given_z

    checked = 1
    for kernel in (single_state_family(), two_state_family()):
        for k_blocks in (1, 2):
            cb = build_codebook(q_gen, k_blocks, 0.5, 0.5, seed=3)
            for s0 in range(kernel.s_size):
                r = fano_diagnostic(cb, kernel, s0)
                assert r.ok1 and r.ok2
                checked += 1
    print(
        f"PASS 8: residual uncertainty under the error bound on {checked} codes "
        f"(size-4 slack {slack4:.2f})"
    )


def test_c09_achievability_trend_and_converse():
    t0 = time.perf_counter()
    kernel = single_state_family()
    sf = sweep_support(kernel, 1, lambda_grid(21), OptimConfig())
    touch = []
    for q in sf.argmax:
        rps = [rate_pair(kernel, q, s0) for s0 in range(kernel.s_size)]
        touch.append((min(rp.r1 for rp in rps), min(rp.r2 for rp in rps)))
    # operating point: the sweep point with the most balanced rate pair
    idx = int(np.argmax([min(a, b) for a, b in touch]))
    r1, r2 = 0.5 * touch[idx][0], 0.5 * touch[idx][1]
    q_op = sf.argmax[idx]

    passes = 0
    trend = []
    for seed in range(5):
        pes = [
            estimate_error(build_codebook(q_op, k, r1, r2, seed), kernel, 10_000, seed).overall
            for k in (1, 2, 3, 4)
        ]
        strict = all(b < a for a, b in zip(pes, pes[1:]))
        nonincr = all(b <= a + 1e-12 for a, b in zip(pes, pes[1:]))
        passes += strict or (nonincr and pes[-1] < pes[0])
        trend.append(pes)
    assert passes >= 4, f"trend held for only {passes}/5 seeds: {trend}"

    r2_over = 1.2 * float(sf.values[0])
    worst_rx2 = 1.0
    for k in (1, 2, 3, 4):
        cb = build_codebook(q_op, k, r1, r2_over, 0)
        stats = estimate_error(cb, kernel, 10_000, 0)
        worst_rx2 = min(worst_rx2, stats.per_state[0]["p_err_rx2"])
    assert worst_rx2 >= 0.1
    elapsed = time.perf_counter() - t0
    assert elapsed < 120.0
    print(
        f"PASS 9: P_e decreasing in K for {passes}/5 seeds, over-rate rx2 error "
        f">= {worst_rx2:.2f}, {elapsed:.0f} s"
    )


def test_c10_byte_identical_outputs(tmp_path, capsys):
    import fsbclab

    spec = str(tmp_path / "chan.json")
    fsbclab.save_channel_spec(two_state_family(), spec)

    def run_region(tag, threads):
        out = tmp_path / f"region_{tag}"
        assert (
            cli.main(
                ["region", "--spec", spec, "--out", str(out),
                 "--lambdas", "5", "--starts", "4", "--threads", str(threads)]
            )
            == 0
        )
        return [
            (out / f).read_bytes()
            for f in ("region.csv", "boundary.dat", "region_meta.json")
        ]

    def run_sim(tag, threads):
        out = tmp_path / f"sim_{tag}"
        assert (
            cli.main(
                ["simulate", "--spec", spec, "--out", str(out),
                 "--r1", "0.05", "--r2", "0.02", "--trials", "500",
                 "--lambdas", "3", "--starts", "4", "--threads", str(threads)]
            )
            == 0
        )
        return (out / "simulation.json").read_bytes()

    assert run_region("a", 1) == run_region("b", 1) == run_region("c", 2)
    assert run_sim("a", 1) == run_sim("b", 1) == run_sim("c", 2)
    capsys.readouterr()
    print("PASS 10: region and simulate outputs byte-identical across reruns and threads")
