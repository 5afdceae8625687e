"""Acceptance criteria, one test per criterion.

Each test carries a ``criterion`` marker; the terminal summary prints one
PASS/FAIL line per criterion (see ``conftest.py``).
"""

import time

import numpy as np
import pytest

import _suite
from _suite import H_STAR_Z, instance_z
from sinkhorn_mirror import (
    SolveOptions,
    bregman_F,
    cli,
    gen_ou_grid,
    gen_quadratic,
    grad_check_F,
    kernel_mass,
    kl,
    kl_coupling,
    make_coupling,
    plus_transform,
    sinkhorn_step,
    solve,
    solve_certified,
)
from sinkhorn_mirror.oracle import bound_report, effective_log_mass

N_RATE = 500


def _pi(phi, ctx):
    return make_coupling(phi, plus_transform(phi, ctx), ctx)


@pytest.fixture(scope="module")
def contexts(suite):
    return [inst.ctx for _, inst in suite]


@pytest.fixture(scope="module")
def traces(contexts):
    """500-step traces from phi_0 = 0 on the suite, with every row recorded."""
    opts = SolveOptions(max_iters=N_RATE, kl_tolerance=0.0)
    return [solve(ctx, None, opts).trace for ctx in contexts]


@pytest.fixture(scope="module")
def certificates(contexts):
    return [solve_certified(ctx, 1e-10) for ctx in contexts]


@pytest.fixture(scope="module")
def pairs(contexts):
    """200 random potential pairs on 10 suite instances, sizes and zero patterns mixed."""
    rng = np.random.default_rng(2024)
    out = []
    for ctx in contexts[::5]:
        ny = ctx.shape[1]
        for _ in range(20):
            out.append((ctx, rng.uniform(-2, 2, ny), rng.uniform(-2, 2, ny)))
    return out


@pytest.mark.criterion(1, "potential step equals -log(rho_n / nu), 100 steps, 1e-10, < 30 s")
def test_c01_step_identity(contexts):
    t0 = time.perf_counter()
    worst = 0.0
    for ctx in contexts:
        nu = ctx.nu.weights
        phi = np.zeros(ctx.shape[1])
        for _ in range(100):
            phi_next = sinkhorn_step(phi, ctx).phi_next
            # rho_n from the coupling, computed apart from the step itself
            rho = _pi(phi, ctx).y_marginal.weights
            worst = max(worst, float(np.max(np.abs(phi_next - phi + np.log(rho / nu)))))
            phi = phi_next
    elapsed = time.perf_counter() - t0
    assert worst <= 1e-10, worst
    assert elapsed < 30.0, elapsed


@pytest.mark.criterion(2, "monotone descent of H(rho_n|nu), 1e-12")
def test_c02_monotone_descent(traces):
    for trace in traces:
        k = trace.column("kl_rho_nu")
        assert np.all(k[1:] <= k[:-1] + 1e-12)


@pytest.mark.criterion(3, "quantified descent against H(pi_n|pi_{n+1}), 1e-10")
def test_c03_quantified_descent(traces):
    for trace in traces:
        k = trace.column("kl_rho_nu")
        rhs = trace.column("descent_rhs")[:-1]
        assert np.all(k[:-1] - k[1:] >= rhs - 1e-10)


def _check_rate(trace, constant):
    n = trace.column("n")[1:]
    prod = n * trace.column("kl_rho_nu")[1:]
    # a trace shorter than 500 steps ends at an exact fixed point (kl = 0)
    assert len(n) == N_RATE or trace.rows[-1].kl_rho_nu <= 0.0
    assert np.all(prod <= constant), float(np.max(prod - constant))


@pytest.mark.criterion(4, "n H(rho_n|nu) <= H* + log mass + 2 gap, n in [1, 500], zeros included")
def test_c04_robust_rate(contexts, traces, certificates):
    for ctx, trace, cert in zip(contexts, traces, certificates):
        _check_rate(trace, cert.h_star + np.log(kernel_mass(ctx.kernel)) + 2 * cert.gap)
    ctx = instance_z()
    cert = solve_certified(ctx, 1e-10)
    trace = solve(ctx, None, SolveOptions(max_iters=N_RATE, kl_tolerance=0.0)).trace
    _check_rate(trace, cert.h_star + np.log(kernel_mass(ctx.kernel)) + 2 * cert.gap)


@pytest.mark.criterion(5, "n H(rho_n|nu) <= H(pi*|pi_0) + 2 gap for random phi_0, 10 seeds")
def test_c05_exact_bound_random_start(contexts, certificates):
    picks = list(range(0, 50, 5))
    for seed, k in enumerate(picks):
        ctx, cert = contexts[k], certificates[k]
        phi0 = np.random.default_rng(seed).uniform(-3, 3, ctx.shape[1])
        c_exact = kl_coupling(cert.pi_star, _pi(phi0, ctx))
        trace = solve(ctx, phi0, SolveOptions(max_iters=N_RATE, kl_tolerance=0.0)).trace
        _check_rate(trace, c_exact + 2 * cert.gap)


@pytest.mark.criterion(6, "F(phi_2|phi_1) equals a coupling entropy, 200 pairs, 1e-10")
def test_c06_bregman_coupling_identity(pairs):
    # F(phi_2|phi_1) = F*(rho_1|rho_2) = H(pi_1|pi_2)
    worst = max(abs(bregman_F(p2, p1, ctx) - kl_coupling(_pi(p1, ctx), _pi(p2, ctx))) for ctx, p2, p1 in pairs)
    assert worst <= 1e-10, worst


@pytest.mark.criterion(7, "coupling entropy dominates its Y-marginal entropy, 1e-12")
def test_c07_data_processing(pairs):
    for ctx, p2, p1 in pairs:
        a, b = _pi(p2, ctx), _pi(p1, ctx)
        assert kl_coupling(a, b) >= kl(a.y_marginal, b.y_marginal) - 1e-12
        assert kl_coupling(b, a) >= kl(b.y_marginal, a.y_marginal) - 1e-12


@pytest.mark.criterion(8, "finite-difference gradient of F, step 1e-6, 20 instances, 1e-6")
def test_c08_gradient(contexts):
    rng = np.random.default_rng(8)
    chosen = contexts[:20]
    assert any(not np.all(ctx.kernel.support) for ctx in chosen)
    for ctx in chosen:
        for phi in (np.zeros(ctx.shape[1]), rng.uniform(-1, 1, ctx.shape[1])):
            assert grad_check_F(phi, ctx, 1e-6) <= 1e-6


@pytest.mark.criterion(9, "quadratic-cost chain for eps in {1, 0.1, 0.01}, < 60 s")
def test_c09_quadratic_chain():
    t0 = time.perf_counter()
    for eps in (1.0, 0.1, 0.01):
        inst = gen_quadratic(7, 50, 50, 2, eps)
        ctx = inst.ctx
        m2 = inst.meta["m2_mu"] + inst.meta["m2_nu"]
        cert = solve_certified(ctx, 1e-10)
        assert cert.h_star + np.log(kernel_mass(ctx.kernel)) <= m2 / eps + 1e-6
        trace = solve(ctx, None, SolveOptions(max_iters=N_RATE, kl_tolerance=0.0)).trace
        n = trace.column("n")[1:]
        running = n * eps * trace.column("kl_rho_nu")[1:]
        assert np.all(running <= m2 + 1e-6)
    assert time.perf_counter() - t0 < 60.0


@pytest.mark.criterion(10, "entropic Talagrand bound on the OU grid (approximate)")
def test_c10_talagrand_bound_approximate():
    inst = gen_ou_grid(1.0, 1.0, 5.0, 201, (0.5, 0.25), (-0.5, 0.25))
    cert = solve_certified(inst.ctx, 1e-10)
    report = bound_report(inst.ctx, cert, inst.meta)
    assert cert.h_star <= report.c_talagrand * 1.05 + 0.01


@pytest.mark.criterion(11, "duality gap <= 1e-8 on positive instances and on instance Z")
def test_c11_certificate(suite):
    positive = [inst.ctx for spec, inst in suite if spec[3] == 0.0]
    assert len(positive) >= 16
    for ctx in positive:
        cert = solve_certified(ctx, 1e-8, max_iters=100_000)
        assert cert.gap <= 1e-8 and cert.iterations <= 100_000
    cert = solve_certified(instance_z(), 1e-8, max_iters=100_000)
    assert cert.gap <= 1e-8
    assert abs(cert.h_star - H_STAR_Z) <= 1e-8


@pytest.mark.criterion(12, "gen and solve outputs byte-identical across reruns")
def test_c12_determinism(tmp_path):
    for seed, nx, ny, f in _suite.suite_specs():
        outputs = []
        for rep in (0, 1):
            d = tmp_path / f"{seed}-{rep}"
            d.mkdir()
            gen = ["gen", "--family", "random", "--seed", str(seed), "--nx", str(nx), "--ny", str(ny),
                   "--zero-fraction", str(f), "--out", str(d / "p.json")]
            assert cli.run(gen) == 0
            args = ["solve", "--in", str(d / "p.json"), "--iters", "100", "--tol", "1e-12",
                    "--trace", str(d / "t.csv")]
            if nx * ny <= 400:
                args.append("--certify")
            assert cli.run(args) == 0
            outputs.append([p.read_bytes() for p in sorted(d.iterdir())])
        assert outputs[0] == outputs[1], (seed, nx, ny, f)
