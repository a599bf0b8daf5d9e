"""End-to-end acceptance gate.

Each test drives one numbered behavioral guarantee of the package at its
stated tolerance and prints a single PASS/FAIL verdict line (bypassing
pytest's capture, so the lines appear in any run log). The suite is
self-contained: every reference value here is either computed
independently inside the test or frozen from a hand-checked calculation.
"""
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from sharpopt.analysis import (
    StepRecord,
    Trajectory,
    dense_hessian,
    min_grad_norm_curve,
    power_iteration,
    regret_curve,
    toy_minima,
)
from sharpopt.analysis import GenBoundInputs, generalization_bound
from sharpopt.base_optimizers import BaseOptConfig, BaseOptState
from sharpopt.config import ObjectiveSpec, RunConfig, SweepSpec, toy_preset
from sharpopt.core import constant, inverse_sqrt, l2_norm
from sharpopt.objectives import (
    FULL_BATCH,
    SEED_STREAM_DATASET,
    BatchSampler,
    Logistic,
    Quadratic,
    ToyLandscape,
    check_gradients,
    toy_loss,
)
from sharpopt.runner import run, sweep
from sharpopt.sam import SamConfig, step, step_sgd_wsam


def _verdict(capfd, num, name, ok):
    line = f"[acceptance] criterion {num} ({name}): {'PASS' if ok else 'FAIL'}"
    with capfd.disabled():
        print(line, flush=True)


@pytest.fixture(scope="module", autouse=True)
def warm_minima_catalog():
    # locating the two basins is a one-time fixture cost, not part of any
    # criterion's timed budget
    toy_minima()


def _iterate(obj, w0, mode, base_kind, alpha, rho, gamma, steps):
    sam_cfg = SamConfig(
        alpha_schedule=constant(alpha), mode=mode, rho=rho, gamma=gamma
    )
    base_cfg = BaseOptConfig(kind=base_kind)
    state = BaseOptState(dim=len(w0))
    w = np.array(w0, dtype=float)
    trace = []
    for t in range(1, steps + 1):
        w = step(obj, w, FULL_BATCH, state, base_cfg, sam_cfg, t).new_w
        trace.append(w)
    return trace


def test_criterion_1_toy_bifurcation(capfd):
    ok = False
    try:
        minima = toy_minima()
        t0 = time.perf_counter()
        runs = {
            "sam": run(toy_preset(gamma=0.5, mode="sam")),
            "gamma_06": run(toy_preset(gamma=0.6)),
            "gamma_095": run(toy_preset(gamma=0.95)),
        }
        elapsed = time.perf_counter() - t0

        for key in ("sam", "gamma_06"):
            w = runs[key].final_w
            assert l2_norm(w - minima.sharp_w) < 2.0, key
            assert abs(toy_loss(w) - 0.28) <= 0.05, key
        w = runs["gamma_095"].final_w
        assert l2_norm(w - minima.flat_w) < 2.0
        assert abs(toy_loss(w) - 0.36) <= 0.05
        assert elapsed < 1.0, f"bifurcation runs took {elapsed:.2f}s"
        ok = True
    finally:
        _verdict(capfd, 1, "toy bifurcation", ok)


def test_criterion_2_algebraic_equivalences(capfd):
    ok = False
    try:
        toy = ToyLandscape()
        quad = Quadratic(a=(2.0, 1.0), centers=[(1.0, -1.0)])
        toy_w0, quad_w0 = (-6.0, 10.0), (0.0, 0.0)
        setups = [(toy, toy_w0, 0.5), (quad, quad_w0, 0.1)]

        # (a) a zero sharpness weight makes the decoupled mode the plain base
        for obj, w0, alpha in setups:
            for base_kind, a in (("sgdm", alpha), ("adam", 0.05)):
                ws = _iterate(obj, w0, "wsam", base_kind, a, 0.5, 0.0, 100)
                vs = _iterate(obj, w0, "vanilla", base_kind, a, 0.5, 0.0, 100)
                diff = max(np.max(np.abs(w - v)) for w, v in zip(ws, vs))
                assert diff < 1e-12, (base_kind, diff)

        # (b) at gamma = 1/2 the stateless blended step is exactly the
        # two-step perturbed rule on a plain gradient base
        for obj, w0, alpha in setups:
            cfg = SamConfig(alpha_schedule=constant(alpha), mode="coupled", rho=0.5, gamma=0.5)
            w = np.array(w0)
            closed = []
            for t in range(1, 101):
                w = step_sgd_wsam(obj, w, FULL_BATCH, cfg, t).new_w
                closed.append(w)
            sams = _iterate(obj, w0, "sam", "sgd", alpha, 0.5, 0.5, 100)
            diff = max(np.max(np.abs(a - b)) for a, b in zip(closed, sams))
            assert diff < 1e-12, diff

        # (c) with no optimizer state the decoupled and coupled compositions
        # collapse to the same closed form at every gamma
        for obj, w0, alpha in setups:
            for gamma in (0.0, 0.25, 0.5, 0.88):
                dec = _iterate(obj, w0, "wsam", "sgd", alpha, 0.5, gamma, 100)
                cpl = _iterate(obj, w0, "coupled", "sgd", alpha, 0.5, gamma, 100)
                cfg = SamConfig(
                    alpha_schedule=constant(alpha), mode="coupled", rho=0.5, gamma=gamma
                )
                w = np.array(w0)
                closed = []
                for t in range(1, 101):
                    w = step_sgd_wsam(obj, w, FULL_BATCH, cfg, t).new_w
                    closed.append(w)
                d1 = max(np.max(np.abs(a - b)) for a, b in zip(dec, cpl))
                d2 = max(np.max(np.abs(a - b)) for a, b in zip(cpl, closed))
                assert d1 < 1e-12 and d2 < 1e-12, (gamma, d1, d2)
        ok = True
    finally:
        _verdict(capfd, 2, "algebraic equivalences", ok)


def test_criterion_3_gradient_oracle(capfd):
    ok = False
    try:
        results = check_gradients(seed=0, tol=1e-5)
        assert {name for name, _, _ in results} == {"toy", "quadratic", "logistic"}
        for name, worst, passed in results:
            assert passed and worst < 1e-5, (name, worst)
        ok = True
    finally:
        _verdict(capfd, 3, "gradient oracle", ok)


def test_criterion_4_eigenvalue_oracle(capfd):
    ok = False
    try:
        minima = toy_minima()
        toy = ToyLandscape()
        quad = Quadratic(a=(2.0, 1.0, 0.5), centers=[(1.0, -1.0, 0.5)])
        logi = Logistic.synthetic(40, 6, seed=7)

        def agree(obj, w, seed):
            ref = float(np.abs(np.linalg.eigvalsh(dense_hessian(obj, w))).max())
            est = power_iteration(obj, w, seed=seed).lambda_max
            return abs(abs(est) - ref) / ref

        for trial in range(20):
            assert agree(toy, minima.sharp_w, trial) < 1e-3
            assert agree(toy, minima.flat_w, trial) < 1e-3
            wq = 3.0 * np.random.default_rng([trial, 0]).standard_normal(3)
            assert agree(quad, wq, trial) < 1e-3
            wl = np.random.default_rng([trial, 1]).standard_normal(6)
            assert agree(logi, wl, trial) < 1e-3

        lam_sharp = power_iteration(toy, minima.sharp_w).lambda_max
        lam_flat = power_iteration(toy, minima.flat_w).lambda_max
        assert lam_sharp > lam_flat
        ok = True
    finally:
        _verdict(capfd, 4, "eigenvalue oracle", ok)


def test_criterion_5_regret_growth(capfd):
    ok = False
    try:
        t0 = time.perf_counter()
        ratios = []
        for seed in range(5):
            rng = np.random.default_rng([seed, SEED_STREAM_DATASET])
            centers = rng.standard_normal((1024, 1))
            obj = Quadratic(a=(1.0,), centers=centers)
            sampler = BatchSampler(seed=seed, batch_size=1, num_examples=1024)
            cfg = SamConfig(
                alpha_schedule=inverse_sqrt(0.5), mode="coupled",
                rho=0.1, rho_schedule=inverse_sqrt(0.1), gamma=0.5,
            )
            w = np.array([1.0])
            records = []
            for t in range(1, 4001):
                out = step_sgd_wsam(obj, w, sampler.batch_at(t), cfg, t)
                records.append(StepRecord(
                    t=t, loss=out.loss_at_w, grad_norm=out.grad_tilde_norm,
                    sharpness=out.sharpness_term, w=out.new_w,
                ))
                w = out.new_w
            traj = Trajectory(records=tuple(records), final_w=w)
            curve = regret_curve(traj, obj, centers.mean(axis=0), batch_at=sampler.batch_at)
            assert curve[999] > 0.0 and curve[3999] > 0.0
            ratios.append(curve[3999] / curve[999])
        elapsed = time.perf_counter() - t0

        mean_ratio = float(np.mean(ratios))
        # square-root growth predicts 2 for a 4x horizon; 2.5 leaves noise room
        assert mean_ratio <= 2.5, ratios
        assert elapsed < 5.0, f"regret experiment took {elapsed:.2f}s"
        ok = True
    finally:
        _verdict(capfd, 5, "regret growth", ok)


def test_criterion_6_gradient_norm_trend(capfd):
    ok = False
    try:
        for gamma in (0.5, 0.88):
            cfg = RunConfig(
                objective=ObjectiveSpec(kind="toy"), mode="wsam", base_kind="sgd",
                alpha=2.0, alpha_schedule="inverse-sqrt",
                rho=0.1, rho_schedule="inverse-sqrt",
                gamma=gamma, steps=4000, init=(-6.0, 10.0),
            )
            curve = min_grad_norm_curve(run(cfg))
            assert curve[3999] <= curve[999], (gamma, curve[999], curve[3999])
        ok = True
    finally:
        _verdict(capfd, 6, "gradient norm trend", ok)


def _bound_reference(d, m, n, rho, gamma, delta, wnorm, loss):
    """Independent restatement of the three capacity terms."""
    log = math.log
    c1 = 8 * d * log(m * math.e / d) + 2 * log(4 / delta)
    c2 = n * log(1 + (wnorm / rho) ** 2 * (1 + math.sqrt(log(m) / n)) ** 2)
    c3 = 4 * log(m / delta) + 8 * log(6 * m + 3 * n)
    return (
        loss
        + 2 * abs(1 - 2 * gamma) / (1 - gamma) * (c1 / m) ** 0.5
        + gamma / (1 - gamma) * ((c2 + c3) / (m - 1)) ** 0.5
    )


def test_criterion_7_bound_calculator(capfd):
    ok = False
    try:
        rng = np.random.default_rng(123)
        for _ in range(20):
            d = int(rng.integers(1, 60))
            m = int(rng.integers(max(2, d), 10_000_000))
            n = int(rng.integers(1, 200))
            rho = float(rng.uniform(1e-3, 10.0))
            gamma = float(rng.uniform(0.0, 0.99))
            delta = float(rng.uniform(0.01, 0.99))
            wnorm = float(rng.uniform(0.0, 10.0))
            loss = float(rng.uniform(0.0, 1.0))
            got = generalization_bound(GenBoundInputs(
                vc_dim=d, sample_count=m, param_dim=n, rho=rho, gamma=gamma,
                delta=delta, weight_norm=wnorm, empirical_wsam_loss=loss,
            ))
            ref = _bound_reference(d, m, n, rho, gamma, delta, wnorm, loss)
            assert abs(got - ref) <= 1e-10 * max(1.0, abs(ref)), (got, ref)

        fixed = dict(vc_dim=10, param_dim=5, rho=0.1, gamma=0.9, delta=0.05,
                     weight_norm=1.0, empirical_wsam_loss=0.1)
        in_m = [
            generalization_bound(GenBoundInputs(sample_count=m, **fixed))
            for m in (100, 1000, 10_000, 100_000, 1_000_000)
        ]
        assert all(b < a for a, b in zip(in_m, in_m[1:]))
        in_rho = [
            generalization_bound(GenBoundInputs(sample_count=1000, **{**fixed, "rho": r}))
            for r in (1.0, 0.3, 0.1, 0.03, 0.01)
        ]
        assert all(b > a for a, b in zip(in_rho, in_rho[1:]))
        ok = True
    finally:
        _verdict(capfd, 7, "bound calculator", ok)


def test_criterion_8_byte_identical_cli_output(capfd):
    ok = False
    try:
        cmd = [sys.executable, "-m", "sharpopt", "toy", "--gamma", "0.95"]
        first = subprocess.run(cmd, capture_output=True, timeout=120)
        second = subprocess.run(cmd, capture_output=True, timeout=120)
        assert first.returncode == 0 and second.returncode == 0
        assert len(first.stdout) > 0
        assert first.stdout == second.stdout
        ok = True
    finally:
        _verdict(capfd, 8, "byte-identical output", ok)


def test_criterion_9_gamma_sensitivity_sweep(capfd):
    ok = False
    try:
        gammas = tuple(round(0.80 + 0.02 * k, 2) for k in range(8))
        rows = sweep(toy_preset(gamma=0.5), SweepSpec(gammas=gammas))
        assert len(rows) == 8
        for row in rows:
            assert row.status == "ok", (row.gamma, row.status)
            assert row.final_loss is not None and math.isfinite(row.final_loss)
        ok = True
    finally:
        _verdict(capfd, 9, "gamma sensitivity sweep", ok)
