"""Acceptance gate: one test per criterion, one printed verdict line each.

Criteria over real datasets skip (with instructions) when the files are not
present under data/; everything else runs unconditionally. Run with -v to
see one line per criterion; the verdict lines below bypass pytest's capture
so they are visible either way.
"""

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from beliefflow import belief as bel
from beliefflow import data as dat
from beliefflow import flow as fl
from beliefflow import harness as hns
from beliefflow import learners as lrn
from beliefflow import models as mdl
from beliefflow import oracles as orc
from beliefflow import pseudo as psd

DATA = Path(__file__).resolve().parent.parent / "data"
MUSHROOMS = DATA / "mushrooms"
MNIST_IMAGES = DATA / "train-images-idx3-ubyte"
MNIST_LABELS = DATA / "train-labels-idx1-ubyte"

MUSHROOM_SKIP = ("needs the LIBSVM 'mushrooms' file at data/mushrooms "
                 "(download from the LIBSVM binary dataset page)")
MNIST_SKIP = ("needs the MNIST IDX files data/train-images-idx3-ubyte and "
              "data/train-labels-idx1-ubyte (uncompressed)")


_CAPSYS = None


@pytest.fixture(autouse=True)
def _live_verdicts(capsys):
    # verdict() writes outside pytest's capture so every run, -s or not,
    # shows one line per criterion
    global _CAPSYS
    _CAPSYS = capsys
    yield
    _CAPSYS = None


def verdict(num, ok: bool, detail: str) -> None:
    line = f"[criterion {num:>3}] {'PASS' if ok else 'FAIL'} - {detail}"
    if _CAPSYS is not None:
        with _CAPSYS.disabled():
            print(line, flush=True)
    else:
        print(line, flush=True)
    assert ok, detail


def random_belief(variant, d, rng):
    mean = rng.normal(size=d)
    if variant == bel.FULL:
        q, _ = np.linalg.qr(rng.normal(size=(d, d)))
        return bel.full_belief(mean, q, rng.uniform(0.2, 3.0, size=d) ** 2)
    if variant == bel.DIAGONAL:
        return bel.diagonal_belief(mean, rng.uniform(0.2, 3.0, size=d))
    return bel.spherical_belief(mean, float(rng.uniform(0.2, 3.0)))


def test_criterion_1_oracle_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    worst_gap = 0.0
    for d in (1, 2, 3):
        for _ in range(200):
            prior = random_belief(bel.FULL, d, rng)
            w = bel.sample(prior, rng)
            w_prime = w + rng.normal(scale=0.5, size=d)
            flow = fl.solve_full(prior, w, w_prime)
            post = fl.apply_flow(prior, flow, w, w_prime)
            kl = bel.kl_divergence(post, prior)
            if d == 1:
                sig = math.sqrt(prior.eigenvalues[0])
                _, kl_star = orc.minimize_scalar_flow(
                    ((w - prior.mean) / sig).item(),
                    ((w_prime - prior.mean) / sig).item())
            else:
                kl_star, _ = orc.minimize_matrix_flow(
                    prior.mean, bel.covariance(prior), w, w_prime,
                    seed=int(rng.integers(2 ** 31)))
            worst_gap = max(worst_gap, kl - kl_star)
    worst_resid = 0.0
    for _ in range(200):
        u = float(rng.uniform(0.05, 3.0))
        v_par = float(rng.normal(scale=1.5))
        v_perp = float(rng.uniform(0.05, 3.0))
        a2 = fl.solve_2x2(u, v_par, v_perp, 1, 1)
        worst_resid = max(worst_resid, orc.plane_optimality_residual(u, v_par, v_perp, a2))
    dt = time.perf_counter() - t0
    ok = worst_gap <= 1e-5 and worst_resid <= 1e-8 and dt < 60.0
    verdict(1, ok, f"oracle equivalence: max KL gap {worst_gap:.2e} (<= 1e-5), "
                   f"max stationarity residual {worst_resid:.2e} (<= 1e-8), {dt:.1f}s (< 60s)")


def test_criterion_2_constraint_exactness():
    t0 = time.perf_counter()
    rng = np.random.default_rng(102)
    cases = 0
    worst = 0.0
    while cases < 1000:
        for variant in (bel.FULL, bel.DIAGONAL, bel.SPHERICAL):
            for d in (1, 2, 5, 20):
                prior = random_belief(variant, d, rng)
                w = bel.sample(prior, rng)
                w_prime = w + rng.normal(scale=0.5, size=d)
                flow = fl.solve(prior, w, w_prime)
                post = fl.apply_flow(prior, flow, w, w_prime)
                if flow.variant == bel.SPHERICAL:
                    norm_dw = float(np.linalg.norm(w - prior.mean))
                    resid = float(np.linalg.norm(
                        flow.scale * norm_dw * flow.d_hat + post.mean - w_prime))
                else:
                    a = fl.flow_matrix(prior, flow)
                    b = post.mean - a @ prior.mean
                    resid = float(np.linalg.norm(a @ w + b - w_prime))
                worst = max(worst, resid / (1.0 + float(np.linalg.norm(w_prime))))
                cases += 1
    dt = time.perf_counter() - t0
    ok = worst <= 1e-9 and dt < 60.0
    verdict(2, ok, f"constraint exactness over {cases} cases: "
                   f"max ||A*w+b-w'|| / (1+||w'||) = {worst:.2e} (<= 1e-9), {dt:.1f}s")


def test_criterion_3_spot_values():
    a12 = float(fl.scalar_scale(1.0, 2.0))
    a10 = float(fl.scalar_scale(1.0, 0.0))
    prior = bel.full_belief(np.zeros(2), np.eye(2), np.ones(2))
    flow = fl.solve_full(prior, np.array([1.0, 0.0]), np.array([1.0, 1.0]))
    a_star = fl.flow_matrix(prior, flow)
    want = np.array([[0.809017, -0.707107], [0.809017, 0.707107]])
    gap_a12 = abs(a12 - 1.366025)
    gap_a10 = abs(a10 - 0.707107)
    gap_m = float(np.max(np.abs(a_star - want)))
    ok = gap_a12 <= 1e-6 and gap_a10 <= 1e-6 and gap_m <= 1e-4
    verdict(3, ok, f"spot values: |a(1,2)-1.366025|={gap_a12:.1e} (<= 1e-6), "
                   f"|a(1,0)-0.707107|={gap_a10:.1e} (<= 1e-6), "
                   f"full d=2 matrix max diff {gap_m:.1e} (<= 1e-4)")


def test_criterion_4_regime_grid():
    prior = bel.diagonal_belief(np.zeros(1), np.ones(1))
    grid = np.linspace(-4.0, 4.0, 41)
    bad = 0
    for delta in grid:
        for delta_prime in grid:
            w = np.array([delta])
            w_prime = np.array([delta_prime])
            flow = fl.solve_diagonal(prior, w, w_prime)
            post = fl.apply_flow(prior, flow, w, w_prime)
            sigma_gap = post.variances[0] - 1.0
            regime_gap = delta_prime * delta - delta * delta
            if abs(regime_gap) < 1e-12:
                good = abs(sigma_gap) <= 1e-9
            elif regime_gap < 0:
                good = sigma_gap < 0
            else:
                good = sigma_gap > 0
            bad += 0 if good else 1
    verdict(4, bad == 0, f"regime grid 41x41: {bad} sign mismatches "
                         f"(sign(sigma'-sigma) vs sign(d'd - d^2))")


def test_criterion_5_pseudo_round_trip():
    rng = np.random.default_rng(105)
    worst = 0.0
    plans = [(bel.DIAGONAL, 200), (bel.SPHERICAL, 150), (bel.FULL, 150)]
    for variant, count in plans:
        for _ in range(count):
            d = int(rng.integers(1, 7))
            prior = random_belief(variant, d, rng)
            post = random_belief(variant, d, rng)
            post = bel.BeliefState(post.variant, post.mean,
                                   eigenvectors=post.eigenvectors,
                                   eigenvalues=post.eigenvalues,
                                   variances=post.variances,
                                   variance=post.variance)
            pd = psd.extract_pseudo(prior, post)
            back = psd.bayes_update_gaussian(prior, pd.x, pd.cov)
            mean_err = np.linalg.norm(back.mean - post.mean) / (1.0 + np.linalg.norm(post.mean))
            cov_err = np.linalg.norm(bel.covariance(back) - bel.covariance(post), "fro") \
                / (1.0 + np.linalg.norm(bel.covariance(post), "fro"))
            worst = max(worst, float(mean_err), float(cov_err))
    # non-expansive rounds only ever produce PSD pseudo observations
    prior = bel.diagonal_belief(np.zeros(5), np.ones(5))
    state = prior
    min_r = np.inf
    for _ in range(200):
        w = bel.sample(state, rng)
        w_prime = w + rng.normal(scale=1.2, size=5)
        flow = fl.clamp_nonexpansive(fl.solve_diagonal(state, w, w_prime))
        post = fl.apply_flow(state, flow, w, w_prime)
        pd = psd.extract_pseudo(state, post)
        if pd is not None:
            finite = np.isfinite(pd.cov)
            if finite.any():
                min_r = min(min_r, float(pd.cov[finite].min()))
        state = bel.correct_spectrum(post, bel.LAMBDA_MIN)
    ok = worst <= 1e-8 and min_r >= -1e-12
    verdict(5, ok, f"pseudo round trip over 500 pairs: max rel err {worst:.2e} (<= 1e-8); "
                   f"non-expansive min R eigenvalue {min_r:.2e} (>= 0)")


def test_criterion_6_gradient_checks():
    # relative error of the gradient as a vector: element-wise ratios have no
    # meaning where the reference entry sits below finite-difference noise
    rng = np.random.default_rng(106)
    worst = 0.0
    spec_log = mdl.logistic_model(7)
    for _ in range(100):
        w = rng.normal(size=7)
        x = rng.normal(size=7)
        t = np.array([float(rng.integers(0, 2))])
        _, grad = mdl.forward_backward(spec_log, w, x, t)
        ref = mdl.finite_diff_gradient(spec_log, w, x, t)
        worst = max(worst, float(np.linalg.norm(grad - ref) /
                                 max(1e-12, float(np.linalg.norm(ref)))))
    spec_mlp = mdl.mlp_model(5, 4, 3)
    for _ in range(100):
        w = rng.normal(scale=0.7, size=spec_mlp.n_params)
        x = rng.normal(size=5)
        t = mdl.target_vector(spec_mlp, int(rng.integers(0, 3)))
        _, grad = mdl.forward_backward(spec_mlp, w, x, t)
        ref = mdl.finite_diff_gradient(spec_mlp, w, x, t)
        worst = max(worst, float(np.linalg.norm(grad - ref) /
                                 max(1e-12, float(np.linalg.norm(ref)))))
    verdict(6, worst <= 1e-5,
            f"gradients vs central differences, 100 cases per model: "
            f"max norm-relative err {worst:.2e} (<= 1e-5)")


def test_criterion_7_nonexpansive_logdet():
    rng = np.random.default_rng(107)
    violations = 0
    worst_step = -np.inf

    def logdet(state):
        if state.variant == bel.FULL:
            return float(np.sum(np.log(state.eigenvalues)))
        if state.variant == bel.DIAGONAL:
            return float(np.sum(np.log(state.variances)))
        return state.dim * math.log(state.variance)

    for variant, d in ((bel.DIAGONAL, 8), (bel.FULL, 6), (bel.SPHERICAL, 8)):
        state = random_belief(variant, d, rng)
        prev = logdet(state)
        for _ in range(1000):
            w = bel.sample(state, rng)
            w_prime = w + rng.normal(scale=0.8, size=d)
            flow = fl.clamp_nonexpansive(fl.solve(state, w, w_prime))
            state = bel.correct_spectrum(fl.apply_flow(state, flow, w, w_prime),
                                         bel.LAMBDA_MIN)
            cur = logdet(state)
            worst_step = max(worst_step, cur - prev)
            if cur > prev + 1e-10:
                violations += 1
            prev = cur
    verdict(7, violations == 0,
            f"non-expansive log det over 3x1000 rounds: {violations} increases, "
            f"worst step {worst_step:.2e} (<= 1e-10)")


def mushroom_config(algorithm: str) -> hns.ExperimentConfig:
    return hns.ExperimentConfig(
        name=f"mushroom-{algorithm}",
        dataset={"format": "libsvm", "path": str(MUSHROOMS), "name": "mushroom"},
        learner={"algorithm": algorithm, "eta": 0.001, "sigma_init": 0.2,
                 "variant": "diagonal"},
        runs=10,
        base_seed=1000,
    )


@pytest.mark.skipif(not MUSHROOMS.exists(), reason=MUSHROOM_SKIP)
def test_criterion_8_mushroom_reproduction():
    t0 = time.perf_counter()
    sgd = hns.run_experiment(mushroom_config("sgd"), Path("/tmp/bflo-accept/mushroom-sgd"))
    bflo = hns.run_experiment(mushroom_config("bflo"), Path("/tmp/bflo-accept/mushroom-bflo"))
    dt = time.perf_counter() - t0
    sgd_err = sgd["aggregate"]["final_error_pct"]["mean"]
    bflo_err = bflo["aggregate"]["final_error_pct"]["mean"]
    ok = 3.0 <= sgd_err <= 9.0 and bflo_err <= sgd_err and bflo_err <= 4.0 and dt < 120.0
    verdict(8, ok, f"mushroom: SGD {sgd_err:.2f}% (in [3,9]), "
                   f"belief-flow {bflo_err:.2f}% (<= SGD and <= 4), {dt:.0f}s (< 120s)")


def mnist_config(algorithm: str) -> hns.ExperimentConfig:
    return hns.ExperimentConfig(
        name=f"mnist-{algorithm}",
        dataset={"format": "idx", "images": str(MNIST_IMAGES),
                 "labels": str(MNIST_LABELS), "name": "mnist"},
        model={"kind": "mlp", "hidden": 200},
        learner={"algorithm": algorithm, "eta": 0.2, "sigma_init": 0.1,
                 "m": 5, "variant": "diagonal"},
        runs=5,
        base_seed=2000,
    )


@pytest.mark.skipif(not (MNIST_IMAGES.exists() and MNIST_LABELS.exists()),
                    reason=MNIST_SKIP)
def test_criterion_9_mnist_reproduction():
    t0 = time.perf_counter()
    sgd = hns.run_experiment(mnist_config("sgd"), Path("/tmp/bflo-accept/mnist-sgd"))
    bflo = hns.run_experiment(mnist_config("bflo"), Path("/tmp/bflo-accept/mnist-bflo"))
    dt = time.perf_counter() - t0
    sgd_err = sgd["aggregate"]["final_error_pct"]["mean"]
    bflo_err = bflo["aggregate"]["final_error_pct"]["mean"]
    # the margin over SGD is reported; only the 8% absolute bound fails the run
    ok = bflo_err <= 8.0
    verdict(9, ok, f"mnist basic: belief-flow {bflo_err:.2f}% (<= 8), "
                   f"SGD {sgd_err:.2f}% (margin met: {bflo_err <= sgd_err}), "
                   f"{dt:.0f}s (target < 1800s)")


def scrubbed(summary: dict) -> str:
    clean = json.loads(json.dumps(summary))
    for run in clean["runs"]:
        run["wall_time_s"] = 0.0
    return json.dumps(clean, sort_keys=True)


@pytest.mark.skipif(not MUSHROOMS.exists(), reason=MUSHROOM_SKIP)
def test_criterion_10_determinism_mushroom():
    a = hns.run_experiment(mushroom_config("bflo"), Path("/tmp/bflo-accept/det-a"))
    b = hns.run_experiment(mushroom_config("bflo"), Path("/tmp/bflo-accept/det-b"))
    ok = scrubbed(a) == scrubbed(b)
    verdict(10, ok, "determinism: repeated mushroom run summaries byte-identical "
                    "modulo wall-time fields")


def test_criterion_10_determinism_synthetic_proxy(tmp_path):
    # always-run stand-in exercising the same code path on generated data
    cfg = hns.ExperimentConfig(
        name="det-proxy",
        dataset={"format": "synthetic", "n": 500, "n_features": 12, "seed": 9},
        learner={"algorithm": "bflo", "variant": "diagonal", "eta": 0.05,
                 "sigma_init": 0.2},
        runs=3,
        base_seed=77,
    )
    a = hns.run_experiment(cfg, tmp_path / "a")
    b = hns.run_experiment(cfg, tmp_path / "b")
    ok = scrubbed(a) == scrubbed(b) \
        and (tmp_path / "a" / "curve.csv").read_bytes() == (tmp_path / "b" / "curve.csv").read_bytes() \
        and (tmp_path / "a" / "snapshots.bin").read_bytes() == (tmp_path / "b" / "snapshots.bin").read_bytes()
    verdict("10*", ok, "determinism (synthetic proxy): summary, curve, and snapshots "
                       "byte-identical across repeats")
