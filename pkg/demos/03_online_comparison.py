"""Five online learners race on the same synthetic stream.

Each learner sees 1600 examples once, in the same order, predicting before
it trains. The belief-flow learner keeps a diagonal Gaussian over the
logistic weights, samples from it each round, and flows the whole belief
along its own gradient step; the baselines carry a point estimate (plain
SGD, Langevin SGD, dropout SGD) or their own second-order state (AROW).

Run: python3 demos/03_online_comparison.py
"""

from beliefflow import harness as hn

RUNS = 5


def race(flip_fraction, learners):
    dataset = {
        "format": "synthetic",
        "n": 2000,
        "n_features": 20,
        "seed": 11,
        "flip_fraction": flip_fraction,
    }
    print(f"{'learner':>10} {'online err %':>14} {'final err %':>14} {'mistakes':>10}")
    for tag, lcfg in learners.items():
        model = {"kind": "mlp", "hidden": 8} if tag == "dropout" else {}
        cfg = hn.ExperimentConfig(
            name=f"demo-{tag}-{flip_fraction}",
            dataset=dataset,
            learner=lcfg,
            model=model,
            runs=RUNS,
            base_seed=500,
        )
        reports = [hn.run_online(cfg, i) for i in range(cfg.runs)]
        agg = hn.aggregate(reports)
        online = agg["online_error_pct"]
        final = agg["final_error_pct"]
        mistakes = agg["total_mistakes"]["mean"]
        print(f"{tag:>10} {online['mean']:>8.2f} ± {online['stderr']:<4.2f}"
              f" {final['mean']:>8.2f} ± {final['stderr']:<4.2f} {mistakes:>10.1f}")


LEARNERS = {
    "bflo": {"algorithm": "bflo", "variant": "diagonal", "eta": 0.05, "sigma_init": 0.2},
    "sgd": {"algorithm": "sgd", "eta": 0.05, "sigma_init": 0.2},
    "blang": {"algorithm": "blang", "eta": 0.05, "sigma_init": 0.2},
    "arow": {"algorithm": "arow", "r": 10.0},
    "dropout": {"algorithm": "dropout", "eta": 0.05, "sigma_init": 0.2, "p_drop": 0.5},
}

print("clean stream (5% label flips):\n")
race(0.05, LEARNERS)
print("""
online err %  : mistakes made while learning, as a fraction of the stream
final err %   : error of the frozen learner on the held-out 20%

On an easy, nearly separable stream the specialists win: AROW is built for
exactly this geometry and plain SGD never wastes a round exploring. The
sampled-weights learner pays an exploration tax online because every
prediction uses a random draw from a still-wide belief. The dropout
baseline runs a small MLP (dropout needs a hidden layer), so its numbers
are not directly comparable to the linear rows.

Turn the noise up and the picture shifts:
""")
print("hard stream (20% label flips):\n")
race(0.20, {k: LEARNERS[k] for k in ("bflo", "sgd", "blang")})
print("""
The frozen belief mean is now at or below the plain-SGD point estimate:
averaging the per-round flows integrates out much of the label noise that
whipsaws a single weight vector. The online column still carries the
exploration tax; where sampling earns its keep is the posterior it leaves
behind, inspectable round by round (see demo 04).
""")

# the belief's entropy trace shows the contraction directly
cfg = hn.ExperimentConfig(
    name="demo-entropy",
    dataset={"format": "synthetic", "n": 2000, "n_features": 20,
             "seed": 11, "flip_fraction": 0.05},
    learner=LEARNERS["bflo"],
    runs=1,
    base_seed=500,
)
report = hn.run_online(cfg, 0)
trace = report.entropy_trace
picks = [trace[0], trace[len(trace) // 4], trace[len(trace) // 2], trace[-1]]
print("belief entropy along one run (round, nats):")
for rnd, ent in picks:
    print(f"  round {rnd:>5}: {ent:+.3f}")
print("\nentropy falls monotonically in expectation: each agreeing example")
print("contracts the belief a little along the direction it tested.")
