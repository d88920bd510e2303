"""Run all three methods on an analytic objective and watch the gradient.

The environment's distribution shifts with the decision, but the overall
objective is still a closed-form quadratic, so we can evaluate the true
gradient norm along each trajectory instead of relying on noisy probes.
The table prints ||grad F||^2 averaged over ten seeds at a few points of
the sample budget, one row per method.
"""

import numpy as np

from zodd import (
    ConstantBeta,
    ConstantBatch,
    QuadraticShiftOracle,
    RunConfig,
    register_env,
    run,
)

D = 5
BUDGET = 20_000
CHECKPOINTS = (0.1, 0.25, 0.5, 1.0)


def make_config(method, seed):
    if method == "czo1":
        # the baseline is only stable with a far smaller step and a fixed
        # tiny smoothing radius, the same configuration the experiment
        # harness gives it
        return RunConfig(
            x0=np.full(D, 3.0),
            mu0=1e-3,
            mu_min=1e-3,
            gamma=0.95,
            s_max=10,
            m_scale=0.1,
            beta_schedule=ConstantBeta(1e-5),
            batch_schedule=ConstantBatch(1),
            c0_samples=0,
            sample_budget=BUDGET,
            max_iters=BUDGET,
            seed=seed,
            method="czo1",
        )
    return RunConfig(
        x0=np.full(D, 3.0),
        mu0=0.19,
        mu_min=0.05,
        gamma=0.95,
        s_max=10,
        m_scale=0.1,
        beta_schedule=ConstantBeta(0.01),
        batch_schedule=ConstantBatch(30),
        c0_samples=20,
        sample_budget=BUDGET,
        max_iters=10_000,
        seed=seed,
        method=method,
    )


def main():
    oracle = QuadraticShiftOracle(0.2 * np.eye(D), np.full(D, 0.45), 0.5)
    x_start = np.full(D, 3.0)
    print(f"start: F = {oracle.value(x_start):.3f}, "
          f"||grad||^2 = {oracle.gradient(x_start) @ oracle.gradient(x_start):.3f}")
    header = "  ".join(f"{int(f * BUDGET):>8d}" for f in CHECKPOINTS)
    print(f"\n{'method':8s}  {header}   (draws used)")
    for method in ("alg1", "alg2", "czo1"):
        rows = []
        n_diverged = 0
        for seed in range(530, 540):
            result = run(register_env(oracle), make_config(method, seed))
            if result.diverged:
                n_diverged += 1
                continue
            draws = np.array([t.cumulative_draws for t in result.traces])
            gnorms = np.array(
                [float(oracle.gradient(t.x) @ oracle.gradient(t.x))
                 for t in result.traces]
            )
            # value at the largest checkpoint reached so far
            row = [gnorms[np.searchsorted(draws, f * BUDGET, "right") - 1]
                   for f in CHECKPOINTS]
            rows.append(row)
        if rows:
            means = np.mean(rows, axis=0)
            cells = "  ".join(f"{v:8.4f}" for v in means)
        else:
            cells = "  ".join(f"{'--':>8s}" for _ in CHECKPOINTS)
        note = f"   diverged {n_diverged}/10 seeds" if n_diverged else ""
        print(f"{method:8s}  {cells}{note}")
    print("\nBoth adaptive methods drive the true gradient toward zero within")
    print("the budget. The baseline multiplies its direction by the raw value")
    print("f/mu, so the step magnitude scales with |F(x)| itself: this start")
    print("has F = 46 and every run blows up. Started near the F = 0 shell it")
    print("would freeze instead. Subtracting the offset is what removes that")
    print("value term and makes the step size meaningful.")


if __name__ == "__main__":
    main()
