"""The compartment model and its two closed-form cross-checks.

The validation parameterization (beta 0.001, alpha 0.025, one infected
in a hundred) is integrated with forward Euler at dt 1, then the peak
and the end state are verified against values that do not come from the
integrator: the conservation-law peak formula and the final-size
equation. Agreement within discretization error is what licenses using
the curve as the reference the swarm is graded against.

Run: python3 demos/01_reference_model.py
"""

from __future__ import annotations

import numpy as np

from sirswarm.ode import SirParams, SirState, analytic_peak, final_size, integrate_sir

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:  # plotting is optional sugar
    plt = None


def main() -> None:
    params = SirParams(beta=0.001, alpha=0.025)
    initial = SirState(s=99.0, i=1.0, r=0.0)
    trajectory = integrate_sir(initial, params, 1000, 1.0)

    print("forward Euler, dt=1, 1000 steps")
    print(f"  peak prevalence  {trajectory.peak_infected:8.3f} at step {trajectory.time_of_peak:.0f}")
    print(f"  final S          {trajectory.s[-1]:8.3f}")

    peak_formula = analytic_peak(initial, params)
    s_limit = final_size(initial, params)
    print("independent cross-checks")
    print(f"  conservation-law peak   {peak_formula:8.3f}"
          f"   (integrator is {abs(peak_formula - trajectory.peak_infected):.3f} away)")
    print(f"  final-size equation     {s_limit:8.3f}"
          f"   (curve at step 1000 is {abs(s_limit - trajectory.s[-1]):.3f} away,"
          " Euler depletion error)")

    crossing = int(np.argmax(trajectory.s <= 25.0))
    print(f"  peak occurs when S first drops to 25: step {crossing}"
          f" (peak step {trajectory.time_of_peak:.0f})")

    if plt is not None:
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.plot(trajectory.times, trajectory.s, label="S", color="#1f77d0")
        ax.plot(trajectory.times, trajectory.i, label="I", color="#d02f1f")
        ax.plot(trajectory.times, trajectory.r, label="R", color="#1fd05a")
        ax.axhline(peak_formula, ls=":", color="gray", lw=1,
                   label="conservation-law peak")
        ax.set_xlabel("step")
        ax.set_ylabel("population")
        ax.legend()
        fig.tight_layout()
        fig.savefig("reference_model.png", dpi=120)
        print("wrote reference_model.png")


if __name__ == "__main__":
    main()
