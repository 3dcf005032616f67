"""Closed versus open anharmonic dynamics at h = 1/32.

Without the environment the distance keeps growing; with gamma = 1 the
diffusion smooths the symbol and the distance stays small.
"""
import numpy as np

from lindblad_egorov import ExperimentConfig, run_experiment


def main():
    base = dict(preset="anharmonic", h=1 / 32, T=2.0, samples=8)
    closed = run_experiment(ExperimentConfig(mode="egorov", gamma=0.0, **base))
    opened = run_experiment(ExperimentConfig(gamma=1.0, **base))
    print("    t    gamma=0      gamma=1")
    for t, d0, d1 in zip(closed.times, closed.hs_distance, opened.hs_distance):
        print(f"{t:5.2f}  {d0:10.3e}  {d1:10.3e}")
    growth = np.diff(np.log(closed.hs_distance[2:])) / np.diff(closed.times[2:])
    print(f"closed-system log growth rate per unit time: {growth.mean():.3f}")


if __name__ == "__main__":
    main()
