"""Anharmonic oscillator with position and momentum jumps: d(1) against h on a log-log scale.

Uses coarser h than the acceptance sweep so it finishes in about a minute.
"""
from lindblad_egorov import ExperimentConfig, scaling_sweep


def main():
    cfg = ExperimentConfig(preset="anharmonic", gamma=1.0, T=1.0, h_list=[1 / 16, 1 / 32, 1 / 64])
    sweep = scaling_sweep(cfg).sweep
    for h, d in zip(sweep["values"], sweep["final_distance"]):
        print(f"h = 1/{round(1 / h):<4d} d(1) = {d:.4e}")
    fit = sweep["fit"]
    lo, hi = fit["confidence_95"]
    print(f"slope {fit['slope']:.3f} (95% interval {lo:.2f} .. {hi:.2f}), "
          f"residual rms {fit['residual_rms']:.3g}")


if __name__ == "__main__":
    main()
