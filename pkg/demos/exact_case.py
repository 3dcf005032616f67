"""Damped harmonic oscillator: the Lindblad and Fokker-Planck evolutions agree to roundoff."""
from lindblad_egorov import ExperimentConfig, run_experiment


def main():
    cfg = ExperimentConfig(mode="exact_case", preset="harmonic_exact", h=1 / 32, T=2.0,
                           samples=8, measure_floor=False)
    rep = run_experiment(cfg)
    print(f"grid N={rep.grid['n_points']}, dt={rep.diagnostics['dt']:.4g}")
    print("    t     hs_distance   |A|_HS")
    for t, d, n in zip(rep.times, rep.hs_distance, rep.hs_quantum):
        print(f"{t:6.3f}  {d:12.3e}  {n:8.5f}")


if __name__ == "__main__":
    main()
