"""Phase estimation on a small degenerate pairing model, compared with exact diagonalization."""

from __future__ import annotations

import math

from fermiqpe import PEConfig, build_pairing, run_phase_estimation
from fermiqpe.oracle import spectrum


def main() -> None:
    h = build_pairing(3, level_spacing=0.0, pairing_strength=1.0)
    sol = spectrum(h)
    print("oracle levels:", [(round(float(e), 3), int(d)) for e, d in zip(sol.levels, sol.degeneracies)])
    cfg = PEConfig(w=7, dt=2 * math.pi / 8, e_max=0.5, shots=4000, seed=1)
    hist = run_phase_estimation(h, cfg)
    print(f"bin width {cfg.bin_width():.4f}")
    for p in hist.peaks():
        print(f"  peak at {p.energy:+.3f} with {p.mass} shots")


if __name__ == "__main__":
    main()
