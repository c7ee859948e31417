"""An eigenvalue below the energy window wraps around; shifting dt exposes it."""

from __future__ import annotations

import math

from fermiqpe import FermionHamiltonian, PEConfig, spectrum_scan


def main() -> None:
    # eigenvalues -1 and -12; the window for dt = 2 pi / 8 is (-7.5, 0.5]
    h = FermionHamiltonian(1, e0=-12.0, one_body={(1, 1): 11.0})
    report = spectrum_scan(h, PEConfig(w=6, dt=2 * math.pi / 8, e_max=0.5, shots=4000, seed=9))
    for p in report.peaks:
        moved = ", ".join("none" if e is None else f"{e:+.3f}" for e in p.shifted_energies)
        print(f"  {p.energy:+.3f}  {p.status:8s}  shifted runs: {moved}")


if __name__ == "__main__":
    main()
