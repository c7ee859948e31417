"""Map a small fermionic Hamiltonian to Pauli strings and check it against the Fock-space oracle."""

from __future__ import annotations

import numpy as np

from fermiqpe import build_hubbard, fock_matrix, jw_hamiltonian, pauli_matrix


def main() -> None:
    h = build_hubbard(2, eps=1.0, t=0.5, u=2.0)
    ph = jw_hamiltonian(h)
    print(f"{h.n_levels} levels -> {len(ph.strings)} Pauli strings, constant {ph.constant:+.3f}")
    for s in ph.strings:
        print(f"  {s.coeff.real:+.3f}  {s.label()}")
    err = np.abs(fock_matrix(h) - pauli_matrix(ph)).max()
    print(f"max |fock - pauli| = {err:.2e}")


if __name__ == "__main__":
    main()
