"""Compile Trotter steps to native gates and watch the error shrink with the step size."""

from __future__ import annotations

import numpy as np
import scipy.linalg

from fermiqpe import compile_trotter_step, gate_matrix, pauli_matrix
from fermiqpe.pauli import hamiltonian_from_strings


def main() -> None:
    h = hamiltonian_from_strings({"XXI": 0.9, "ZII": 0.6, "IYY": -0.4})
    m = pauli_matrix(h)
    dts = [0.2, 0.1, 0.05, 0.025]
    for order in (1, 2):
        errs = []
        for dt in dts:
            step = gate_matrix(compile_trotter_step(h, dt, order))
            errs.append(np.linalg.norm(step - scipy.linalg.expm(-1j * dt * m), 2))
        slope = np.polyfit(np.log(dts), np.log(errs), 1)[0]
        print(f"order {order}: errors {[f'{e:.1e}' for e in errs]}  slope {slope:.2f}")


if __name__ == "__main__":
    main()
