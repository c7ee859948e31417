"""Operation counts of one Trotter step for the Hubbard chain and the pairing model."""

from __future__ import annotations

import numpy as np

from fermiqpe.cli import gate_count_rows


def main() -> None:
    rows = gate_count_rows([2, 4, 6, 8, 10, 12])
    print(" s   H_H   H_P")
    for s, hh, hp in rows:
        print(f"{s:2d} {hh:5d} {hp:5d}")
    print("H_H first differences:", np.diff([r[1] for r in rows]).tolist())
    print("H_P second differences:", np.diff([r[2] for r in rows], 2).tolist())


if __name__ == "__main__":
    main()
