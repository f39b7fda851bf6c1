"""Design the best codebook for a bit budget and look inside it.

Run with ``python3 demos/design_and_inspect.py [K] [bits]`` (defaults: 3 5).
The script searches the bit allocations, prints the ranking, then shows
the winning amplitude rows and how the minimum distance splits between
amplitude pairs and same-row phase differences.
"""

from __future__ import annotations

import sys

import numpy as np

from noncoherent_apsk import DesignConfig, mcd_bruteforce, search_bit_allocations
from noncoherent_apsk.distance import decomposed_terms, pilot_psk_mcd


def main(K: int = 3, bits: int = 5) -> None:
    entries = search_bit_allocations(K, bits, DesignConfig(restarts=16))
    print(f"allocations evaluated for K={K}, {bits} bits:")
    for e in entries:
        print(f"  {str(e.alloc):<28} MCD {e.codebook.achieved_mcd:.6f}   bound {e.bound:.6f}")

    best = entries[0].codebook
    print(f"\nbest: {best.alloc}")
    np.set_printoptions(precision=6, suppress=True)
    print("amplitude rows (one per line):")
    print(best.unit_amplitudes)

    terms = decomposed_terms(best)
    if terms.amplitude_pair is None:
        print("\nsingle amplitude row: the distance comes from phase differences only")
    else:
        print(f"\nclosest amplitude pair: rows {terms.amplitude_pair}, distance {terms.amplitude_distance:.6f}")
    print(f"worst same-row phase distance: row {terms.phase_row}, distance {terms.phase_distance:.6f}")
    if best.alloc.n_points <= 2**14:
        print(f"brute force over all {best.alloc.n_points} points agrees: {mcd_bruteforce(best):.6f}")
    if best.alloc.phase_symbols:
        print(f"equal-amplitude pilot scheme with the same phase orders: {pilot_psk_mcd(best.alloc):.6f}")


if __name__ == "__main__":
    args = [int(a) for a in sys.argv[1:3]]
    main(*args)
