"""Check the Chernoff pairwise-error bound against Monte Carlo.

Run with ``python3 demos/pairwise_error.py``.  The two closest points of a
designed K=3, 5-bit codebook are sent through the fading channel and the
empirical probability of confusing them is compared with the bound for a
few noise levels and antenna counts.
"""

from __future__ import annotations

from noncoherent_apsk import BitAllocation, DesignConfig, design_amplitude_set, pep_chernoff_bound
from noncoherent_apsk.constellation import closest_pair
from noncoherent_apsk.simulation import pep_empirical


def main() -> None:
    codebook = design_amplitude_set(BitAllocation(3, 1, (0, 2, 2)), DesignConfig())
    i, j, d = closest_pair(codebook)
    print(f"closest pair: points {i} and {j}, chordal distance {d:.4f}\n")
    print(f"{'sigma2':>7} {'M':>3} {'empirical':>10} {'bound':>10}")
    for sigma2 in (0.1, 0.5, 1.0, 2.0):
        for M in (1, 2, 4, 8):
            p = pep_empirical(codebook.points[i], codebook.points[j], M, sigma2, 50_000, seed=M)
            print(f"{sigma2:>7g} {M:>3} {p:>10.5f} {pep_chernoff_bound(d, sigma2, M):>10.5f}")


if __name__ == "__main__":
    main()
