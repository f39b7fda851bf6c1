"""Design and detection of amplitude-times-PSK unitary constellations for
non-coherent single-input multiple-output block-fading channels."""

from .constellation import (
    AmplitudeSet,
    BitAllocation,
    Codebook,
    UnitarySignal,
    chordal_distance,
    decode_indices_to_bits,
    encode,
    mcd_bruteforce,
    pep_chernoff_bound,
)
from .design import DesignConfig, design_amplitude_set, search_bit_allocations
from .distance import (
    amplitude_pair_distance,
    critical_phase_differences,
    mcd_decomposed,
    mcd_upper_bound,
    phase_mcd_bruteforce,
    phase_mcd_closed_form,
)

__version__ = "0.1.0"

__all__ = [
    "AmplitudeSet",
    "BitAllocation",
    "Codebook",
    "DesignConfig",
    "UnitarySignal",
    "amplitude_pair_distance",
    "chordal_distance",
    "critical_phase_differences",
    "decode_indices_to_bits",
    "design_amplitude_set",
    "encode",
    "mcd_bruteforce",
    "mcd_decomposed",
    "mcd_upper_bound",
    "pep_chernoff_bound",
    "phase_mcd_bruteforce",
    "phase_mcd_closed_form",
    "search_bit_allocations",
]
