"""airhdc: over-the-air majority bundling for wireless scale-out of HDC.

Multiple transmitters superpose phase-coded binary hypervectors on a shared
in-package wireless channel; receivers decode the bit-wise majority through
pre-computed two-centroid decision regions and run similarity search against
distributed associative memories. The package quantifies the bit error rate
of the over-the-air majority and its impact on classification accuracy.
"""

from .channel import (
    ChannelMatrix,
    Layout,
    LayoutConfig,
    PathLossModel,
    generate_layout,
    load_channel,
    save_channel,
    synth_channel,
)
from .errors import (
    AirhdcError,
    CalibrationError,
    ChannelFileError,
    DimensionError,
    GeometryError,
    InfeasibleError,
)
from .experiments import (
    AccuracyReport,
    ExperimentConfig,
    PipelineConfig,
    PipelineReport,
    ScalabilityReport,
    calibrate_n0,
    run_ber_sweep,
    run_classification,
    run_ota_pipeline,
    run_scalability,
)
from .hdc import (
    Codebook,
    Hypervector,
    cyclic_permute,
    flip_noise,
    hamming_distance,
    majority,
    normalized_hamming,
    random_hypervector,
)
from .memory import AssociativeMemory, MemoryEntry, SearchHit, SearchResult
from .optimizer import (
    BerProfile,
    SearchReport,
    evaluate,
    reduced_space_size,
    search_exhaustive,
    search_greedy,
)
from .ota import (
    Constellation,
    DecisionRule,
    PhaseAlphabet,
    PhaseAssignment,
    ber_analytic,
    ber_montecarlo,
    decision_regions,
    decode,
    received_constellation,
)

__version__ = "0.1.0"
