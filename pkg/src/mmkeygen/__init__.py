"""Physical-layer secret-key generation for mmWave massive-MIMO links.

Simulation library and CLI covering beam-perturbation keying against
co-located eavesdroppers, angular-domain (virtual AoA/AoD) extraction,
multi-resolution beam probing, and the five-stage key pipeline (probing,
randomness extraction, quantization, Cascade reconciliation, privacy
amplification).
"""

from .beamforming import (
    Beamformer,
    Codebook,
    HybridConfig,
    SelectionInfeasibleError,
    beam_gain,
    hierarchical_codebook,
    perturb,
    quantize_phases,
    sector_beamformer,
    select_beams,
    steering_beamformer,
)
from .channel import (
    ArrayGeometry,
    ChannelParams,
    ChannelRealization,
    PathComponent,
    array_response,
    awgn,
    channel_matrix,
    dft_matrix,
    evolve,
    sample_channel,
    virtual_channel,
)
from .experiments import (
    ConfigError,
    ExperimentConfig,
    ResultRow,
    ResultTable,
    load_config,
    parse_config,
    read_csv,
    run_scenario,
    serialize_config,
    write_csv,
)
from .keygen import (
    BitString,
    CascadeParams,
    InsufficientSamplesError,
    KeyMaterial,
    QuantizerConfig,
    bar,
    cascade,
    extract_randomness,
    key_entropy_rate,
    privacy_amplify,
    quantize,
    xor_combine,
)
from .probing import Direction, EveConfig, ProbeRecord, bidirectional_probe, probe
from .schemes import (
    MultiresResult,
    SchemeResult,
    SessionConfig,
    baseline_channel_quant_session,
    estimate_channel,
    multires_session,
    secret_beam_session,
    virtual_angle_bits,
    virtual_angle_session,
)

__version__ = "0.1.0"
