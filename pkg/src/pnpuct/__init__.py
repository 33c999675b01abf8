"""Sidelobe-free pseudo-noise pulse-compression thermography toolkit."""

from .codes import (
    CODE_TABLE_VERSION,
    CodeKind,
    MlsSpec,
    Pacf,
    PnCode,
    ReferenceCode,
    ReferenceKind,
    acyclic_autocorrelation,
    binarize_ls4,
    code_from_text,
    code_to_text,
    generate_ls,
    generate_mls,
    golay_pair,
    load_code,
    modify_for_perfect_pacf,
    pacf,
    pacf_direct,
    pacf_values,
    perfect_bias,
    primitive_taps,
    reference_autocorrelation,
    reference_code,
    save_code,
)
from .compression import (
    CompressedTrace,
    Normalization,
    compress_stack,
    compress_trace,
    decimate_to_bit_rate,
    snr_metric,
)
from .dc_removal import (
    DcFit,
    design_matrix,
    export_fit_map_csv,
    fit_dc,
    remove_dc,
    remove_dc_stack,
)
from .errors import (
    AlreadyModified,
    BadMagic,
    BiasMismatch,
    DegenerateTrace,
    EmptyRegion,
    IndexOutOfRange,
    InvalidSeed,
    NonFiniteData,
    NonPositiveAmplitude,
    NonPrimitivePolynomial,
    NotLs4Compatible,
    NotPrime,
    PipelineStageError,
    PnPuctError,
    RateMismatch,
    ShapeMismatch,
    TimingMismatch,
    TooFewPeriods,
    TruncatedFile,
    UnmodifiedCode,
    UnsupportedLength,
)
from .pipeline import run_pipeline
from .stack import (
    FORMAT_VERSION,
    ThermogramStack,
    export_pixel_trace,
    export_slice,
    read_stack,
    write_stack,
)
from .thermal import (
    PixelModel,
    Region,
    SceneConfig,
    impulse_response,
    load_scene_config,
    lpt_reference,
    respond,
    simulate_stack,
)
from .waveform import (
    ExcitationWaveform,
    MatchedFilter,
    RectPulse,
    Timing,
    WaveformKind,
    build_bipolar,
    build_matched_filter,
    build_unipolar,
    cyclic_convolve,
    unipolar_components,
    verify_resolution,
    waveform_to_csv,
    waveform_to_stack,
)

__version__ = "0.1.0"
