"""Stacked-filters-stationary convolution with relative-indexed CSF weights."""
from .codec import (
    ColumnSequence,
    CsfBlock,
    CsfEntry,
    build_column_counts,
    decode,
    decode_layer,
    deserialize,
    encode,
    encode_layer,
    flatten_columns,
    serialize,
    unflatten_columns,
)
from .errors import (
    CorruptStream,
    DivisionError,
    EncodingError,
    FormatError,
    RangeError,
    SfsError,
    ShapeError,
)
from .flow import (
    FilterGroup,
    ReshapedGroup,
    concat_outputs,
    group_filters,
    reshape_group,
    sfs_conv,
    sfs_conv_group,
    unreshape_group,
)
from .sim import ArchConfig, LayerReport, SimCounters, aggregate, mac_counts, report, simulate_layer
from .stats import (
    BitOptResult,
    ZeroRunHistogram,
    batch_size_sweep,
    extra_space,
    nonzero_run_hist,
    optimize_bits,
    padding_count,
    zero_run_hist,
)
from .tensor import (
    FeatureMap,
    FilterBank,
    LayerSpec,
    QuantCodebook,
    dense_conv,
    dequantize,
    derive_dims,
)
from .tensorio import Tensor, load_codebook, load_tensor, save_codebook, save_tensor

__version__ = "0.1.0"
