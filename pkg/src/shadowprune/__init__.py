"""shadowprune: rate tree pruning quality from canopy shadow photos.

Pipeline: grayscale -> Otsu threshold -> optional patch pooling -> two
features (black pixel rate, grid uniformity) -> min-max scaling -> SVM.
"""

from .errors import (
    ConstantFeature,
    CorruptModel,
    DataError,
    DegenerateHistogram,
    DimensionMismatch,
    DuplicatePhotoId,
    EmptyImage,
    EmptyList,
    ImageTooSmall,
    InsufficientData,
    InvalidConfig,
    InvalidLabel,
    IoError,
    LabelConflict,
    MalformedFile,
    MissingImage,
    NonConvergence,
    NumericError,
    SchemaVersionMismatch,
    ShadowPruneError,
    SingleClassData,
    UnsupportedFormat,
)
from .features import (
    FeatureVector,
    GridConfig,
    NormalizedFeatureVector,
    Normalizer,
    apply_normalizer,
    black_pixel_rate,
    extract_features,
    fit_normalizer,
    grid_white_counts,
    uniformity,
)
from .imgcore import (
    BinaryImage,
    GrayImage,
    RgbImage,
    decode_image,
    encode_pgm,
    encode_ppm,
    load_image,
    save_pgm,
    to_gray,
)
from .pipeline import (
    EvalReport,
    SamplePoint,
    SplitSpec,
    TreeRecord,
    extract_dataset,
    extract_tree_features,
    ingest,
    run_experiment,
    split,
)
from .pooling import PoolConfig, pool
from .svm import (
    SvmModel,
    TrainConfig,
    TrainingSet,
    decision_value,
    load_model,
    predict,
    save_model,
    support_vectors,
    train,
)
from .synth import SynthConfig, generate, generate_dataset
from .threshold import (
    Histogram,
    OtsuResult,
    auto_binarize,
    binarize,
    histogram,
    otsu_threshold,
)

__version__ = "0.1.0"
