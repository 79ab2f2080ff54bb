"""softstream: prototype-based soft streaming classification.

Classes are summarized as footprints (competitive-learning prototypes plus a
per-class scale); each incoming vector receives a possibilistic label vector
of per-class typicalities. High-typicality points incrementally update the
winning footprint; low-typicality points are buffered and mined for new
classes with sequential possibilistic one-means, relabeling retroactively.
"""

from .core import (
    OUTLIER,
    ClassFootprint,
    DimensionMismatchError,
    EmptyModelError,
    HyperParams,
    Model,
    ModelFormatError,
    ModelVersionError,
    Prototype,
    distance,
    k_nearest_prototypes,
    load_model,
    save_model,
)
from .datasets import (
    BenchmarkSpec,
    CsvFormatError,
    LabeledStream,
    gen_gaussian_class,
    gen_ring_class,
    load_features_csv,
    make_benchmark,
    shuffle_stream,
)
from .engine import (
    CLASSIFIED,
    NEW_CLASS_CREATED,
    OUTLIER_BUFFERED,
    OutlierBuffer,
    StreamEngine,
    StreamOutput,
    UpdateStrategy,
    initialize,
    probe_typicalities,
    update_footprint_knn,
)
from .evaluation import (
    LabelAlignment,
    align_labels,
    confident_precision,
    precision,
    probe_series,
    summarize_run,
)
from .neural_gas import NgSchedule, ng_adapt_step, representation_error, train_ng
from .possibilistic import (
    class_typicalities,
    estimate_eta,
    pcm_typicality,
    pknn_reference_weight,
    prototype_fuzzy_membership,
    scale_typicality,
)
from .sp1m import P1mResult, coincidence_check, p1m, seed_sampling, seed_weights, sp1m

__version__ = "0.1.0"
