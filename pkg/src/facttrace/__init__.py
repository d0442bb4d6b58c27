"""facttrace: multilingual factual recall dynamics over pretraining checkpoints."""

__version__ = "0.1.0"

from .corpus import (
    CooccurrenceQuery,
    Document,
    FrequencyTable,
    compile_patterns,
    count_cooccurrences,
    merge_tables,
)
from .correlation import BinnedCurve, bin_curve, pearson_log_recall
from .errors import FactTraceError
from .evaluation import (
    CorrectnessMatrix,
    PredictionRecord,
    accuracy,
    build_correctness,
    consistency,
    consistency_matrix,
    judge_correct,
)
from .facts import (
    ExclusionReport,
    Fact,
    MultilingualFactSet,
    exclude_identical,
    identical_object_flags,
    load_facts,
    relation_histogram,
    save_facts,
)
from .similarity import EmbeddingManifest, cosine, mean_pair_similarity, similarity_trajectories
from .threshold import (
    BootstrapSummary,
    ClassifierResult,
    LabeledFrequency,
    bootstrap,
    classify,
    confusion_at,
    optimal_threshold,
    sensitivity_sweep,
    set_overlap,
)
