"""pfirec: personalized first-issue ranking toolkit.

Given a newcomer's public contribution history and the open issues of a
project they have never contributed to, compute pair features, train a
LambdaMART ranker, and evaluate it under a longitudinal sliding-window
protocol.
"""

from .corpus import (
    CandidateList,
    Corpus,
    DeveloperProfile,
    IssueRecord,
    PlantedSignal,
    ProjectRecord,
    build_candidate_lists,
    generate_synthetic_corpus,
    load_corpus,
    write_corpus,
)
from .evaluation import (
    EvalReport,
    ExperimentConfig,
    ablation,
    chronological_folds,
    cross_project,
    first_hit,
    recall_at_k,
    run_experiment,
    sliding_windows,
)
from .features import FeatureExtractor, FeatureRegistry, build_registry, featurize_lists
from .ltr import (
    RankingModel,
    TrainConfig,
    load_model,
    predict,
    rank,
    save_model,
    train_lambdamart,
    train_pointwise_gbt,
)
from .simtext import EmbeddingStore, cosine, jaccard, load_embeddings
from .textprep import TokenSet, extract_plain_text, normalize

__version__ = "0.1.0"
