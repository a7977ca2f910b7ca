"""Prompt-based multilingual relation classification toolkit."""

from .corpus import (
    Dataset,
    LanguageProfile,
    RCExample,
    group_of,
    language_stats,
    load_corpus,
    save_corpus,
)
from .prompt import PromptInstance, PromptVariant, max_target_length, render, render_sov
from .verbalizer import VerbalizerSet, VerbalizerTable, length_stats, verbalize, verbalize_en
from .backend import LogitMatrix, TableBackend, TrainConfig
from .classifier import (
    ScoreTable,
    entity_marker_classify,
    predict,
    random_baseline_micro_f1,
    score_relations,
)
from .metrics import EvalReport, group_average, macro_average, micro_f1, run_stats
from .experiment import (
    DEFAULT_SEEDS,
    DEFAULT_SHOTS,
    Episode,
    RunSpec,
    make_validation,
    run_cross_lingual_transfer,
    run_few_shot,
    run_fully_supervised,
    run_zero_shot_incontext,
    sample_k_shot,
)

__version__ = "0.1.0"
