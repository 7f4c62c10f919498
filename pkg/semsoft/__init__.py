"""
semsoft - semantic softmax pretraining at desk scale: taxonomy label expansion,
hierarchical losses, semantic knowledge distillation and a toy trainer.
"""

from semsoft.dataset_prep import filter_infrequent, load_manifest, make_val_split, squish_resize
from semsoft.losses import (
    compute_hierarchy_weights,
    multi_label_binary_loss,
    regular_kd_loss,
    semantic_kd_loss,
    semantic_softmax_loss,
    single_label_ce,
)
from semsoft.models import RunConfig, SemanticLabel, Taxonomy, TrainConfig
from semsoft.taxonomy import expand_label, load_taxonomy_tsv, parse_taxonomy
from semsoft.toy_model import ToyModel
from semsoft.trainer import compare_schemes, train

__version__ = "0.1.0"
__all__ = [
    "RunConfig",
    "SemanticLabel",
    "Taxonomy",
    "ToyModel",
    "TrainConfig",
    "compare_schemes",
    "compute_hierarchy_weights",
    "expand_label",
    "filter_infrequent",
    "load_manifest",
    "load_taxonomy_tsv",
    "make_val_split",
    "multi_label_binary_loss",
    "parse_taxonomy",
    "regular_kd_loss",
    "semantic_kd_loss",
    "semantic_softmax_loss",
    "single_label_ce",
    "squish_resize",
    "train",
]
