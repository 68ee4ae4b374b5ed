"""preflearn: training utility models from totally or partially ordered data.

Objects (feature vectors) plus orders among them are flattened into pairwise
preferences, on which three learners can be trained: a kernelized ranking SVM,
a multilayer perceptron fit by pairwise backpropagation, and the same network
fit by generational neuroevolution.  Preprocessing, wrapper feature selection,
cross-validation and reporting are included, along with a CLI and a local
HTTP service driving the same pipeline.
"""

__version__ = "0.1.0"

from preflearn.dataset import (
    DataTable,
    FeatureSchema,
    OrderSet,
    ParserOptions,
    PreferenceSet,
    extract_pairs,
    parse_dual_file,
    parse_single_file,
)

__all__ = [
    "__version__",
    "DataTable",
    "FeatureSchema",
    "OrderSet",
    "ParserOptions",
    "PreferenceSet",
    "extract_pairs",
    "parse_dual_file",
    "parse_single_file",
]
