"""Document-structure graphs, probing tasks, structure-infused linearization,
and the probing/evaluation toolkit built on top of them."""

from .errors import (
    ConfigError,
    DocstructError,
    IntegrityError,
    NotApplicableError,
    UndefinedStatisticError,
    UnknownNodeError,
    ValidationError,
)
from .graph import DocumentGraph, GraphBuilder, Node, SiblingSet

__version__ = "0.1.0"

from .bundles import ReprBundle, load_bundle, save_bundle  # noqa: E402
from .denoise import CorruptionSpec, corrupt, reconstruct  # noqa: E402
from .infusion import (  # noqa: E402
    InfusionConfig,
    LinearizedDocument,
    linearize,
    parse_config,
    prepend_task_prefix,
    strip_infusion,
)
from .metrics import answer_f1, evidence_f1, macro_f1  # noqa: E402
from .probe import (  # noqa: E402
    ProbeModel,
    TrainSpec,
    eval_probe,
    layer_utilization,
    scalar_mix,
    span_repr,
    train_probe,
)
from .probegen import (  # noqa: E402
    ProbeDataset,
    ProbeInstance,
    TASKS,
    generate_datasets,
)
from .stats import correlate_grid, pearson  # noqa: E402
from .toyencode import toy_encode  # noqa: E402

__all__ = [
    "ConfigError",
    "CorruptionSpec",
    "DocstructError",
    "DocumentGraph",
    "GraphBuilder",
    "InfusionConfig",
    "IntegrityError",
    "LinearizedDocument",
    "Node",
    "NotApplicableError",
    "ProbeDataset",
    "ProbeInstance",
    "ProbeModel",
    "ReprBundle",
    "SiblingSet",
    "TASKS",
    "TrainSpec",
    "UndefinedStatisticError",
    "UnknownNodeError",
    "ValidationError",
    "__version__",
    "answer_f1",
    "correlate_grid",
    "corrupt",
    "eval_probe",
    "evidence_f1",
    "generate_datasets",
    "layer_utilization",
    "linearize",
    "load_bundle",
    "macro_f1",
    "parse_config",
    "pearson",
    "prepend_task_prefix",
    "reconstruct",
    "save_bundle",
    "scalar_mix",
    "span_repr",
    "strip_infusion",
    "toy_encode",
    "train_probe",
]
