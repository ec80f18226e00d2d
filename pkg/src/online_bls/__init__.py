"""Online broad learning system with closed-form per-sample updates."""
from .adaptive import AdaptiveOnlineBLS
from .baselines import BLSCIL, IBLS, RIBLS
from .datasets import (
    HyperplaneParams,
    SEAParams,
    Stream,
    StreamSpec,
    dataset_spec,
    hyperplane_stream,
    load_csv,
    load_stream,
    sea_stream,
)
from .features import BroadMapper, new_mapper
from .harness import TrialConfig, compare_models, run_experiment, run_trial
from .metrics import ConfusionMatrix, avrbacc
from .online import OnlineBLS, load_snapshot

__version__ = "0.1.0"
