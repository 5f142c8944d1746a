"""Deterministic handover simulation and sequence-to-sequence prediction.

The package splits into a radio/mobility simulator that produces
mobility-history traces, a dataset layer that windows those traces into
supervised examples, a from-scratch recurrent predictor, and an
experiment harness with a CLI.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    CacheError,
    EmptyDatasetError,
    EmptyDeployment,
    HoseqError,
    InvalidArea,
    ParseError,
    ShapeError,
    SplitError,
    TaskMismatchError,
    UsageError,
    VocabularyError,
)
from .radio import (  # noqa: F401
    AreaConfig,
    BaseStation,
    Deployment,
    RadioConfig,
    best_cell,
    cell_powers,
    generate_deployment,
    load_deployment,
    path_loss,
    rsrp,
    save_deployment,
    sector_gain,
)
from .mobility import (  # noqa: F401
    A3Config,
    MobilityConfig,
    MobilityTrace,
    UeState,
    evaluate_a3,
    read_traces_csv,
    run_simulation,
    run_simulation_logged,
    step_ue,
    write_traces_csv,
)
from .dataset import (  # noqa: F401
    BeamTraceFile,
    Dataset,
    TaskKind,
    TaskSpec,
    Window,
    build_dataset,
    build_windows,
    encode_dataset,
    encode_features,
    ingest_beam_trace,
    read_beam_log_csv,
    scale_dwell,
    split_dataset,
    synth_beam_traces,
    unscale_dwell,
    write_beam_log_csv,
    write_dataset_meta,
)
from .seq2seq import (  # noqa: F401
    AdamState,
    Metrics,
    RnnModel,
    TrainConfig,
    TrainResult,
    adam_update,
    backward,
    evaluate,
    forward,
    init_adam,
    init_model,
    load_model,
    loss_cce,
    loss_mae,
    model_params,
    model_with_params,
    predict_sequence,
    save_model,
    train,
)
