"""Laboratory for signaling-game codes: training, reference codes, statistics."""

__version__ = "0.1.0"

from .freq import (
    CorpusLexicon,
    FrequencyModel,
    from_lexicon,
    lexicon_lengths,
    load_lexicon,
    power_law,
    sample_batch,
    save_lexicon,
    uniform,
)
from .codes import (
    EOS,
    Alphabet,
    CapacityError,
    Code,
    capacity_ratio,
    control_code,
    load_code_tsv,
    message_space_size,
    monkey_typing,
    mt_length_pmf,
    oc_length,
    optimal_code,
    save_code_tsv,
)
from .agents import (
    ListenerOutput,
    ListenerParams,
    SpeakerParams,
    SpeakerTrace,
    init_listener,
    init_speaker,
    listener_backward,
    listener_forward,
    load_checkpoint,
    save_checkpoint,
    speaker_backward,
    speaker_forward,
)
from .training import (
    AdamState,
    BaselineState,
    RunRecord,
    TrainConfig,
    adam_step,
    evaluate,
    load_run,
    save_run,
    surrogate_terms,
    train,
)
from .analysis import (
    DiscriminabilityResult,
    LengthProfile,
    RandTestResult,
    SymbolStats,
    analyze_code,
    length_curve,
    listener_discriminability,
    mean_length,
    randomization_test,
    repetition_check,
    strip_repetitions,
    symbol_stats,
    uniform_reference_entropy,
    untrained_speaker_probe,
    welch_t_test,
)
from .sweep import AggregateReport, SweepSpec, make_plots, run_sweep, table_a1

__all__ = [name for name in dir() if not name.startswith("_")]
