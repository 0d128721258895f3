from jointee.config.experiment import (  # noqa: F401
    ExperimentConfig,
    ModelConfig,
    TrainConfig,
    load_experiment_config,
)
