"""
Runtime settings resolved from the environment.
A .env file is honoured when the CLI calls load_dotenv() before import.
"""

import os

# Logging
LOG_LEVEL: str = os.getenv("JOINTEE_LOG_LEVEL", "INFO").upper()

# Reproducibility / scheduling
DEFAULT_SEED: int = int(os.getenv("JOINTEE_SEED", "13"))
DEFAULT_EPOCHS: int = int(os.getenv("JOINTEE_EPOCHS", "50"))
EVAL_WORKERS: int = int(os.getenv("JOINTEE_WORKERS", "1"))

# Checkpoint container version written by this build
CHECKPOINT_FORMAT: int = int(os.getenv("JOINTEE_CHECKPOINT_FORMAT", "1"))


def get_runtime_config() -> dict:
    """
    Return the resolved runtime settings as a plain dict.
    """
    return {
        "log_level": LOG_LEVEL,
        "seed": DEFAULT_SEED,
        "epochs": DEFAULT_EPOCHS,
        "workers": EVAL_WORKERS,
        "checkpoint_format": CHECKPOINT_FORMAT,
    }


if __name__ == "__main__":
    # Debug: print resolved configuration
    for key, value in get_runtime_config().items():
        print(f"{key}: {value}")
