import os


def env(name: str, default: str | None = None) -> str | None:
    val = os.getenv(name)
    if val is None or val == "":
        return default
    return val


def env_int(name: str, default: int = 0) -> int:
    raw = env(name, None)
    if raw is None:
        return default
    try:
        return int(raw)
    except Exception:
        return default


def default_seed() -> int:
    # read at call time so tests and the CLI can set FFADE_SEED late
    return env_int("FFADE_SEED", 0)


LOG_LEVEL = env("FFADE_LOG_LEVEL", "INFO") or "INFO"

# --- defaults (DARPA row: per-minute granularity) ---
DEFAULT_ALPHA = 0.999
DEFAULT_MEM_LIMIT = 200
DEFAULT_DIM = 100
DEFAULT_F_TH = 16.7e-3
DEFAULT_W_UPD = 60

# --- optimizer ---
DEFAULT_EPOCHS = 10
DEFAULT_STEP_SIZE = 0.01
DEFAULT_BATCH_POS = 1024
DEFAULT_BATCH_OUTSIDE = 256
DEFAULT_NEG_PER_NODE = 5
DEFAULT_CLIP_NORM = 5.0

# --- evaluation harness ---
SETUP_FRACTION = 0.1
WEEK_MINUTES = 10080
EXPECTED_DARPA_AUC = (0.92, 0.02)
