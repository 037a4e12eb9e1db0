import os
from dotenv import load_dotenv

load_dotenv()

# ------------------------------------------------------------------
# Environment defaults (CLI flags take precedence)
# ------------------------------------------------------------------
OUTPUT_DIR = os.getenv("PCM_HEMS_OUTPUT_DIR", "results")
DATA_DIR = os.getenv("PCM_HEMS_DATA_DIR", "data")
SURROGATE_DIR = os.getenv("PCM_HEMS_SURROGATE_DIR", "models")
WORKERS = int(os.getenv("PCM_HEMS_WORKERS", "1"))
LOG_LEVEL = os.getenv("PCM_HEMS_LOG_LEVEL", "INFO")
SEED = int(os.getenv("PCM_HEMS_SEED", "2019"))

# Half-hourly resolution throughout
SLOT_SECONDS = 1800
SLOTS_PER_DAY = 24 * 3600 // SLOT_SECONDS
