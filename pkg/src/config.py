import os
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()


def _env_int(name: str, default: int) -> int:
    value = os.getenv(name)
    if value is None or value.strip() == "":
        return default
    return int(float(value))


# Storage
CACHE_DIR = os.getenv("SIGNLAB_CACHE_DIR", os.path.join(os.getcwd(), ".signlab_cache"))

# Capacity ceilings
SIEVE_CEILING = _env_int("SIGNLAB_SIEVE_CEILING", 10**8)
LEVEL1_CAPACITY = _env_int("SIGNLAB_LEVEL1_CAPACITY", 1_000_000)
WEIGHT2_CAPACITY = _env_int("SIGNLAB_WEIGHT2_CAPACITY", 4_000_000)
SEGMENT_SIZE = _env_int("SIGNLAB_SEGMENT_SIZE", 1 << 18)

# Application Settings
LOG_LEVEL = os.getenv("SIGNLAB_LOG_LEVEL", "INFO").upper()
SHOW_PROGRESS = os.getenv("SIGNLAB_PROGRESS", "false").lower() == "true"
DEFAULT_THREADS = _env_int("SIGNLAB_THREADS", 1)
