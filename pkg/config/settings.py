import os
from pathlib import Path
from dotenv import load_dotenv

load_dotenv()


def _env_flag(name: str, default: str) -> bool:
    return os.getenv(name, default).strip().lower() in ('1', 'true', 'yes', 'on')


class Settings:
    # Storage Configuration
    PROJECT_ROOT = Path(__file__).parent.parent
    DATA_DIR = Path(os.getenv('ISOGENY_RADICAL_DATA_DIR', str(PROJECT_ROOT / 'data')))
    CACHE_DIR = Path(os.getenv('ISOGENY_RADICAL_CACHE_DIR', str(DATA_DIR / 'cache')))
    LOG_DIR = DATA_DIR / 'logs'

    # Logging
    LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO')
    LOG_TO_FILE = _env_flag('LOG_TO_FILE', 'true')

    # Resource caps
    ENUMERATION_CAP = int(os.getenv('ENUMERATION_CAP', '1000000'))
    EXHAUSTIVE_PAIR_CAP = int(os.getenv('EXHAUSTIVE_PAIR_CAP', '10000000'))
    COUNT_P_CAP = int(os.getenv('COUNT_P_CAP', '1000000'))

    # Criterion bounds
    DEFAULT_P_MAX = int(os.getenv('DEFAULT_P_MAX', '1000'))
    DEFAULT_LAMBDA = os.getenv('DEFAULT_LAMBDA', '3,5,7,11,13')

    # Sampling
    DEFAULT_TRIALS = int(os.getenv('DEFAULT_TRIALS', '100000'))
    WORD_LENGTH = int(os.getenv('WORD_LENGTH', '64'))
    DEFAULT_SEED = int(os.getenv('DEFAULT_SEED', '0'))
    DEFAULT_JOBS = int(os.getenv('DEFAULT_JOBS', '1'))

    @property
    def count_cache_file(self) -> Path:
        """Default location of the point-count cache"""
        return self.CACHE_DIR / 'counts.txt'

    def ensure_directories(self):
        """Create necessary directories if they don't exist"""
        self.DATA_DIR.mkdir(parents=True, exist_ok=True)
        self.CACHE_DIR.mkdir(parents=True, exist_ok=True)
        if self.LOG_TO_FILE:
            self.LOG_DIR.mkdir(parents=True, exist_ok=True)


settings = Settings()
