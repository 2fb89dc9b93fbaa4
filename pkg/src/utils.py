"""
Utility functions for logging and common operations.
"""

import logging
import re
import sys
from datetime import datetime
from typing import Any, Dict, List, Optional

import numpy as np

from config.settings import settings
from src.modmath import PrimeModulus, as_modulus


def setup_logging(level: Optional[str] = None):
    """Configure logging for the application"""
    level_name = (level or settings.LOG_LEVEL).upper()

    # Create formatters
    detailed_formatter = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - [%(filename)s:%(lineno)d] - %(message)s'
    )
    simple_formatter = logging.Formatter(
        '%(asctime)s - %(levelname)s - %(message)s'
    )

    # Configure root logger
    root_logger = logging.getLogger()
    root_logger.setLevel(getattr(logging, level_name))

    # Remove existing handlers to avoid duplicates
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    log_file = None
    if settings.LOG_TO_FILE:
        settings.LOG_DIR.mkdir(parents=True, exist_ok=True)
        log_file = settings.LOG_DIR / f"isogeny_radical_{datetime.now().strftime('%Y%m%d')}.log"
        file_handler = logging.FileHandler(log_file, encoding='utf-8')
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(detailed_formatter)
        root_logger.addHandler(file_handler)

    # Console on stderr; stdout carries reports only
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(getattr(logging, level_name))
    console_handler.setFormatter(simple_formatter)
    root_logger.addHandler(console_handler)

    logger = logging.getLogger(__name__)
    logger.debug(f"Logging configured - Level: {level_name}, Log file: {log_file}")


def parse_lambda_set(text: str) -> List[PrimeModulus]:
    """Parse a comma-separated list of odd primes such as '3,5,7'"""
    if not text or not re.match(r'^\s*\d+(\s*,\s*\d+)*\s*$', text):
        raise ValueError(f"expected a comma-separated list of primes, got {text!r}")
    primes = sorted({int(token) for token in text.split(',')})
    result = []
    for value in primes:
        modulus = as_modulus(value)
        if modulus.value == 2:
            raise ValueError("ell = 2 is excluded from the lambda set")
        result.append(modulus)
    return result


def format_lambda_set(primes) -> str:
    return ','.join(str(int(p)) for p in primes)


def format_matrix(matrix) -> str:
    """Single-line rendering: [[a,b],[c,d]]"""
    rows = np.asarray(matrix)
    return '[' + ','.join('[' + ','.join(str(int(v)) for v in row) + ']' for row in rows) + ']'


def format_fraction(value) -> str:
    """Exact rational as 'a/b', or the integer when the denominator is 1"""
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def format_rate(value: float) -> str:
    return f"{value:.6f}"


def log_performance_metrics(func_name: str, start_time: datetime, end_time: datetime,
                            additional_info: Dict[str, Any] = None):
    """Log performance metrics for operations"""
    logger = logging.getLogger(__name__)

    duration = (end_time - start_time).total_seconds()

    metrics = {
        'function': func_name,
        'duration_seconds': round(duration, 3),
        'start_time': start_time.isoformat(),
        'end_time': end_time.isoformat()
    }

    if additional_info:
        metrics.update(additional_info)

    logger.info(f"Performance: {func_name} completed in {duration:.3f}s", extra={'metrics': metrics})
    return duration


class ProgressTracker:
    """Progress logging for long scans; reports every `every` updates"""

    def __init__(self, total: int, description: str = "Processing", every: int = 1000):
        self.total = total
        self.current = 0
        self.description = description
        self.every = max(1, every)
        self.logger = logging.getLogger(__name__)
        self.start_time = datetime.now()

    def update(self, increment: int = 1):
        """Update progress"""
        before = self.current // self.every
        self.current += increment
        if self.total > 0 and self.current // self.every != before:
            percentage = (self.current / self.total) * 100
            self.logger.debug(f"{self.description}: {self.current}/{self.total} ({percentage:.1f}%)")

    def finish(self):
        """Mark as finished"""
        duration = (datetime.now() - self.start_time).total_seconds()
        self.logger.info(f"{self.description} completed: {self.current}/{self.total} in {duration:.2f}s")
