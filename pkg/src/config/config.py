import os
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()


class Config:
    """Process-level settings read from the environment"""

    # Logging Configuration
    LOG_LEVEL: str = os.getenv("FPP_LOG_LEVEL", "INFO")
    LOG_FORMAT: str = os.getenv("FPP_LOG_FORMAT", "json")

    # Execution
    WORKERS: int = int(os.getenv("FPP_WORKERS", "1"))
    CHUNK_SIZE: int = int(os.getenv("FPP_CHUNK_SIZE", "500"))

    # Paths
    OUTPUT_DIR: str = os.getenv("FPP_OUTPUT_DIR", "results")
    LIMITS_PATH: str = os.getenv("FPP_LIMITS_PATH", "config/limits.yaml")

    @classmethod
    def validate(cls):
        """Validate settings before a run starts"""
        problems = []
        if cls.LOG_LEVEL.upper() not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            problems.append(f"FPP_LOG_LEVEL={cls.LOG_LEVEL}")
        if cls.LOG_FORMAT.lower() not in {"json", "console"}:
            problems.append(f"FPP_LOG_FORMAT={cls.LOG_FORMAT}")
        if cls.WORKERS < 1:
            problems.append(f"FPP_WORKERS={cls.WORKERS}")
        if cls.CHUNK_SIZE < 1:
            problems.append(f"FPP_CHUNK_SIZE={cls.CHUNK_SIZE}")

        if problems:
            raise ValueError(f"Invalid environment settings: {', '.join(problems)}")
