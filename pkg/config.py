import os

from dotenv import load_dotenv
from pydantic_settings import BaseSettings

load_dotenv()


class Settings(BaseSettings):
    # Application Configuration
    debug: bool = os.getenv("DEBUG", "False").lower() == "true"
    log_level: str = os.getenv("LOG_LEVEL", "INFO")

    # Reproducibility
    default_seed: int = int(os.getenv("DLGLM_SEED", "2024"))

    # Execution
    threads: int = int(os.getenv("DLGLM_THREADS", "1"))
    output_dir: str = os.getenv("DLGLM_OUTPUT_DIR", "results")

    # Importance sampling
    k_train: int = int(os.getenv("DLGLM_K_TRAIN", "5"))
    k_eval: int = int(os.getenv("DLGLM_K_EVAL", "500"))
    impute_chunk_size: int = int(os.getenv("DLGLM_IMPUTE_CHUNK_SIZE", "256"))

    class Config:
        env_file = ".env"


settings = Settings()
