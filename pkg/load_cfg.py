# load_cfg.py
# This file contains configuration settings for the CortexForge application.

import os
from dotenv import load_dotenv
# Load environment variables
load_dotenv()

WORKING_DIRECTORY = os.getenv('WORKING_DIRECTORY', './work/')
LOG_DIRECTORY = os.getenv('LOG_DIRECTORY', WORKING_DIRECTORY)

# --- Backend Configuration ---
CORTEXC_BACKEND = os.getenv('CORTEXC_BACKEND', 'mock').lower()
CORTEXC_ENDPOINT = os.getenv('CORTEXC_ENDPOINT', '')
CORTEXC_MODEL = os.getenv('CORTEXC_MODEL', 'mock-cortex')
CORTEXC_TIMEOUT_MS = int(os.getenv('CORTEXC_TIMEOUT_MS', '60000'))
CORTEXC_MOCK_LATENCY_MS = float(os.getenv('CORTEXC_MOCK_LATENCY_MS', '100'))
CORTEXC_SEED = int(os.getenv('CORTEXC_SEED', '0'))

# --- Orchestrator Defaults ---
CORTEXC_CONCURRENCY = int(os.getenv('CORTEXC_CONCURRENCY', '4'))
CORTEXC_MAX_ATTEMPTS = int(os.getenv('CORTEXC_MAX_ATTEMPTS', '3'))
CORTEXC_EMA_ALPHA = float(os.getenv('CORTEXC_EMA_ALPHA', '0.2'))
# agent_id:Role:capacity, comma separated. One Orchestrator agent runs the integrate task.
CORTEXC_AGENT_POOL = os.getenv(
    'CORTEXC_AGENT_POOL',
    'toa:Orchestrator:1,pfc:Prefrontal:1,par:Parietal:1,tmp:Temporal:1,mot1:Motor:1,mot2:Motor:1,mono:Monolith:1',
)


def get_api_key() -> str | None:
    """
    The bearer token for the http backend. It is only ever read from the
    environment (or a .env file loaded above), never from config files.
    """
    return os.getenv('CORTEXC_API_KEY') or None


def get_backend_config(kind: str | None = None, endpoint_url: str | None = None, model_name: str | None = None,
                       seed: int | None = None, timeout_ms: int | None = None,
                       mock_latency_ms: float | None = None, failure_plan: dict | None = None):
    """
    Builds the generation backend configuration, falling back to the
    environment for any argument left as None.

    This function acts as a factory for backend providers.

    Supported kinds:
    - 'mock': Deterministic, seeded template output with simulated latency.
    - 'http': A chat-completion endpoint. Requires an endpoint URL.

    Raises:
        ConfigError: If the kind is not supported or if required settings for it are missing.
    """
    from agents.backends import BackendConfig, BackendKind
    from core.exceptions import ConfigError

    kind = (kind or CORTEXC_BACKEND).lower()
    try:
        backend_kind = BackendKind(kind)
    except ValueError:
        raise ConfigError(f"Unsupported backend: '{kind}'. Please use 'mock' or 'http'.")

    return BackendConfig(
        kind=backend_kind,
        endpoint_url=endpoint_url if endpoint_url is not None else CORTEXC_ENDPOINT,
        model_name=model_name or CORTEXC_MODEL,
        timeout_ms=timeout_ms if timeout_ms is not None else CORTEXC_TIMEOUT_MS,
        seed=seed if seed is not None else CORTEXC_SEED,
        failure_plan=dict(failure_plan or {}),
        mock_latency_ms=mock_latency_ms if mock_latency_ms is not None else CORTEXC_MOCK_LATENCY_MS,
    )
