"""
File and payload helpers shared by the engine.

- `convert_to_json_serializable` / `write_document`: persist run records,
  reports and artifacts that may hold numpy or pandas values.
- `retry_with_exponential_backoff`: retry decorator for transient transport errors.
- `extract_json_blocks`: pull JSON objects and arrays out of free-form model
  replies (prose, ```json fences, several blocks).
"""
import functools
import json
import logging
import os
import time
from typing import Any, Callable, List, Tuple, Type

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

_DECODER = json.JSONDecoder()


def convert_to_json_serializable(data: Any) -> Any:
    """Recursively converts numpy/pandas scalars, NaNs and str Enums to plain JSON values."""
    if isinstance(data, dict):
        return {convert_to_json_serializable(k): convert_to_json_serializable(v) for k, v in data.items()}
    if isinstance(data, (list, tuple)):
        return [convert_to_json_serializable(v) for v in data]
    if data is None or isinstance(data, (bool, str)):
        return data
    if isinstance(data, pd.Timestamp):
        return data.isoformat()
    if isinstance(data, np.integer):
        return int(data)
    if isinstance(data, (np.floating, float)):
        return None if pd.isna(data) else float(data)
    if isinstance(data, np.ndarray):
        return convert_to_json_serializable(data.tolist())
    if isinstance(getattr(data, "value", None), str):
        return data.value
    try:
        json.dumps(data)
    except (TypeError, OverflowError):
        return str(data)
    return data


def write_document(content: Any, path: str) -> str:
    """
    Writes `content` to `path`, creating parent directories. Strings are written
    verbatim; anything else is dumped as indented JSON.
    """
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        if isinstance(content, str):
            f.write(content)
        else:
            json.dump(convert_to_json_serializable(content), f, indent=2, ensure_ascii=False)
    return path


def retry_with_exponential_backoff(initial_delay: float = 0.5, exponential_base: float = 2.0, jitter: bool = True,
                                  max_retries: int = 1,
                                  errors: Tuple[Type[BaseException], ...] = (Exception,)) -> Callable:
    """
    Retries the wrapped call on `errors`, up to `max_retries` extra attempts,
    sleeping initial_delay * exponential_base**n between them (plus 0.1 s per
    retry when `jitter` is set). The last error is re-raised.
    """
    def decorator(func):
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            delay = initial_delay
            for attempt in range(max_retries + 1):
                try:
                    return func(*args, **kwargs)
                except errors as e:
                    if attempt == max_retries:
                        raise
                    pause = delay + (0.1 * (attempt + 1) if jitter else 0.0)
                    logger.warning(f"Retrying {func.__name__} in {pause:.2f}s (retry {attempt + 1}/{max_retries}) "
                                   f"after {type(e).__name__}: {str(e)[:150]}")
                    time.sleep(pause)
                    delay *= exponential_base
        return wrapper
    return decorator


def remove_json_marker(text: str) -> str:
    """Strips a surrounding ```json ... ``` (or bare ```) fence, if any."""
    text = text.strip()
    for fence in ("```json\n", "```\n"):
        if text.startswith(fence):
            text = text[len(fence):]
            break
    if text.endswith("\n```"):
        text = text[:-4]
    return text.strip()


def extract_json_blocks(text: str) -> List[str]:
    """
    Returns the top-level JSON objects and arrays found in `text`, in order,
    as their source strings. Blocks nested inside a returned block are not
    reported separately; brackets that do not start valid JSON are skipped.
    """
    cleaned = remove_json_marker(text or "")
    try:
        json.loads(cleaned)
        if cleaned[:1] in ("{", "["):
            return [cleaned]
    except json.JSONDecodeError:
        pass

    blocks: List[str] = []
    i = 0
    while i < len(cleaned):
        if cleaned[i] not in "{[":
            i += 1
            continue
        try:
            _, end = _DECODER.raw_decode(cleaned, i)
        except json.JSONDecodeError:
            i += 1
            continue
        blocks.append(cleaned[i:end])
        i = end

    if not blocks:
        logger.debug(f"extract_json_blocks: no JSON block in text starting {cleaned[:100]!r}")
    return blocks
