import os, json
from datetime import datetime, timezone
from typing import Any

import numpy as np

from . import settings

session_id = datetime.now(timezone.utc).strftime("%Y%m%d_%H%M%S")
SESSION_FILE = f"obsb_run_{session_id}.jsonl"


def jsonDefault(obj: Any) -> Any:
    """Make numpy scalars/arrays JSON-friendly."""
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return str(obj)


def logEvent(kind: str, data: dict, filename: str = SESSION_FILE) -> None:
    """
    Append one structured event to the run JSONL log.

    Args:
        kind (str): event family, e.g. "solver", "analysis", "battery_advisory".
        data (dict): payload; numpy values are converted on the fly.
        filename (str): file name inside LOG_RUNS (default = session file).
    """
    if not settings.LOG_ENABLED:
        return
    os.makedirs(settings.LOG_RUNS, exist_ok=True)
    ts = datetime.now(timezone.utc).isoformat()
    with open(os.path.join(settings.LOG_RUNS, filename), "a", encoding="utf-8") as f:
        f.write(json.dumps({
            "time": ts,
            "kind": kind,
            "data": data
        }, ensure_ascii=False, default=jsonDefault) + "\n")
