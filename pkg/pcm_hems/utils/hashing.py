import hashlib
import json
from pathlib import Path

import numpy as np


def hash_payload(payload: dict) -> str:
    """Stable digest of a JSON-serialisable mapping (key order independent)."""
    body = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(body.encode()).hexdigest()


def hash_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def hash_arrays(*arrays: np.ndarray) -> str:
    """Digest of the exact float64 bytes of one or more series."""
    digest = hashlib.sha256()
    for arr in arrays:
        digest.update(np.ascontiguousarray(arr, dtype=np.float64).tobytes())
    return digest.hexdigest()
