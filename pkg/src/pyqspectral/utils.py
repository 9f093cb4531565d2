import csv
import hashlib
import io
import json
import logging
import os
from collections.abc import Iterable, Sequence
from typing import Any

import numpy as np

logger = logging.getLogger(__name__)

# Seventeen significant digits reproduce a double exactly.
NUMBER_FORMAT = "{:.16e}"


def format_number(value: float) -> str:
    return NUMBER_FORMAT.format(float(value))


def atomic_write_text(path: str, text: str) -> None:
    """
    Writes text to a file through a temporary sibling, then renames it in place.

    Readers never observe a half written artifact: either the previous file
    or the complete new one exists at `path`.

    Args:
        path (str): Destination file.
        text (str): File contents.
    """
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    temp_path = path + ".tmp"

    try:
        with open(temp_path, "w", newline="") as f:
            f.write(text)

        os.replace(temp_path, path)
    except OSError:
        if os.path.exists(temp_path):
            os.remove(temp_path)

        raise


def atomic_write_json(path: str, data: Any) -> None:
    atomic_write_text(path, json.dumps(data, indent=4, default=_json_default) + "\n")


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    """
    Writes rows to a CSV file atomically.

    Floats are written with 17 significant digits in scientific notation so a
    rerun with the same inputs produces an identical file.
    """
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(value) for value in row])

    atomic_write_text(path, buffer.getvalue())
    logger.info(f"Wrote {path}")


def _cell(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_number(value)
    return str(value)


def _json_default(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, complex):
        return [value.real, value.imag]
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def digest(*arrays: np.ndarray, **scalars: Any) -> str:
    """Returns a stable SHA-256 hex digest of arrays and keyword scalars."""
    h = hashlib.sha256()
    for name in sorted(scalars):
        h.update(f"{name}={scalars[name]!r};".encode())
    for array in arrays:
        a = np.ascontiguousarray(array)
        h.update(str(a.dtype).encode())
        h.update(str(a.shape).encode())
        h.update(a.tobytes())
    return h.hexdigest()


def print_and_log(message: str, verbose: bool = False) -> None:
    """
    Logs a message and optionally echoes it to the console.

    Args:
        message (str): The message to record.
        verbose (bool): Also print the message when True.
    """
    logger.info(message)
    if verbose:
        print(message)
