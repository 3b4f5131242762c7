"""
JSON and CSV output for every result type.

Result classes expose to_dict(); to_jsonable walks the result recursively and
turns Enums, numpy values, dataclasses and paths into plain JSON types.
Non-finite floats become null.
"""
import csv
import dataclasses
import json
import logging
import math
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from iterate import BoundLedger
from model import IterationTrace

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.17g'


def _float(value: float):
    value = float(value)
    return value if math.isfinite(value) else None


def to_jsonable(obj):
    """Recursively convert a result object to JSON-serializable types"""
    if obj is None or isinstance(obj, (str, bool)):
        return obj
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (int, np.integer)) and not isinstance(obj, np.bool_):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        return _float(obj)
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()] if obj.ndim else to_jsonable(obj.item())
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, dict):
        return {str(to_jsonable(key)): to_jsonable(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(item) for item in obj]
    if hasattr(obj, 'to_dict'):
        return to_jsonable(obj.to_dict())
    if dataclasses.is_dataclass(obj):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)
                if not callable(getattr(obj, f.name))}
    if hasattr(obj, '__dict__'):
        return {key: to_jsonable(value) for key, value in obj.__dict__.items()}
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), indent=2, ensure_ascii=False)


def write_json(path, obj) -> Path:
    path = Path(path)
    try:
        path.write_text(dumps(obj) + "\n", encoding='utf-8')
    except OSError as e:
        raise OSError(f"failed to write {path}: {e}") from e
    logger.info(f"wrote {path}")
    return path


def format_cell(value) -> str:
    if value is None:
        return ''
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT % value
    return str(value)


def write_rows_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    """Header plus rows, floats with 17 significant digits"""
    path = Path(path)
    try:
        with path.open('w', newline='', encoding='utf-8') as fh:
            writer = csv.writer(fh, lineterminator='\n')
            writer.writerow(header)
            for row in rows:
                writer.writerow([format_cell(v) for v in row])
    except OSError as e:
        raise OSError(f"failed to write {path}: {e}") from e
    logger.info(f"wrote {path}")
    return path


def trace_header(trace: IterationTrace, ledger: Optional[BoundLedger] = None) -> list:
    header = ['t'] + [f'x{i + 1}' for i in range(trace.d)] + ['residual']
    if trace.noise_applied is not None:
        header += [f'h{i + 1}' for i in range(trace.d)]
    if ledger is not None:
        header += ['err', 'apriori', 'aposteriori', 'onestep']
    return header


def trace_rows(trace: IterationTrace, ledger: Optional[BoundLedger] = None) -> list:
    """One row per step t = 0..T; the t = 0 residual, noise and bound cells are empty"""
    rows = []
    for t in range(trace.T + 1):
        row = [t] + [float(v) for v in trace.iterates[t]]
        row.append(float(trace.residuals[t - 1]) if t else None)
        if trace.noise_applied is not None:
            row += [float(v) for v in trace.noise_applied[t - 1]] if t else [None] * trace.d
        if ledger is not None:
            if t:
                rec = ledger.records[t - 1]
                row += [rec.err, rec.apriori, rec.aposteriori, rec.onestep]
            else:
                row += [float(np.max(np.abs(trace.iterates[0] - ledger.p))), None, None, None]
        rows.append(row)
    return rows


def write_trace_csv(path, trace: IterationTrace, ledger: Optional[BoundLedger] = None) -> Path:
    return write_rows_csv(path, trace_header(trace, ledger), trace_rows(trace, ledger))
