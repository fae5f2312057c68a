from __future__ import annotations

import csv
import io
import json
import sys

from pathlib import Path
from typing import Any, Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from numpy.typing import NDArray

from .enum import OutputFormat
from .exceptions import InvalidArgumentError
from .forkjoin import TrajectoryBatch
from .scaling import ScalingConstants

__all__ = [
    'SCHEMA_VERSION',
    'format_real',
    'write_trajectories', 'write_samples', 'write_table',
    'ValueSelection', 'read_selection', 'read_values'
]

SCHEMA_VERSION = 1


def format_real(value: Any) -> str:
    """17 significant digits, enough for an exact double round trip."""

    if isinstance(value, (bool, str)) or value is None:
        return str(value)

    if isinstance(value, (int, np.integer)):
        return str(int(value))

    return f'{float(value):.17g}'


def _emit(text: str, path: str | Path) -> None:
    if str(path) == '-':
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        Path(path).write_text(text, newline='')


def _csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')

    writer.writerow(header)
    writer.writerows([format_real(v) for v in row] for row in rows)

    return buffer.getvalue()


def _json(kind: str, metadata: Mapping[str, Any], **payload: Any) -> str:
    return json.dumps(
        {'schema_version': SCHEMA_VERSION, 'kind': kind, 'metadata': dict(metadata), **payload}, indent=1
    ) + '\n'


def _scaling_dict(scaling: ScalingConstants | None) -> dict[str, Any] | None:
    if scaling is None:
        return None

    return {
        'n_servers': scaling.n_servers, 'b_n': scaling.b_n, 'c_n': scaling.c_n,
        'residual': scaling.residual, 'iterations': scaling.iterations
    }


def write_trajectories(batch: TrajectoryBatch, path: str | Path, fmt: OutputFormat | str = OutputFormat.CSV) -> None:
    """
    CSV columns ``replication,t,value``, one row per replication and grid time.
    JSON holds the grid, the value matrix and the metadata (params, scaling, seed).
    """

    if OutputFormat.from_param(fmt) is OutputFormat.JSON:
        metadata = {**batch.metadata, 'seed': batch.seed, 'scaling': _scaling_dict(batch.scaling)}
        _emit(_json('trajectories', metadata, grid=batch.grid.tolist(), values=batch.values.tolist()), path)
        return

    rows = (
        (r, t, v) for r in range(batch.replications) for t, v in zip(batch.grid, batch.values[r])
    )

    _emit(_csv(('replication', 't', 'value'), rows), path)


def write_samples(
    series: Mapping[str, NDArray[np.float64]], path: str | Path, fmt: OutputFormat | str = OutputFormat.CSV,
    metadata: Mapping[str, Any] | None = None
) -> None:
    """CSV columns ``series,index,value``; JSON maps each series name to its values."""

    if OutputFormat.from_param(fmt) is OutputFormat.JSON:
        payload = {name: np.asarray(values).tolist() for name, values in series.items()}
        _emit(_json('samples', metadata or {}, series=payload), path)
        return

    rows = ((name, i, v) for name, values in series.items() for i, v in enumerate(values))

    _emit(_csv(('series', 'index', 'value'), rows), path)


def write_table(
    rows: Sequence[Mapping[str, Any]], path: str | Path, fmt: OutputFormat | str = OutputFormat.CSV,
    metadata: Mapping[str, Any] | None = None
) -> None:
    if not rows:
        raise InvalidArgumentError('Nothing to write!', write_table)

    if OutputFormat.from_param(fmt) is OutputFormat.JSON:
        _emit(_json('table', metadata or {}, rows=[dict(row) for row in rows]), path)
        return

    header = list(rows[0])

    _emit(_csv(header, ([row[k] for k in header] for row in rows)), path)


class ValueSelection(NamedTuple):
    values: NDArray[np.float64]
    t: float | None
    """grid time the rows were taken at, None for sample files"""
    series: str | None


def read_selection(path: str | Path, t: float | None = None, series: str | None = None) -> ValueSelection:
    """
    Read the ``value`` column of a CSV written by this module, along with what was selected.

    :param t:           For trajectory files, the grid time to select; defaults to the last one.
    :param series:      For sample files, the series to select; defaults to the first one.
    """

    try:
        with open(path, newline='') as f:
            records = list(csv.DictReader(f))
    except OSError as e:
        raise InvalidArgumentError('Cannot read "{path}": {err}', read_selection, path=path, err=e) from None

    if not records or 'value' not in records[0]:
        raise InvalidArgumentError('"{path}" has no "value" column!', read_selection, path=path)

    selected_t, selected_series = None, None

    if 't' in records[0]:
        times = np.array([float(r['t']) for r in records])
        target = float(times.max()) if t is None else t
        hits = np.abs(times - target) <= 1e-9 * max(1.0, abs(target))
        records = [r for r, hit in zip(records, hits) if hit]
        selected_t = float(times[hits][0]) if hits.any() else target
    elif 'series' in records[0]:
        selected_series = records[0]['series'] if series is None else series
        records = [r for r in records if r['series'] == selected_series]

    if not records:
        raise InvalidArgumentError('No rows selected from "{path}"!', read_selection, (t, series), path=path)

    return ValueSelection(np.array([float(r['value']) for r in records], dtype=np.float64), selected_t, selected_series)


def read_values(path: str | Path, t: float | None = None, series: str | None = None) -> NDArray[np.float64]:
    return read_selection(path, t, series).values
