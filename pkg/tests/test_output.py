from __future__ import annotations

import json

from pathlib import Path

import numpy as np
import pytest

from fjlimit import (
    SCHEMA_VERSION, InvalidArgumentError, ScalingConstants, TrajectoryBatch, format_real, read_selection, read_values,
    write_samples, write_table, write_trajectories
)


@pytest.fixture
def batch() -> TrajectoryBatch:
    return TrajectoryBatch(
        np.array([0.0, 0.5, 1.0]), np.array([[0.0, 0.1, 0.3], [0.0, 0.2, 0.2]]), 4,
        ScalingConstants(16, 2.0, 4.0, 0.0, 1), {'process': 'max_wait'}
    )


class TestFormatReal:
    @pytest.mark.parametrize(
        'value, text', [
            (1.0, '1'), (0.1, '0.10000000000000001'), (3, '3'), (np.int64(7), '7'),
            (np.float64(2.5), '2.5'), (True, 'True'), ('abc', 'abc'), (None, 'None')
        ]
    )
    def test_examples(self, value: object, text: str) -> None:
        assert format_real(value) == text

    def test_exact(self) -> None:
        for value in (1.0 / 3.0, np.pi * 1e-300, 2.0 ** 0.5 * 1e300, float(np.nextafter(1.0, 2.0))):
            assert float(format_real(value)) == value


class TestTrajectories:
    def test_csv(self, batch: TrajectoryBatch, tmp_path: Path) -> None:
        path = tmp_path / 'paths.csv'

        write_trajectories(batch, path)

        lines = path.read_text().splitlines()

        assert lines[0] == 'replication,t,value'
        assert lines[1:4] == ['0,0,0', '0,0.5,0.10000000000000001', '0,1,0.29999999999999999']
        assert len(lines) == 7

        np.testing.assert_array_equal(read_values(path), [0.3, 0.2])
        np.testing.assert_array_equal(read_values(path, 0.5), [0.1, 0.2])

        assert read_selection(path).t == 1.0
        assert read_selection(path, 0.5).series is None

    def test_json(self, batch: TrajectoryBatch, tmp_path: Path) -> None:
        path = tmp_path / 'paths.json'

        write_trajectories(batch, path, 'json')

        doc = json.loads(path.read_text())

        assert doc['schema_version'] == SCHEMA_VERSION
        assert doc['kind'] == 'trajectories'
        assert doc['metadata'] == {
            'process': 'max_wait', 'seed': 4,
            'scaling': {'n_servers': 16, 'b_n': 2.0, 'c_n': 4.0, 'residual': 0.0, 'iterations': 1}
        }
        assert doc['grid'] == [0.0, 0.5, 1.0]
        assert doc['values'] == batch.values.tolist()

    def test_stdout(self, batch: TrajectoryBatch, capsys: pytest.CaptureFixture[str]) -> None:
        write_trajectories(batch, '-')

        assert capsys.readouterr().out.startswith('replication,t,value\n0,0,0\n')


class TestSamples:
    def test_csv(self, tmp_path: Path) -> None:
        path = tmp_path / 'samples.csv'

        write_samples({'a': np.array([1.0, 2.0]), 'b': np.array([3.0])}, path)

        assert path.read_text() == 'series,index,value\na,0,1\na,1,2\nb,0,3\n'

        np.testing.assert_array_equal(read_values(path), [1.0, 2.0])
        np.testing.assert_array_equal(read_values(path, series='b'), [3.0])

        selection = read_selection(path)

        assert (selection.series, selection.t) == ('a', None)

    def test_json(self, tmp_path: Path) -> None:
        path = tmp_path / 'samples.json'

        write_samples({'a': np.array([0.5])}, path, 'json', {'seed': 1})

        doc = json.loads(path.read_text())

        assert doc['kind'] == 'samples'
        assert doc['series'] == {'a': [0.5]}
        assert doc['metadata'] == {'seed': 1}


class TestTable:
    def test_csv(self, tmp_path: Path) -> None:
        path = tmp_path / 'table.csv'

        write_table([{'N': 16, 'c_N': 12.5}, {'N': 32, 'c_N': 20.0}], path)

        assert path.read_text() == 'N,c_N\n16,12.5\n32,20\n'

    def test_empty(self, tmp_path: Path) -> None:
        with pytest.raises(InvalidArgumentError):
            write_table([], tmp_path / 'table.csv')

    def test_bad_format(self, tmp_path: Path) -> None:
        with pytest.raises(InvalidArgumentError):
            write_table([{'x': 1}], tmp_path / 'table.csv', 'xml')


class TestReadValues:
    def test_errors(self, tmp_path: Path) -> None:
        with pytest.raises(InvalidArgumentError):
            read_values(tmp_path / 'missing.csv')

        path = tmp_path / 'bad.csv'
        path.write_text('x,y\n1,2\n')

        with pytest.raises(InvalidArgumentError):
            read_values(path)

        path.write_text('replication,t,value\n0,0,1\n')

        with pytest.raises(InvalidArgumentError):
            read_values(path, 0.5)
