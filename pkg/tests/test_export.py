import json
from dataclasses import dataclass

import numpy as np
import pytest

from config import Family
from export import dumps, to_jsonable, write_json, write_rows_csv, write_trace_csv
from iterate import banach_ledger
from model import IterationTrace


@dataclass
class Sample:
    name: str
    values: np.ndarray
    family: Family


class TestToJsonable:
    def test_converts_numpy_and_enums(self):
        data = to_jsonable({'a': np.float64(0.5), 'b': np.arange(3), 'c': Family.EXPONENTIAL,
                            'd': (np.int64(2), np.bool_(True))})
        assert data == {'a': 0.5, 'b': [0, 1, 2], 'c': 'exp', 'd': [2, True]}

    def test_non_finite_becomes_null(self):
        assert to_jsonable([np.nan, np.inf, 1.0]) == [None, None, 1.0]

    def test_dataclass(self):
        data = to_jsonable(Sample('x', np.array([1.0, 2.0]), Family.POLYNOMIAL))
        assert data == {'name': 'x', 'values': [1.0, 2.0], 'family': 'poly'}

    def test_dumps_is_valid_json(self):
        trace = IterationTrace.from_iterates([[0.0], [1.0]], converged=True)
        assert json.loads(dumps(trace))['T'] == 1

    def test_rejects_unknown_objects(self):
        with pytest.raises(TypeError):
            to_jsonable(object())


class TestCsv:
    def test_trace_csv_layout(self, tmp_path):
        trace = IterationTrace.from_iterates([[0.1, 0.2], [0.05, 0.1], [0.025, 0.05]], converged=True)
        path = write_trace_csv(tmp_path / 'trace.csv', trace)
        lines = path.read_text().splitlines()
        assert lines[0] == 't,x1,x2,residual'
        assert lines[1] == '0,0.10000000000000001,0.20000000000000001,'
        assert lines[2].startswith('1,0.050000000000000003,')
        assert len(lines) == 4

    def test_trace_csv_with_ledger_and_noise(self, tmp_path):
        trace = IterationTrace.from_iterates([[0.2], [0.1], [0.05]], converged=True, noise=[[0.0], [0.0]])
        ledger = banach_ledger(trace, 0.5, [0.0])
        path = write_trace_csv(tmp_path / 'trace.csv', trace, ledger)
        header = path.read_text().splitlines()[0].split(',')
        assert header == ['t', 'x1', 'residual', 'h1', 'err', 'apriori', 'aposteriori', 'onestep']

    def test_rows_csv(self, tmp_path):
        path = write_rows_csv(tmp_path / 'rows.csv', ['k', 'v'], [[1, 0.5], ['a', None]])
        assert path.read_text() == 'k,v\n1,0.5\na,\n'

    def test_json_round_trip(self, tmp_path):
        path = write_json(tmp_path / 'out.json', {'family': Family.POLYNOMIAL, 'x': np.array([1.5])})
        assert json.loads(path.read_text()) == {'family': 'poly', 'x': [1.5]}
