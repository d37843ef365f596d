"""Run directory writer."""

import numpy as np
import pytest

from mopelab.errors import PersistenceError
from mopelab.metrics import RunWriter, availableActionEpochs, loadActions, outputRoot, readEvalCsv


class TestRunWriter:

    def test_unwritable_directory(self, tmp_path):
        blocker = tmp_path / 'file'
        blocker.write_text('x')
        with pytest.raises(PersistenceError):
            RunWriter(str(blocker / 'run'))

    def test_actions_round_trip(self, tmp_path):
        writer = RunWriter(str(tmp_path / 'run'))
        acts = np.arange(6.0).reshape(3, 2)
        writer.writeActions(4, acts)
        writer.writeActions(12, acts)
        assert availableActionEpochs(writer.runDir) == [4, 12]
        np.testing.assert_array_equal(loadActions(writer.runDir, 4), acts)

    def test_eval_row(self, tmp_path):
        writer = RunWriter(str(tmp_path / 'run'))
        writer.writeEval(3, 5, -12.5, 0.25)
        assert readEvalCsv(writer.runDir) == {'seed': 3, 'episodes': 5, 'return_mean': -12.5, 'return_std': 0.25}

    def test_missing_files(self, tmp_path):
        with pytest.raises(PersistenceError):
            readEvalCsv(str(tmp_path))
        with pytest.raises(PersistenceError):
            loadActions(str(tmp_path), 0)
        assert availableActionEpochs(str(tmp_path)) == []


class TestOutputRoot:

    def test_precedence(self, monkeypatch):
        monkeypatch.delenv('MOPELAB_OUTPUT_ROOT', raising=False)
        assert outputRoot() == 'runs'
        monkeypatch.setenv('MOPELAB_OUTPUT_ROOT', '/tmp/elsewhere')
        assert outputRoot() == '/tmp/elsewhere'
        assert outputRoot('mine') == 'mine'
