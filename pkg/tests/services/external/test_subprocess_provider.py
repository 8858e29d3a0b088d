import json
import subprocess
import unittest
from unittest.mock import MagicMock, patch

import numpy as np

from src.services.errors import EmbeddingProviderUnavailable
from src.services.external.subprocess_provider import SubprocessEmbeddingProvider


class TestSubprocessEmbeddingProvider(unittest.TestCase):
    def setUp(self):
        self.which_patcher = patch('src.services.external.subprocess_provider.shutil.which',
                                   return_value='/usr/bin/embedder')
        self.mock_which = self.which_patcher.start()

    def tearDown(self):
        self.which_patcher.stop()

    @patch('src.services.external.subprocess_provider.subprocess.run')
    def test_embed_batch(self, mock_run):
        # Mock a well-formed reply
        mock_run.return_value = MagicMock(
            returncode=0, stdout=json.dumps({'embeddings': [[1.0, 0.0], [0.0, 1.0]]}), stderr='')

        provider = SubprocessEmbeddingProvider('embedder --model small', dim=2)
        vectors = provider.embed_batch(['a', 'b'])

        np.testing.assert_array_equal(vectors, np.eye(2, dtype=np.float32))
        args, kwargs = mock_run.call_args
        self.assertEqual(args[0], ['/usr/bin/embedder', '--model', 'small'])
        self.assertEqual(json.loads(kwargs['input']), {'texts': ['a', 'b']})

    @patch('src.services.external.subprocess_provider.subprocess.run')
    def test_nonzero_exit(self, mock_run):
        mock_run.return_value = MagicMock(returncode=3, stdout='', stderr='boom')
        provider = SubprocessEmbeddingProvider('embedder', dim=2)
        with self.assertRaises(EmbeddingProviderUnavailable):
            provider.embed_batch(['a'])

    @patch('src.services.external.subprocess_provider.subprocess.run')
    def test_malformed_output(self, mock_run):
        mock_run.return_value = MagicMock(returncode=0, stdout='not json', stderr='')
        provider = SubprocessEmbeddingProvider('embedder', dim=2)
        with self.assertRaises(EmbeddingProviderUnavailable):
            provider.embed_batch(['a'])

    @patch('src.services.external.subprocess_provider.subprocess.run')
    def test_wrong_dimension(self, mock_run):
        mock_run.return_value = MagicMock(returncode=0, stdout=json.dumps({'embeddings': [[1.0, 0.0, 0.0]]}), stderr='')
        provider = SubprocessEmbeddingProvider('embedder', dim=2)
        with self.assertRaises(EmbeddingProviderUnavailable):
            provider.embed_batch(['a'])

    @patch('src.services.external.subprocess_provider.subprocess.run',
           side_effect=subprocess.TimeoutExpired('embedder', 1))
    def test_timeout(self, mock_run):
        provider = SubprocessEmbeddingProvider('embedder', dim=2, timeout=1)
        with self.assertRaises(EmbeddingProviderUnavailable):
            provider.embed_batch(['a'])

    def test_missing_executable(self):
        self.mock_which.return_value = None
        with self.assertRaises(EmbeddingProviderUnavailable):
            SubprocessEmbeddingProvider('embedder', dim=2)

    def test_missing_command(self):
        with self.assertRaises(EmbeddingProviderUnavailable):
            SubprocessEmbeddingProvider(None, dim=2)


if __name__ == '__main__':
    unittest.main()
