# Standard library imports
import struct

# Third-party imports
import pytest
import torch

# Local application imports
from src.models.checkpoint import (
    MAGIC,
    IncompatibleEncoderError,
    load_checkpoint,
    load_module,
    module_tensors,
    save_checkpoint,
)
from src.models.encoder import Encoder, EncoderSpec


def test_checkpoint_round_trip(tmp_path, tiny_encoder_spec):
    encoder = Encoder(tiny_encoder_spec)
    path = save_checkpoint(tmp_path / 'encoder.ckpt', {'kind': 'encoder', 'step': 3},
                           module_tensors('encoder', encoder))

    header, tensors = load_checkpoint(path)
    restored = Encoder(tiny_encoder_spec)
    load_module(restored, 'encoder', tensors)

    assert header['kind'] == 'encoder' and header['step'] == 3
    for name, value in encoder.state_dict().items():
        torch.testing.assert_close(restored.state_dict()[name].float(), value.float())


def test_file_layout_starts_with_magic_and_header_length(tmp_path):
    path = save_checkpoint(tmp_path / 'x.ckpt', {'kind': 'x'}, {'w': torch.ones(2, 3)})
    data = path.read_bytes()

    assert data[:len(MAGIC)] == MAGIC
    (header_len,) = struct.unpack('<Q', data[len(MAGIC):len(MAGIC) + 8])
    assert len(data) == len(MAGIC) + 8 + header_len + 2 * 3 * 4


def test_not_a_checkpoint(tmp_path):
    path = tmp_path / 'junk.ckpt'
    path.write_bytes(b'hello world')
    with pytest.raises(ValueError):
        load_checkpoint(path)


def test_truncated_tensor(tmp_path):
    path = save_checkpoint(tmp_path / 'x.ckpt', {}, {'w': torch.ones(4)})
    path.write_bytes(path.read_bytes()[:-4])
    with pytest.raises(ValueError) as e:
        load_checkpoint(path)
    assert 'truncated' in str(e.value)


def test_incompatible_architecture(tmp_path, tiny_encoder_spec):
    """Loading into a wider encoder names the mismatching tensor"""
    path = save_checkpoint(tmp_path / 'e.ckpt', {}, module_tensors('encoder', Encoder(tiny_encoder_spec)))
    _, tensors = load_checkpoint(path)
    wider = Encoder(EncoderSpec(input_shape=(32, 32, 3), kernels=(8, 8, 8, 8), min_groups=2))

    with pytest.raises(IncompatibleEncoderError):
        load_module(wider, 'encoder', tensors)
