"""
Single-file checkpoints: magic, little-endian uint64 header length, a JSON
header, then named little-endian float32 arrays at the offsets the header lists.
"""
# Standard library imports
import json
import struct
from collections import OrderedDict
from pathlib import Path
from typing import Dict, Mapping, Tuple, Union

# Third-party imports
import numpy as np
import torch
import torch.nn as nn

MAGIC = b'S2LCKPT1'
PathLike = Union[str, Path]


class IncompatibleEncoderError(ValueError):
    """Raised when a checkpoint does not fit the architecture it is loaded into"""


def save_checkpoint(path: PathLike, header: Mapping, tensors: Mapping[str, torch.Tensor]) -> Path:
    entries = []
    blobs = []
    offset = 0
    for name, tensor in tensors.items():
        array = tensor.detach().cpu().to(torch.float32).contiguous().numpy().astype('<f4', copy=False)
        blob = array.tobytes()
        entries.append({'name': name, 'shape': list(array.shape), 'offset': offset, 'nbytes': len(blob)})
        blobs.append(blob)
        offset += len(blob)

    full_header = dict(header)
    full_header['tensors'] = entries
    header_bytes = json.dumps(full_header, sort_keys=True, separators=(',', ':')).encode('utf-8')

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'wb') as f:
        f.write(MAGIC)
        f.write(struct.pack('<Q', len(header_bytes)))
        f.write(header_bytes)
        for blob in blobs:
            f.write(blob)
    return path


def load_checkpoint(path: PathLike) -> Tuple[dict, Dict[str, torch.Tensor]]:
    data = Path(path).read_bytes()
    if data[:len(MAGIC)] != MAGIC:
        raise ValueError(f"{path} is not a checkpoint file")
    start = len(MAGIC) + 8
    (header_len,) = struct.unpack('<Q', data[len(MAGIC):start])
    header = json.loads(data[start:start + header_len].decode('utf-8'))
    base = start + header_len

    tensors: Dict[str, torch.Tensor] = OrderedDict()
    for entry in header['tensors']:
        begin = base + entry['offset']
        blob = data[begin:begin + entry['nbytes']]
        if len(blob) != entry['nbytes']:
            raise ValueError(f"{path}: tensor '{entry['name']}' is truncated")
        array = np.frombuffer(blob, dtype='<f4').reshape(entry['shape']).astype(np.float32)
        tensors[entry['name']] = torch.from_numpy(array.copy())
    return header, tensors


def module_tensors(prefix: str, module: nn.Module) -> Dict[str, torch.Tensor]:
    return OrderedDict((f"{prefix}.{name}", value) for name, value in module.state_dict().items())


def load_module(module: nn.Module, prefix: str, tensors: Mapping[str, torch.Tensor]) -> None:
    """Load prefix.* tensors into module; shapes and names must match exactly"""
    state = {name[len(prefix) + 1:]: value for name, value in tensors.items() if name.startswith(prefix + '.')}
    expected = module.state_dict()
    missing = sorted(set(expected) - set(state))
    unexpected = sorted(set(state) - set(expected))
    if missing or unexpected:
        raise IncompatibleEncoderError(f"{prefix}: missing {missing[:3]}, unexpected {unexpected[:3]}")
    for name, value in state.items():
        if tuple(value.shape) != tuple(expected[name].shape):
            raise IncompatibleEncoderError(
                f"{prefix}.{name}: checkpoint shape {tuple(value.shape)} vs model {tuple(expected[name].shape)}")
    module.load_state_dict({name: value.to(expected[name].dtype) for name, value in state.items()})
