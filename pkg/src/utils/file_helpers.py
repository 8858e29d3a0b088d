# Standard library imports
import json
import os
from pathlib import Path
from typing import Any, Optional, Union

PathLike = Union[str, Path]


def format_file_size(size_in_bytes: float) -> str:
    """Convert file size to human-readable format"""
    for unit in ['B', 'KB', 'MB', 'GB']:
        if size_in_bytes < 1024:
            return f"{size_in_bytes:.1f} {unit}"
        size_in_bytes /= 1024
    return f"{size_in_bytes:.1f} TB"


def directory_size(path: PathLike) -> int:
    """Total bytes of all files below path"""
    return sum(p.stat().st_size for p in Path(path).rglob('*') if p.is_file())


def resolve_path(path: PathLike, data_root: Optional[PathLike] = None) -> Path:
    """Resolve relative paths against S2L_DATA_ROOT (or data_root) when set"""
    path = Path(path)
    if path.is_absolute():
        return path
    root = data_root if data_root is not None else os.getenv('S2L_DATA_ROOT')
    return Path(root) / path if root else path


def dump_json(data: Any) -> str:
    """Deterministic JSON text: sorted keys, two-space indent"""
    return json.dumps(data, sort_keys=True, indent=2, default=str) + '\n'


def write_json(path: PathLike, data: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_json(data), encoding='utf-8')
    return path


def read_json(path: PathLike) -> Any:
    with open(path, encoding='utf-8') as f:
        return json.load(f)
