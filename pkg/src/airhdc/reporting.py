"""CSV report files with a YAML header block.

Every experiment artifact is one CSV whose leading '# '-prefixed lines form a
YAML document recording the full configuration and seed, so a report is
self-describing and byte-reproducible.
"""

from __future__ import annotations

import csv
import dataclasses
from typing import Any, Iterable, Mapping, Sequence

import numpy as np
import yaml

__all__ = ["config_to_dict", "read_report", "write_report"]


def config_to_dict(obj: Any) -> Any:
    """Dataclass/array tree to plain YAML-serializable values."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {
            f.name: config_to_dict(getattr(obj, f.name)) for f in dataclasses.fields(obj)
        }
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (list, tuple)):
        return [config_to_dict(x) for x in obj]
    if isinstance(obj, Mapping):
        return {k: config_to_dict(v) for k, v in obj.items()}
    return obj


def _format(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if value is None:
        return ""
    return str(value)


def write_report(
    path,
    meta: Mapping[str, Any],
    fieldnames: Sequence[str],
    rows: Iterable[Mapping[str, Any]],
) -> None:
    header = yaml.safe_dump(config_to_dict(dict(meta)), sort_keys=False).rstrip("\n")
    with open(path, "w", newline="") as fh:
        for line in header.splitlines():
            fh.write(f"# {line}\n")
        writer = csv.DictWriter(fh, fieldnames=list(fieldnames))
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _format(v) for k, v in row.items()})


def read_report(path) -> tuple[dict, list[dict]]:
    """Parse a report back into (meta dict, rows as string dicts)."""
    meta_lines = []
    body = []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                meta_lines.append(line.lstrip("#").rstrip("\n").removeprefix(" "))
            else:
                body.append(line)
    meta = yaml.safe_load("\n".join(meta_lines)) if meta_lines else {}
    rows = list(csv.DictReader(body))
    return meta, rows
