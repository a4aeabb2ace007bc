"""Lookup of named, versioned assets: scene configs, template sets, region masks.

A reference is either a filesystem path or ``name@version``. Named references
are searched in ``$CHILDQ_CONFIG_DIR`` first, then in the bundled data::

    scenes/<name>-<version>.json
    templates/<name>-<version>/*.json
    masks/<name>-<version>.pgm
"""

from __future__ import annotations

import os
import re
from pathlib import Path

from .errors import SchemaError

CONFIG_ENV = "CHILDQ_CONFIG_DIR"
DATA_DIR = Path(__file__).parent / "data"

_REF = re.compile(r"^(?P<name>[A-Za-z0-9_.-]+)@(?P<version>\d+)$")
_LAYOUT = {"scenes": "{}-{}.json", "templates": "{}-{}", "masks": "{}-{}.pgm"}


def resolve(kind: str, ref: str | os.PathLike) -> Path:
    if kind not in _LAYOUT:
        raise ValueError(f"unknown asset kind {kind!r}")
    path = Path(ref)
    if path.exists():
        return path
    m = _REF.match(str(ref))
    if not m:
        raise SchemaError(f"{kind}: {ref!r} is neither an existing path nor name@version")
    rel = Path(kind) / _LAYOUT[kind].format(m["name"], m["version"])
    roots = [Path(os.environ[CONFIG_ENV])] if os.environ.get(CONFIG_ENV) else []
    roots.append(DATA_DIR)
    for root in roots:
        if (root / rel).exists():
            return root / rel
    raise SchemaError(f"{kind}: no asset {ref!r} (looked in {', '.join(map(str, roots))})")
