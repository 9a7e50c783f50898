"""File emitters: atomic writes, CSV/JSON with provenance headers."""

from __future__ import annotations

import json
import numbers
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence


def atomic_write_bytes(path: Path, data: bytes) -> None:
    """Write via a temporary file in the target directory, then rename, so a
    crash never leaves a half-written file at the destination."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def atomic_write_text(path: Path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def provenance_comment(version: str, config_sha: str) -> str:
    return f"# spopo {version} config=sha256:{config_sha}"


def write_csv(
    path: Path,
    columns: Sequence[str],
    rows: Iterable[Sequence],
    provenance: str | None = None,
) -> None:
    """CSV with an optional leading ``#`` provenance comment line."""
    lines = []
    if provenance:
        lines.append(provenance)
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join("" if v is None else _format_cell(v) for v in row))
    atomic_write_text(Path(path), "\n".join(lines) + "\n")


def _format_cell(value) -> str:
    if isinstance(value, numbers.Integral):
        return str(int(value))
    if isinstance(value, numbers.Real):
        return repr(float(value))
    return str(value)


def write_json(path: Path, payload: dict, version: str, config_sha: str) -> None:
    payload = {"tool": "spopo", "version": version, "config_sha256": config_sha, **payload}
    atomic_write_text(Path(path), json.dumps(payload, indent=2, sort_keys=False) + "\n")


def write_plot_stub(path: Path, datasets: list[dict]) -> None:
    """Tool-agnostic plotting notes: one block per dataset describing the
    file, the columns to use as axes, and suggested scales."""
    lines = ["plotting notes (tool-agnostic)", "=" * 31, ""]
    for ds in datasets:
        lines.append(f"file:    {ds['file']}")
        lines.append(f"x:       {ds['x']}")
        lines.append(f"y:       {ds['y']}")
        if "notes" in ds:
            lines.append(f"notes:   {ds['notes']}")
        lines.append("")
    atomic_write_text(Path(path), "\n".join(lines))
