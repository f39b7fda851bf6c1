"""Codebook and simulation-result file formats.

Codebooks are JSON documents with amplitudes stored as decimal strings of
17 significant digits, which is enough to reproduce every double exactly;
writing a codebook that was just read gives a byte-identical file.
Simulation results are plain CSV, one row per SNR point.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable

import numpy as np

from .constellation import AmplitudeSet, BitAllocation, Codebook
from .errors import CodebookFormatError, InvalidInputError

__all__ = [
    "SCHEMA_VERSION",
    "RESULT_COLUMNS",
    "codebook_to_json",
    "codebook_from_json",
    "write_codebook",
    "read_codebook",
    "results_to_csv",
    "write_results",
    "read_results",
    "atomic_write",
]

SCHEMA_VERSION = 1
RESULT_COLUMNS = ("snr_db", "detector", "trials", "block_errors", "bit_errors",
                  "bler", "ber", "bler_ci_lo", "bler_ci_hi")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def atomic_write(path: str | os.PathLike, text: str) -> None:
    """Write ``text`` to ``path`` so that readers never see a partial file."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def codebook_to_json(codebook: Codebook) -> str:
    """Serialize a codebook; the output ends with a newline."""
    from . import __version__

    alloc = codebook.alloc
    metadata = dict(codebook.metadata)
    metadata.setdefault("tool_version", __version__)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "K": alloc.K,
        "l_u": alloc.l_u,
        "l_phi": list(alloc.l_phi),
        "amplitudes": [[_fmt(x) for x in row] for row in codebook.unit_amplitudes],
        "achieved_mcd": float(codebook.achieved_mcd),
        "metadata": metadata,
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def codebook_from_json(text: str) -> Codebook:
    """Parse and validate a codebook document.

    Raises
    ------
    CodebookFormatError
        On malformed JSON, missing or mistyped fields, or values that break
        a codebook invariant.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CodebookFormatError(f"not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise CodebookFormatError("top level must be an object")
    missing = [k for k in ("schema_version", "K", "l_u", "l_phi", "amplitudes", "achieved_mcd") if k not in doc]
    if missing:
        raise CodebookFormatError(f"missing fields: {', '.join(missing)}")
    if doc["schema_version"] != SCHEMA_VERSION:
        raise CodebookFormatError(f"unsupported schema_version {doc['schema_version']!r}")
    for key in ("K", "l_u"):
        if not isinstance(doc[key], int) or isinstance(doc[key], bool):
            raise CodebookFormatError(f"{key} must be an integer")
    if not isinstance(doc["l_phi"], list) or not all(isinstance(b, int) for b in doc["l_phi"]):
        raise CodebookFormatError("l_phi must be a list of integers")
    rows = doc["amplitudes"]
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise CodebookFormatError("amplitudes must be a list of rows")
    try:
        values = np.array([[float(x) for x in r] for r in rows], dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise CodebookFormatError(f"amplitude entries must be decimal strings: {exc}") from None
    if any(not isinstance(x, str) for r in rows for x in r):
        raise CodebookFormatError("amplitude entries must be decimal strings")
    mcd = doc["achieved_mcd"]
    if not isinstance(mcd, (int, float)) or isinstance(mcd, bool):
        raise CodebookFormatError("achieved_mcd must be a number")
    metadata = doc.get("metadata", {})
    if not isinstance(metadata, dict):
        raise CodebookFormatError("metadata must be an object")
    try:
        alloc = BitAllocation(doc["K"], doc["l_u"], tuple(doc["l_phi"]))
        return Codebook(alloc, AmplitudeSet(values), float(mcd), metadata)
    except InvalidInputError as exc:
        raise CodebookFormatError(f"invalid codebook: {exc}") from None


def write_codebook(path: str | os.PathLike, codebook: Codebook) -> None:
    atomic_write(path, codebook_to_json(codebook))


def read_codebook(path: str | os.PathLike) -> Codebook:
    """Load a codebook file (see :func:`codebook_from_json`)."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CodebookFormatError(f"cannot read {path}: {exc.strerror or exc}") from None
    except UnicodeDecodeError as exc:
        raise CodebookFormatError(f"{path} is not UTF-8 text: {exc}") from None
    return codebook_from_json(text)


def results_to_csv(points: Iterable) -> str:
    """CSV text with a header and one row per :class:`~noncoherent_apsk.simulation.PointResult`."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RESULT_COLUMNS)
    for p in points:
        lo, hi = p.bler_ci95
        writer.writerow([_fmt(p.snr_db), p.detector, p.trials, p.block_errors, p.bit_errors,
                         _fmt(p.bler), _fmt(p.ber), _fmt(lo), _fmt(hi)])
    return buf.getvalue()


def write_results(path: str | os.PathLike, points: Iterable) -> None:
    atomic_write(path, results_to_csv(points))


def read_results(path: str | os.PathLike) -> list[dict]:
    """Parse a results file into dictionaries with numeric fields converted."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != RESULT_COLUMNS:
            raise InvalidInputError(f"unexpected columns {reader.fieldnames}")
        out = []
        for row in reader:
            parsed = {}
            for key, val in row.items():
                if key == "detector":
                    parsed[key] = val
                elif key in ("trials", "block_errors", "bit_errors"):
                    parsed[key] = int(val)
                else:
                    parsed[key] = float(val)
            out.append(parsed)
        return out
