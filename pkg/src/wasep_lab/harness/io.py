"""Output files: hash-stamped CSVs and the run manifest."""
from __future__ import annotations

import csv
import hashlib
import json
import platform
import sys
from importlib import metadata
from pathlib import Path

HASH_PREFIX = "# config_hash="


class ConfigHashMismatch(RuntimeError):
    """An output file was produced under a different configuration."""


def write_table(path, header, rows, config_hash: str) -> Path:
    """CSV with a leading ``# config_hash=...`` line."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(f"{HASH_PREFIX}{config_hash}\n")
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
    return path


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def stamp_csv(path, config_hash: str) -> Path:
    """Prepend the hash line to a CSV written by a module-level ``to_csv``."""
    path = Path(path)
    body = path.read_text()
    path.write_text(f"{HASH_PREFIX}{config_hash}\n{body}")
    return path


def read_table(path, expected_hash: str | None = None) -> tuple[list, list]:
    """Read a stamped CSV; raise :class:`ConfigHashMismatch` on a wrong or missing hash."""
    path = Path(path)
    with path.open(newline="") as fh:
        first = fh.readline().rstrip("\n")
        if not first.startswith(HASH_PREFIX):
            raise ConfigHashMismatch(f"{path}: missing config hash")
        found = first[len(HASH_PREFIX):]
        if expected_hash is not None and found != expected_hash:
            raise ConfigHashMismatch(f"{path}: config hash {found} != expected {expected_hash}")
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _version(dist: str) -> str:
    try:
        return metadata.version(dist)
    except metadata.PackageNotFoundError:
        return "unknown"


def versions() -> dict:
    return {
        "python": sys.version.split()[0],
        "platform": platform.platform(),
        "numpy": _version("numpy"),
        "scipy": _version("scipy"),
        "numba": _version("numba"),
        "artifact": _version("artifact"),
    }


def write_manifest(outdir, config, files, checks: dict) -> Path:
    """``manifest.json``: config echo, config hash, versions, output hashes, checks."""
    outdir = Path(outdir)
    payload = {
        "config": config.to_dict(),
        "config_hash": config.hash(),
        "versions": versions(),
        "files": {Path(f).name: file_sha256(f) for f in files},
        "checks": {k: bool(v) for k, v in checks.items()},
    }
    path = outdir / "manifest.json"
    path.write_text(json.dumps(payload, indent=2, sort_keys=True))
    return path


def verify_manifest(outdir) -> dict:
    """Re-check every output file against the manifest; raise on any mismatch."""
    outdir = Path(outdir)
    man = json.loads((outdir / "manifest.json").read_text())
    for name, digest in man["files"].items():
        f = outdir / name
        if file_sha256(f) != digest:
            raise ConfigHashMismatch(f"{f}: content hash differs from manifest")
        if f.suffix == ".csv":
            read_table(f, man["config_hash"])
    return man
