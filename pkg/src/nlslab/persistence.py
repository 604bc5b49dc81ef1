"""File formats: binary field snapshots, diagnostic CSV, TOML run configs,
and the ground-state constants cache.

Snapshot format (bit-exact round trip guaranteed):

* fixed 64-byte header: magic ``NLSF`` (4 bytes), then little-endian uint32
  version, n, N, then little-endian float64 L and t, zero padding to 64;
* payload: little-endian float64 pairs (re, im) per grid point, row-major.

All writes are atomic (write to a temp file in the target directory, then
rename). CSV and JSON floats carry 17 significant digits so round-tripping
through text is exact.
"""

import hashlib
import json
import os
import struct
import tempfile
from dataclasses import asdict

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import InvalidConfig, InvalidGrid
from .grid import ComplexField, GridSpec, make_grid
from .ground_state import GroundState

__all__ = [
    "write_snapshot",
    "read_snapshot",
    "write_csv",
    "format_float",
    "load_config",
    "atomic_write_bytes",
    "atomic_write_text",
    "cache_dir",
    "cache_key",
    "cache_store",
    "cache_load",
]

SNAPSHOT_MAGIC = b"NLSF"
SNAPSHOT_VERSION = 1
_HEADER = struct.Struct("<4sIII dd")  # magic, version, n, N, L, t
CACHE_ENV = "NLS_LAB_CACHE"


def atomic_write_bytes(path: str, data: bytes) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: str, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def write_snapshot(path: str, u: ComplexField, t: float) -> None:
    """Write a field snapshot in the fixed binary format."""
    g = u.grid
    header = _HEADER.pack(SNAPSHOT_MAGIC, SNAPSHOT_VERSION, g.dim, g.points, g.length, float(t))
    header = header.ljust(64, b"\0")
    flat = np.ascontiguousarray(u.values, dtype="<c16")
    # complex128 little-endian is exactly interleaved (re, im) float64 pairs
    atomic_write_bytes(path, header + flat.tobytes())


def read_snapshot(path: str):
    """Read a snapshot; returns (ComplexField, t)."""
    with open(path, "rb") as fh:
        header = fh.read(64)
        if len(header) < 64:
            raise InvalidGrid(f"snapshot {path!r} truncated header")
        magic, version, n, pts, length, t = _HEADER.unpack(header[: _HEADER.size])
        if magic != SNAPSHOT_MAGIC:
            raise InvalidGrid(f"snapshot {path!r} has bad magic {magic!r}")
        if version != SNAPSHOT_VERSION:
            raise InvalidGrid(f"snapshot {path!r} has unsupported version {version}")
        grid = make_grid(n, pts, length)
        payload = fh.read(16 * grid.size)
        if len(payload) != 16 * grid.size:
            raise InvalidGrid(f"snapshot {path!r} truncated payload")
    values = np.frombuffer(payload, dtype="<c16").reshape(grid.shape)
    return ComplexField(grid, values.copy()), float(t)


def format_float(x: float) -> str:
    """17-significant-digit decimal, exact float round trip."""
    return format(float(x), ".17g")


def write_csv(path: str, columns, rows) -> None:
    """Write rows of floats with full-precision formatting."""
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(format_float(v) for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Run configuration (TOML, unknown keys are hard errors)

_CONFIG_SCHEMA = {
    "equation": {"n", "p", "gamma", "lam1", "lam2"},
    "grid": {"dim", "points", "length"},
    "datum": {"family", "amplitude", "width", "center", "momentum", "seed", "path", "kind"},
    "evolution": {"dt", "t_end", "cadence", "guard_max_abs", "guard_grad_factor", "snapshot_stride"},
    "output": {"directory", "snapshots", "series"},
}

_REQUIRED = {
    "equation": {"n", "p", "gamma", "lam1", "lam2"},
    "grid": {"dim", "points", "length"},
    "datum": {"family"},
    "evolution": {"dt", "t_end"},
}


def load_config(path: str) -> dict:
    """Parse and validate a run config. Unknown sections or keys are errors."""
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise InvalidConfig(f"config {path!r} is not valid TOML: {exc}") from exc
    except OSError as exc:
        raise InvalidConfig(f"cannot read config {path!r}: {exc}") from exc

    for section in data:
        if section not in _CONFIG_SCHEMA:
            raise InvalidConfig(f"unknown config section [{section}]")
        if not isinstance(data[section], dict):
            raise InvalidConfig(f"config section [{section}] must be a table")
        for key in data[section]:
            if key not in _CONFIG_SCHEMA[section]:
                raise InvalidConfig(f"unknown key {key!r} in section [{section}]")
    for section, keys in _REQUIRED.items():
        if section not in data:
            raise InvalidConfig(f"missing required config section [{section}]")
        missing = keys - set(data[section])
        if missing:
            raise InvalidConfig(f"section [{section}] missing keys: {sorted(missing)}")
    return data


# ---------------------------------------------------------------------------
# Ground-state cache


def cache_dir() -> str:
    base = os.environ.get(CACHE_ENV)
    if base:
        return base
    return os.path.join(os.path.expanduser("~"), ".cache", "nlslab")


def cache_key(kind: str, n: int, exponent: float, grid: GridSpec | None, tol: float) -> str:
    fingerprint = "radial" if grid is None else f"{grid.dim}:{grid.points}:{format_float(grid.length)}"
    blob = f"{kind}|{n}|{format_float(exponent)}|{fingerprint}|{format_float(tol)}"
    return hashlib.sha256(blob.encode()).hexdigest()[:24]


def cache_store(key: str, gs: GroundState) -> str:
    d = asdict(gs)
    d["r"] = [float(v) for v in gs.r]
    d["profile"] = [float(v) for v in gs.profile]
    path = os.path.join(cache_dir(), f"gs-{key}.json")
    atomic_write_text(path, json.dumps(d))
    return path


def cache_load(key: str) -> GroundState | None:
    path = os.path.join(cache_dir(), f"gs-{key}.json")
    if not os.path.exists(path):
        return None
    try:
        with open(path, "r", encoding="utf-8") as fh:
            d = json.load(fh)
        d["r"] = np.asarray(d["r"])
        d["profile"] = np.asarray(d["profile"])
        return GroundState(**d)
    except (OSError, ValueError, TypeError, KeyError):
        return None  # corrupt cache entries are treated as misses
