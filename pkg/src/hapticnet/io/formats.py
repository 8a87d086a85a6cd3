"""On-disk formats: tensor containers, checkpoints, feature maps, trial files.

Storage is 32-bit (checkpoints, features, instance stores) while all
training math stays 64-bit.  Every binary format is versioned and
little-endian; readers verify magic, version, and exact payload length and
reject anything else instead of guessing.  Writers are deterministic:
identical inputs produce identical bytes.
"""

import json
import struct
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInputError, UnsupportedFormatError
from ..haptic import CHANNELS, PAC_RATE, BASE_RATE

CONTAINER_VERSION = 1
CHECKPOINT_MAGIC = b"HCKP"
FEATURES_MAGIC = b"HFEA"
INSTANCES_MAGIC = b"HINS"
FEATUREMAP_MAGIC = b"HVFM"

_HEAD = struct.Struct("<4sIQ")  # magic, version, header length


def _canonical_json(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()


def write_container(path, magic: bytes, tensors: dict, meta: dict) -> None:
    """Write named float32 tensors plus a JSON meta block."""
    names = sorted(tensors)
    header = {
        "meta": meta,
        "tensors": [{"name": n, "shape": list(tensors[n].shape)} for n in names],
    }
    blob = _canonical_json(header)
    with open(path, "wb") as fh:
        fh.write(_HEAD.pack(magic, CONTAINER_VERSION, len(blob)))
        fh.write(blob)
        for n in names:
            fh.write(np.ascontiguousarray(tensors[n], dtype="<f4").tobytes())


def read_container(path, magic: bytes):
    """Read back (tensors as float64, meta).  Strict about structure."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEAD.size:
        raise UnsupportedFormatError(f"{path}: file shorter than its header")
    got_magic, version, header_len = _HEAD.unpack_from(raw)
    if got_magic != magic:
        raise UnsupportedFormatError(f"{path}: magic {got_magic!r}, expected {magic!r}")
    if version != CONTAINER_VERSION:
        raise UnsupportedFormatError(f"{path}: unsupported version {version}")
    start = _HEAD.size
    if len(raw) < start + header_len:
        raise UnsupportedFormatError(f"{path}: truncated header")
    try:
        header = json.loads(raw[start:start + header_len])
    except json.JSONDecodeError as e:
        raise UnsupportedFormatError(f"{path}: bad header JSON: {e}") from None
    offset = start + header_len
    tensors = {}
    for entry in header["tensors"]:
        shape = tuple(int(s) for s in entry["shape"])
        nbytes = int(np.prod(shape)) * 4 if shape else 4
        chunk = raw[offset:offset + nbytes]
        if len(chunk) != nbytes:
            raise UnsupportedFormatError(f"{path}: truncated tensor {entry['name']!r}")
        tensors[entry["name"]] = np.frombuffer(chunk, dtype="<f4").reshape(shape).astype(np.float64)
        offset += nbytes
    if offset != len(raw):
        raise UnsupportedFormatError(f"{path}: {len(raw) - offset} trailing bytes")
    return tensors, header["meta"]


@dataclass
class Checkpoint:
    """Serializable model state: graph, named tensors, training metadata."""

    graph: dict
    tensors: dict
    meta: dict


def checkpoint_from_model(model, meta: dict) -> Checkpoint:
    tensors = {}
    for name, value, vel in model.named_params():
        tensors[name] = value
        tensors[name + ".vel"] = vel
    return Checkpoint(graph=model.describe(), tensors=tensors, meta=meta)


def save_checkpoint(path, checkpoint: Checkpoint) -> None:
    meta = dict(checkpoint.meta)
    meta["graph"] = checkpoint.graph
    write_container(path, CHECKPOINT_MAGIC, checkpoint.tensors, meta)


def load_checkpoint(path) -> Checkpoint:
    tensors, meta = read_container(path, CHECKPOINT_MAGIC)
    graph = meta.pop("graph")
    return Checkpoint(graph=graph, tensors=tensors, meta=meta)


def model_from_checkpoint(checkpoint: Checkpoint):
    """Rebuild the model graph and load its weights and optimizer state."""
    from ..models import model_from_description

    model = model_from_description(checkpoint.graph)
    for name, value, vel in model.named_params():
        if name not in checkpoint.tensors:
            raise UnsupportedFormatError(f"checkpoint missing tensor {name!r}")
        stored = checkpoint.tensors[name]
        if stored.shape != value.shape:
            raise UnsupportedFormatError(
                f"tensor {name!r} has shape {stored.shape}, model expects {value.shape}"
            )
        value[:] = stored
        vel[:] = checkpoint.tensors.get(name + ".vel", 0.0)
    return model


def write_feature_maps(path, grids: np.ndarray) -> None:
    """Visual feature maps for one object: (views, H, W, C) float32 grid."""
    grids = np.asarray(grids)
    if grids.ndim != 4:
        raise InvalidInputError(f"expected (views, H, W, C), got shape {grids.shape}")
    with open(path, "wb") as fh:
        fh.write(FEATUREMAP_MAGIC)
        fh.write(struct.pack("<I", CONTAINER_VERSION))
        fh.write(struct.pack("<4I", *grids.shape))
        fh.write(np.ascontiguousarray(grids, dtype="<f4").tobytes())


def read_feature_maps(path) -> np.ndarray:
    with open(path, "rb") as fh:
        raw = fh.read()
    fixed = len(FEATUREMAP_MAGIC) + 4 + 16
    if len(raw) < fixed:
        raise UnsupportedFormatError(f"{path}: shorter than the fixed header")
    if raw[:4] != FEATUREMAP_MAGIC:
        raise UnsupportedFormatError(f"{path}: magic {raw[:4]!r}, expected {FEATUREMAP_MAGIC!r}")
    (version,) = struct.unpack_from("<I", raw, 4)
    if version != CONTAINER_VERSION:
        raise UnsupportedFormatError(f"{path}: unsupported version {version}")
    dims = struct.unpack_from("<4I", raw, 8)
    expected = int(np.prod(dims)) * 4
    payload = raw[fixed:]
    if len(payload) != expected:
        raise UnsupportedFormatError(
            f"{path}: payload is {len(payload)} bytes, dims {dims} need {expected}"
        )
    return np.frombuffer(payload, dtype="<f4").reshape(dims).astype(np.float64)


def write_trial_file(path, channels: dict) -> None:
    """Columnar numeric text for one (object, trial, finger, EP).

    Channels are columns in the fixed order; columns shorter than the
    longest one (P_AC runs ~22x longer than the 100 Hz channels) simply end,
    with trailing empty cells trimmed from each row.  A JSON sidecar carries
    the per-channel sample rates.
    """
    missing = [c for c in CHANNELS if c not in channels]
    if missing:
        raise InvalidInputError(f"trial is missing channels {missing}")
    series = [np.asarray(channels[c], dtype=np.float64) for c in CHANNELS]
    n_rows = max(s.size for s in series)
    cells = np.full((n_rows, len(CHANNELS)), "", dtype=object)
    for j, s in enumerate(series):
        cells[:s.size, j] = np.char.mod("%.8g", s)
    lines = [",".join(CHANNELS)]
    for row in cells:
        last = len(row)
        while last > 0 and row[last - 1] == "":
            last -= 1
        lines.append(",".join(row[:last]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    rates = {c: (PAC_RATE if c == "P_AC" else BASE_RATE) for c in CHANNELS}
    with open(sidecar_path(path), "w") as fh:
        fh.write(json.dumps({"sample_rates": rates}, sort_keys=True, indent=1) + "\n")


def sidecar_path(path):
    return str(path) + ".meta.json"


def read_trial_file(path) -> dict:
    """Parse a trial file back into channel -> array (ragged columns ok)."""
    with open(path) as fh:
        lines = [line.rstrip("\n") for line in fh]
    if not lines:
        raise UnsupportedFormatError(f"{path}: empty trial file")
    names = lines[0].split(",")
    if set(names) != set(CHANNELS):
        raise UnsupportedFormatError(f"{path}: header does not list the expected channels")
    columns = {n: [] for n in names}
    for ln, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        cells = line.split(",")
        if len(cells) > len(names):
            raise UnsupportedFormatError(f"{path}:{ln}: more cells than header columns")
        for name, cell in zip(names, cells):
            if cell != "":
                columns[name].append(float(cell))
    return {n: np.asarray(v, dtype=np.float64) for n, v in columns.items()}


def write_labels_csv(path, label_rows) -> None:
    """Label table: one row per object, 24 adjective columns in fixed order."""
    from ..evaluation import ADJECTIVES

    lines = ["object_id,name," + ",".join(ADJECTIVES)]
    for obj_id, name, labels in label_rows:
        bits = ",".join("1" if labels[a] else "0" for a in ADJECTIVES)
        lines.append(f"{obj_id},{name},{bits}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_labels_csv(path):
    """Returns [(object_id, name, {adjective: bool})] in file order."""
    from ..evaluation import ADJECTIVES

    with open(path) as fh:
        lines = [line.rstrip("\n") for line in fh if line.strip()]
    header = lines[0].split(",")
    if header != ["object_id", "name"] + list(ADJECTIVES):
        raise UnsupportedFormatError(f"{path}: unexpected label table header")
    rows = []
    for ln, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != 2 + len(ADJECTIVES):
            raise UnsupportedFormatError(f"{path}:{ln}: wrong column count")
        labels = {}
        for adj, cell in zip(ADJECTIVES, cells[2:]):
            if cell not in ("0", "1"):
                raise UnsupportedFormatError(f"{path}:{ln}: label cell {cell!r} not 0/1")
            labels[adj] = cell == "1"
        rows.append((cells[0], cells[1], labels))
    return rows
