"""Dataset manifests: strict loading and total validation."""

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import InvalidInputError
from ..evaluation import ADJECTIVES
from ..haptic import (
    BASE_RATE,
    DECIMATION,
    EPS,
    FINGERS,
    OFFSETS,
    PCA_COMPONENTS,
    RESAMPLE_LEN,
)
from ..visual import N_VIEWS
from . import formats

MANIFEST_VERSION = 1


def default_preprocessing() -> dict:
    return {
        "resample_len": RESAMPLE_LEN,
        "decimation": DECIMATION,
        "pca_components": PCA_COMPONENTS,
        "offsets": list(OFFSETS),
    }


@dataclass
class DatasetManifest:
    """Index of everything a dataset provides, all paths relative to root."""

    name: str
    objects: list                 # [{"id", "name"}]
    labels_path: str
    trials: list                  # [{"object_id", "trial", "finger", "ep", "path"}]
    visual: list                  # [{"object_id", "path"}]
    trials_per_object: int = 10
    views_per_object: int = N_VIEWS
    preprocessing: dict = field(default_factory=default_preprocessing)
    visual_preprocessing: dict = field(default_factory=dict)

    def object_ids(self):
        return [o["id"] for o in self.objects]

    def to_dict(self) -> dict:
        return {
            "version": MANIFEST_VERSION,
            "name": self.name,
            "objects": self.objects,
            "labels": self.labels_path,
            "trials": self.trials,
            "visual": self.visual,
            "trials_per_object": self.trials_per_object,
            "views_per_object": self.views_per_object,
            "preprocessing": self.preprocessing,
            "visual_preprocessing": self.visual_preprocessing,
        }


def save_manifest(path, manifest: DatasetManifest) -> None:
    with open(path, "w") as fh:
        fh.write(json.dumps(manifest.to_dict(), sort_keys=True, indent=1) + "\n")


def load_manifest(path) -> DatasetManifest:
    """Strict parse; structural problems raise immediately."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise InvalidInputError(f"cannot read manifest {path}: {e}") from None
    if not isinstance(data, dict):
        raise InvalidInputError(f"{path}: manifest must be a JSON object")
    if data.get("version") != MANIFEST_VERSION:
        raise InvalidInputError(f"{path}: unsupported manifest version {data.get('version')}")
    required = ("name", "objects", "labels", "trials", "visual")
    missing = [k for k in required if k not in data]
    if missing:
        raise InvalidInputError(f"{path}: manifest missing fields {missing}")
    return DatasetManifest(
        name=data["name"],
        objects=data["objects"],
        labels_path=data["labels"],
        trials=data["trials"],
        visual=data["visual"],
        trials_per_object=int(data.get("trials_per_object", 10)),
        views_per_object=int(data.get("views_per_object", N_VIEWS)),
        preprocessing=data.get("preprocessing", default_preprocessing()),
        visual_preprocessing=data.get("visual_preprocessing", {}),
    )


@dataclass(frozen=True)
class Finding:
    """One validation problem, pointing at the file and field involved."""

    file: str
    field: str
    message: str

    def __str__(self):
        return f"{self.file} [{self.field}]: {self.message}"


def validate(manifest: DatasetManifest, root) -> list:
    """Check counts, file integrity, sample-rate ratios, label completeness.

    Total: malformed inputs become findings, never exceptions.  An intact
    dataset yields an empty list.
    """
    root = Path(root)
    findings = []
    object_ids = manifest.object_ids()
    if len(set(object_ids)) != len(object_ids):
        findings.append(Finding("manifest", "objects", "duplicate object ids"))

    # label table covers all objects
    labels_file = root / manifest.labels_path
    try:
        rows = formats.read_labels_csv(labels_file)
        labeled = {r[0] for r in rows}
        for obj in object_ids:
            if obj not in labeled:
                findings.append(Finding(str(labels_file), "object_id",
                                        f"object {obj} has no label row"))
        for obj in sorted(labeled - set(object_ids)):
            findings.append(Finding(str(labels_file), "object_id",
                                    f"label row for unknown object {obj}"))
    except Exception as e:  # noqa: BLE001 - validation must be total
        findings.append(Finding(str(labels_file), "labels", str(e)))

    # haptic trial index: per object, trials_per_object x fingers x EPs
    by_object = {obj: set() for obj in object_ids}
    for entry in manifest.trials:
        key = (entry.get("trial"), entry.get("finger"), entry.get("ep"))
        obj = entry.get("object_id")
        if obj not in by_object:
            findings.append(Finding("manifest", "trials",
                                    f"trial entry for unknown object {obj}"))
            continue
        if key in by_object[obj]:
            findings.append(Finding("manifest", "trials",
                                    f"duplicate trial entry {obj}/{key}"))
        by_object[obj].add(key)
    expected_keys = {
        (t, f, ep)
        for t in range(manifest.trials_per_object)
        for f in FINGERS
        for ep in EPS
    }
    for obj, keys in by_object.items():
        n_trials = len({k[0] for k in keys})
        if keys != expected_keys:
            findings.append(Finding(
                "manifest", "trials",
                f"object {obj}: has {n_trials} trials / {len(keys)} files, "
                f"expected {manifest.trials_per_object} trials "
                f"({len(expected_keys)} files)"))

    for entry in manifest.trials:
        path = root / entry.get("path", "")
        try:
            chans = formats.read_trial_file(path)
        except Exception as e:  # noqa: BLE001
            findings.append(Finding(str(path), "trial-file", str(e)))
            continue
        base_len = chans["P_DC"].size
        lens = {c: chans[c].size for c in chans if c not in ("P_AC",)}
        if len(set(lens.values())) != 1:
            findings.append(Finding(str(path), "lengths",
                                    f"100 Hz channels disagree: {sorted(set(lens.values()))}"))
        if base_len and abs(chans["P_AC"].size - DECIMATION * base_len) > DECIMATION:
            ratio = chans["P_AC"].size / base_len
            findings.append(Finding(
                str(path), "sample-rate",
                f"P_AC/P_DC length ratio {ratio:.1f}, expected ~{DECIMATION}"))
        elif not base_len:
            findings.append(Finding(str(path), "lengths", "empty 100 Hz channels"))

    # visual feature files: one per object, views_per_object maps each
    visual_objects = [v.get("object_id") for v in manifest.visual]
    for obj in object_ids:
        if visual_objects.count(obj) != 1:
            findings.append(Finding("manifest", "visual",
                                    f"object {obj}: {visual_objects.count(obj)} feature files, expected 1"))
    for entry in manifest.visual:
        path = root / entry.get("path", "")
        try:
            grids = formats.read_feature_maps(path)
        except Exception as e:  # noqa: BLE001
            findings.append(Finding(str(path), "feature-file", str(e)))
            continue
        if grids.shape[0] != manifest.views_per_object:
            findings.append(Finding(str(path), "views",
                                    f"{grids.shape[0]} views, expected {manifest.views_per_object}"))
    return findings
