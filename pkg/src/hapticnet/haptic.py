"""Raw tactile trials -> 32x150 network input.

Per channel the pipeline is: z-score normalize, decimate the high-rate
pressure channel to the common rate, PCA-project the 19 electrode channels
to 4 per time step, subsample every series to a fixed length, and stack in
a fixed channel order.  Two fingers x five subsampling offsets turn each
trial into 10 training instances.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

# Exploratory procedures, in the fixed channel-stacking order.
EPS = ("squeeze", "hold", "slow_slide", "fast_slide")
FINGERS = (0, 1)
OFFSETS = (0, 1, 2, 3, 4)

ELECTRODES = tuple(f"E_{i}" for i in range(1, 20))
BASE_CHANNELS = ("P_AC", "P_DC", "T_AC", "T_DC")
CHANNELS = BASE_CHANNELS + ELECTRODES

PAC_RATE = 2200
BASE_RATE = 100
DECIMATION = PAC_RATE // BASE_RATE  # 22
RESAMPLE_LEN = 150
PCA_COMPONENTS = 4

INSTANCE_CHANNELS = (len(BASE_CHANNELS) + PCA_COMPONENTS) * len(EPS)  # 32


@dataclass
class HapticTrial:
    """One exploration of one object: all channels for both fingers and EPs.

    ``signals[(finger, ep)]`` maps channel name -> 1-D array.  The 100 Hz
    channels within one (finger, ep) must share a length; P_AC is ~22x
    longer (one 100 Hz sample of slack tolerated).
    """

    object_id: str
    trial_index: int
    signals: dict

    def channels(self, finger: int, ep: str) -> dict:
        try:
            return self.signals[(finger, ep)]
        except KeyError:
            raise InvalidInputError(
                f"trial {self.object_id}/{self.trial_index} is missing (finger={finger}, ep={ep})"
            ) from None

    def validate(self) -> None:
        for (finger, ep), chans in self.signals.items():
            missing = [c for c in CHANNELS if c not in chans]
            if missing:
                raise InvalidInputError(
                    f"{self.object_id}/{self.trial_index} f{finger} {ep}: missing {missing}"
                )
            base_len = len(chans["P_DC"])
            for c in CHANNELS[1:]:
                if len(chans[c]) != base_len:
                    raise InvalidInputError(
                        f"{self.object_id}/{self.trial_index} f{finger} {ep}: "
                        f"{c} has length {len(chans[c])}, expected {base_len}"
                    )
            if abs(len(chans["P_AC"]) - DECIMATION * base_len) > DECIMATION:
                raise InvalidInputError(
                    f"{self.object_id}/{self.trial_index} f{finger} {ep}: P_AC length "
                    f"{len(chans['P_AC'])} is not ~{DECIMATION}x the 100 Hz length {base_len}"
                )


@dataclass
class PcaModel:
    """Per-EP electrode PCA: channel means, top-k components, variance ratios."""

    mean: np.ndarray           # (19,)
    components: np.ndarray     # (19, k), orthonormal columns
    explained_variance_ratio: np.ndarray  # (k,), non-increasing

    def to_dict(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "components": self.components.tolist(),
            "explained_variance_ratio": self.explained_variance_ratio.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PcaModel":
        return cls(
            mean=np.asarray(d["mean"], dtype=np.float64),
            components=np.asarray(d["components"], dtype=np.float64),
            explained_variance_ratio=np.asarray(d["explained_variance_ratio"], dtype=np.float64),
        )


@dataclass
class InstanceMatrix:
    """Preprocessed 32x150 network input with provenance tags."""

    values: np.ndarray
    object_id: str
    trial_index: int
    finger: int
    offset: int

    def __post_init__(self):
        if self.values.shape != (INSTANCE_CHANNELS, RESAMPLE_LEN):
            raise InvalidInputError(
                f"instance must be {INSTANCE_CHANNELS}x{RESAMPLE_LEN}, got {self.values.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise InvalidInputError("instance contains non-finite values")


def zscore_normalize(series: np.ndarray) -> np.ndarray:
    """(s - mean) / population std; constant series normalize to all zeros."""
    s = np.asarray(series, dtype=np.float64)
    if s.size == 0:
        raise InvalidInputError("cannot normalize an empty series")
    std = s.std()
    if std == 0.0:
        return np.zeros_like(s)
    return (s - s.mean()) / std


def decimate_pac(series: np.ndarray) -> np.ndarray:
    """2200 Hz -> 100 Hz by non-overlapping 22-sample window means.

    A trailing partial window is dropped; window means double as a crude
    anti-alias filter for the high-frequency vibration channel.
    """
    s = np.asarray(series, dtype=np.float64)
    n = s.size // DECIMATION
    if n == 0:
        raise InvalidInputError(
            f"series of length {s.size} is shorter than one {DECIMATION}-sample window"
        )
    return s[:n * DECIMATION].reshape(n, DECIMATION).mean(axis=1)


def resample_fixed(series: np.ndarray, length: int = RESAMPLE_LEN, offset: int = 0) -> np.ndarray:
    """Uniform index subsampling to a fixed length, starting at ``offset``.

    Picks indices offset + round(j*(len-1-offset)/(length-1)); the last
    input sample is always included.  Rounding is half-to-even.
    """
    s = np.asarray(series, dtype=np.float64)
    if offset < 0:
        raise InvalidInputError(f"offset must be non-negative, got {offset}")
    if s.size < length + offset:
        raise InvalidInputError(
            f"series of length {s.size} too short for length={length}, offset={offset}"
        )
    j = np.arange(length, dtype=np.float64)
    idx = offset + np.rint(j * (s.size - 1 - offset) / (length - 1)).astype(np.int64)
    return s[idx]


def pca_fit(samples: np.ndarray, k: int = PCA_COMPONENTS) -> PcaModel:
    """Fit the top-k principal components of (N, 19) electrode samples.

    Components are eigenvectors of the column-centered covariance in
    descending eigenvalue order, computed via SVD; the sign of each
    component is fixed so its largest-magnitude entry is positive.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 2:
        raise InvalidInputError(f"samples must be 2-D, got shape {x.shape}")
    n, d = x.shape
    if n < k:
        raise InvalidInputError(f"need at least {k} samples to fit {k} components, got {n}")
    mean = x.mean(axis=0)
    centered = x - mean
    _, svals, vt = np.linalg.svd(centered, full_matrices=False)
    comps = vt[:k].T.copy()
    for j in range(comps.shape[1]):
        i = np.argmax(np.abs(comps[:, j]))
        if comps[i, j] < 0:
            comps[:, j] = -comps[:, j]
    variances = svals ** 2
    total = variances.sum()
    if total == 0.0:
        ratios = np.zeros(k)
    else:
        ratios = variances[:k] / total
    if comps.shape[1] < k:  # fewer non-trivial directions than requested
        raise InvalidInputError(f"rank deficit: only {comps.shape[1]} components available")
    return PcaModel(mean=mean, components=comps, explained_variance_ratio=ratios)


def pca_project(model: PcaModel, vec: np.ndarray) -> np.ndarray:
    """Project a 19-vector (or (..., 19) stack) onto the fitted components."""
    v = np.asarray(vec, dtype=np.float64)
    if v.shape[-1] != model.mean.shape[0]:
        raise InvalidInputError(
            f"vector dim {v.shape[-1]} != model dim {model.mean.shape[0]}"
        )
    return (v - model.mean) @ model.components


def _processed_ep_block(chans: dict, pca: PcaModel, offset: int) -> np.ndarray:
    """8x150 block for one (finger, ep): 4 base channels + 4 electrode PCs."""
    rows = []
    pac = zscore_normalize(np.asarray(chans["P_AC"], dtype=np.float64))
    rows.append(resample_fixed(decimate_pac(pac), RESAMPLE_LEN, offset))
    for name in BASE_CHANNELS[1:]:
        rows.append(resample_fixed(zscore_normalize(chans[name]), RESAMPLE_LEN, offset))
    elec = np.stack([zscore_normalize(chans[e]) for e in ELECTRODES], axis=1)  # (T, 19)
    projected = pca_project(pca, elec)  # (T, k)
    for j in range(projected.shape[1]):
        rows.append(resample_fixed(projected[:, j], RESAMPLE_LEN, offset))
    return np.stack(rows)


def assemble_instance(trial: HapticTrial, finger: int, offset: int, pca: dict) -> InstanceMatrix:
    """Build the 32x150 input for one (finger, offset) view of a trial.

    ``pca`` maps EP name -> fitted PcaModel.  Channel order per EP is
    (P_AC, P_DC, T_AC, T_DC, E-pc1..E-pc4), EPs stacked in EPS order.
    """
    missing = [ep for ep in EPS if ep not in pca]
    if missing:
        raise InvalidInputError(f"no PCA model for EPs: {missing}")
    blocks = []
    for ep in EPS:
        chans = trial.channels(finger, ep)
        absent = [c for c in CHANNELS if c not in chans]
        if absent:
            raise InvalidInputError(
                f"{trial.object_id}/{trial.trial_index} f{finger} {ep}: missing channels {absent}"
            )
        blocks.append(_processed_ep_block(chans, pca[ep], offset))
    return InstanceMatrix(
        values=np.concatenate(blocks, axis=0),
        object_id=trial.object_id,
        trial_index=trial.trial_index,
        finger=finger,
        offset=offset,
    )


def augment(trial: HapticTrial, pca: dict) -> list:
    """All 10 instances of a trial: 2 fingers x 5 subsampling offsets."""
    return [
        assemble_instance(trial, finger, offset, pca)
        for finger in FINGERS
        for offset in OFFSETS
    ]
