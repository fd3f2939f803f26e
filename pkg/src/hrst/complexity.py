"""Mean-mutual-information texture complexity and scale-model calibration."""
import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from ._validation import check_image, check_same_shape
from .exceptions import DegenerateFitError, InvalidArgumentError
from .image import to_luma


@dataclass(frozen=True)
class ComplexityConfig:
    num_bins: int = 16

    def __post_init__(self):
        if int(self.num_bins) < 2:
            raise InvalidArgumentError(f"num_bins must be >= 2, got {self.num_bins}")


@dataclass(frozen=True)
class CalibrationSample:
    delta: float
    phi: float
    mmi_gap: Optional[float] = None

    def __post_init__(self):
        if not 0.0 < self.phi < 1.0:
            raise InvalidArgumentError(f"phi must lie in (0, 1), got {self.phi}")


def quantize(plane, num_bins):
    """Equal-width bin indices over the fixed range [0, 1]."""
    idx = np.floor(np.asarray(plane) * num_bins).astype(np.int64)
    return np.clip(idx, 0, num_bins - 1)


def _entropy(codes, base=np.e):
    _, counts = np.unique(codes, return_counts=True)
    p = counts / counts.sum()
    return float(-(p * np.log(p)).sum() / np.log(base))


def mmi_terms(plane, cfg=None, base=np.e):
    """Return (marginal entropy, joint 2x2 entropy) of a single plane."""
    cfg = cfg or ComplexityConfig()
    img = check_image(plane, name="plane", channels=1, min_size=2)[0]
    nb = int(cfg.num_bins)
    q = quantize(img, nb)
    tl, tr = q[:-1, :-1], q[:-1, 1:]
    bl, br = q[1:, :-1], q[1:, 1:]
    joint = ((tl * nb + tr) * nb + bl) * nb + br
    return _entropy(q, base), _entropy(joint, base)


def mmi(plane, cfg=None, base=np.e, clamp=True):
    """Mean mutual information of a plane, in [0, 1].

    Computed as (4*ME - JE) / (3*log(N_b)) where ME is the entropy of the
    pooled pixel histogram and JE the entropy of 2x2 window 4-tuples.
    Zero for constant planes, near one for fully predictable layouts.
    """
    cfg = cfg or ComplexityConfig()
    me, je = mmi_terms(plane, cfg, base)
    value = (4.0 * me - je) / (3.0 * np.log(cfg.num_bins) / np.log(base))
    if clamp:
        value = min(max(value, 0.0), 1.0)
    return float(value)


def mmi_delta(interp_lr, initial_hr, cfg=None):
    """MMI gained by the initial HR image over the interpolated LR image."""
    a = check_image(interp_lr, name="interp_lr")
    b = check_image(initial_hr, name="initial_hr")
    if a.shape[1:] != b.shape[1:]:
        raise InvalidArgumentError(
            f"interp_lr is {a.shape[2]}x{a.shape[1]} but initial_hr is {b.shape[2]}x{b.shape[1]}"
        )
    return mmi(to_luma(b), cfg) - mmi(to_luma(a), cfg)


def fit_line(delta, phi):
    """Ordinary least-squares (slope, intercept) of phi against delta."""
    x = np.asarray(delta, dtype=np.float64).ravel()
    y = np.asarray(phi, dtype=np.float64).ravel()
    check_same_shape(x, y, ("delta", "phi"))
    if x.size < 2:
        raise DegenerateFitError("need at least two calibration samples")
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if sxx == 0.0 or np.ptp(x) == 0.0:
        raise DegenerateFitError("all calibration deltas are equal")
    slope = float(xc @ (y - y.mean())) / sxx
    intercept = float(y.mean() - slope * x.mean())
    return slope, intercept


def fit_scale_model(samples, **model_kwargs):
    """Fit a ScaleModel line to calibration samples.

    Extra keyword arguments (step, min_phi, max_phi) are forwarded to the
    ScaleModel constructor.
    """
    from .scale import ScaleModel

    samples = list(samples)
    slope, intercept = fit_line([s.delta for s in samples], [s.phi for s in samples])
    return ScaleModel(slope=slope, intercept=intercept, **model_kwargs)


def read_calibration_csv(path):
    """Parse a ``delta,phi[,mmi_gap]`` CSV into CalibrationSample objects."""
    samples = []
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        fields = [f.strip() for f in (reader.fieldnames or [])]
        if fields[:2] != ["delta", "phi"]:
            raise InvalidArgumentError(f"{path}: header must start with 'delta,phi', got {fields}")
        for lineno, row in enumerate(reader, start=2):
            row = {k.strip(): v for k, v in row.items() if k is not None}
            try:
                gap = row.get("mmi_gap")
                samples.append(
                    CalibrationSample(
                        float(row["delta"]),
                        float(row["phi"]),
                        float(gap) if gap not in (None, "") else None,
                    )
                )
            except (TypeError, ValueError) as exc:
                raise InvalidArgumentError(f"{path}:{lineno}: {exc}") from exc
    return samples
