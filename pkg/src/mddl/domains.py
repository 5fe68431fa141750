"""Deterministic synthetic style-domain transforms.

These stand in for learned image-to-image generators: each transform maps a
single-domain dictionary to a new single-domain dictionary of the same
shape, is a pure function of (params, seed, input), and therefore commutes
with caching and parallel application.  Externally produced domain
dictionaries (e.g. GAN outputs) enter through the ordinary manifest format
instead, so nothing here is load-bearing for the solver.

Kinds and their parameters:

    illumination    gain (> 0), bias        -- gain * x + bias
    occlusion       row, col, height, width, fill -- rectangle overwrite
    additive_noise  sigma (>= 0)            -- seeded portable Gaussian noise
    blur            width (odd, >= 1)       -- separable box blur, edge clamp
    contrast        scale                   -- mean + scale * (x - mean)

``occlusion`` and ``blur`` interpret atoms as (height, width) grids and
need the transform's ``geometry``; identity parameter settings (gain 1 and
bias 0, sigma 0, width 1, scale 1) return the input data unchanged.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import rng
from .dictionary import Dictionary

KINDS = ("illumination", "occlusion", "additive_noise", "blur", "contrast")

_GRID_KINDS = ("occlusion", "blur")


@dataclass(frozen=True)
class DomainTransform:
    """One parametric style transform tagged with its output domain label."""

    kind: str
    label: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    geometry: tuple = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown transform kind {self.kind!r}; expected one of {KINDS}")
        if not self.label:
            raise ValueError("transform label must be nonempty")
        if self.geometry is not None:
            geo = tuple(int(v) for v in self.geometry)
            if len(geo) != 2 or geo[0] < 1 or geo[1] < 1:
                raise ValueError(f"geometry must be a (height, width) pair, got {self.geometry}")
            object.__setattr__(self, "geometry", geo)
        elif self.kind in _GRID_KINDS:
            raise ValueError(f"{self.kind} transforms need a (height, width) geometry")
        object.__setattr__(self, "params", dict(self.params))
        self._validate_params()

    def _validate_params(self):
        p = self.params
        if self.kind == "illumination":
            gain = p.get("gain", 1.0)
            if gain <= 0:
                raise ValueError(f"illumination gain must be positive, got {gain}")
        elif self.kind == "occlusion":
            h, w = self.geometry
            for key in ("row", "col", "height", "width"):
                if key not in p:
                    raise ValueError(f"occlusion needs parameter {key!r}")
            r, c, rh, rw = (int(p[k]) for k in ("row", "col", "height", "width"))
            if rh < 1 or rw < 1 or r < 0 or c < 0 or r + rh > h or c + rw > w:
                raise ValueError(
                    f"occlusion rectangle ({r},{c})+({rh}x{rw}) exceeds the {h}x{w} grid"
                )
        elif self.kind == "additive_noise":
            if p.get("sigma", 0.0) < 0:
                raise ValueError(f"noise sigma must be nonnegative, got {p.get('sigma')}")
        elif self.kind == "blur":
            width = int(p.get("width", 1))
            if width < 1 or width % 2 == 0:
                raise ValueError(f"blur width must be odd and >= 1, got {width}")


def _box_blur(images, width):
    # images: (count, h, w); separable box mean with edge-clamped padding
    k = width // 2
    padded = np.pad(images, ((0, 0), (k, k), (0, 0)), mode="edge")
    out = sum(padded[:, i:i + images.shape[1], :] for i in range(width)) / width
    padded = np.pad(out, ((0, 0), (0, 0), (k, k)), mode="edge")
    return sum(padded[:, :, i:i + images.shape[2]] for i in range(width)) / width


def apply_transform(t, source):
    """Apply one transform to a single-domain dictionary.

    The output shares d, n and class labels with the input, carries the
    transform's label as its sole domain, and is bit-reproducible from
    (params, seed, input).
    """
    if source.s != 1:
        raise ValueError(f"transforms apply to single-domain dictionaries, got s={source.s}")
    if t.geometry is not None and t.geometry[0] * t.geometry[1] != source.d:
        raise ValueError(
            f"geometry {t.geometry} covers {t.geometry[0] * t.geometry[1]} features, "
            f"dictionary has d={source.d}"
        )
    X = source.data
    p = t.params
    if t.kind == "illumination":
        gain, bias = p.get("gain", 1.0), p.get("bias", 0.0)
        out = X.copy() if (gain == 1.0 and bias == 0.0) else gain * X + bias
    elif t.kind == "occlusion":
        h, w = t.geometry
        r, c = int(p["row"]), int(p["col"])
        rh, rw = int(p["height"]), int(p["width"])
        imgs = X.T.reshape(source.n, h, w).copy()
        imgs[:, r:r + rh, c:c + rw] = p.get("fill", 0.0)
        out = imgs.reshape(source.n, source.d).T.copy()
    elif t.kind == "additive_noise":
        sigma = p.get("sigma", 0.0)
        if sigma == 0.0:
            out = X.copy()
        else:
            out = X.copy()
            for k in range(source.n):
                out[:, k] += sigma * rng.normal(rng.fold(t.seed, k), source.d)
    elif t.kind == "blur":
        width = int(p.get("width", 1))
        if width == 1:
            out = X.copy()
        else:
            h, w = t.geometry
            imgs = X.T.reshape(source.n, h, w)
            out = _box_blur(imgs, width).reshape(source.n, source.d).T.copy()
    else:  # contrast
        scale = p.get("scale", 1.0)
        if scale == 1.0:
            out = X.copy()
        else:
            means = X.mean(axis=0, keepdims=True)
            out = means + scale * (X - means)
    return Dictionary(data=out, class_labels=source.class_labels,
                      domain_labels=(t.label,))


def build_transform_suite(specs):
    """Validate a transform list for assembly: labels must be distinct."""
    transforms = list(specs)
    labels = [t.label for t in transforms]
    if len(set(labels)) != len(labels):
        raise ValueError(f"duplicate domain labels in suite: {labels}")
    return transforms


def load_suite(path):
    """Read a transform suite spec: a JSON array of
    {kind, label, seed, params, geometry} objects."""
    with open(path) as fh:
        raw = json.load(fh)
    if not isinstance(raw, list):
        raise ValueError(f"suite spec {path} must be a JSON array")
    transforms = []
    for i, entry in enumerate(raw):
        if "kind" not in entry or "label" not in entry:
            raise ValueError(f"suite entry {i} needs 'kind' and 'label'")
        geometry = entry.get("geometry")
        transforms.append(DomainTransform(
            kind=entry["kind"],
            label=entry["label"],
            params=entry.get("params", {}),
            seed=int(entry.get("seed", 0)),
            geometry=tuple(geometry) if geometry else None,
        ))
    return build_transform_suite(transforms)
