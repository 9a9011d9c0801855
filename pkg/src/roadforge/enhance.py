"""Reality-enhancement stage.

Per-vehicle crops are pulled from the render, restyled (either by the
built-in photometric harmonization baseline or by an external translator
behind a directory exchange protocol), and composited back in place.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy import ndimage

from .background import read_image, write_image
from .errors import DimensionMismatch, EmptyMask, EmptyRing, ProtocolViolation
from PIL import Image

CROPS_SCHEMA = "roadforge-crops/1"

# ITU-R 601 luminance/chrominance transform
_RGB_TO_YCC = np.array(
    [
        [0.299, 0.587, 0.114],
        [-0.168736, -0.331264, 0.5],
        [0.5, -0.418688, -0.081312],
    ]
)
_YCC_TO_RGB = np.linalg.inv(_RGB_TO_YCC)


@dataclass(frozen=True)
class Crop:
    instance_id: int
    patch: np.ndarray  # HxWx3 uint8
    mask: np.ndarray  # HxW bool
    origin: tuple  # (x, y) pixel offset in the frame

    def __post_init__(self):
        if self.patch.shape[:2] != self.mask.shape:
            raise DimensionMismatch("patch and mask dims differ")


@dataclass(frozen=True)
class CropSet:
    frame_id: str
    crops: tuple  # ordered by render order (ascending instance id)


def extract_crops(render, padding=8, frame_id="frame") -> CropSet:
    """One crop per rendered instance: tight mask bbox dilated by padding."""
    h, w = render.mask.shape
    crops = []
    for instance_id in sorted(set(np.unique(render.mask)) - {-1}):
        inst_mask = render.mask == instance_id
        ys, xs = np.nonzero(inst_mask)
        x0 = max(int(xs.min()) - padding, 0)
        x1 = min(int(xs.max()) + padding + 1, w)
        y0 = max(int(ys.min()) - padding, 0)
        y1 = min(int(ys.max()) + padding + 1, h)
        crops.append(
            Crop(
                instance_id=int(instance_id),
                patch=render.image[y0:y1, x0:x1].copy(),
                mask=inst_mask[y0:y1, x0:x1].copy(),
                origin=(x0, y0),
            )
        )
    return CropSet(frame_id=frame_id, crops=tuple(crops))


def harmonize_crop(crop: Crop, frame: np.ndarray, ring_width=16) -> Crop:
    """Photometric baseline: move masked-pixel statistics toward the local
    background ring, channel-wise in a luminance/chrominance space.

    Only masked pixels change; the sigma ratio is clamped to [0.5, 2].
    """
    if not crop.mask.any():
        raise EmptyMask(f"instance {crop.instance_id}: mask is empty")
    h, w = frame.shape[:2]
    x0, y0 = crop.origin
    frame_mask = np.zeros((h, w), dtype=bool)
    frame_mask[y0 : y0 + crop.mask.shape[0], x0 : x0 + crop.mask.shape[1]] = crop.mask
    dilated = ndimage.binary_dilation(frame_mask, iterations=ring_width)
    ring = dilated & ~frame_mask
    if not ring.any():
        raise EmptyRing(f"instance {crop.instance_id}: no background ring")

    ring_ycc = frame[ring].astype(float) @ _RGB_TO_YCC.T
    veh_ycc = crop.patch[crop.mask].astype(float) @ _RGB_TO_YCC.T
    mu_v, sigma_v = veh_ycc.mean(axis=0), veh_ycc.std(axis=0)
    mu_b, sigma_b = ring_ycc.mean(axis=0), ring_ycc.std(axis=0)
    ratio = np.clip(sigma_b / np.maximum(sigma_v, 1e-6), 0.5, 2.0)
    mapped = (veh_ycc - mu_v) * ratio + mu_b
    rgb = np.clip(mapped @ _YCC_TO_RGB.T, 0, 255)
    patch = crop.patch.copy()
    patch[crop.mask] = np.rint(rgb).astype(np.uint8)
    return replace(crop, patch=patch)


def composite(frame: np.ndarray, crops: CropSet) -> np.ndarray:
    """Paste masked crop pixels back at their origins, in render order."""
    h, w = frame.shape[:2]
    out = frame.copy()
    for crop in crops.crops:
        x0, y0 = crop.origin
        ch, cw = crop.mask.shape
        if x0 < 0 or y0 < 0 or x0 + cw > w or y0 + ch > h:
            raise DimensionMismatch(f"crop {crop.instance_id} exceeds frame bounds")
        region = out[y0 : y0 + ch, x0 : x0 + cw]
        region[crop.mask] = crop.patch[crop.mask]
    return out


def export_for_translation(crops: CropSet, directory):
    """Write patches, masks, and an index file for an external translator."""
    directory = Path(directory)
    (directory / "crops" / crops.frame_id).mkdir(parents=True, exist_ok=True)
    (directory / "masks" / crops.frame_id).mkdir(parents=True, exist_ok=True)
    index = {"schema": CROPS_SCHEMA, "frames": {crops.frame_id: []}}
    for crop in crops.crops:
        name = f"{crop.instance_id}.png"
        write_image(crop.patch, directory / "crops" / crops.frame_id / name)
        Image.fromarray(crop.mask.astype(np.uint8) * 255, "L").save(
            directory / "masks" / crops.frame_id / name, format="PNG"
        )
        index["frames"][crops.frame_id].append(
            {
                "instance_id": crop.instance_id,
                "width": int(crop.mask.shape[1]),
                "height": int(crop.mask.shape[0]),
                "origin": list(crop.origin),
            }
        )
    index_path = directory / "index.json"
    if index_path.exists():
        with open(index_path, "r", encoding="utf-8") as f:
            existing = json.load(f)
        existing["frames"].update(index["frames"])
        index = existing
    with open(index_path, "w", encoding="utf-8") as f:
        json.dump(index, f, indent=2)
        f.write("\n")


def import_translated(directory, frame_id) -> CropSet:
    """Read back a translated crop set, enforcing the exchange contract.

    The external tool may alter patch pixel content only: ids, dims, and
    masks must be unchanged.
    """
    directory = Path(directory)
    with open(directory / "index.json", "r", encoding="utf-8") as f:
        index = json.load(f)
    if index.get("schema") != CROPS_SCHEMA:
        raise ProtocolViolation(f"unsupported schema {index.get('schema')!r}")
    entries = index.get("frames", {}).get(frame_id)
    if entries is None:
        raise ProtocolViolation(f"frame {frame_id!r} missing from index")
    crops = []
    for entry in entries:
        instance_id = entry["instance_id"]
        name = f"{instance_id}.png"
        patch_path = directory / "crops" / frame_id / name
        mask_path = directory / "masks" / frame_id / name
        if not patch_path.exists():
            raise ProtocolViolation(f"crop {instance_id} missing")
        if not mask_path.exists():
            raise ProtocolViolation(f"mask {instance_id} missing")
        patch = read_image(patch_path)
        with Image.open(mask_path) as im:
            mask = np.asarray(im.convert("L")) > 127
        expected = (entry["height"], entry["width"])
        if patch.shape[:2] != expected:
            raise ProtocolViolation(
                f"crop {instance_id} resized to {patch.shape[:2]}, expected {expected}"
            )
        if mask.shape != expected:
            raise ProtocolViolation(f"mask {instance_id} resized")
        crops.append(
            Crop(
                instance_id=instance_id,
                patch=patch,
                mask=mask,
                origin=tuple(entry["origin"]),
            )
        )
    return CropSet(frame_id=frame_id, crops=tuple(crops))


def verify_masks_unchanged(original: CropSet, imported: CropSet):
    """Cross-check an imported set against the original export."""
    orig = {c.instance_id: c for c in original.crops}
    imp = {c.instance_id: c for c in imported.crops}
    missing = sorted(set(orig) - set(imp))
    if missing:
        raise ProtocolViolation(f"crops dropped by translator: {missing}")
    for instance_id, crop in imp.items():
        ref = orig.get(instance_id)
        if ref is None:
            raise ProtocolViolation(f"unexpected crop {instance_id}")
        if crop.origin != ref.origin or crop.mask.shape != ref.mask.shape:
            raise ProtocolViolation(f"crop {instance_id} geometry changed")
        if not np.array_equal(crop.mask, ref.mask):
            raise ProtocolViolation(f"mask {instance_id} altered")
