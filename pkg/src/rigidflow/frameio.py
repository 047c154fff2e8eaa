"""Observation bundle (FrameSet) and bit-exact readers/writers for its files.

Wire formats follow the KITTI scene-flow devkit so the artifacts interoperate
with its tooling:

  disparity  16-bit single-channel PNG, value = uint16 / 256, stored 0 = invalid
  flow       16-bit 3-channel PNG, u = (ch1 - 2^15) / 64, v = (ch2 - 2^15) / 64,
             ch3 > 0 marks valid
  instances  8- or 16-bit single-channel PNG, raw labels remapped to a
             contiguous {0..n} with 0 = background
  images     8-bit gray or RGB PNG, normalized to [0, 1] floats at load
  calib      one text line: fx fy cx cy baseline

Dataset layout for frame <id> under a root directory:

  image_2/<id>_10.png   image_2/<id>_11.png    left pair (t0, t1)
  image_3/<id>_10.png   image_3/<id>_11.png    right pair
  disp_0/<id>.png       disp_1/<id>.png        disparity images for t0 / t1
  flow/<id>.png                                left optical flow t0 -> t1
  flow_right/<id>.png                          optional right flow (unused)
  instance/<id>.png                            instance segmentation on left t0
  calib/<id>.txt                               intrinsics + baseline
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np

from .errors import DataError, FormatError
from .geometry import CameraRig, Twist

_GRAY_COEFFS = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True)
class ImageGrid:
    """Dense intensity grid, 1 or 3 channels, values normalized to [0, 1]."""

    data: np.ndarray  # (H, W, C) float64

    def __post_init__(self):
        d = np.asarray(self.data, dtype=float)
        if d.ndim == 2:
            d = d[:, :, None]
        if d.ndim != 3 or d.shape[2] not in (1, 3):
            raise ValueError(f"image must be (H, W, 1|3), got {d.shape}")
        if d.size and (d.min() < 0.0 or d.max() > 1.0):
            raise ValueError("image values must lie in [0, 1]")
        object.__setattr__(self, "data", d)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    def grayscale(self) -> "ImageGrid":
        if self.channels == 1:
            return self
        return ImageGrid(np.clip(self.data @ _GRAY_COEFFS, 0.0, 1.0)[:, :, None])


@dataclass(frozen=True)
class ScalarField:
    """Per-pixel scalar (disparity in pixels) with a validity mask."""

    values: np.ndarray  # (H, W) float64
    valid: np.ndarray   # (H, W) bool

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        m = np.asarray(self.valid, dtype=bool)
        if v.ndim != 2 or m.shape != v.shape:
            raise ValueError("values/valid must be matching 2-D arrays")
        live = v[m]
        if live.size and (not np.all(np.isfinite(live)) or live.min() < 0.0):
            raise ValueError("valid disparity entries must be finite and >= 0")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "valid", m)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class FlowField:
    """Per-pixel 2-D displacement in pixels with a validity mask."""

    u: np.ndarray
    v: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        v = np.asarray(self.v, dtype=float)
        m = np.asarray(self.valid, dtype=bool)
        if u.ndim != 2 or u.shape != v.shape or u.shape != m.shape:
            raise ValueError("u/v/valid must be matching 2-D arrays")
        if not (np.all(np.isfinite(u[m])) and np.all(np.isfinite(v[m]))):
            raise ValueError("valid flow entries must be finite")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "valid", m)

    @property
    def width(self) -> int:
        return self.u.shape[1]

    @property
    def height(self) -> int:
        return self.u.shape[0]


@dataclass(frozen=True)
class InstanceMask:
    """Per-pixel instance id, 0 reserved for the background."""

    label: np.ndarray  # (H, W) int

    def __post_init__(self):
        lab = np.asarray(self.label)
        if lab.ndim != 2 or not np.issubdtype(lab.dtype, np.integer):
            raise ValueError("labels must be a 2-D integer array")
        if lab.size and lab.min() < 0:
            raise ValueError("labels must be non-negative")
        object.__setattr__(self, "label", lab.astype(np.int64))

    @property
    def width(self) -> int:
        return self.label.shape[1]

    @property
    def height(self) -> int:
        return self.label.shape[0]

    def ids(self) -> list[int]:
        return [int(i) for i in np.unique(self.label)]


@dataclass(frozen=True)
class FrameSet:
    """Everything observed for one stereo frame pair."""

    left0: ImageGrid
    right0: ImageGrid
    left1: ImageGrid
    right1: ImageGrid
    disp0: ScalarField
    disp1: ScalarField
    flow_left: FlowField
    seg: InstanceMask
    rig: CameraRig
    flow_right: FlowField | None = None

    def __post_init__(self):
        shape = (self.rig.height, self.rig.width)
        grids = {
            "left0": self.left0, "right0": self.right0,
            "left1": self.left1, "right1": self.right1,
            "disp0": self.disp0, "disp1": self.disp1,
            "flow_left": self.flow_left, "seg": self.seg,
        }
        if self.flow_right is not None:
            grids["flow_right"] = self.flow_right
        for name, g in grids.items():
            if (g.height, g.width) != shape:
                raise DataError(
                    f"{name} is {g.width}x{g.height}, rig expects {shape[1]}x{shape[0]}"
                )


def _read_png(path) -> np.ndarray:
    arr = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if arr is None:
        if not os.path.exists(path):
            raise DataError(f"missing file: {path}")
        raise FormatError(f"unreadable PNG: {path}")
    return arr


def read_disparity_png(path) -> ScalarField:
    arr = _read_png(path)
    if arr.ndim != 2:
        raise FormatError(f"{path}: disparity PNG must be single-channel, got shape {arr.shape}")
    if arr.dtype != np.uint16:
        raise FormatError(f"{path}: disparity PNG must be 16-bit, got {arr.dtype}")
    valid = arr > 0
    values = arr.astype(np.float64) / 256.0
    values[~valid] = 0.0
    return ScalarField(values, valid)


def write_disparity_png(field: ScalarField, path) -> None:
    enc = np.rint(np.clip(field.values * 256.0, 0.0, 65535.0)).astype(np.uint16)
    enc[~field.valid] = 0
    _write_png(path, enc)


def read_flow_png(path) -> FlowField:
    arr = _read_png(path)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise FormatError(f"{path}: flow PNG must be 3-channel, got shape {arr.shape}")
    if arr.dtype != np.uint16:
        raise FormatError(f"{path}: flow PNG must be 16-bit, got {arr.dtype}")
    rgb = arr[:, :, ::-1].astype(np.float64)  # cv2 loads BGR
    valid = rgb[:, :, 2] > 0
    u = (rgb[:, :, 0] - 2.0**15) / 64.0
    v = (rgb[:, :, 1] - 2.0**15) / 64.0
    u[~valid] = 0.0
    v[~valid] = 0.0
    return FlowField(u, v, valid)


def write_flow_png(field: FlowField, path) -> None:
    h, w = field.u.shape
    enc = np.zeros((h, w, 3), dtype=np.uint16)
    enc[:, :, 0] = np.rint(np.clip(field.u * 64.0 + 2.0**15, 0.0, 65535.0)).astype(np.uint16)
    enc[:, :, 1] = np.rint(np.clip(field.v * 64.0 + 2.0**15, 0.0, 65535.0)).astype(np.uint16)
    enc[~field.valid, 0] = 2**15
    enc[~field.valid, 1] = 2**15
    enc[:, :, 2] = field.valid.astype(np.uint16)
    _write_png(path, enc[:, :, ::-1])


def read_instance_png(path) -> tuple[InstanceMask, dict[int, int]]:
    """Load a label image, remapping raw ids to contiguous {0..n} (0 stays 0)."""
    arr = _read_png(path)
    if arr.ndim != 2:
        raise FormatError(f"{path}: instance PNG must be single-channel, got shape {arr.shape}")
    if arr.dtype not in (np.uint8, np.uint16):
        raise FormatError(f"{path}: instance PNG must be 8- or 16-bit, got {arr.dtype}")
    raw = arr.astype(np.int64)
    mapping = {0: 0}
    nxt = 1
    for value in np.unique(raw):
        value = int(value)
        if value == 0:
            continue
        mapping[value] = nxt
        nxt += 1
    lut = np.zeros(raw.max() + 1, dtype=np.int64)
    for old, new in mapping.items():
        lut[old] = new
    return InstanceMask(lut[raw]), mapping


def write_instance_png(mask: InstanceMask, path) -> None:
    if mask.label.max() > 65535:
        raise FormatError("instance ids exceed 16-bit range")
    _write_png(path, mask.label.astype(np.uint16))


def read_image_png(path) -> ImageGrid:
    arr = _read_png(path)
    if arr.dtype != np.uint8:
        raise FormatError(f"{path}: image PNG must be 8-bit, got {arr.dtype}")
    if arr.ndim == 3:
        if arr.shape[2] != 3:
            raise FormatError(f"{path}: image PNG must have 1 or 3 channels")
        arr = arr[:, :, ::-1]  # BGR -> RGB
    return ImageGrid(arr.astype(np.float64) / 255.0)


def write_image_png(img: ImageGrid, path) -> None:
    enc = np.rint(img.data * 255.0).astype(np.uint8)
    if enc.shape[2] == 1:
        enc = enc[:, :, 0]
    else:
        enc = enc[:, :, ::-1]
    _write_png(path, enc)


def _write_png(path, arr: np.ndarray) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if not cv2.imwrite(str(path), arr):
        raise DataError(f"failed to write {path}")


def read_calib(path, width: int, height: int) -> CameraRig:
    try:
        text = Path(path).read_text()
    except FileNotFoundError:
        raise DataError(f"missing file: {path}") from None
    parts = text.split()
    if len(parts) != 5:
        raise FormatError(f"{path}: calib file must hold 'fx fy cx cy baseline'")
    fx, fy, cx, cy, baseline = (float(p) for p in parts)
    return CameraRig(fx=fx, fy=fy, cx=cx, cy=cy, baseline=baseline, width=width, height=height)


def write_calib(rig: CameraRig, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(f"{rig.fx:.17g} {rig.fy:.17g} {rig.cx:.17g} {rig.cy:.17g} {rig.baseline:.17g}\n")


def read_motions(path) -> dict[int, Twist]:
    """Per-instance motion file: one 'id v0 v1 v2 w0 w1 w2' line per instance."""
    try:
        lines = Path(path).read_text().splitlines()
    except FileNotFoundError:
        raise DataError(f"missing file: {path}") from None
    motions = {}
    for line in lines:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 7:
            raise FormatError(f"{path}: motion lines must hold 'id v0 v1 v2 w0 w1 w2'")
        motions[int(parts[0])] = Twist.from_vector([float(p) for p in parts[1:]])
    return motions


def write_motions(motions: dict[int, Twist], path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = []
    for inst_id in sorted(motions):
        vec = motions[inst_id].as_vector()
        lines.append(str(inst_id) + " " + " ".join(f"{x:.17g}" for x in vec))
    path.write_text("\n".join(lines) + "\n")


def load_frameset(root, frame_id: str, rig: CameraRig | None = None) -> FrameSet:
    """Load and validate one frame from the documented directory layout."""
    root = Path(root)
    left0 = read_image_png(root / "image_2" / f"{frame_id}_10.png")
    left1 = read_image_png(root / "image_2" / f"{frame_id}_11.png")
    right0 = read_image_png(root / "image_3" / f"{frame_id}_10.png")
    right1 = read_image_png(root / "image_3" / f"{frame_id}_11.png")
    disp0 = read_disparity_png(root / "disp_0" / f"{frame_id}.png")
    disp1 = read_disparity_png(root / "disp_1" / f"{frame_id}.png")
    flow_left = read_flow_png(root / "flow" / f"{frame_id}.png")
    seg, _ = read_instance_png(root / "instance" / f"{frame_id}.png")
    flow_right = None
    right_path = root / "flow_right" / f"{frame_id}.png"
    if right_path.exists():
        flow_right = read_flow_png(right_path)
    if rig is None:
        rig = read_calib(root / "calib" / f"{frame_id}.txt", left0.width, left0.height)
    return FrameSet(
        left0=left0, right0=right0, left1=left1, right1=right1,
        disp0=disp0, disp1=disp1, flow_left=flow_left, seg=seg,
        rig=rig, flow_right=flow_right,
    )
