"""Core image/mask containers and PNG/JPEG codecs.

All pixel intensities live in [0, 1]; 8-bit files map v -> v/255 and
16-bit PNGs map v -> v/65535.  Arrays are frozen after construction so
instances can be shared freely across worker processes and threads.
"""

from __future__ import annotations

import dataclasses
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

LUMA_WEIGHTS = (0.299, 0.587, 0.114)


class DecodeError(ValueError):
    """File exists but cannot be decoded as a supported raster."""


class UnsupportedImageError(ValueError):
    """Decodable image in an unsupported pixel layout (alpha, CMYK, ...)."""


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclasses.dataclass(frozen=True, eq=False)
class ImageRaster:
    """H x W x C intensity raster, values in [0, 1], C in {1, 3}."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim == 2:
            data = data[:, :, None]
        if data.ndim != 3 or data.shape[2] not in (1, 3):
            raise ValueError(f"expected HxWx{{1,3}} data, got shape {data.shape}")
        if data.size == 0:
            raise ValueError("empty raster")
        if data.min() < 0.0 or data.max() > 1.0:
            raise ValueError("intensities must lie in [0, 1]")
        object.__setattr__(self, "data", _freeze(data))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


@dataclasses.dataclass(frozen=True, eq=False)
class BinaryLabel:
    """H x W boolean mask."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=bool)
        if bits.ndim != 2:
            raise ValueError(f"expected HxW bits, got shape {bits.shape}")
        object.__setattr__(self, "bits", _freeze(bits))

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    def count(self) -> int:
        return int(self.bits.sum())


@dataclasses.dataclass(frozen=True, eq=False)
class FloatMap:
    """H x W non-negative float map (difference maps, probability maps)."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError(f"expected HxW values, got shape {values.shape}")
        if values.size and values.min() < 0.0:
            raise ValueError("values must be >= 0")
        object.__setattr__(self, "values", _freeze(values))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


@dataclasses.dataclass(frozen=True, eq=False)
class Homography:
    """3x3 projective transform, normalized so m[2,2] == 1 when possible."""

    m: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.m, dtype=np.float64)
        if m.shape != (3, 3):
            raise ValueError(f"expected 3x3 matrix, got shape {m.shape}")
        if abs(np.linalg.det(m)) <= 1e-12:
            raise ValueError("homography is singular")
        if abs(m[2, 2]) > 1e-12:
            m = m / m[2, 2]
        object.__setattr__(self, "m", _freeze(m))

    def inverse(self) -> "Homography":
        return Homography(np.linalg.inv(self.m))

    def apply(self, pts: np.ndarray) -> np.ndarray:
        """Map (N, 2) points through the transform."""
        pts = np.asarray(pts, dtype=np.float64)
        ph = np.c_[pts, np.ones(len(pts))]
        q = ph @ self.m.T
        return q[:, :2] / q[:, 2:3]

    @staticmethod
    def identity() -> "Homography":
        return Homography(np.eye(3))


def load_image(path) -> ImageRaster:
    """Decode a PNG/JPEG file into a normalized raster.

    8-bit values map to v/255, 16-bit PNG to v/65535.  Images carrying
    an alpha channel or exotic color modes are rejected rather than
    silently converted.
    """
    path = Path(path)
    try:
        with Image.open(path) as img:
            img.load()
            mode = img.mode
            if mode in ("RGBA", "LA", "PA") or (mode == "P" and "transparency" in img.info):
                raise UnsupportedImageError(f"{path}: alpha channels are not supported")
            if mode == "P":
                img = img.convert("RGB")
                mode = "RGB"
            if mode in ("L", "RGB"):
                arr = np.asarray(img, dtype=np.float64) / 255.0
            elif mode in ("I;16", "I;16B", "I;16L"):
                arr = np.asarray(img, dtype=np.float64) / 65535.0
            elif mode == "I":
                arr = np.asarray(img, dtype=np.float64)
                if arr.size and arr.max() > 65535:
                    raise UnsupportedImageError(f"{path}: integer image exceeds 16-bit range")
                arr = arr / 65535.0
            else:
                raise UnsupportedImageError(f"{path}: unsupported mode {mode!r}")
    except FileNotFoundError:
        raise
    except UnidentifiedImageError as exc:
        raise DecodeError(f"{path}: not a decodable PNG/JPEG") from exc
    except OSError as exc:
        raise DecodeError(f"{path}: {exc}") from exc
    return ImageRaster(np.clip(arr, 0.0, 1.0))


def save_mask(mask: BinaryLabel, path) -> None:
    """Write a binary mask as single-channel 8-bit PNG (true -> 255)."""
    arr = np.where(mask.bits, 255, 0).astype(np.uint8)
    Image.fromarray(arr, mode="L").save(Path(path), format="PNG")


def save_float_map(fmap: FloatMap, path) -> None:
    """Write a [0,1] float map as 16-bit grayscale PNG (v -> round(v*65535))."""
    values = fmap.values
    if values.size and values.max() > 1.0:
        raise ValueError("float map values must be <= 1 for 16-bit encoding")
    arr = np.rint(values * 65535.0).astype(np.uint16)
    Image.fromarray(arr).save(Path(path), format="PNG")


def load_float_map(path) -> FloatMap:
    """Read a grayscale PNG back into a [0,1] float map."""
    raster = load_image(path)
    if raster.channels != 1:
        raise UnsupportedImageError(f"{path}: expected single-channel map")
    return FloatMap(raster.data[:, :, 0])


def to_gray(img: ImageRaster) -> FloatMap:
    """Collapse to luma using 0.299/0.587/0.114; 1-channel passes through."""
    if img.channels == 1:
        return FloatMap(img.data[:, :, 0])
    w = np.array(LUMA_WEIGHTS)
    return FloatMap(img.data @ w)
