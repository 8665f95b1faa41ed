"""
Skeleton rendering with Pillow.

A fixed orthographic camera looks along the horizontal plane after a yaw of
``azimuth_deg`` about the vertical y axis. Inputs are drawn green, ground truth
blue and predictions red, in that order, so a prediction that matches the
ground truth hides it completely.
"""

import logging
import os
from typing import List, Optional, Sequence, Tuple

import numpy as np
from PIL import Image, ImageDraw

from motion_data.joint_layout import JointLayout
from motion_data.sequence import ForecastWindow
from motion_data.windows import uncenter_frames
from utils.error_handler import ConfigurationError, RenderError
from utils.file_manager import FileManager

logger = logging.getLogger(__name__)

BACKGROUND = (255, 255, 255)
INPUT_COLOR = (0, 160, 0)
TARGET_COLOR = (0, 0, 255)
PREDICTION_COLOR = (255, 0, 0)
LINE_WIDTH = 2


class SkeletonRenderer:
    def __init__(self, layout: JointLayout, azimuth_deg: float = 30.0, image_size: int = 256,
                 margin: int = 12):
        if not layout.edges:
            raise RenderError("Joint layout has no edges to draw")
        if image_size <= 2 * margin:
            raise ConfigurationError(f"image_size must exceed {2 * margin}, got {image_size}")
        self.layout = layout
        self.azimuth = np.deg2rad(azimuth_deg)
        self.image_size = image_size
        self.margin = margin

    def _project(self, points: np.ndarray) -> np.ndarray:
        """[..., 3] mm -> [..., 2] screen-plane mm (x right, y up)."""
        c, s = np.cos(self.azimuth), np.sin(self.azimuth)
        x = c * points[..., 0] + s * points[..., 2]
        return np.stack([x, points[..., 1]], axis=-1)

    def _fit(self, projected: Sequence[np.ndarray]) -> Tuple[np.ndarray, float]:
        stacked = np.concatenate([p.reshape(-1, 2) for p in projected])
        low, high = stacked.min(axis=0), stacked.max(axis=0)
        span = float(max((high - low).max(), 1.0))
        scale = (self.image_size - 2 * self.margin) / span
        center = (low + high) / 2.0
        return center, scale

    def _to_pixels(self, projected: np.ndarray, center: np.ndarray, scale: float) -> np.ndarray:
        half = self.image_size / 2.0
        px = half + (projected[..., 0] - center[0]) * scale
        py = half - (projected[..., 1] - center[1]) * scale
        return np.round(np.stack([px, py], axis=-1)).astype(int)

    def _draw_frame(self, draw: ImageDraw.ImageDraw, pixels: np.ndarray, color: Tuple[int, int, int]):
        size = self.layout.size
        for p in range(pixels.shape[0] // size):
            person = pixels[p * size:(p + 1) * size]
            for a, b in self.layout.edges:
                draw.line([tuple(person[a]), tuple(person[b])], fill=color, width=LINE_WIDTH)

    def _image(self, layers: Sequence[Tuple[np.ndarray, Tuple[int, int, int]]],
               center: np.ndarray, scale: float) -> Image.Image:
        image = Image.new("RGB", (self.image_size, self.image_size), BACKGROUND)
        draw = ImageDraw.Draw(image)
        for frames, color in layers:
            for frame in frames:
                self._draw_frame(draw, self._to_pixels(frame, center, scale), color)
        return image

    def render(self, inputs: np.ndarray, prediction: np.ndarray, target: np.ndarray,
               out_path: str, frames: int = 0) -> List[str]:
        """
        Write a composite image of all frames and, optionally, ``frames``
        per-frame images of the output horizon (evenly spaced).

        Arrays are [T][J][3] in one coordinate frame. Returns written paths.
        """
        if prediction.shape != target.shape:
            raise RenderError(f"Prediction {prediction.shape} and target {target.shape} differ")
        if not 0 <= frames <= target.shape[0]:
            raise ConfigurationError(f"Cannot render {frames} of {target.shape[0]} output frames")

        projected = [self._project(np.asarray(a, dtype=np.float64)) for a in (inputs, target, prediction)]
        center, scale = self._fit(projected)
        p_in, p_target, p_pred = projected

        directory = os.path.dirname(os.path.abspath(out_path))
        FileManager.ensure_directory(directory)
        stem, _ = os.path.splitext(out_path)

        written = [out_path]
        self._image([(p_in, INPUT_COLOR), (p_target, TARGET_COLOR), (p_pred, PREDICTION_COLOR)],
                    center, scale).save(out_path, format="PNG")

        if frames:
            picks = np.linspace(0, target.shape[0] - 1, frames).round().astype(int)
            for n, k in enumerate(picks):
                path = f"{stem}_frame{n:03d}.png"
                self._image([(p_in[-1:], INPUT_COLOR), (p_target[k:k + 1], TARGET_COLOR),
                             (p_pred[k:k + 1], PREDICTION_COLOR)], center, scale).save(path, format="PNG")
                written.append(path)

        logger.info(f"Rendered {len(written)} image(s) to {directory}")
        return written


def render_window(window: ForecastWindow, prediction: np.ndarray, out_path: str,
                  azimuth_deg: float = 30.0, image_size: int = 256, frames: int = 0,
                  layout: Optional[JointLayout] = None) -> List[str]:
    """Render a window and a global-coordinate prediction for it."""
    renderer = SkeletonRenderer(layout or window.layout, azimuth_deg, image_size)
    return renderer.render(uncenter_frames(window.input, window), np.asarray(prediction),
                           uncenter_frames(window.target, window), out_path, frames)
