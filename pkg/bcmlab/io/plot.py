#
# Part of bcmlab: bidirectional consistency models on toy densities
# Copyright (C) 2024-2026 The bcmlab developers
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful, but
# WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE. See the GNU
# General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program. If not, see <http://www.gnu.org/licenses/>.
#
"""Quick-look PNG plots drawn with Pillow.

CSV files are the real outputs; these images are a convenience and
callers treat any failure here as non-fatal.

"""

import logging

import numpy as np
from PIL import Image
from PIL import ImageDraw

__all__ = ['scatter_plot', 'line_plot', 'heatmap_plot', 'PALETTE']

logger = logging.getLogger(__name__)

PALETTE = [(31, 119, 180), (255, 127, 14), (44, 160, 44), (214, 39, 40),
           (148, 103, 189), (140, 86, 75)]

BACKGROUND = (255, 255, 255)
MARGIN = 16


def _bounds(values, pad=0.05):
    low = np.min(values, axis=0)
    high = np.max(values, axis=0)
    span = np.where(high > low, high - low, 1.0)
    return low - pad * span, high + pad * span


def _to_pixels(points, low, high, size):
    width, height = size
    inner = np.array([width - 2 * MARGIN, height - 2 * MARGIN], dtype=np.float64)
    scaled = (points - low) / (high - low) * inner
    px = MARGIN + scaled[:, 0]
    py = height - MARGIN - scaled[:, 1]
    return np.stack([px, py], axis=1)


def scatter_plot(path, groups, size=(512, 512), radius=1):
    """Draw 2-D point clouds, one colour per group.

    :param groups: ``label -> (n, 2) array``.
    :type groups: dict

    """
    clouds = [np.atleast_2d(np.asarray(g, dtype=np.float64))[:, :2]
              for g in groups.values()]
    low, high = _bounds(np.concatenate(clouds))
    img = Image.new('RGB', size, BACKGROUND)
    draw = ImageDraw.Draw(img)
    for i, (label, cloud) in enumerate(zip(groups, clouds)):
        colour = PALETTE[i % len(PALETTE)]
        for x, y in _to_pixels(cloud, low, high, size):
            draw.ellipse([x - radius, y - radius, x + radius, y + radius],
                         fill=colour)
        draw.text((MARGIN, MARGIN + 12 * i), str(label), fill=colour)
    img.save(path)
    return path


def line_plot(path, xs, series, size=(640, 400), log_y=False):
    """Draw one polyline per entry of ``series`` (``label -> ys``)."""
    xs = np.asarray(xs, dtype=np.float64)
    curves = {k: np.asarray(v, dtype=np.float64) for k, v in series.items()}
    if log_y:
        curves = {k: np.log10(np.maximum(v, 1e-12)) for k, v in curves.items()}
    stacked = np.concatenate([np.stack([xs, ys], axis=1)
                              for ys in curves.values()])
    low, high = _bounds(stacked)
    img = Image.new('RGB', size, BACKGROUND)
    draw = ImageDraw.Draw(img)
    for i, (label, ys) in enumerate(curves.items()):
        colour = PALETTE[i % len(PALETTE)]
        pixels = _to_pixels(np.stack([xs, ys], axis=1), low, high, size)
        if len(pixels) > 1:
            draw.line([tuple(p) for p in pixels], fill=colour, width=1)
        draw.text((MARGIN, MARGIN + 12 * i), str(label), fill=colour)
    img.save(path)
    return path


def heatmap_plot(path, matrix, size=None):
    """Render a nonnegative matrix as a grayscale image (darker = larger).

    Row 0 is drawn at the bottom.

    """
    matrix = np.asarray(matrix, dtype=np.float64)
    peak = matrix.max() if matrix.size and matrix.max() > 0 else 1.0
    shade = 255 - np.round(255 * np.sqrt(matrix / peak)).astype(np.uint8)
    img = Image.fromarray(np.ascontiguousarray(np.flipud(shade)))
    if size is not None:
        img = img.resize(size, Image.NEAREST)
    img.save(path)
    return path
