"""Raster images of dynamical planes and of a-slices of the period-p curve.

Colors follow the usual convention: the basin of infinity (or the escape
locus) is white, the basin of the marked cycle grey and everything else
black.  Images are 8-bit RGB PNG files carrying their full configuration
as a text chunk, so a render can be repeated from the file alone.

Work is split into row blocks that may run on several threads (count from
the ``PERIODIC_CUBICS_THREADS`` environment variable); every pixel is
computed independently and blocks are assembled in order, so the output
does not depend on the thread count.
"""
from __future__ import annotations

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from PIL import Image
from PIL.PngImagePlugin import PngInfo

from . import curve
from .dynamics import ConfigurationError, CubicMap

THREADS_ENV = "PERIODIC_CUBICS_THREADS"

PALETTES = {
    "standard": {
        "escape": (255, 255, 255),
        "marked": (160, 160, 160),
        "other": (0, 0, 0),
        "sentinel": (255, 0, 255),
        "collision": (255, 0, 0),
    },
    "inverted": {
        "escape": (0, 0, 0),
        "marked": (96, 96, 96),
        "other": (255, 255, 255),
        "sentinel": (255, 0, 255),
        "collision": (255, 0, 0),
    },
}

ESCAPE, MARKED, OTHER, SENTINEL, COLLISION = range(5)
_KEYS = ("escape", "marked", "other", "sentinel", "collision")


@dataclass
class RenderConfig:
    """Everything that determines an image.

    ``sheet`` selects the fiber point in a parameter slice: an integer picks
    that index in the sorted fiber, ``"continuation"`` follows the sheet
    through the raster from the root nearest to ``seed_map``.
    """

    plane: str = "dynamical"
    center: complex = 0j
    width: float = 4.0
    pixels: tuple[int, int] = (256, 256)
    p: int = 1
    max_iter: int = 200
    palette: str = "standard"
    seed_map: Optional[tuple[complex, complex]] = None
    sheet: int | str = 0
    mark_collisions: bool = True
    max_pixels: int = 4_000_000

    def validate(self) -> None:
        if self.plane not in ("dynamical", "parameter_a_slice"):
            raise ConfigurationError(f"unknown plane {self.plane!r}")
        w, h = self.pixels
        if w < 1 or h < 1:
            raise ConfigurationError("pixel counts must be positive")
        if w * h > self.max_pixels:
            raise ConfigurationError(f"{w}x{h} pixels exceeds the limit of {self.max_pixels}")
        if not self.width > 0:
            raise ConfigurationError("width must be positive")
        if self.palette not in PALETTES:
            raise ConfigurationError(f"unknown palette {self.palette!r}")
        if self.max_iter < 1:
            raise ConfigurationError("max_iter must be positive")
        if self.plane == "dynamical":
            if self.seed_map is None:
                raise ConfigurationError("a dynamical plane needs seed_map")
            if self.p < 1:
                raise ConfigurationError("p must be positive")
        else:
            if self.p not in curve.SUPPORTED_P:
                raise ConfigurationError(f"parameter slices need p in {curve.SUPPORTED_P}")
            if not (self.sheet == "continuation" or isinstance(self.sheet, int)):
                raise ConfigurationError("sheet must be an index or 'continuation'")

    def to_json(self) -> dict:
        d = asdict(self)
        d["center"] = [self.center.real, self.center.imag]
        d["pixels"] = list(self.pixels)
        if self.seed_map is not None:
            a, v = self.seed_map
            d["seed_map"] = {"a": [a.real, a.imag], "v": [v.real, v.imag]}
        return d

    @classmethod
    def from_json(cls, d: dict) -> "RenderConfig":
        d = dict(d)
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ConfigurationError(f"unknown render keys: {sorted(extra)}")
        if "center" in d:
            d["center"] = _as_complex(d["center"])
        if "pixels" in d:
            d["pixels"] = tuple(int(x) for x in d["pixels"])
        if d.get("seed_map") is not None:
            s = d["seed_map"]
            d["seed_map"] = (_as_complex(s["a"]), _as_complex(s["v"]))
        return cls(**d)


def _as_complex(x) -> complex:
    if isinstance(x, (list, tuple)):
        return complex(float(x[0]), float(x[1]))
    if isinstance(x, str):
        return complex(x.replace(" ", ""))
    return complex(x)


@dataclass
class RenderResult:
    labels: np.ndarray
    rgb: np.ndarray
    metrics: dict = field(default_factory=dict)


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def pixel_grid(cfg: RenderConfig) -> tuple[np.ndarray, float]:
    """Pixel centres (row 0 at the top) and the pixel size."""
    w, h = cfg.pixels
    px = cfg.width / w
    xs = cfg.center.real + (np.arange(w) + 0.5 - w / 2) * px
    ys = cfg.center.imag - (np.arange(h) + 0.5 - h / 2) * px
    return xs[None, :] + 1j * ys[:, None], px


def _row_blocks(h: int, n: int) -> list[slice]:
    n = max(1, min(n, h))
    edges = np.linspace(0, h, n + 1).astype(int)
    return [slice(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def _map_blocks(fn, h: int) -> list:
    blocks = _row_blocks(h, 4 * thread_count())
    if thread_count() == 1:
        return [fn(b) for b in blocks]
    with ThreadPoolExecutor(thread_count()) as pool:
        return list(pool.map(fn, blocks))


# --- per-pixel classification ---------------------------------------------------------


def _iterate(a: np.ndarray, v: np.ndarray, z: np.ndarray, n: int) -> np.ndarray:
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(n):
            z = (z - a) ** 2 * (z + 2 * a) + v
    return z


def classify_points(a: np.ndarray, v: np.ndarray, z: np.ndarray, p: int, max_iter: int) -> np.ndarray:
    """ESCAPE, MARKED or OTHER for each starting point z of f_{a,v}.

    MARKED means the orbit ends within 1e-6 of the cycle of a (period p); the
    marked cycle is superattracting, so the budget is rarely the limit.
    """
    bound = np.maximum(4.0, 2.0 * (np.abs(a) + np.abs(v)) + 2.0)
    out = np.full(z.shape, OTHER, dtype=np.uint8)
    escaped = np.zeros(z.shape, dtype=bool)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(max_iter):
            z = np.where(escaped, 0, (z - a) ** 2 * (z + 2 * a) + v)
            escaped |= ~(np.abs(z) < bound)
        near = np.zeros(z.shape, dtype=bool)
        c = a.copy()
        for _ in range(p):
            near |= np.abs(z - c) < 1e-6 * (1 + np.abs(c))
            c = (c - a) ** 2 * (c + 2 * a) + v
    out[near] = MARKED
    out[escaped] = ESCAPE
    return out


# --- fibers on a grid ---------------------------------------------------------------------


def fiber_grid(p: int, a: np.ndarray, tol: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
    """All roots of Phi_p(a, .) for an array of a, sorted like
    :func:`curve.fiber_roots`, and a mask of pixels whose roots failed the
    residual check.  Uses batched companion-matrix eigenvalues polished by
    Newton on the orbit of a."""
    mat = curve._tables(p)[0]
    deg = mat.shape[0] - 1
    flat = a.reshape(-1)
    powers = flat[:, None] ** np.arange(mat.shape[1])[None, :]
    coeffs = powers @ mat.T  # ascending in v, monic
    comp = np.zeros((flat.size, deg, deg), dtype=complex)
    comp[:, 0, :] = -coeffs[:, deg - 1::-1] / coeffs[:, deg:deg + 1]
    if deg > 1:
        comp[:, np.arange(1, deg), np.arange(deg - 1)] = 1.0
    roots = np.linalg.eigvals(comp)
    A = flat[:, None] * np.ones((1, deg))
    for _ in range(6):
        val, der = _orbit_and_dv(A, roots, p)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(der != 0, val / der, 0)
        roots = roots - step
    val, der = _orbit_and_dv(A, roots, p)
    with np.errstate(divide="ignore", invalid="ignore"):
        res = np.abs(val / der) / (1 + np.abs(roots))
    bad = ~np.all(np.isfinite(res) & (res <= tol), axis=1)
    order = np.lexsort((roots.imag, roots.real))  # along the last axis
    srt = np.take_along_axis(roots, order, axis=1)
    return srt.reshape(a.shape + (deg,)), bad.reshape(a.shape)


def _orbit_and_dv(a: np.ndarray, v: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    z = v.copy()
    dz = np.ones_like(z)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(p - 1):
            dz = 3 * (z * z - a * a) * dz + 1
            z = (z - a) ** 2 * (z + 2 * a) + v
    return z - a, dz


def collision_mask(p: int, a: np.ndarray, roots: np.ndarray, px: float) -> np.ndarray:
    """Pixels containing a sheet collision: for the closest pair of roots,
    one Newton step on (v_i - v_j)^2 as a function of a (slopes from the
    implicit function theorem) predicts the collision point, which must fall
    inside the pixel."""
    mat, da, _ = curve._tables(p)
    deg = roots.shape[-1]
    flat_a = a.reshape(-1)
    flat_r = roots.reshape(-1, deg)
    diff = np.abs(flat_r[:, :, None] - flat_r[:, None, :])
    diff[:, np.arange(deg), np.arange(deg)] = np.inf
    k = np.argmin(diff.reshape(flat_a.size, -1), axis=1)
    i, j = np.divmod(k, deg)
    rows = np.arange(flat_a.size)
    vi, vj = flat_r[rows, i], flat_r[rows, j]
    pa = flat_a[:, None] ** np.arange(mat.shape[1])[None, :]
    cv = pa @ mat.T
    ca = pa[:, : da.shape[1]] @ da.T

    def slope(v):
        powers = v[:, None] ** np.arange(deg + 1)[None, :]
        dphi_da = np.sum(ca * powers, axis=1)
        dphi_dv = np.sum(cv[:, 1:] * np.arange(1, deg + 1) * powers[:, :-1], axis=1)
        return -dphi_da / dphi_dv

    with np.errstate(divide="ignore", invalid="ignore"):
        shift = (vi - vj) / (2 * (slope(vi) - slope(vj)))
        # the one-step prediction is off by a fraction of a percent of a pixel;
        # the slack makes a collision on a pixel edge mark both neighbours
        half = 0.5 * px * 1.02
        hit = (np.abs(shift.real) <= half) & (np.abs(shift.imag) <= half)
    return hit.reshape(a.shape)


# --- renders --------------------------------------------------------------------------------


def render_dynamical_array(cfg: RenderConfig) -> RenderResult:
    cfg.validate()
    grid, px = pixel_grid(cfg)
    a, v = cfg.seed_map
    f = CubicMap(a, v, cfg.p)
    h = grid.shape[0]

    def block(rows: slice):
        z = grid[rows]
        aa = np.full(z.shape, f.a)
        vv = np.full(z.shape, f.v)
        return classify_points(aa, vv, z, cfg.p, cfg.max_iter)

    labels = np.concatenate(_map_blocks(block, h), axis=0)
    return _finish(cfg, labels, {"pixel_size": px})


def render_parameter_array(cfg: RenderConfig) -> RenderResult:
    cfg.validate()
    grid, px = pixel_grid(cfg)
    h = grid.shape[0]
    parts = _map_blocks(lambda rows: fiber_grid(cfg.p, grid[rows]), h)
    roots = np.concatenate([r for r, _ in parts], axis=0)
    bad = np.concatenate([b for _, b in parts], axis=0)
    deg = roots.shape[-1]
    if cfg.sheet == "continuation":
        v = _continue_sheet(roots, cfg)
    else:
        if not 0 <= cfg.sheet < deg:
            raise ConfigurationError(f"sheet index must be below {deg}")
        v = roots[..., cfg.sheet]

    def block(rows: slice):
        aa = grid[rows]
        return classify_points(aa, v[rows], -aa, cfg.p, cfg.max_iter)

    labels = np.concatenate(_map_blocks(block, h), axis=0)
    labels[bad] = SENTINEL
    metrics = {"pixel_size": px, "fiber_failures": int(bad.sum())}
    if cfg.mark_collisions and deg > 1:
        hits = collision_mask(cfg.p, grid, roots, px) & ~bad
        labels[hits] = COLLISION
        metrics["collisions"] = [[z.real, z.imag] for z in grid[hits]]
    return _finish(cfg, labels, metrics)


def _continue_sheet(roots: np.ndarray, cfg: RenderConfig) -> np.ndarray:
    """Raster continuation: each pixel takes the root nearest to its left
    neighbour (the pixel above for the first column); the top-left pixel
    takes the root nearest to the seed map's v."""
    h, w, _ = roots.shape
    out = np.empty((h, w), dtype=complex)
    ref = cfg.seed_map[1] if cfg.seed_map is not None else roots[0, 0, 0]
    for i in range(h):
        if i:
            ref = out[i - 1, 0]
        for j in range(w):
            r = roots[i, j]
            ref = r[np.argmin(np.abs(r - ref))]
            out[i, j] = ref
    return out


def _finish(cfg: RenderConfig, labels: np.ndarray, metrics: dict) -> RenderResult:
    pal = PALETTES[cfg.palette]
    lut = np.array([pal[k] for k in _KEYS], dtype=np.uint8)
    counts = {k: int(np.sum(labels == i)) for i, k in enumerate(_KEYS)}
    metrics = dict(metrics, counts=counts)
    return RenderResult(labels, lut[labels], metrics)


def render(cfg: RenderConfig) -> RenderResult:
    if cfg.plane == "dynamical":
        return render_dynamical_array(cfg)
    return render_parameter_array(cfg)


def write_png(result: RenderResult, cfg: RenderConfig, path: str) -> None:
    """PNG with the configuration in a ``config`` text chunk; nothing
    time-dependent goes into the file."""
    info = PngInfo()
    info.add_text("config", json.dumps(cfg.to_json(), sort_keys=True))
    Image.fromarray(result.rgb, mode="RGB").save(path, format="PNG", pnginfo=info)


def read_config(path: str) -> RenderConfig:
    with Image.open(path) as im:
        text = im.text.get("config")
    if text is None:
        raise ConfigurationError(f"{path} carries no render configuration")
    return RenderConfig.from_json(json.loads(text))


def render_to_files(cfg: RenderConfig, png_path: str, json_path: Optional[str] = None) -> dict:
    """Render, write the PNG and (optionally) a JSON sidecar with the config
    echo, metrics and timing.  Returns the sidecar content."""
    t0 = time.perf_counter()
    result = render(cfg)
    write_png(result, cfg, png_path)
    meta = {
        "config": cfg.to_json(),
        "metrics": result.metrics,
        "seconds": time.perf_counter() - t0,
        "threads": thread_count(),
    }
    if json_path is not None:
        with open(json_path, "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2)
    return meta
