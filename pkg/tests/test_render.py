import numpy as np
import pytest
from scipy import ndimage

from periodic_cubics import render
from periodic_cubics.dynamics import ConfigurationError
from periodic_cubics.render import COLLISION, ESCAPE, MARKED, OTHER, RenderConfig


def cube_config(**kw):
    base = dict(plane="dynamical", center=0j, width=4.0, pixels=(101, 101), p=1, max_iter=200,
                seed_map=(0j, 0j))
    base.update(kw)
    return RenderConfig(**base)


def test_cube_plane():
    cfg = cube_config()
    res = render.render(cfg)
    grid, px = render.pixel_grid(cfg)
    r = np.abs(grid)
    assert np.all(res.labels[r > 1 + px] == ESCAPE)
    assert np.all(res.labels[r < 1 - px] == MARKED)
    assert tuple(res.rgb[50, 50]) == render.PALETTES["standard"]["marked"]
    assert tuple(res.rgb[0, 0]) == render.PALETTES["standard"]["escape"]


def test_pixel_grid_orientation():
    grid, px = render.pixel_grid(cube_config(pixels=(4, 2), width=4.0))
    assert px == 1.0
    # row 0 is the top of the image
    assert grid[0, 0] == complex(-1.5, 0.5) and grid[1, 3] == complex(1.5, -0.5)


def test_png_is_deterministic_and_carries_config(tmp_path):
    cfg = cube_config(pixels=(40, 30))
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    render.render_to_files(cfg, str(a), str(tmp_path / "a.json"))
    render.render_to_files(cfg, str(b))
    assert a.read_bytes() == b.read_bytes()
    again = render.read_config(str(a))
    assert again == cfg
    render.render_to_files(again, str(b))
    assert a.read_bytes() == b.read_bytes()


def test_thread_count_does_not_change_output(tmp_path, monkeypatch):
    cfg = RenderConfig(plane="parameter_a_slice", width=3.0, pixels=(60, 45), p=2)
    out = []
    for n in (1, 3):
        monkeypatch.setenv(render.THREADS_ENV, str(n))
        path = tmp_path / f"{n}.png"
        render.render_to_files(cfg, str(path))
        out.append(path.read_bytes())
    assert out[0] == out[1]


def test_limits_and_validation():
    with pytest.raises(ConfigurationError):
        render.render(cube_config(pixels=(3000, 3000)))
    with pytest.raises(ConfigurationError):
        render.render(cube_config(seed_map=None))
    with pytest.raises(ConfigurationError):
        render.render(cube_config(width=0.0))
    with pytest.raises(ConfigurationError):
        render.render(RenderConfig(plane="parameter_a_slice", p=5))
    with pytest.raises(ConfigurationError):
        RenderConfig.from_json({"plane": "dynamical", "colour": "red"})


def test_p2_slice():
    cfg = RenderConfig(plane="parameter_a_slice", width=3.0, pixels=(200, 150), p=2, max_iter=200)
    res = render.render(cfg)
    counts = res.metrics["counts"]
    assert counts["escape"] and counts["marked"] and counts["other"]
    px = res.metrics["pixel_size"]
    hits = [complex(*z) for z in res.metrics["collisions"]]
    assert hits
    assert all(min(abs(z - 2 / 3), abs(z + 2 / 3)) <= px for z in hits)
    assert res.metrics["fiber_failures"] == 0


def test_p3_slice_structure():
    # the bounded locus is connected, so is its projection to the a-plane;
    # a single sheet is cut along branch cuts, hence the union over sheets.
    # Filaments thinner than a pixel leave small islands, so only the bulk
    # is required to be one piece.
    bounded = None
    for sheet in range(8):
        cfg = RenderConfig(plane="parameter_a_slice", width=4.0, pixels=(120, 120), p=3, max_iter=300,
                           sheet=sheet, mark_collisions=False)
        lab = render.render(cfg).labels
        border = np.concatenate([lab[0], lab[-1], lab[:, 0], lab[:, -1]])
        assert np.all(border == ESCAPE)
        here = (lab == MARKED) | (lab == OTHER)
        bounded = here if bounded is None else bounded | here
    labels, n = ndimage.label(bounded, structure=np.ones((3, 3)))
    sizes = np.bincount(labels.ravel())[1:]
    assert n >= 1 and sizes.max() >= 0.9 * bounded.sum()


def test_inverted_palette():
    cfg = cube_config(pixels=(20, 20), palette="inverted")
    res = render.render(cfg)
    assert tuple(res.rgb[0, 0]) == render.PALETTES["inverted"]["escape"]
