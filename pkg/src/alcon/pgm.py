"""PGM (P5, maxval 255) readers/writers for score maps and occupancy grids.

Occupancy grids use the reserved gray levels 0=Unknown, 128=Free,
255=Obstacle. Every map file gets a sidecar text header at `<path>.hdr`
with `resolution=<m> origin_x=<m> origin_y=<m>` lines. Row 0 of the
array is written first.
"""

import os

import numpy as np

from .grids import FREE, OBSTACLE, UNKNOWN, GridGeometry, OccupancyGrid, ScoreMap

OCC_TO_LEVEL = {UNKNOWN: 0, FREE: 128, OBSTACLE: 255}
LEVEL_TO_OCC = {v: k for k, v in OCC_TO_LEVEL.items()}


def _write_sidecar(path: str, geom: GridGeometry) -> None:
    with open(path + ".hdr", "w") as f:
        f.write(f"resolution={geom.resolution!r}\n")
        f.write(f"origin_x={geom.origin_x!r}\n")
        f.write(f"origin_y={geom.origin_y!r}\n")


def _read_sidecar(path: str) -> dict:
    hdr = {}
    with open(path + ".hdr") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            key, _, value = line.partition("=")
            hdr[key.strip()] = float(value)
    for key in ("resolution", "origin_x", "origin_y"):
        if key not in hdr:
            raise ValueError(f"sidecar {path}.hdr missing key {key}")
    return hdr


def _write_p5(path: str, array: np.ndarray) -> None:
    h, w = array.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        f.write(np.ascontiguousarray(array, dtype=np.uint8).tobytes())


def _read_p5(path: str) -> np.ndarray:
    with open(path, "rb") as f:
        data = f.read()
    if not data.startswith(b"P5"):
        raise ValueError(f"{path}: not a binary PGM (P5) file")
    # tokenize header: magic, width, height, maxval; comments start with '#'
    tokens = []
    i = 2
    while len(tokens) < 3:
        while i < len(data) and data[i:i + 1].isspace():
            i += 1
        if i < len(data) and data[i:i + 1] == b"#":
            while i < len(data) and data[i:i + 1] != b"\n":
                i += 1
            continue
        j = i
        while j < len(data) and not data[j:j + 1].isspace():
            j += 1
        if i == j:
            raise ValueError(f"{path}: truncated PGM header")
        tokens.append(data[i:j])
        i = j
    i += 1  # single whitespace after maxval
    w, h, maxval = int(tokens[0]), int(tokens[1]), int(tokens[2])
    if maxval != 255:
        raise ValueError(f"{path}: unsupported maxval {maxval}")
    raster = data[i:i + w * h]
    if len(raster) != w * h:
        raise ValueError(f"{path}: raster truncated")
    return np.frombuffer(raster, dtype=np.uint8).reshape(h, w).copy()


def write_scoremap(path: str, score: ScoreMap) -> None:
    _write_p5(path, score.scores)
    _write_sidecar(path, score.geometry)


def read_scoremap(path: str) -> ScoreMap:
    arr = _read_p5(path)
    hdr = _read_sidecar(path)
    geom = GridGeometry(arr.shape[1], arr.shape[0], hdr["resolution"],
                        hdr["origin_x"], hdr["origin_y"])
    return ScoreMap(geom, arr)


def write_occupancy(path: str, grid: OccupancyGrid) -> None:
    levels = np.zeros_like(grid.cells)
    levels[grid.cells == FREE] = 128
    levels[grid.cells == OBSTACLE] = 255
    _write_p5(path, levels)
    _write_sidecar(path, grid.geometry)


def read_occupancy(path: str) -> OccupancyGrid:
    levels = _read_p5(path)
    bad = ~np.isin(levels, (0, 128, 255))
    if bad.any():
        raise ValueError(f"{path}: non-reserved occupancy level "
                         f"{int(levels[bad][0])}")
    cells = np.zeros_like(levels)
    cells[levels == 128] = FREE
    cells[levels == 255] = OBSTACLE
    hdr = _read_sidecar(path)
    geom = GridGeometry(levels.shape[1], levels.shape[0], hdr["resolution"],
                        hdr["origin_x"], hdr["origin_y"])
    return OccupancyGrid(geom, cells)


def ensure_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path
