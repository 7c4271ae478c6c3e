"""
Reading and writing the CSV and image files used by the command line.

CSV dialect: comma separated, ``.`` decimal point, lines starting with ``#``
are comments.  Outputs start with ``# key=value`` comment lines that echo the
configuration (including the seed) that produced them; ``# config=`` holds
the whole configuration as JSON so that a run can be repeated from its output.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import InputDataError
from .functional import DOMap, FunctionalDataset, FunctionalSummary, _normalize_weights

__all__ = [
    "read_numeric_csv",
    "ingest_matrix_csv",
    "ingest_curves_csv",
    "ingest_weights",
    "ingest_mask",
    "FrameSequence",
    "ingest_frames",
    "write_table",
    "read_comments",
    "read_config_echo",
    "write_heatmap_csv",
    "read_heatmap_csv",
    "write_fom_csv",
    "read_fom_csv",
    "ensure_inside",
]

IMAGE_SUFFIXES = (".pgm", ".ppm", ".pnm")


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def read_numeric_csv(path, allow_header: bool = True):
    """Parse a rectangular numeric CSV file.

    Returns ``(array, header)``; ``header`` is ``None`` unless no cell of the
    first row is a number.  Errors name the offending line (1-based, counting
    comments) and column.
    """
    path = Path(path)
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise InputDataError(f"cannot open {path}: {exc.strerror}") from None
    header = None
    rows = []
    width = None
    with fh:
        for lineno, raw in enumerate(csv.reader(fh), start=1):
            if not raw or (raw[0].lstrip().startswith("#")) or all(not c.strip() for c in raw):
                continue
            cells = [c.strip() for c in raw]
            # a first row without a single number is a header; mixed rows are errors
            if header is None and not rows and allow_header and not any(_is_number(c) for c in cells):
                header = cells
                width = len(cells)
                continue
            if width is None:
                width = len(cells)
            elif len(cells) != width:
                raise InputDataError(f"{path}: line {lineno} has {len(cells)} columns, expected {width}")
            vals = []
            for j, c in enumerate(cells, start=1):
                try:
                    v = float(c)
                except ValueError:
                    raise InputDataError(f"{path}: line {lineno}, column {j}: {c!r} is not a number") from None
                if not math.isfinite(v):
                    raise InputDataError(f"{path}: line {lineno}, column {j}: non-finite value {c!r}")
                vals.append(v)
            rows.append(vals)
    if not rows:
        raise InputDataError(f"{path}: no data rows")
    return np.array(rows, dtype=float), header


def ingest_matrix_csv(path) -> np.ndarray:
    """An (n, d) point cloud; a single column comes back as a 1-D sample."""
    X, _ = read_numeric_csv(path)
    return X[:, 0] if X.shape[1] == 1 else X


def ingest_weights(path, size: int) -> np.ndarray:
    """Gridpoint weights from a one-row or one-column file, normalized to sum 1."""
    W, _ = read_numeric_csv(path)
    if 1 not in W.shape:
        raise InputDataError(f"{path}: weights must be a single row or column, got shape {W.shape}")
    return _normalize_weights(W.reshape(-1), size)


def ingest_mask(path) -> np.ndarray:
    """Boolean (J, K) mask from a CSV of 0/1 values or a PGM image (nonzero = inside)."""
    path = Path(path)
    if path.suffix.lower() in IMAGE_SUFFIXES:
        arr = _read_image(path)[..., 0]
    else:
        arr, _ = read_numeric_csv(path, allow_header=False)
    return arr != 0


def ingest_curves_csv(path, weights_path=None, channel_paths=()) -> FunctionalDataset:
    """Curves stored as rows (functions) by columns (gridpoints).

    Extra value channels come from additional files of the same shape.  The
    grid is taken as equispaced on [0, 1].
    """
    Y, _ = read_numeric_csv(path)
    chans = [Y]
    for extra in channel_paths:
        Z, _ = read_numeric_csv(extra)
        if Z.shape != Y.shape:
            raise InputDataError(f"{extra}: channel shape {Z.shape} does not match {path} shape {Y.shape}")
        chans.append(Z)
    vals = np.stack(chans, axis=2)
    w = ingest_weights(weights_path, Y.shape[1]) if weights_path is not None else None
    return FunctionalDataset.from_curves(vals, weights=w)


@dataclass(eq=False)
class FrameSequence:
    """Ordered frames of shape (J, K, d), stacked as ``frames`` (N, J, K, d)."""

    frames: np.ndarray
    names: tuple = ()

    def __post_init__(self):
        f = np.asarray(self.frames, dtype=float)
        if f.ndim == 3:
            f = f[..., None]
        if f.ndim != 4:
            raise InputDataError(f"frames must be (N, J, K, d), got shape {f.shape}")
        if not np.isfinite(f).all():
            raise InputDataError("frame values must be finite")
        self.frames = f
        self.names = tuple(self.names)

    @property
    def shape(self):
        return self.frames.shape

    def __len__(self):
        return self.frames.shape[0]

    def to_dataset(self, weights=None, mask=None) -> FunctionalDataset:
        return FunctionalDataset.from_images(self.frames, weights=weights, mask=mask)


def _read_image(path: Path) -> np.ndarray:
    from PIL import Image, UnidentifiedImageError

    try:
        with Image.open(path) as im:
            if im.mode in ("1", "P", "LA"):
                im = im.convert("L")
            elif im.mode in ("RGBA", "CMYK", "YCbCr"):
                im = im.convert("RGB")
            arr = np.asarray(im, dtype=float)
    except (OSError, UnidentifiedImageError) as exc:
        raise InputDataError(f"cannot read image {path}: {exc}") from None
    return arr[..., None] if arr.ndim == 2 else arr


def ingest_frames(path, fmt: str = "auto") -> FrameSequence:
    """Read every frame in a directory, ordered by filename.

    ``fmt`` is ``"image"`` (PGM/PPM), ``"csv"`` (one grayscale matrix per
    file) or ``"auto"`` (pick by the suffixes present).
    """
    path = Path(path)
    if not path.is_dir():
        raise InputDataError(f"{path} is not a directory")
    files = sorted(p for p in path.iterdir() if p.is_file() and not p.name.startswith("."))
    imgs = [p for p in files if p.suffix.lower() in IMAGE_SUFFIXES]
    csvs = [p for p in files if p.suffix.lower() == ".csv"]
    if fmt == "auto":
        fmt = "image" if imgs else "csv"
    if fmt not in ("image", "csv"):
        raise InputDataError(f"unknown frame format {fmt!r}")
    chosen = imgs if fmt == "image" else csvs
    if not chosen:
        raise InputDataError(f"{path}: no {fmt} frames found")
    frames = []
    for p in chosen:
        if fmt == "image":
            arr = _read_image(p)
        else:
            arr = read_numeric_csv(p, allow_header=False)[0][..., None]
        if frames and arr.shape != frames[0].shape:
            raise InputDataError(f"{p.name}: frame shape {arr.shape} differs from {chosen[0].name} {frames[0].shape}")
        frames.append(arr)
    return FrameSequence(np.stack(frames), tuple(p.name for p in chosen))


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_table(path, columns, rows, echo: dict | None = None) -> Path:
    """Write a CSV with ``# key=value`` comment lines followed by a header row."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        for key, val in (echo or {}).items():
            text = json.dumps(val, sort_keys=True) if isinstance(val, (dict, list, tuple)) else _fmt(val)
            fh.write(f"# {key}={text}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
    return path


def read_comments(path) -> dict:
    """The ``# key=value`` comment lines at the top of a file, values as strings."""
    out = {}
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            key, sep, val = line[1:].strip().partition("=")
            if sep:
                out[key.strip()] = val
    return out


def read_config_echo(path) -> dict:
    """The run configuration echoed into an output CSV, or a plain JSON file."""
    path = Path(path)
    try:
        if path.suffix.lower() == ".json":
            return json.loads(path.read_text())
        text = read_comments(path).get("config")
    except (OSError, json.JSONDecodeError) as exc:
        raise InputDataError(f"cannot read configuration from {path}: {exc}") from None
    if text is None:
        raise InputDataError(f"{path} carries no '# config=' line")
    return json.loads(text)


def write_heatmap_csv(path, map_: DOMap, echo: dict | None = None) -> Path:
    """Rows are functions, columns gridpoints (2-D grids flattened row-major)."""
    meta = {"grid_shape": list(map_.grid_shape), "method": map_.method}
    if map_.seed is not None:
        meta["seed"] = int(map_.seed)
    meta.update(echo or {})
    cols = [f"g{j}" for j in range(map_.values.shape[1])]
    return write_table(path, cols, map_.values.tolist(), meta)


def read_heatmap_csv(path) -> DOMap:
    meta = read_comments(path)
    if "grid_shape" not in meta:
        raise InputDataError(f"{path}: missing '# grid_shape=' header")
    vals, _ = read_numeric_csv(path)
    shape = tuple(json.loads(meta["grid_shape"]))
    if math.prod(shape) != vals.shape[1]:
        raise InputDataError(f"{path}: grid {shape} does not match {vals.shape[1]} columns")
    seed = int(meta["seed"]) if "seed" in meta else None
    return DOMap(vals, shape, meta.get("method", "projection"), seed)


def write_fom_csv(path, summary: FunctionalSummary, curve: np.ndarray, echo: dict | None = None):
    """FOM points and, next to them, ``<stem>_curve.csv`` with the cutoff curve.

    Returns the two paths written.
    """
    path = Path(path)
    meta = {
        "cutoff_fdo": summary.cutoff_fdo,
        "cutoff_cfo": summary.cutoff_cfo,
        "med_fdo": summary.med_fdo,
        "med_vdo": summary.med_vdo,
    }
    meta.update(echo or {})
    rows = [
        (i, f, v, c, bool(fl), bool(ff))
        for i, (f, v, c, fl, ff) in enumerate(zip(summary.fdo, summary.vdo, summary.cfo, summary.flags, summary.flags_fdo))
    ]
    write_table(path, ["id", "fdo", "vdo", "cfo", "flagged", "flagged_fdo"], rows, meta)
    cpath = path.with_name(path.stem + "_curve" + path.suffix)
    write_table(cpath, ["fdo", "vdo"], curve.tolist(), {"cutoff_cfo": summary.cutoff_cfo})
    return path, cpath


def read_fom_csv(path) -> FunctionalSummary:
    meta = read_comments(path)
    arr, header = read_numeric_csv(path)
    if header is None or header[:5] != ["id", "fdo", "vdo", "cfo", "flagged"]:
        raise InputDataError(f"{path}: not a FOM table")
    try:
        num = {k: float(meta[k]) for k in ("cutoff_fdo", "cutoff_cfo", "med_fdo", "med_vdo")}
    except KeyError as exc:
        raise InputDataError(f"{path}: missing '# {exc.args[0]}=' header") from None
    flags_fdo = arr[:, 5] != 0 if arr.shape[1] > 5 else np.zeros(arr.shape[0], dtype=bool)
    return FunctionalSummary(arr[:, 1], arr[:, 2], arr[:, 3], num["cutoff_fdo"], num["cutoff_cfo"],
                             arr[:, 4] != 0, flags_fdo, num["med_fdo"], num["med_vdo"])


def ensure_inside(root, name: str) -> Path:
    """Path of ``name`` inside ``root``; refuses anything that would escape it."""
    root = Path(root).resolve()
    target = (root / name).resolve()
    if os.path.commonpath([root, target]) != str(root):
        raise InputDataError(f"output {name!r} would leave the output directory")
    return target
