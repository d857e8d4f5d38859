"""Data ingestion: delimited catalogs, grayscale images, survey preprocessing.

The catalog dialect is deliberately minimal: comma-separated numeric fields,
``#`` comment lines, an optional single header row.  Images are plain or
binary PGM (8- or 16-bit), turned into marked samples by thresholding
max-normalized intensities at pixel centers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import WeightedSample
from .errors import EmptyResultError, IngestionError, InvalidInputError

__all__ = [
    "RowIssue",
    "ImageGrid",
    "load_catalog",
    "save_catalog",
    "sdss_mass",
    "linear_mass_weight",
    "load_sdss_extract",
    "read_pgm",
    "write_pgm",
    "image_to_sample",
]


@dataclass(frozen=True)
class RowIssue:
    """A rejected input row: 1-based physical line number plus the reason."""

    line: int
    reason: str


def _resolve_column(spec, header, what):
    if isinstance(spec, str):
        if header is None:
            raise InvalidInputError(
                f"{what} given by name '{spec}' but the file has no header row"
            )
        try:
            return header.index(spec)
        except ValueError:
            raise InvalidInputError(f"{what} '{spec}' not found in header {header}")
    return int(spec)


def load_catalog(
    path,
    coord_cols=(0, 1),
    weight_col=2,
    *,
    has_header: bool = False,
    rejection_budget: int = 0,
    delimiter: str = ",",
):
    """Parse a delimited catalog into a weighted sample.

    Columns may be selected by index or, when ``has_header`` is set, by
    name.  Rows whose weight is non-positive or non-finite (or with a
    non-finite coordinate) are rejected and reported with their line
    numbers.  Rows that fail to parse at all count against
    ``rejection_budget``; exceeding the budget raises ``IngestionError``.

    Returns ``(sample, issues)`` where ``issues`` is a list of RowIssue.
    """
    if rejection_budget < 0:
        raise InvalidInputError("rejection_budget must be >= 0")
    rows = []
    issues: list[RowIssue] = []
    malformed = 0
    header = None
    header_pending = bool(has_header)

    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as e:
        raise IngestionError(f"cannot read catalog {path}: {e}") from e
    with fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = [f.strip() for f in line.split(delimiter)]
            if header_pending:
                header = fields
                header_pending = False
                continue
            rows.append((lineno, fields))

    ci = [_resolve_column(c, header, "coordinate column") for c in coord_cols]
    wi = _resolve_column(weight_col, header, "weight column")
    width = max(max(ci), wi) + 1

    pts, wts = [], []
    for lineno, fields in rows:
        if len(fields) < width:
            malformed += 1
            issues.append(RowIssue(lineno, f"expected at least {width} fields, got {len(fields)}"))
            if malformed > rejection_budget:
                raise IngestionError(
                    f"{path}: line {lineno}: malformed row exceeds rejection budget "
                    f"({rejection_budget}): expected at least {width} fields, got {len(fields)}"
                )
            continue
        try:
            coords = [float(fields[i]) for i in ci]
            weight = float(fields[wi])
        except ValueError as e:
            malformed += 1
            issues.append(RowIssue(lineno, f"unparseable number: {e}"))
            if malformed > rejection_budget:
                raise IngestionError(
                    f"{path}: line {lineno}: malformed row exceeds rejection budget "
                    f"({rejection_budget}): {e}"
                )
            continue
        if not all(np.isfinite(c) for c in coords):
            issues.append(RowIssue(lineno, "non-finite coordinate"))
            continue
        if not np.isfinite(weight) or weight <= 0.0:
            issues.append(RowIssue(lineno, f"invalid weight {fields[wi]}"))
            continue
        pts.append(coords)
        wts.append(weight)

    if not pts:
        raise EmptyResultError(f"{path}: no valid rows after parsing")
    return WeightedSample(np.asarray(pts), np.asarray(wts)), issues


def save_catalog(sample: WeightedSample, path, *, comments=()) -> None:
    """Write a sample as coordinates-then-weight rows.

    Numbers are serialized with 17 significant digits, so a load of the
    written file reproduces the sample bit for bit.
    """
    with open(path, "w", encoding="utf-8") as fh:
        for c in comments:
            fh.write(f"# {c}\n")
        for row, w in zip(sample.points, sample.weights):
            cells = [format(v, ".17g") for v in row] + [format(w, ".17g")]
            fh.write(",".join(cells) + "\n")


def sdss_mass(r, z):
    """Crude stellar-mass proxy from apparent magnitude and redshift.

    MASS = r - 5 log10(4.28e8 z).  Defined only for z > 0; note the result
    is magnitude-like (smaller means brighter/heavier) and is typically
    negative, so it is a mark *proxy*, not directly a positive weight.
    """
    r_arr = np.asarray(r, dtype=float)
    z_arr = np.asarray(z, dtype=float)
    if np.any(~np.isfinite(z_arr)) or np.any(z_arr <= 0.0):
        raise InvalidInputError("redshift z must be finite and > 0")
    out = r_arr - 5.0 * np.log10(4.28e8 * z_arr)
    return float(out) if np.isscalar(r) and np.isscalar(z) else out


def linear_mass_weight(mass):
    """Optional magnitude-to-linear transform 10^(-0.4 MASS).

    Strictly positive, monotone decreasing in the proxy, hence usable as a
    sample weight.  Not applied automatically anywhere.
    """
    return np.power(10.0, -0.4 * np.asarray(mass, dtype=float))


def load_sdss_extract(path) -> WeightedSample:
    """Load an (ra, dec, z, r) extract and weight by linear mass.

    The raw proxy from ``sdss_mass`` is negative for realistic magnitudes
    and redshifts, so this loader applies the documented
    ``linear_mass_weight`` transform to obtain strictly positive marks for
    the (ra, dec) positions.
    """
    sample, issues = load_catalog(
        path, coord_cols=("ra", "dec", "z"), weight_col="r", has_header=True
    )
    if issues:
        raise IngestionError(f"{path}: unexpected invalid rows: {issues[:3]}")
    z = sample.points[:, 2]
    r = sample.weights
    weights = linear_mass_weight(sdss_mass(r, z))
    return WeightedSample(sample.points[:, :2], weights)


@dataclass(frozen=True)
class ImageGrid:
    """A non-negative grayscale raster; ``normalized`` means max == 1."""

    intensities: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        arr = np.asarray(self.intensities, dtype=float)
        if arr.ndim != 2 or arr.size < 1:
            raise InvalidInputError("intensities must be a 2-d array")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0.0):
            raise InvalidInputError("intensities must be finite and >= 0")
        if self.normalized and not np.isclose(arr.max(), 1.0):
            raise InvalidInputError("normalized image must have max intensity 1")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "intensities", arr)

    @property
    def height(self) -> int:
        return self.intensities.shape[0]

    @property
    def width(self) -> int:
        return self.intensities.shape[1]


def _pgm_tokens(data: bytes):
    """Yield header tokens, skipping '#' comments, and the payload offset."""
    pos = 0
    tokens = []
    while len(tokens) < 4 and pos < len(data):
        ch = data[pos : pos + 1]
        if ch.isspace():
            pos += 1
            continue
        if ch == b"#":
            nl = data.find(b"\n", pos)
            pos = len(data) if nl < 0 else nl + 1
            continue
        end = pos
        while end < len(data) and not data[end : end + 1].isspace():
            end += 1
        tokens.append(data[pos:end])
        pos = end
    return tokens, pos + 1  # skip the single whitespace after maxval


def read_pgm(path) -> ImageGrid:
    """Read a plain (P2) or binary (P5) PGM image, 8- or 16-bit."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as e:
        raise IngestionError(f"cannot read image {path}: {e}") from e
    if not data[:2] in (b"P2", b"P5"):
        raise IngestionError(f"{path}: not a PGM file (magic {data[:2]!r})")
    tokens, offset = _pgm_tokens(data)
    if len(tokens) < 4:
        raise IngestionError(f"{path}: truncated PGM header")
    magic = tokens[0].decode("ascii")
    try:
        width, height, maxval = (int(t) for t in tokens[1:4])
    except ValueError:
        raise IngestionError(f"{path}: non-numeric PGM header fields {tokens[1:4]}")
    if width < 1 or height < 1 or not (0 < maxval < 65536):
        raise IngestionError(f"{path}: invalid PGM dimensions or maxval")

    count = width * height
    if magic == "P2":
        try:
            values = np.array(data[offset - 1 :].split(), dtype=np.int64)
        except ValueError:
            raise IngestionError(f"{path}: non-numeric P2 pixel data")
    else:
        wide = maxval > 255
        need = count * (2 if wide else 1)
        payload = data[offset : offset + need]
        if len(payload) < need:
            raise IngestionError(
                f"{path}: truncated P5 payload ({len(payload)} of {need} bytes)"
            )
        dtype = ">u2" if wide else np.uint8
        values = np.frombuffer(payload, dtype=dtype).astype(np.int64)
    if values.size != count:
        raise IngestionError(
            f"{path}: expected {count} pixels, found {values.size}"
        )
    if values.min() < 0 or values.max() > maxval:
        raise IngestionError(f"{path}: pixel values outside [0, {maxval}]")
    return ImageGrid(values.reshape(height, width).astype(float))


def write_pgm(image, path, maxval: int = 255, binary: bool = True) -> None:
    """Write an array or ImageGrid as PGM, scaled so the max maps to maxval."""
    arr = image.intensities if isinstance(image, ImageGrid) else np.asarray(image, float)
    if arr.ndim != 2 or np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise InvalidInputError("image must be a finite non-negative 2-d array")
    if not (0 < maxval < 65536):
        raise InvalidInputError("maxval must be in [1, 65535]")
    top = arr.max()
    scaled = np.zeros_like(arr, dtype=np.int64) if top <= 0 else np.rint(arr / top * maxval).astype(np.int64)
    h, w = arr.shape
    header = f"{'P5' if binary else 'P2'}\n{w} {h}\n{maxval}\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        if binary:
            dtype = ">u2" if maxval > 255 else np.uint8
            fh.write(scaled.astype(dtype).tobytes())
        else:
            body = "\n".join(" ".join(str(v) for v in row) for row in scaled)
            fh.write(body.encode("ascii") + b"\n")


def image_to_sample(image: ImageGrid, threshold: float = 0.15, flip_y: bool = False) -> WeightedSample:
    """Threshold a max-normalized image into a marked sample of pixel centers.

    Pixel (row, col) becomes the point (col + 0.5, row + 0.5) in raster
    orientation (y grows downward); ``flip_y`` re-expresses y as
    ``height - row - 0.5`` for mathematical orientation.  Weights are the
    normalized intensities; only pixels strictly above both the threshold
    and zero are emitted, in row-major order.
    """
    if not isinstance(image, ImageGrid):
        raise InvalidInputError("image must be an ImageGrid")
    if not np.isfinite(threshold):
        raise InvalidInputError("threshold must be finite")
    top = float(image.intensities.max())
    if top <= 0.0:
        raise EmptyResultError("image is identically zero; nothing to sample")
    norm = image.intensities / top
    mask = (norm > threshold) & (norm > 0.0)
    if not np.any(mask):
        raise EmptyResultError(
            f"no pixel exceeds the threshold {threshold} after normalization"
        )
    rows, cols = np.nonzero(mask)
    y = image.height - rows - 0.5 if flip_y else rows + 0.5
    pts = np.stack([cols + 0.5, y], axis=1)
    return WeightedSample(pts, norm[rows, cols])
