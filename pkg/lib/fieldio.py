"""Binary field files.

Layout: a 48-byte little-endian header (magic ``YGF1``, version, nx, ny, nz,
ncomp, three box lengths) followed by ncomp * nx * ny * nz float64 values,
component-major and x-fastest within a component.
"""

import hashlib
import os
from logging import getLogger

import numpy as np

from .errors import FieldFileError
from .grid import PeriodicGrid, ScalarField, SymTensorField3, VectorField3

LOGGER = getLogger(__name__)

MAGIC = b"YGF1"
VERSION = 1
HEADER = np.dtype(
    [
        ("magic", "S4"),
        ("version", "<u4"),
        ("nx", "<u4"),
        ("ny", "<u4"),
        ("nz", "<u4"),
        ("ncomp", "<u4"),
        ("lengths", "<f8", (3,)),
    ]
)
PAYLOAD = np.dtype("<f8")
FIELD_TYPES = {1: ScalarField, 3: VectorField3, 6: SymTensorField3}


def _ncomp(field):
    for ncomp, cls in FIELD_TYPES.items():
        if type(field) is cls:
            return ncomp
    raise FieldFileError("cannot store a {} in a field file".format(type(field).__name__))


def write_field(path, field):
    """Write ``field`` to ``path`` and return the content hash."""
    grid = field.grid
    header = np.zeros((), dtype=HEADER)
    header["magic"] = MAGIC
    header["version"] = VERSION
    header["nx"] = header["ny"] = header["nz"] = grid.n
    header["ncomp"] = _ncomp(field)
    header["lengths"] = (grid.length,) * 3
    payload = np.ascontiguousarray(field.stacked(), dtype=PAYLOAD)
    try:
        with open(path, "wb") as handle:
            handle.write(header.tobytes())
            handle.write(payload.tobytes())
    except OSError as error:
        raise FieldFileError("cannot write field file {}: {}".format(path, error)) from error
    LOGGER.debug("wrote %s (%d components, n=%d)", path, header["ncomp"], grid.n)
    return content_hash(path)


def _read_bytes(path):
    if not os.path.isfile(path):
        raise FieldFileError("field file {} does not exist".format(path))
    try:
        with open(path, "rb") as handle:
            return handle.read()
    except OSError as error:
        raise FieldFileError("cannot read field file {}: {}".format(path, error)) from error


def read_header(raw, path="<bytes>"):
    if len(raw) < HEADER.itemsize:
        raise FieldFileError("{}: truncated header ({} bytes)".format(path, len(raw)))
    header = np.frombuffer(raw, dtype=HEADER, count=1)[0]
    if header["magic"] != MAGIC:
        raise FieldFileError("{}: bad magic {!r}".format(path, bytes(header["magic"])))
    if header["version"] != VERSION:
        raise FieldFileError("{}: unsupported version {}".format(path, header["version"]))
    if header["ncomp"] not in FIELD_TYPES:
        raise FieldFileError("{}: unsupported component count {}".format(path, header["ncomp"]))
    return header


def read_field(path):
    """Load a field file, checking the payload size against the header."""
    raw = _read_bytes(path)
    header = read_header(raw, path)
    n = int(header["nx"])
    if header["ny"] != n or header["nz"] != n or len(set(header["lengths"].tolist())) != 1:
        raise FieldFileError("{}: only cubic boxes are supported".format(path))
    ncomp = int(header["ncomp"])
    expected = ncomp * n ** 3 * PAYLOAD.itemsize
    if len(raw) - HEADER.itemsize != expected:
        raise FieldFileError(
            "{}: payload holds {} bytes, header announces {}".format(
                path, len(raw) - HEADER.itemsize, expected
            )
        )
    try:
        grid = PeriodicGrid(n, float(header["lengths"][0]))
    except ValueError as error:
        raise FieldFileError("{}: {}".format(path, error)) from error
    data = np.frombuffer(raw, dtype=PAYLOAD, offset=HEADER.itemsize).reshape((ncomp,) + grid.shape)
    return FIELD_TYPES[ncomp].from_stacked(grid, data.astype(np.float64))


def content_hash(path):
    """SHA-256 of the file bytes."""
    return hashlib.sha256(_read_bytes(path)).hexdigest()
