import numpy as np

from _helpers import TempDirTestCase

from lib.errors import FieldFileError
from lib.fieldio import HEADER, content_hash, read_field, read_header, write_field
from lib.grid import PeriodicGrid, ScalarField, SymTensorField3, TensorField3, VectorField3


class TestFieldFiles(TempDirTestCase):

    def test_each_field_kind_survives_a_file(self):
        tensor = SymTensorField3.from_stacked(
            self.grid, np.stack([self.scalar(seed=s).data for s in range(6)])
        )
        for name, field in (("s", self.scalar()), ("v", self.vector()), ("t", tensor)):
            path = self.path(name + ".ygf")
            digest = write_field(path, field)
            loaded = read_field(path)
            assert type(loaded) is type(field)
            assert loaded.grid == field.grid
            np.testing.assert_array_equal(loaded.data, field.data)
            assert digest == content_hash(path)

    def test_layout_is_x_fastest(self):
        """Succeed if the payload stores component-major, x-fastest float64 values."""
        grid = PeriodicGrid(4)
        f = ScalarField(grid, np.arange(64, dtype=float).reshape(grid.shape))
        path = self.path("ramp.ygf")
        write_field(path, f)
        with open(path, "rb") as handle:
            raw = handle.read()
        header = read_header(raw)
        assert (int(header["nx"]), int(header["ncomp"])) == (4, 1)
        payload = np.frombuffer(raw, dtype="<f8", offset=HEADER.itemsize)
        np.testing.assert_array_equal(payload, np.arange(64.0))
        assert len(raw) == 48 + 64 * 8

    def test_same_field_same_hash(self):
        a, b = self.path("a.ygf"), self.path("b.ygf")
        assert write_field(a, self.vector()) == write_field(b, self.vector())

    def test_missing_file(self):
        with self.assertRaises(FieldFileError):
            read_field(self.path("absent.ygf"))

    def test_truncated_payload(self):
        path = self.path("v.ygf")
        write_field(path, self.vector())
        with open(path, "rb") as handle:
            raw = handle.read()
        with open(path, "wb") as handle:
            handle.write(raw[:-8])
        with self.assertRaises(FieldFileError):
            read_field(path)
        with self.assertRaises(FieldFileError):
            read_header(raw[:10])

    def test_bad_magic(self):
        path = self.path("bad.ygf")
        write_field(path, self.scalar())
        with open(path, "r+b") as handle:
            handle.write(b"NOPE")
        with self.assertRaises(FieldFileError):
            read_field(path)

    def test_unsupported_field_kind(self):
        gradient = TensorField3(self.grid, np.zeros((9,) + self.grid.shape))
        with self.assertRaises(FieldFileError):
            write_field(self.path("g.ygf"), gradient)

    def test_unwritable_path(self):
        with self.assertRaises(FieldFileError):
            write_field(self.path("missing", "dir", "v.ygf"), VectorField3.constant(self.grid, (1, 2, 3)))
