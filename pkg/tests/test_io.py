"""Bundle data model and file format tests."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bundleshape.io import (
    BadMagic,
    BadVersion,
    Bundle,
    BundleError,
    BundleIOError,
    IndexOutOfRange,
    MalformedHeader,
    ShortStreamline,
    TruncatedFile,
    parse_polydata,
    read_native,
    write_native,
    write_polydata,
)


def simple_bundle():
    return Bundle(
        (
            np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.5, 0.0]]),
            np.array([[0.0, 1.0, 0.0], [2.0, 1.0, 0.25]]),
        ),
        subject_id="s1",
        cluster_id="c1",
    )


class TestBundle:
    def test_basic_properties(self):
        b = simple_bundle()
        assert b.n_streamlines == 2
        assert b.n_points == 5
        assert b.all_points().shape == (5, 3)

    def test_streamlines_are_read_only(self):
        b = simple_bundle()
        with pytest.raises(ValueError):
            b.streamlines[0][0, 0] = 99.0

    def test_rejects_empty_bundle(self):
        with pytest.raises(BundleError):
            Bundle(())

    def test_rejects_single_point_streamline(self):
        with pytest.raises(BundleError):
            Bundle((np.array([[0.0, 0.0, 0.0]]),))

    def test_rejects_bad_shape(self):
        with pytest.raises(BundleError):
            Bundle((np.zeros((3, 2)),))

    def test_rejects_non_finite(self):
        with pytest.raises(BundleError):
            Bundle((np.array([[0.0, 0.0, 0.0], [np.nan, 0.0, 0.0]]),))
        with pytest.raises(BundleError):
            Bundle((np.array([[0.0, 0.0, 0.0], [np.inf, 0.0, 0.0]]),))

    def test_rejects_zero_arc_length(self):
        with pytest.raises(BundleError):
            Bundle((np.zeros((4, 3)),))

    def test_zero_length_detected_in_any_streamline(self):
        good = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
        degenerate = np.ones((3, 3))
        with pytest.raises(BundleError):
            Bundle((good, degenerate))

    def test_translated(self):
        b = simple_bundle().translated([1.0, -2.0, 3.0])
        np.testing.assert_allclose(b.streamlines[0][0], [1.0, -2.0, 3.0])
        assert b.subject_id == "s1"


class TestPolydata:
    def test_round_trip(self):
        b = simple_bundle()
        b2 = parse_polydata(write_polydata(b))
        assert b2.n_streamlines == b.n_streamlines
        for s, s2 in zip(b.streamlines, b2.streamlines):
            np.testing.assert_allclose(s, s2, rtol=1e-8, atol=1e-8)

    def test_parses_minimal_file(self):
        text = (
            "# vtk DataFile Version 3.0\n"
            "title\n"
            "ASCII\n"
            "DATASET POLYDATA\n"
            "POINTS 3 float\n"
            "0 0 0 1 0 0 2 0 0\n"
            "LINES 1 4\n"
            "3 0 1 2\n"
        )
        b = parse_polydata(text)
        assert b.n_streamlines == 1
        np.testing.assert_allclose(b.streamlines[0][2], [2.0, 0.0, 0.0])

    def test_accepts_double_points(self):
        text = (
            "# vtk DataFile Version 3.0\ntitle\nASCII\nDATASET POLYDATA\n"
            "POINTS 2 double\n0 0 0 1 1 1\nLINES 1 3\n2 0 1\n"
        )
        assert parse_polydata(text).n_points == 2

    def test_skips_attribute_blocks_with_warning(self):
        text = (
            "# vtk DataFile Version 3.0\ntitle\nASCII\nDATASET POLYDATA\n"
            "POINTS 2 float\n0 0 0 1 1 1\nLINES 1 3\n2 0 1\n"
            "CELL_DATA 1\nSCALARS x float\n"
        )
        with pytest.warns(UserWarning):
            b = parse_polydata(text)
        assert b.n_streamlines == 1

    def test_bad_header(self):
        with pytest.raises(MalformedHeader):
            parse_polydata("not a header\nt\nASCII\nDATASET POLYDATA\n")

    def test_binary_encoding_rejected(self):
        text = "# vtk DataFile Version 3.0\nt\nBINARY\nDATASET POLYDATA\n"
        with pytest.raises(MalformedHeader):
            parse_polydata(text)

    def test_non_ascii_bytes_rejected(self):
        with pytest.raises(MalformedHeader):
            parse_polydata(b"\xff\xfe\x00\x01garbage")

    def test_truncated_points(self):
        text = (
            "# vtk DataFile Version 3.0\nt\nASCII\nDATASET POLYDATA\n"
            "POINTS 5 float\n0 0 0 1 1 1\n"
        )
        with pytest.raises(TruncatedFile):
            parse_polydata(text)

    def test_truncated_lines(self):
        text = (
            "# vtk DataFile Version 3.0\nt\nASCII\nDATASET POLYDATA\n"
            "POINTS 2 float\n0 0 0 1 1 1\nLINES 1 5\n4 0 1\n"
        )
        with pytest.raises(TruncatedFile):
            parse_polydata(text)

    def test_lines_size_mismatch(self):
        text = (
            "# vtk DataFile Version 3.0\nt\nASCII\nDATASET POLYDATA\n"
            "POINTS 2 float\n0 0 0 1 1 1\nLINES 1 2\n2 0 1\n"
        )
        with pytest.raises(MalformedHeader):
            parse_polydata(text)

    def test_index_out_of_range(self):
        text = (
            "# vtk DataFile Version 3.0\nt\nASCII\nDATASET POLYDATA\n"
            "POINTS 2 float\n0 0 0 1 1 1\nLINES 1 3\n2 0 7\n"
        )
        with pytest.raises(IndexOutOfRange):
            parse_polydata(text)

    def test_short_polyline(self):
        text = (
            "# vtk DataFile Version 3.0\nt\nASCII\nDATASET POLYDATA\n"
            "POINTS 2 float\n0 0 0 1 1 1\nLINES 1 2\n1 0\n"
        )
        with pytest.raises(ShortStreamline):
            parse_polydata(text)

    def test_missing_blocks(self):
        header = "# vtk DataFile Version 3.0\nt\nASCII\nDATASET POLYDATA\n"
        with pytest.raises(TruncatedFile):
            parse_polydata(header)
        with pytest.raises(TruncatedFile):
            parse_polydata(header + "POINTS 2 float\n0 0 0 1 1 1\n")

    @settings(max_examples=200, deadline=None)
    @given(st.binary(max_size=400))
    def test_fuzz_bytes_never_crash(self, data):
        """Arbitrary bytes either parse to a Bundle or raise a typed error."""
        try:
            b = parse_polydata(data)
        except (BundleIOError, BundleError):
            return
        assert isinstance(b, Bundle)

    @settings(max_examples=100, deadline=None)
    @given(st.text(max_size=400))
    def test_fuzz_text_never_crash(self, text):
        try:
            b = parse_polydata(text)
        except (BundleIOError, BundleError):
            return
        assert isinstance(b, Bundle)


class TestNative:
    def test_round_trip_bit_exact(self):
        b = simple_bundle()
        blob = write_native(b)
        b2 = read_native(blob)
        assert write_native(b2) == blob
        for s, s2 in zip(b.streamlines, b2.streamlines):
            np.testing.assert_array_equal(s.astype("<f4").astype(np.float64), s2)

    def test_bad_magic(self):
        with pytest.raises(BadMagic):
            read_native(b"XXXX" + b"\x00" * 16)

    def test_bad_version(self):
        blob = bytearray(write_native(simple_bundle()))
        blob[4] = 99
        with pytest.raises(BadVersion):
            read_native(bytes(blob))

    def test_truncations(self):
        blob = write_native(simple_bundle())
        for cut in (2, 6, 10, len(blob) - 3):
            with pytest.raises(TruncatedFile):
                read_native(blob[:cut])

    @settings(max_examples=200, deadline=None)
    @given(st.binary(max_size=200))
    def test_fuzz_never_crash(self, data):
        try:
            b = read_native(data)
        except (BundleIOError, BundleError):
            return
        assert isinstance(b, Bundle)
