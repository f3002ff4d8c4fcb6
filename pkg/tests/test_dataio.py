"""Dataset parsing, bundled data gates, and series round-trips."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from bfm.dataio import (
    CensoredObservation,
    DataFormatError,
    Dataset,
    PlotSeries,
    SERIES_KINDS,
    bundled_names,
    emit_series,
    empirical_risks,
    load_bundled,
    parse_dataset,
    read_series,
)

GOOD = """\
# name: demo test
# time_unit: hours
# cause_labels: c1=early; c2=wearout
2,c1
119,c2
150,cu
257,cen
"""


def test_parse_good_file():
    data = parse_dataset(GOOD)
    assert data.n == 4
    assert data.name == "demo test"
    assert data.time_unit == "hours"
    assert data.cause_labels == {"c1": "early", "c2": "wearout"}
    assert_allclose(data.times, [2.0, 119.0, 150.0, 257.0])
    assert list(data.status) == ["c1", "c2", "cu", "cen"]


def test_parse_from_path(tmp_path):
    f = tmp_path / "d.csv"
    f.write_text(GOOD)
    data = parse_dataset(f)
    assert data.n == 4 and data.name == "demo test"


def test_failure_views():
    data = parse_dataset(GOOD)
    # censored unit drops out of the failure views; unknown cause stays in
    assert data.n_failures == 3
    assert_allclose(data.failure_times, [2.0, 119.0, 150.0])
    assert data.status_counts() == {"c1": 1, "c2": 1, "cu": 1, "cen": 1}


@pytest.mark.parametrize(
    "row,fragment",
    [
        ("5", "expected 'time,status'"),
        ("5,c1,extra", "expected 'time,status'"),
        ("abc,c1", "bad time"),
        ("-3,c1", "finite and > 0"),
        ("0,c1", "finite and > 0"),
        ("5,c9", "unknown status"),
    ],
)
def test_parse_rejects_bad_rows(row, fragment):
    with pytest.raises(DataFormatError, match=fragment):
        parse_dataset(f"# name: x\n# time_unit: h\n# cause_labels:\n{row}\n")


def test_parse_error_carries_line_number():
    text = "# name: x\n# time_unit: h\n# cause_labels:\n5,c1\nbad,c1\n"
    with pytest.raises(DataFormatError, match="line 5"):
        parse_dataset(text)


def test_parse_empty_file_rejected():
    with pytest.raises(DataFormatError, match="no observation rows"):
        parse_dataset("# name: x\n# time_unit: h\n# cause_labels:\n")


def test_parse_bad_cause_labels():
    with pytest.raises(DataFormatError, match="cause_labels"):
        parse_dataset("# name: x\n# time_unit: h\n# cause_labels: nonsense\n5,c1\n")


def test_missing_file():
    with pytest.raises(DataFormatError, match="cannot read"):
        parse_dataset("/nonexistent/nowhere.csv")


def test_observation_validation():
    with pytest.raises(ValueError, match="unknown status"):
        CensoredObservation(5.0, "c7")
    with pytest.raises(ValueError, match="finite and > 0"):
        CensoredObservation(-1.0, "c1")
    assert CensoredObservation(5.0, "cen").is_failure is False
    assert CensoredObservation(5.0, "cu").is_failure is True


def test_dataset_validation():
    with pytest.raises(ValueError, match="matching 1-d"):
        Dataset(times=[1.0, 2.0], status=["c1"])
    with pytest.raises(ValueError, match="unknown status"):
        Dataset(times=[1.0], status=["zz"])
    with pytest.raises(ValueError, match="finite and > 0"):
        Dataset(times=[np.inf], status=["c1"])


def test_bundled_names():
    assert bundled_names() == ("efst", "afst")
    with pytest.raises(DataFormatError, match="unknown bundled"):
        load_bundled("nope")


def test_bundled_efst_count_gate():
    """n=58 with 18 cause-1, 27 cause-2, 13 censored.

    Oracle: the case-study section of the source analysis states those
    counts outright; they are the only in-paper ground truth about the raw
    electrode sample, so the bundled file must reproduce them exactly.
    """
    data = load_bundled("efst")
    assert data.n == 58
    assert data.status_counts() == {"c1": 18, "c2": 27, "cu": 0, "cen": 13}
    assert data.time_unit == "hours"
    assert set(data.cause_labels) == {"c1", "c2"}


def test_bundled_afst_count_gate():
    """n=33 complete appliance lifetimes, 17 of the labeled mode."""
    data = load_bundled("afst")
    assert data.n == 33
    assert data.status_counts() == {"c1": 17, "c2": 16, "cu": 0, "cen": 0}
    assert data.n_failures == 33
    assert data.time_unit == "thousand cycles"


def test_empirical_risks_efst():
    # 18/45 early-cause failures; orientation is (c1, c2) by package
    # convention, and the printed case-study table lists the same pair in
    # the opposite order (documented in the decisions ledger).
    f1, f2 = empirical_risks(load_bundled("efst"))
    assert_allclose((f1, f2), (18.0 / 45.0, 27.0 / 45.0), rtol=0, atol=1e-15)


def test_empirical_risks_afst():
    f1, f2 = empirical_risks(load_bundled("afst"))
    assert_allclose((f1, f2), (17.0 / 33.0, 16.0 / 33.0), rtol=0, atol=1e-15)


def test_empirical_risks_requires_labels():
    data = Dataset(times=[1.0, 2.0], status=["cu", "cen"])
    with pytest.raises(ValueError, match="no cause-labeled"):
        empirical_risks(data)


def test_checksum_tracks_content():
    a = parse_dataset(GOOD)
    b = parse_dataset(GOOD)
    assert a.checksum() == b.checksum()
    c = parse_dataset(GOOD.replace("119,c2", "119,c1"))
    assert a.checksum() != c.checksum()


def test_plot_series_validation():
    with pytest.raises(ValueError, match="unknown series kind"):
        PlotSeries("x", "nope", np.array([1.0]), np.array([1.0]))
    with pytest.raises(ValueError, match="matching 1-d"):
        PlotSeries("x", "rf", np.array([1.0, 2.0]), np.array([1.0]))
    with pytest.raises(ValueError, match="strictly increasing"):
        PlotSeries("x", "rf", np.array([1.0, 1.0]), np.array([1.0, 2.0]))
    assert "rf" in SERIES_KINDS


def test_series_roundtrip_exact(tmp_path):
    """CSV emission uses shortest round-trip floats, so reads are bit-exact."""
    rng = np.random.default_rng(3)
    x = np.sort(rng.random(17)) * 100.0
    y = rng.standard_normal(17)
    series = [
        PlotSeries("model", "frf", x, y),
        PlotSeries("empirical", "frf", x[:5], y[:5]),
    ]
    path = tmp_path / "out.csv"
    emit_series(series, path)
    back = read_series(path)
    assert [s.name for s in back] == ["model", "empirical"]
    assert [s.kind for s in back] == ["frf", "frf"]
    assert_allclose(back[0].x, x, rtol=0, atol=0)
    assert_allclose(back[0].y, y, rtol=0, atol=0)
    assert_allclose(back[1].y, y[:5], rtol=0, atol=0)


def test_emit_series_empty_is_valid(tmp_path):
    path = tmp_path / "empty.csv"
    emit_series([], path)
    assert read_series(path) == []


def test_emit_series_unknown_format(tmp_path):
    with pytest.raises(ValueError, match="unknown series format"):
        emit_series([], tmp_path / "x.bin", format="bin")


def test_read_series_rejects_foreign_file(tmp_path):
    path = tmp_path / "x.csv"
    path.write_text("time,status\n5,c1\n")
    with pytest.raises(DataFormatError, match="not a series file"):
        read_series(path)


def test_svg_render_deterministic(tmp_path):
    """Two renders of the same curves must produce identical bytes."""
    x = np.linspace(1.0, 10.0, 25)
    series = [
        PlotSeries("model", "rf", x, np.exp(-x / 5.0)),
        PlotSeries("empirical rf", "rf", x, np.exp(-x / 5.5)),
    ]
    p1, p2 = tmp_path / "a.svg", tmp_path / "b.svg"
    emit_series(series, p1, format="svg")
    emit_series(series, p2, format="svg")
    one, two = p1.read_bytes(), p2.read_bytes()
    assert one == two
    assert one.lstrip().startswith(b"<?xml")
