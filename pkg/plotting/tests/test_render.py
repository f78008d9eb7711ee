"""Rendering tests driven purely by files in the harness schema."""

import csv
import json

import pytest

from ferplot import PlotConfig, SchemaError, main, read_references, read_results, render_fer

COLUMNS = [
    "p",
    "trials",
    "fail_total",
    "fail_syndrome",
    "fail_logical",
    "fer",
    "wilson_lo",
    "wilson_hi",
]


def write_csv(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(COLUMNS)
        writer.writerows(rows)


def write_refs(path):
    path.write_text(
        json.dumps(
            {
                "de_reference": 0.1009,
                "de_reference_note": "external reference constant",
                "hashing_bound_rate_quarter": 0.12689,
            }
        )
    )


@pytest.fixture
def sweep_csv(tmp_path):
    path = tmp_path / "sweep.csv"
    write_csv(
        path,
        [
            [0.04, 100000, 140, 12, 128, 1.4e-3, 1.18e-3, 1.66e-3],
            [0.06, 100000, 1160, 260, 900, 1.16e-2, 1.10e-2, 1.23e-2],
            [0.08, 100000, 8210, 3720, 4490, 8.21e-2, 8.04e-2, 8.38e-2],
        ],
    )
    return path


@pytest.fixture
def refs_json(tmp_path):
    path = tmp_path / "refs.json"
    write_refs(path)
    return path


def test_render_sweep_with_reference_lines(tmp_path, sweep_csv, refs_json):
    out = tmp_path / "fer.png"
    result = render_fer(
        PlotConfig(csv_paths=[str(sweep_csv)], refs_path=str(refs_json), out_path=str(out))
    )
    assert result == str(out)
    assert out.exists() and out.stat().st_size > 4000


def test_single_point_renders(tmp_path, refs_json):
    path = tmp_path / "one.csv"
    write_csv(path, [[0.05, 1000, 3, 1, 2, 3e-3, 1e-3, 8.7e-3]])
    out = tmp_path / "one.png"
    render_fer(PlotConfig(csv_paths=[str(path)], refs_path=str(refs_json), out_path=str(out)))
    assert out.exists()


def test_degenerate_interval_renders(tmp_path):
    # fer == wilson_lo == wilson_hi gives a zero-height band
    path = tmp_path / "deg.csv"
    write_csv(path, [[0.05, 100, 5, 2, 3, 0.05, 0.05, 0.05], [0.08, 100, 9, 4, 5, 0.09, 0.09, 0.09]])
    out = tmp_path / "deg.png"
    render_fer(PlotConfig(csv_paths=[str(path)], out_path=str(out)))
    assert out.exists()


def test_zero_fer_point_survives_log_axis(tmp_path):
    path = tmp_path / "zero.csv"
    write_csv(path, [[0.01, 100000, 0, 0, 0, 0.0, 0.0, 3.7e-5], [0.05, 1000, 10, 4, 6, 0.01, 0.005, 0.018]])
    out = tmp_path / "zero.png"
    render_fer(PlotConfig(csv_paths=[str(path)], out_path=str(out)))
    assert out.exists()


def test_multiple_curves(tmp_path, sweep_csv, refs_json):
    other = tmp_path / "other.csv"
    write_csv(other, [[0.04, 1000, 4, 1, 3, 4e-3, 1.5e-3, 1e-2], [0.08, 1000, 120, 50, 70, 0.12, 0.10, 0.14]])
    out = tmp_path / "two.png"
    render_fer(
        PlotConfig(
            csv_paths=[str(sweep_csv), str(other)],
            refs_path=str(refs_json),
            out_path=str(out),
            labels=["P=4 lift", "baseline"],
        )
    )
    assert out.exists()


def test_schema_mismatch_is_descriptive(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    with pytest.raises(SchemaError) as err:
        read_results(str(bad))
    assert "expected columns" in str(err.value)


def test_missing_file_rejected(tmp_path):
    with pytest.raises(SchemaError):
        PlotConfig(csv_paths=[str(tmp_path / "nope.csv")])


def test_empty_csv_rejected(tmp_path):
    path = tmp_path / "empty.csv"
    write_csv(path, [])
    with pytest.raises(SchemaError):
        read_results(str(path))


def test_sidecar_missing_keys_rejected(tmp_path):
    path = tmp_path / "refs.json"
    path.write_text(json.dumps({"de_reference": 0.1009}))
    with pytest.raises(SchemaError) as err:
        read_references(str(path))
    assert "hashing_bound_rate_quarter" in str(err.value)


def test_cli_round_trip(tmp_path, sweep_csv, refs_json, capsys):
    out = tmp_path / "cli.png"
    code = main([str(sweep_csv), "--refs", str(refs_json), "--out", str(out)])
    assert code == 0 and out.exists()
    assert "wrote" in capsys.readouterr().out


def test_cli_schema_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("x\n1\n")
    assert main([str(bad), "--out", str(tmp_path / "x.png")]) == 1
