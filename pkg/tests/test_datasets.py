import pytest

from mcvtests.datasets import IngestSpec, load_dataset
from mcvtests.errors import EmptyCell, NonNumericValue, ParseError
from mcvtests.streams import stream


def write_two_way(path, sizes=None, header=True, delimiter=","):
    sizes = sizes or {("Yes", "<6m"): 24, ("Yes", ">6m"): 32, ("No", "<6m"): 25, ("No", ">6m"): 19}
    rng = stream(999)
    lines = []
    if header:
        lines.append(delimiter.join(["drug", "length", "bdi.pre"]))
    for (drug, length), m in sizes.items():
        for _ in range(m):
            lines.append(delimiter.join([drug, length, f"{20 + 8 * rng.standard_normal():.3f}"]))
    path.write_text("\n".join(lines) + "\n")


def write_one_way(path, rows):
    path.write_text("\n".join(["y1,y2,grp"] + rows) + "\n")


class TestOneWay:
    def test_groups_and_cells(self, tmp_path):
        path = tmp_path / "one.csv"
        rows = [f"{1.0 + i / 10:.2f},{2.0 + i / 7:.2f},{'a' if i % 3 else 'b'}" for i in range(12)]
        write_one_way(path, rows)
        groups, cells = load_dataset(
            IngestSpec(path=str(path), value_columns=("y1", "y2"), factor_columns=("grp",))
        )
        assert [c.label for c in cells] == ["grp=b", "grp=a"]  # first-appearance order
        assert [c.n for c in cells] == [4, 8]
        assert groups[0].d == 2
        assert groups[0].n == 4

    def test_explicit_level_order(self, tmp_path):
        path = tmp_path / "one.csv"
        rows = [f"{i}.5,1.0,{'a' if i % 3 else 'b'}" for i in range(9)]
        write_one_way(path, rows)
        spec = IngestSpec(
            path=str(path),
            value_columns=("y1",),
            factor_columns=("grp",),
            levels=(("a", "b"),),
        )
        _, cells = load_dataset(spec)
        assert [c.label for c in cells] == ["grp=a", "grp=b"]

    def test_unexpected_level_rejected(self, tmp_path):
        path = tmp_path / "one.csv"
        write_one_way(path, ["1.0,2.0,a", "1.5,2.5,c"])
        spec = IngestSpec(
            path=str(path), value_columns=("y1",), factor_columns=("grp",), levels=(("a", "b"),)
        )
        with pytest.raises(ParseError):
            load_dataset(spec)

    def test_absent_level_is_empty_cell(self, tmp_path):
        path = tmp_path / "one.csv"
        write_one_way(path, ["1.0,2.0,a", "1.5,2.5,a"])
        spec = IngestSpec(
            path=str(path), value_columns=("y1",), factor_columns=("grp",), levels=(("a", "b"),)
        )
        with pytest.raises(EmptyCell):
            load_dataset(spec)


class TestTwoWay:
    def test_cell_sizes_and_order(self, tmp_path):
        path = tmp_path / "two.csv"
        write_two_way(path)
        groups, cells = load_dataset(
            IngestSpec(path=str(path), value_columns=("bdi.pre",), factor_columns=("drug", "length"))
        )
        assert [c.n for c in cells] == [24, 32, 25, 19]
        # first factor outer, second factor inner
        assert [c.levels for c in cells] == [
            ("Yes", "<6m"),
            ("Yes", ">6m"),
            ("No", "<6m"),
            ("No", ">6m"),
        ]
        assert [c.index for c in cells] == [0, 1, 2, 3]

    def test_missing_combination(self, tmp_path):
        path = tmp_path / "two.csv"
        write_two_way(path, sizes={("Yes", "<6m"): 5, ("No", ">6m"): 5})
        with pytest.raises(EmptyCell):
            load_dataset(
                IngestSpec(
                    path=str(path), value_columns=("bdi.pre",), factor_columns=("drug", "length")
                )
            )


class TestParsing:
    def test_non_numeric_cell_names_row_and_column(self, tmp_path):
        path = tmp_path / "bad.csv"
        write_one_way(path, ["1.0,2.0,a", "oops,2.5,a", "1.2,2.2,b"])
        with pytest.raises(NonNumericValue, match=r"row 3.*'y1'"):
            load_dataset(
                IngestSpec(path=str(path), value_columns=("y1", "y2"), factor_columns=("grp",))
            )

    def test_non_finite_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        write_one_way(path, ["1.0,2.0,a", "nan,2.5,a"])
        with pytest.raises(NonNumericValue):
            load_dataset(
                IngestSpec(path=str(path), value_columns=("y1",), factor_columns=("grp",))
            )

    def test_missing_column(self, tmp_path):
        path = tmp_path / "bad.csv"
        write_one_way(path, ["1.0,2.0,a"])
        with pytest.raises(ParseError, match="'y9'"):
            load_dataset(
                IngestSpec(path=str(path), value_columns=("y9",), factor_columns=("grp",))
            )

    def test_missing_file(self, tmp_path):
        with pytest.raises(ParseError):
            load_dataset(
                IngestSpec(
                    path=str(tmp_path / "absent.csv"),
                    value_columns=("y1",),
                    factor_columns=("grp",),
                )
            )

    def test_headerless_positional_columns(self, tmp_path):
        path = tmp_path / "plain.csv"
        path.write_text("1.0;x\n2.0;x\n3.0;y\n4.5;y\n")
        groups, cells = load_dataset(
            IngestSpec(
                path=str(path),
                value_columns=("1",),
                factor_columns=("2",),
                header=False,
                delimiter=";",
            )
        )
        assert [c.n for c in cells] == [2, 2]
        assert groups[0].data.ravel().tolist() == [1.0, 2.0]

    def test_short_row_rejected(self, tmp_path):
        path = tmp_path / "short.csv"
        path.write_text("y1,y2,grp\n1.0,2.0,a\n1.0\n")
        with pytest.raises(ParseError, match="row 3"):
            load_dataset(
                IngestSpec(path=str(path), value_columns=("y1", "y2"), factor_columns=("grp",))
            )

    def test_blank_lines_skipped(self, tmp_path):
        path = tmp_path / "gaps.csv"
        path.write_text("y1,grp\n1.0,a\n\n2.0,a\n\n3.0,b\n4.0,b\n")
        groups, cells = load_dataset(
            IngestSpec(path=str(path), value_columns=("y1",), factor_columns=("grp",))
        )
        assert [c.n for c in cells] == [2, 2]

    def test_spec_validation(self):
        with pytest.raises(ParseError):
            IngestSpec(path="x", value_columns=(), factor_columns=("a",))
        with pytest.raises(ParseError):
            IngestSpec(path="x", value_columns=("v",), factor_columns=("a", "b", "c"))
