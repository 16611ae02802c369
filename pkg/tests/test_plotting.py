import pytest

from qthermo.cli import main


@pytest.mark.parametrize("argv", [
    ["otto"], ["carnot", "--steps", "20"], ["deficit"], ["jarzynski", "--delta", "1"],
    ["relax"], ["sweep", "--wc", "0.4:1.4:6", "--wh", "1.5"],
])
def test_figure_written(tmp_path, argv):
    fig = tmp_path / "fig.png"
    assert main(argv + ["--output", str(tmp_path / "r.json"), "--figure", str(fig)]) == 0
    data = fig.read_bytes()
    assert data[:8] == b"\x89PNG\r\n\x1a\n" and len(data) > 1000


def test_figure_alongside_csv(tmp_path):
    fig, out = tmp_path / "cycle.pdf", tmp_path / "cycle.csv"
    assert main(["otto", "--format", "csv", "--output", str(out), "--figure", str(fig)]) == 0
    assert fig.read_bytes()[:4] == b"%PDF"
    assert out.read_text().count("\n") > 4
