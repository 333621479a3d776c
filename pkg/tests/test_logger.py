import json

from uipt_percolation import logger


def test_kv_output_formats(tmp_path):
    with logger.scoped_configure(dir=str(tmp_path), format_strs=["json", "csv", "log"]):
        logger.logkv("crossing2_black", 3)
        logger.logkv_mean("asp_exhausted_frac", 0.0)
        logger.logkv_mean("asp_exhausted_frac", 1.0)
        logger.dumpkvs()
        logger.log("done")

    row = json.loads((tmp_path / "progress.json").read_text().splitlines()[0])
    assert row == {"asp_exhausted_frac": 0.5, "crossing2_black": 3}
    header = (tmp_path / "progress.csv").read_text().splitlines()[0]
    assert header == "asp_exhausted_frac,crossing2_black"
    assert "done" in (tmp_path / "log.txt").read_text()


def test_empty_dump_writes_nothing(tmp_path):
    with logger.scoped_configure(dir=str(tmp_path), format_strs=["json"]):
        assert logger.dumpkvs() == {}
    assert (tmp_path / "progress.json").read_text() == ""


def test_dump_clears_values_and_levels(tmp_path):
    with logger.scoped_configure(dir=str(tmp_path), format_strs=["log"]):
        logger.logkv("w_runs", 10)
        logger.logkv("direct_runs", 4)
        assert logger.dumpkvs() == {"w_runs": 10, "direct_runs": 4}
        assert logger.dumpkvs() == {}

        logger.get_current().level = logger.WARN
        logger.log("hidden")
        logger.debug("also hidden")
        logger.warn("shown")
        assert logger.get_current().dir == str(tmp_path)

    text = (tmp_path / "log.txt").read_text()
    assert "shown" in text
    assert "hidden" not in text
