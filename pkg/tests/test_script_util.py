import argparse

import pytest

from uipt_percolation import script_util


def test_command_defaults():
    assert script_util.command_defaults("crossing2")["a"] == 2
    assert "lattice_scale" in script_util.command_defaults("asp-verify")
    with pytest.raises(NotImplementedError):
        script_util.command_defaults("render")


def test_parse_list():
    assert script_util.parse_list("1, 2,8") == [1.0, 2.0, 8.0]
    assert script_util.parse_list([3, 4], int) == [3, 4]
    assert script_util.parse_list("race,outer", str) == ["race", "outer"]
    with pytest.raises(ValueError):
        script_util.parse_list(" , ")


def test_dict_to_argparser():
    parser = argparse.ArgumentParser()
    script_util.add_dict_to_argparser(parser, dict(rate_ratio=1.0, dual=False, max_k=20))
    args = parser.parse_args(["--rate-ratio", "2.5", "--dual", "yes"])
    assert script_util.args_to_dict(args, ["rate_ratio", "dual", "max_k"]) == {
        "rate_ratio": 2.5, "dual": True, "max_k": 20,
    }


def test_str2bool():
    assert script_util.str2bool("T") is True
    assert script_util.str2bool("0") is False
    with pytest.raises(argparse.ArgumentTypeError):
        script_util.str2bool("maybe")
