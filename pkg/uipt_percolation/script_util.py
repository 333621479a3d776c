import argparse

from .boltzmann import POLYGON_BUDGET
from .walk import DEFAULT_BUDGET, DEFAULT_TRUNCATION


def run_defaults():
    """
    Options shared by every command.
    """
    return dict(
        seed=0,
        samples=100_000,
        workers=0,  # 0: $UIPT_WORKERS, else 1
        output="",  # empty: stdout
        progress=False,
    )


def sampler_defaults():
    """
    Defaults for the continuum samplers.
    """
    return dict(
        lattice_scale=10_000,
        method="walk_embedding",
        renewal_ratio=4,
    )


def tables_defaults():
    return dict(
        table="pk",
        max_k=20,
        a=1,
        truncation=DEFAULT_TRUNCATION,
    )


def crossing2_defaults():
    return dict(
        a=2,
        b=5,
        dual=False,
        truncation=DEFAULT_TRUNCATION,
        budget=DEFAULT_BUDGET,
        trace="",  # path of a single-run trajectory dump
    )


def crossing3_defaults():
    return dict(
        a=4,
        b=2,
        c=4,
        mode="race",
        budget=DEFAULT_BUDGET,
        trace="",
    )


def mixed_defaults():
    return dict(
        a=2,
        b=5,
        rate_ratio=1.0,
        truncation=DEFAULT_TRUNCATION,
        budget=DEFAULT_BUDGET,
        trace="",
    )


def asp_verify_defaults():
    res = dict(
        identity="symmetry",
        a=3.0,
        b=1.0,
        c=3.0,
        t_values="1,2,8",
        rates="constant",
        lambdas="10,30,100,300",
        tolerance=0.015,
        budget=DEFAULT_BUDGET,
    )
    res.update(sampler_defaults())
    return res


def boltzmann_defaults():
    res = dict(
        a=2,
        b=2,
        c=2,
        d=2,
        estimator="both",
        lambdas="10,30,100",
        polygon_budget=POLYGON_BUDGET,
        budget=DEFAULT_BUDGET,
        terminal_tolerance=0.05,
    )
    res.update(sampler_defaults())
    return res


def scaling_defaults():
    return dict(
        a=1.0,
        b=1.0,
        lambdas="1,10,30,100,300",
        truncation=DEFAULT_TRUNCATION,
        method="exact",
        terminal_tolerance=0.05,
        budget=DEFAULT_BUDGET,
    )


def w_dist_defaults():
    return dict(
        a=2,
        b=2,
        c=5,
        polygon_budget=POLYGON_BUDGET,
    )


def rates_check_defaults():
    return dict(
        x=1.0,
        y=1.0,
        c=1.0,
        k_fracs="0.5",
        z_fracs="0.5",
        lambdas="100,1000,10000",
        gamma_n=1_000_000,
        tolerance=0.02,
    )


def verify_all_defaults():
    return dict(
        profile="default",
        quick=False,
    )


COMMAND_DEFAULTS = {
    "tables": tables_defaults,
    "crossing2": crossing2_defaults,
    "crossing3": crossing3_defaults,
    "mixed": mixed_defaults,
    "asp-verify": asp_verify_defaults,
    "boltzmann": boltzmann_defaults,
    "scaling": scaling_defaults,
    "w-dist": w_dist_defaults,
    "rates-check": rates_check_defaults,
}


def command_defaults(command):
    if command not in COMMAND_DEFAULTS:
        raise NotImplementedError(f"unknown command: {command}")
    return COMMAND_DEFAULTS[command]()


def parse_list(value, cast=float):
    """
    Parse "1,2,8" (or an already parsed sequence) into a list.
    """
    if isinstance(value, (list, tuple)):
        return [cast(v) for v in value]
    items = [v.strip() for v in str(value).split(",") if v.strip()]
    if not items:
        raise ValueError(f"expected a comma-separated list, got {value!r}")
    return [cast(v) for v in items]


def add_dict_to_argparser(parser, default_dict):
    for k, v in default_dict.items():
        v_type = type(v)
        if v is None:
            v_type = str
        elif isinstance(v, bool):
            v_type = str2bool
        parser.add_argument(f"--{k.replace('_', '-')}", dest=k, default=v, type=v_type)


def args_to_dict(args, keys):
    return {k: getattr(args, k) for k in keys}


def str2bool(v):
    """
    https://stackoverflow.com/questions/15008758/parsing-boolean-values-with-argparse
    """
    if isinstance(v, bool):
        return v
    if v.lower() in ("yes", "true", "t", "y", "1"):
        return True
    elif v.lower() in ("no", "false", "f", "n", "0"):
        return False
    else:
        raise argparse.ArgumentTypeError("boolean value expected")
