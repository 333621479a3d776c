"""
Batch front end: exact tables, Monte Carlo experiments and identity checks.

Every run is described by an ExperimentSpec and produces a payload
{"tool", "version", "spec", "results"} serialized as JSON with sorted keys,
or a CSV table headed by a comment line that carries the same metadata.
Samples are cut into fixed-size tasks seeded from (seed, stream, task), so
results do not depend on the number of workers.
"""

import argparse
import csv
import io
import json
import math
import os
import sys
import traceback
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

import blobfile as bf
import numpy as np
from omegaconf import OmegaConf

from . import __version__, asp, boltzmann, dist_util, logger, peeling, walk
from . import combinatorics as comb
from .estimates import binomial_estimate, combined_sigma, weighted_estimate, z_score
from .script_util import (
    COMMAND_DEFAULTS,
    add_dict_to_argparser,
    args_to_dict,
    command_defaults,
    parse_list,
    run_defaults,
    verify_all_defaults,
)

TOOL = "uipt-percolation"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INTERNAL = 2
EXIT_ACCEPTANCE = 3

COMMANDS = tuple(COMMAND_DEFAULTS) + ("verify-all",)
FORMATS = ("json", "csv")
SEED_LIMIT = 2 ** 64

# Single-run trajectory dumps draw from their own stream and are capped.
TRACE_STREAM = 99
TRACE_BUDGET = 100_000


@dataclass(frozen=True)
class ExperimentSpec:
    """
    One batch run.

    ``workers`` and ``output`` decide where the run happens and where it is
    written; they take no part in equality and are not serialized, so the
    payload of a run is the same for any worker count.
    """

    command: str
    parameters: dict = field(default_factory=dict)
    seed: int = 0
    samples: int = 0
    format: str = "json"
    workers: int = field(default=1, compare=False)
    output: str = field(default="", compare=False)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise NotImplementedError(f"unknown command: {self.command}")
        if not 0 <= int(self.seed) < SEED_LIMIT:
            raise ValueError(f"seed must be a 64-bit non-negative integer, got {self.seed}")
        if int(self.samples) < 0:
            raise ValueError(f"samples must be non-negative, got {self.samples}")
        if int(self.workers) < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        if self.format not in FORMATS:
            raise NotImplementedError(f"unknown output format: {self.format}")

    def to_dict(self):
        return {
            "command": self.command,
            "parameters": dict(self.parameters),
            "seed": int(self.seed),
            "samples": int(self.samples),
            "format": self.format,
        }

    @classmethod
    def from_dict(cls, d, workers=1, output=""):
        return cls(
            command=d["command"],
            parameters=dict(d.get("parameters", {})),
            seed=int(d.get("seed", 0)),
            samples=int(d.get("samples", 0)),
            format=d.get("format", "json"),
            workers=workers,
            output=output,
        )


def make_spec(command, seed=0, samples=0, workers=1, output="", format="json", **parameters):
    """
    Build an ExperimentSpec with the command's default parameters, overridden
    by ``parameters``.
    """
    defaults = command_defaults(command)
    unknown = sorted(set(parameters) - set(defaults))
    if unknown:
        raise ValueError(f"unknown parameters for {command}: {', '.join(unknown)}")
    return ExperimentSpec(
        command=command,
        parameters={**defaults, **parameters},
        seed=seed,
        samples=samples,
        format=format,
        workers=workers,
        output=output,
    )


# ---------------------------------------------------------------------------
# Task functions. They run in worker processes, so they live at module level
# and take one picklable tuple (seed, stream, task index, size, parameters).


def _task_list(spec, params, stream=0):
    sizes = dist_util.split_samples(spec.samples)
    return [(spec.seed, stream, i, size, params) for i, size in enumerate(sizes)]


def _fan_out(spec, fn, params, stream=0, progress=False, desc=None):
    if spec.samples < 1:
        raise ValueError(f"{spec.command} needs samples >= 1, got {spec.samples}")
    results = dist_util.run_tasks(
        fn, _task_list(spec, params, stream), workers=spec.workers, progress=progress, desc=desc
    )
    return dist_util.merge_counts(results)


def _rng(task):
    seed, stream, index, _, _ = task
    return dist_util.task_rng(seed, index, stream)


def _batch_counts(batch):
    counts = batch.counts().to_dict()
    esc = batch.escaped
    # an escaped run is resolved by the exact crossing probability of its state
    cont = walk.hitting_probs_ladder(batch.height1[esc], batch.height2[esc]).tolist()
    counts["continuation_sum"] = math.fsum(cont)
    counts["continuation_sq_sum"] = math.fsum(c * c for c in cont)
    return counts


def _resolved(counts, n, seed):
    # frequency with escaped runs counted at their exact continuation value
    return weighted_estimate(
        counts["black"] + counts["continuation_sum"],
        counts["black"] + counts["continuation_sq_sum"],
        n, 1.0, seed=seed, undetermined=counts["undetermined"] - counts["escaped"],
    )


def _crossing2_task(task):
    _, _, _, size, p = task
    batch = peeling.two_segment_batch(
        p["a"], p["b"], size, _rng(task), dual=p["dual"], budget=p["budget"],
        ceiling=p["truncation"] + 1,
    )
    return _batch_counts(batch)


def _crossing3_task(task):
    _, _, _, size, p = task
    mode = ThreeSegmentModeName(p["mode"]).mode
    batch = peeling.three_segment_batch(
        p["a"], p["b"], p["c"], size, _rng(task), mode=mode, budget=p["budget"]
    )
    return batch.counts().to_dict()


def _mixed_task(task):
    _, _, _, size, p = task
    batch = peeling.mixed_growth_batch(
        p["a"], p["b"], p["rate_ratio"], size, _rng(task), budget=p["budget"],
        ceiling=p["truncation"] + 1,
    )
    return _batch_counts(batch)


def _direct_task(task):
    _, _, _, size, p = task
    return boltzmann.direct_counts(_polygon(p), size, _rng(task), budget=p["polygon_budget"])


def _reweighted_task(task):
    _, _, _, size, p = task
    return boltzmann.reweighted_sums(_polygon(p), size, _rng(task), budget=p["budget"])


def _w_task(task):
    _, _, _, size, p = task
    w = boltzmann.w_distribution(p["a"], p["b"], p["c"], size, _rng(task), budget=p["polygon_budget"])
    return {"counts": w.counts, "undetermined": w.undetermined}


# ---------------------------------------------------------------------------
# Commands


class ThreeSegmentModeName(Enum):
    """
    Command-line names of the three-segment exploration modes.
    """

    RACE = "race"
    MIRRORED = "mirrored"
    OUTER = "outer"

    @property
    def mode(self):
        return peeling.ThreeSegmentMode[self.name]

    @classmethod
    def parse(cls, value):
        names = [m.value for m in cls] if value == "all" else parse_list(value, str)
        modes = []
        for name in names:
            try:
                modes.append(cls(name))
            except ValueError:
                raise NotImplementedError(f"unknown three-segment mode: {name}")
        return modes


def _polygon(p):
    return boltzmann.PolygonConfig(int(p["a"]), int(p["b"]), int(p["c"]), int(p["d"]))


def _sampler_config(p):
    return asp.AspSamplerConfig(
        lattice_scale=int(p["lattice_scale"]),
        budget=int(p["budget"]),
        method=asp.sampler_method(p["method"]),
        renewal_ratio=int(p["renewal_ratio"]),
    )


def _check_truncation(start, truncation):
    if not 1 <= start <= truncation:
        raise ValueError(f"starting length {start} must lie in [1, truncation={truncation}]")


def _dump_trace(spec, explore):
    """
    Write the trajectory of one run to the spec's ``trace`` path, if any.

    :param explore: callable (rng, budget, file) -> CrossingOutcome.
    :return: summary of the run, or None.
    """
    path = spec.parameters.get("trace", "")
    if not path:
        return None
    rng = dist_util.task_rng(spec.seed, 0, stream=TRACE_STREAM)
    budget = min(int(spec.parameters["budget"]), TRACE_BUDGET)
    with bf.BlobFile(path, "w") as f:
        outcome = explore(rng, budget, f)
    logger.log(f"wrote trajectory to {path}")
    return {"path": path, "result": outcome.result, "steps": outcome.steps_used}


def run_tables(spec, progress=False):
    p = spec.parameters
    max_k = int(p["max_k"])
    fmt = comb.format_rational
    table = p["table"]
    if table == "pk":
        columns = ["k", "p_k", "tail_mass"]
        rows = [[k, fmt(pk), fmt(tail)] for k, pk, tail in comb.pk_table(max_k)]
    elif table == "zm":
        columns = ["m", "Z_m", "peel_internal_free"]
        rows = [[m, fmt(z), fmt(q)] for m, z, q in comb.partition_table(max_k)]
    elif table == "tail":
        if max_k < 0:
            raise ValueError(f"max_k must be >= 0, got {max_k}")
        columns = ["K", "tail_mass", "mean_tail"]
        rows = [[K, fmt(comb.tail_mass(K)), fmt(comb.mean_tail(K))] for K in range(max_k + 1)]
    elif table == "overshoot":
        a, N = int(p["a"]), int(p["truncation"])
        _check_truncation(a, N)
        law = walk.overshoot_distribution_exact(a, N, support=max(N, max_k + 1))
        columns = ["j", "probability", "survival"]
        rows = [[j, float(law.mass[j]), law.survival(j)] for j in range(max_k + 1)]
        return {"columns": columns, "rows": rows, "escape_mass": law.escape_mass}
    else:
        raise NotImplementedError(f"unknown table: {table}")
    return {"columns": columns, "rows": rows}


def run_crossing2(spec, progress=False):
    """
    Two-segment crossings from the peeling simulator, against the exact
    solver at the same truncation. The untruncated ladder value is reported
    next to the frequency with escaped runs resolved.
    """
    p = spec.parameters
    a, b, N = int(p["a"]), int(p["b"]), int(p["truncation"])
    dual = bool(p["dual"])
    counts = _fan_out(spec, _crossing2_task, p, progress=progress, desc="crossing2")

    if dual:
        _check_truncation(b, N)
        law = walk.overshoot_distribution_exact(b, N, support=max(N, a + 1))
        truncated = walk.HittingProbability(law.cdf(a), law.escape_mass)
    else:
        _check_truncation(a, N)
        truncated = walk.hitting_prob_exact(a, b, N)
    untruncated = walk.hitting_prob_ladder(a, b)

    n = spec.samples
    frequency = binomial_estimate(counts["black"], n, seed=spec.seed,
                                  undetermined=counts["undetermined"])
    resolved = _resolved(counts, n, spec.seed)
    trace = _dump_trace(spec, lambda rng, budget, f: peeling.run_two_segment(
        a, b, rng, dual=dual, budget=budget, trace=f))
    z = z_score(frequency.value, truncated.value, frequency.stderr)
    logger.logkv("crossing2_black", counts["black"])
    logger.logkv("crossing2_escaped", counts["escaped"])
    logger.logkv("crossing2_z", z)
    logger.dumpkvs()
    return {
        "counts": counts,
        "frequency": frequency.to_dict(),
        "exact": {
            "truncation": N,
            "value": truncated.value,
            "error_bound": truncated.error_bound,
        },
        "untruncated": untruncated,
        "resolved": resolved.to_dict(),
        "trace": trace,
        "z_score": z,
        "pass": z <= 3.0,
    }


def run_crossing3(spec, progress=False):
    """
    Three-segment crossings by one or more exploration modes; each mode uses
    its own sample stream, and every mode is compared with the first.
    """
    p = spec.parameters
    modes = ThreeSegmentModeName.parse(p["mode"])
    rows = {}
    for stream, name in enumerate(modes):
        params = {**p, "mode": name.value}
        counts = _fan_out(spec, _crossing3_task, params, stream=stream, progress=progress,
                          desc=f"crossing3-{name.value}")
        est = binomial_estimate(counts["black"], counts["black"] + counts["white"],
                                seed=spec.seed, undetermined=counts["undetermined"])
        rows[name.value] = {"counts": counts, "estimate": est.to_dict()}

    trace = _dump_trace(spec, lambda rng, budget, f: peeling.run_three_segment(
        int(p["a"]), int(p["b"]), int(p["c"]), rng, mode=modes[0].mode, budget=budget, trace=f))
    first = rows[modes[0].value]["estimate"]
    passed = True
    for name in modes[1:]:
        est = rows[name.value]["estimate"]
        z = z_score(est["value"], first["value"], combined_sigma(est["stderr"], first["stderr"]))
        rows[name.value]["z_score"] = z
        passed = passed and z <= 3.0
    return {"modes": rows, "trace": trace, "pass": passed}


def run_mixed(spec, progress=False):
    """
    Mixed growth of both interfaces against an independent two-segment
    batch from the same lengths, drawn on a second stream. Both sides are
    resolved at the truncation by the exact value of the escaped state.
    """
    p = spec.parameters
    a, b, N = int(p["a"]), int(p["b"]), int(p["truncation"])
    _check_truncation(max(a, b), N)
    if not float(p["rate_ratio"]) > 0:
        raise ValueError(f"rate_ratio must be positive, got {p['rate_ratio']}")
    counts = _fan_out(spec, _mixed_task, p, progress=progress, desc="mixed")
    reference_counts = _fan_out(spec, _crossing2_task, {**p, "dual": False}, stream=1,
                                progress=progress, desc="mixed-reference")
    n = spec.samples
    resolved = _resolved(counts, n, spec.seed)
    reference = _resolved(reference_counts, n, spec.seed)
    trace = _dump_trace(spec, lambda rng, budget, f: peeling.run_mixed_growth(
        a, b, float(p["rate_ratio"]), rng, budget=budget, trace=f))
    z = z_score(resolved.value, reference.value, combined_sigma(resolved.stderr, reference.stderr))
    logger.logkv("mixed_escaped", counts["escaped"])
    logger.logkv("mixed_z", z)
    logger.dumpkvs()
    return {
        "counts": counts,
        "resolved": resolved.to_dict(),
        "two_segment": {"counts": reference_counts, "resolved": reference.to_dict(),
                        "truncation": N},
        "untruncated": walk.hitting_prob_ladder(a, b),
        "trace": trace,
        "z_score": z,
        "pass": z <= 3.0,
    }


def run_asp_verify(spec, progress=False):
    """
    Continuum identity checks. They draw from a single stream, serially.
    """
    p = spec.parameters
    if spec.samples < 1:
        raise ValueError(f"asp-verify needs samples >= 1, got {spec.samples}")
    rng = dist_util.task_rng(spec.seed, 0)
    config = _sampler_config(p)
    identity = p["identity"]
    a, b, c = float(p["a"]), float(p["b"]), float(p["c"])
    n, tol = spec.samples, float(p["tolerance"])
    if identity == "symmetry":
        reports = [asp.verify_symmetry(a, b, n, config, rng, tolerance=tol)]
    elif identity == "ratio":
        reports = asp.verify_ratio_law(parse_list(p["t_values"]), n, config, rng, tolerance=tol)
    elif identity == "race":
        reports = [asp.verify_race_identity(a, b, n, config, rng, tolerance=tol)]
    elif identity == "mixed":
        reports = [asp.verify_mixed_identity(a, b, p["rates"], n, config, rng, tolerance=tol)]
    elif identity == "scaling":
        reports = [asp.verify_walk_scaling(a, b, parse_list(p["lambdas"], int), n, rng,
                                           budget=int(p["budget"]))]
    elif identity == "invariance":
        reports = [asp.verify_scale_invariance(a, n, config, rng)]
    elif identity == "three-segment":
        reports = [asp.three_segment_limit(a, b, c, n, config, rng)]
    else:
        raise NotImplementedError(f"unknown identity: {identity}")
    return {"reports": [r.to_dict() for r in reports], "pass": all(r.passed for r in reports)}


def run_boltzmann(spec, progress=False):
    """
    Crossing probability of a free polygon by the direct exploration, the
    reweighted half-plane race, or both; or the scaling of the reweighted
    estimator.
    """
    p = spec.parameters
    cfg = _polygon(p)
    estimator = p["estimator"]
    if estimator == "scaling":
        rng = dist_util.task_rng(spec.seed, 0)
        report = boltzmann.scaled_reweighted_limit(
            cfg.a, cfg.b, cfg.c, cfg.d, parse_list(p["lambdas"], int), spec.samples, rng,
            config=_sampler_config(p), terminal_tolerance=float(p["terminal_tolerance"]),
            budget=int(p["budget"]),
        )
        return {"reports": [report.to_dict()], "pass": report.passed}
    if estimator not in ("direct", "reweighted", "both"):
        raise NotImplementedError(f"unknown estimator: {estimator}")

    results = {"polygon": cfg.to_dict()}
    if estimator in ("direct", "both"):
        counts = _fan_out(spec, _direct_task, p, stream=0, progress=progress, desc="direct")
        est = binomial_estimate(counts["black"], counts["black"] + counts["white"],
                                seed=spec.seed, undetermined=counts["undetermined"])
        results["direct"] = {"counts": counts, "estimate": est.to_dict()}
    if estimator in ("reweighted", "both"):
        sums = _fan_out(spec, _reweighted_task, p, stream=1, progress=progress, desc="reweighted")
        est = boltzmann.reweighted_estimate(sums, seed=spec.seed)
        results["reweighted"] = {"sums": sums, "estimate": est.to_dict()}
    if estimator == "both":
        d, r = results["direct"]["estimate"], results["reweighted"]["estimate"]
        z = z_score(d["value"], r["value"], combined_sigma(d["stderr"], r["stderr"]))
        results["z_score"] = z
        results["pass"] = z <= 3.0
        logger.logkv("boltzmann_z", z)
        logger.dumpkvs()
    return results


def run_scaling(spec, progress=False):
    p = spec.parameters
    rng = dist_util.task_rng(spec.seed, 0)
    report = asp.verify_walk_scaling(
        float(p["a"]), float(p["b"]), parse_list(p["lambdas"], int), spec.samples, rng,
        terminal_tolerance=float(p["terminal_tolerance"]), truncation=int(p["truncation"]),
        budget=int(p["budget"]), method=p["method"],
    )
    return {"reports": [report.to_dict()], "pass": report.passed}


def run_w_dist(spec, progress=False):
    p = spec.parameters
    boltzmann.BoltzmannChainState(int(p["a"]), int(p["b"]), int(p["c"]))
    merged = _fan_out(spec, _w_task, p, progress=progress, desc="w-dist")
    rows = [[i + 1, int(n)] for i, n in enumerate(merged["counts"])]
    return {
        "columns": ["position", "count"],
        "rows": rows,
        "undetermined": merged["undetermined"],
    }


def run_rates_check(spec, progress=False):
    p = spec.parameters
    report = boltzmann.jump_rate_asymptotics_check(
        float(p["x"]), float(p["y"]), float(p["c"]), parse_list(p["k_fracs"]),
        parse_list(p["lambdas"], int), z_fracs=parse_list(p["z_fracs"]),
        tolerance=float(p["tolerance"]),
    )
    estimate = boltzmann.gamma_prime_estimate(int(p["gamma_n"]))
    exact = comb.gamma_prime()
    relative = abs(estimate / exact - 1.0)
    report["gamma_prime"] = {
        "n": int(p["gamma_n"]),
        "estimate": estimate,
        "closed_form": exact,
        "relative_error": relative,
    }
    report["pass"] = bool(report["pass"] and relative <= 0.005)
    return report


RUNNERS = {
    "tables": run_tables,
    "crossing2": run_crossing2,
    "crossing3": run_crossing3,
    "mixed": run_mixed,
    "asp-verify": run_asp_verify,
    "boltzmann": run_boltzmann,
    "scaling": run_scaling,
    "w-dist": run_w_dist,
    "rates-check": run_rates_check,
}


def run(spec, progress=False):
    """
    Dispatch a spec to its command and return the payload.
    """
    if spec.command not in RUNNERS:
        raise NotImplementedError(f"unknown command: {spec.command}")
    logger.debug(f"running {spec.command} with {spec.to_dict()}")
    with logger.profile_kv(spec.command):
        results = RUNNERS[spec.command](spec, progress=progress)
    return {"tool": TOOL, "version": __version__, "spec": spec.to_dict(), "results": results}


# ---------------------------------------------------------------------------
# Output


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, Fraction):
        return comb.format_rational(obj)
    if isinstance(obj, Enum):
        return obj.name.lower()
    return obj


def render(payload):
    """
    Text of a payload in the format its spec asks for.
    """
    spec = payload["spec"]
    if spec["format"] == "json":
        return json.dumps(_jsonable(payload), sort_keys=True, indent=2) + "\n"
    results = payload["results"]
    if "columns" not in results:
        raise ValueError(f"{spec['command']} has no CSV output")
    buf = io.StringIO()
    meta = {"tool": payload["tool"], "version": payload["version"], "spec": spec}
    buf.write("# " + json.dumps(_jsonable(meta), sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(results["columns"])
    writer.writerows(_jsonable(results["rows"]))
    return buf.getvalue()


def write_output(text, path=""):
    if not path:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with bf.BlobFile(path, "w") as f:
        f.write(text)
    logger.log(f"wrote {path}")


def read_payload(path):
    """
    Payload of a JSON output, or of the comment line of a CSV output.
    """
    with bf.BlobFile(path, "r") as f:
        text = f.read()
    if text.startswith("# "):
        return json.loads(text[2:].splitlines()[0])
    return json.loads(text)


def spec_from_payload(payload, workers=1, output=""):
    return ExperimentSpec.from_dict(payload["spec"], workers=workers, output=output)


# ---------------------------------------------------------------------------
# Acceptance suite


PROFILE_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "configs")


def load_profile(name):
    """
    Tolerance profile by name ("default", "quick") or path to a YAML file.
    """
    if name.endswith((".yaml", ".yml")):
        path = name
    else:
        path = os.path.join(PROFILE_DIR, f"{name}.yaml")
        if not os.path.exists(path):
            raise NotImplementedError(f"unknown profile: {name}")
    return OmegaConf.to_container(OmegaConf.load(path), resolve=True)


def _derived_seed(seed, criterion, index=0):
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(criterion), int(index)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _sampler_parameters(profile):
    s = profile["sampler"]
    return dict(lattice_scale=s["lattice_scale"], renewal_ratio=s["renewal_ratio"],
                method=s["method"])


def _check_normalization(profile, seed, workers, progress):
    rows = []
    for K in profile["normalization"]["cutoffs"]:
        head = sum((comb.halfplane_pk(k) for k in range(1, K + 1)), Fraction(0))
        total = Fraction(2, 3) + 2 * (head + comb.tail_mass(K))
        rows.append({"K": K, "total": total, "pass": total == 1})
    return all(r["pass"] for r in rows), {"rows": rows}


def _check_bayes(profile, seed, workers, progress):
    max_m = profile["bayes"]["max_m"]
    failed = [m for m in range(2, max_m + 1) if not boltzmann.bayes_event_check(m).equal]
    return not failed, {"max_m": max_m, "failed": failed}


def _check_complement(profile, seed, workers, progress):
    cfg = profile["complement"]
    N, L = cfg["truncation"], cfg["max_length"]
    laws = {a: walk.overshoot_distribution_exact(a, N) for a in range(1, L + 1)}
    worst = 0.0
    failed = []
    for a in range(1, L + 1):
        for b in range(1, L + 1):
            total = laws[a].survival(b) + laws[b].survival(a)
            allowed = laws[a].escape_mass + laws[b].escape_mass + 1e-12
            worst = max(worst, abs(total - 1.0))
            if abs(total - 1.0) > allowed:
                failed.append([a, b])
    return not failed, {"truncation": N, "max_deviation": worst, "failed": failed}


def _check_simulator_solver(profile, seed, workers, progress):
    cfg = profile["simulator_solver"]
    rows = []
    for i, (a, b) in enumerate(cfg["pairs"]):
        spec = make_spec("crossing2", seed=_derived_seed(seed, 4, i), samples=cfg["samples"],
                         workers=workers, a=a, b=b, truncation=cfg["truncation"])
        rows.append(run(spec, progress=progress)["results"])
    return all(r["pass"] for r in rows), {"runs": rows}


def _check_scaling(profile, seed, workers, progress):
    cfg = profile["scaling"]
    lambdas = ",".join(str(lam) for lam in cfg["lambdas"])
    rows = []
    for i, target in enumerate(cfg["targets"]):
        spec = make_spec("scaling", seed=_derived_seed(seed, 5, i), workers=workers,
                         a=target["a"], b=target["b"], lambdas=lambdas,
                         truncation=cfg["truncation"], terminal_tolerance=target["tolerance"])
        rows.append(run(spec, progress=progress)["results"])
    return all(r["pass"] for r in rows), {"runs": rows}


def _asp_check(criterion, profile, seed, workers, progress, identity, cfg, index=0, **extra):
    params = dict(identity=identity, tolerance=cfg["tolerance"], **_sampler_parameters(profile))
    for key in ("a", "b"):
        if key in cfg:
            params[key] = cfg[key]
    params.update(extra)
    spec = make_spec("asp-verify", seed=_derived_seed(seed, criterion, index),
                     samples=cfg["samples"], workers=workers, **params)
    return run(spec, progress=progress)["results"]


def _check_symmetry(profile, seed, workers, progress):
    res = _asp_check(6, profile, seed, workers, progress, "symmetry", profile["symmetry"])
    return res["pass"], res


def _check_ratio(profile, seed, workers, progress):
    cfg = profile["ratio"]
    t_values = ",".join(str(t) for t in cfg["t_values"])
    res = _asp_check(7, profile, seed, workers, progress, "ratio", cfg, t_values=t_values)
    return res["pass"], res


def _check_race(profile, seed, workers, progress):
    res = _asp_check(8, profile, seed, workers, progress, "race", profile["race"])
    return res["pass"], res


def _check_mixed(profile, seed, workers, progress):
    cfg = profile["mixed"]
    discrete = []
    for i, ratio in enumerate(cfg["rate_ratios"]):
        spec = make_spec("mixed", seed=_derived_seed(seed, 9, i), samples=cfg["samples"],
                         workers=workers, a=cfg["a"], b=cfg["b"], rate_ratio=float(ratio),
                         truncation=cfg["truncation"])
        discrete.append(run(spec, progress=progress)["results"])
    continuum = [
        _asp_check(9, profile, seed, workers, progress, "mixed", cfg["continuum"],
                   index=100 + i, rates=preset)
        for i, preset in enumerate(cfg["continuum"]["presets"])
    ]
    passed = all(r["pass"] for r in discrete) and all(r["pass"] for r in continuum)
    return passed, {"discrete": discrete, "continuum": continuum}


def _check_three_segment(profile, seed, workers, progress):
    cfg = profile["three_segment"]
    rows = []
    for i, (a, b, c) in enumerate(cfg["triples"]):
        spec = make_spec("crossing3", seed=_derived_seed(seed, 10, i), samples=cfg["samples"],
                         workers=workers, a=a, b=b, c=c, mode=cfg["modes"])
        rows.append(run(spec, progress=progress)["results"])
    return all(r["pass"] for r in rows), {"runs": rows}


def _check_boltzmann(profile, seed, workers, progress):
    cfg = profile["boltzmann"]
    rows = []
    for i, (a, b, c, d) in enumerate(cfg["polygons"]):
        spec = make_spec("boltzmann", seed=_derived_seed(seed, 11, i), samples=cfg["samples"],
                         workers=workers, a=a, b=b, c=c, d=d, estimator="both")
        rows.append(run(spec, progress=progress)["results"])
    return all(r["pass"] for r in rows), {"runs": rows}


def _check_chain(profile, seed, workers, progress):
    cfg = profile["chain"]
    rng = dist_util.task_rng(_derived_seed(seed, 12), 0)
    failed = []
    for _ in range(cfg["states"]):
        A, B, c = (int(v) for v in rng.integers(1, cfg["max_length"] + 1, size=3))
        total = sum((p for _, p in boltzmann.chain_transition_law(
            boltzmann.BoltzmannChainState(A, B, c))), Fraction(0))
        if total != 1:
            failed.append([A, B, c])
    return not failed, {"states": cfg["states"], "failed": failed}


def _check_rates(profile, seed, workers, progress):
    spec = make_spec("rates-check", seed=_derived_seed(seed, 13), workers=workers,
                     **profile["rates"])
    res = run(spec, progress=progress)["results"]
    return res["pass"], res


def _check_reproducibility(profile, seed, workers, progress):
    cfg = profile["reproducibility"]
    texts = []
    for w in list(cfg["workers"]) + [cfg["workers"][0]]:
        spec = make_spec("crossing2", seed=_derived_seed(seed, 14), samples=cfg["samples"],
                         workers=int(w), truncation=500)
        texts.append(render(run(spec)))
    return len(set(texts)) == 1, {"workers": list(cfg["workers"]), "runs": len(texts)}


ACCEPTANCE_CHECKS = [
    (1, "exact normalization", _check_normalization),
    (2, "exact bayes identity", _check_bayes),
    (3, "complement identity", _check_complement),
    (4, "simulator vs solver", _check_simulator_solver),
    (5, "scaling to the arccos law", _check_scaling),
    (6, "symmetry identity", _check_symmetry),
    (7, "ratio law", _check_ratio),
    (8, "race identity", _check_race),
    (9, "mixed growth", _check_mixed),
    (10, "three-segment symmetry", _check_three_segment),
    (11, "boltzmann estimators", _check_boltzmann),
    (12, "chain conservation", _check_chain),
    (13, "jump-rate asymptotics", _check_rates),
    (14, "reproducibility", _check_reproducibility),
]


# Scale each acceptance check is stated at, as (setting, kind, reference):
# "min" settings must reach the reference, "max" ones stay within it and
# "covers" lists include every reference entry. Profiles below it still run;
# the shortfalls are listed with the check they weaken.
REFERENCE_SCALE = {
    1: [("normalization.cutoffs", "covers", [0, 10, 1000])],
    2: [("bayes.max_m", "min", 100)],
    3: [("complement.max_length", "min", 10), ("complement.truncation", "min", 5000)],
    4: [("simulator_solver.samples", "min", 10 ** 6),
        ("simulator_solver.pairs", "covers", [[2, 5], [5, 2], [3, 3], [7, 1]])],
    5: [("scaling.lambdas", "covers", [10, 30, 100, 300])],
    6: [("sampler.lattice_scale", "min", 10 ** 4), ("symmetry.samples", "min", 10 ** 5),
        ("symmetry.tolerance", "max", 0.015)],
    7: [("sampler.lattice_scale", "min", 10 ** 4), ("ratio.samples", "min", 10 ** 5),
        ("ratio.tolerance", "max", 0.015), ("ratio.t_values", "covers", [1, 2, 8])],
    8: [("sampler.lattice_scale", "min", 10 ** 4), ("race.samples", "min", 10 ** 5),
        ("race.tolerance", "max", 0.015)],
    9: [("mixed.rate_ratios", "covers", [1, 4]), ("sampler.lattice_scale", "min", 10 ** 4),
        ("mixed.continuum.tolerance", "max", 0.02)],
    10: [("three_segment.samples", "min", 10 ** 5),
         ("three_segment.triples", "covers", [[4, 2, 4], [3, 3, 3]])],
    11: [("boltzmann.samples", "min", 10 ** 5),
         ("boltzmann.polygons", "covers", [[2, 2, 2, 2], [3, 1, 3, 1], [1, 3, 1, 3], [2, 4, 2, 4]])],
    12: [("chain.states", "min", 100), ("chain.max_length", "min", 30)],
    13: [("rates.tolerance", "max", 0.02)],
    14: [("reproducibility.workers", "covers", [1, 4, 16])],
}


def _setting(profile, path):
    value = profile
    for key in path.split("."):
        if not isinstance(value, dict) or key not in value:
            return None
        value = value[key]
    return value


def _as_key(value):
    if isinstance(value, (list, tuple)):
        return tuple(_as_key(v) for v in value)
    return float(value)


def profile_downgrades(profile, number):
    """
    Settings of a profile that fall short of the scale check ``number`` is
    stated at.

    :return: list of {"setting", "value", "reference"} rows; empty at full scale.
    """
    rows = []
    for path, kind, reference in REFERENCE_SCALE.get(number, ()):
        value = _setting(profile, path)
        if value is None:
            short = True
        elif kind == "min":
            short = value < reference
        elif kind == "max":
            short = value > reference
        else:
            short = not {_as_key(r) for r in reference} <= {_as_key(v) for v in value}
        if short:
            rows.append({"setting": path, "value": value, "reference": reference})
    return rows


def verify_all(profile="default", seed=0, workers=1, progress=False, only=None):
    """
    Run the acceptance checks of a profile and log a pass/fail matrix. A
    check run below its reference scale is marked "(reduced)" and its row
    lists the settings that fall short.

    :param only: optional collection of check numbers to run.
    :return: payload whose results hold one row per check and an overall pass.
    """
    config = load_profile(profile)
    criteria = []
    for number, name, check in ACCEPTANCE_CHECKS:
        if only is not None and number not in only:
            continue
        logger.log(f"[{number}] {name}")
        with logger.profile_kv(f"check_{number}"):
            passed, details = check(config, seed, workers, progress)
        downgrades = profile_downgrades(config, number)
        for d in downgrades:
            logger.warn(f"[{number}] {d['setting']} = {d['value']} (reference {d['reference']})")
        criteria.append({"id": number, "name": name, "pass": bool(passed),
                         "downgrades": downgrades, "details": details})
        logger.dumpkvs()

    width = max((len(c["name"]) for c in criteria), default=0)
    for c in criteria:
        status = "PASS" if c["pass"] else "FAIL"
        if c["downgrades"]:
            status += " (reduced)"
        logger.log(f"{c['id']:>3}  {c['name']:<{width}}  {status}")
    spec = ExperimentSpec(command="verify-all", parameters={"profile": profile}, seed=seed,
                          workers=workers)
    results = {
        "criteria": criteria,
        "pass": all(c["pass"] for c in criteria),
        "reduced": any(c["downgrades"] for c in criteria),
    }
    return {"tool": TOOL, "version": __version__, "spec": spec.to_dict(), "results": results}


# ---------------------------------------------------------------------------
# Command line


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def create_argparser():
    parser = _ArgumentParser(prog=TOOL, description=__doc__.strip().splitlines()[0])
    parser.add_argument("--version", action="version", version=f"{TOOL} {__version__}")
    sub = parser.add_subparsers(dest="command")
    sub.required = True
    for command in COMMAND_DEFAULTS:
        p = sub.add_parser(command)
        add_dict_to_argparser(p, {**run_defaults(), **command_defaults(command), "format": ""})
        if command == "tables":
            for name in ("pk", "zm", "tail", "overshoot"):
                p.add_argument(f"--{name}", dest="table", action="store_const", const=name)
    p = sub.add_parser("verify-all")
    add_dict_to_argparser(p, {**run_defaults(), **verify_all_defaults()})
    return parser


def _default_format(command, output):
    if command == "tables" or output.endswith(".csv"):
        return "csv"
    return "json"


def spec_from_args(args):
    keys = command_defaults(args.command).keys()
    return ExperimentSpec(
        command=args.command,
        parameters=args_to_dict(args, keys),
        seed=args.seed,
        samples=args.samples,
        format=args.format or _default_format(args.command, args.output),
        workers=dist_util.resolve_workers(args.workers or None),
        output=args.output,
    )


def main(argv=None):
    args = create_argparser().parse_args(argv)
    logger.configure()
    try:
        if args.command == "verify-all":
            profile = "quick" if args.quick else args.profile
            payload = verify_all(
                profile,
                seed=args.seed,
                workers=dist_util.resolve_workers(args.workers or None),
                progress=args.progress,
            )
            write_output(render(payload), args.output)
            return EXIT_OK if payload["results"]["pass"] else EXIT_ACCEPTANCE
        spec = spec_from_args(args)
        payload = run(spec, progress=args.progress)
        write_output(render(payload), spec.output)
    except (ValueError, NotImplementedError) as e:
        logger.error(f"error: {e}")
        return EXIT_USAGE
    except Exception:
        logger.error(traceback.format_exc())
        return EXIT_INTERNAL
    finally:
        logger.dumpkvs()
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
