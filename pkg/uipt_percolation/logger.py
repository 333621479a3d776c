"""
Key/value logger for experiment diagnostics, in the style of the OpenAI
baselines logger: free functions write to the current Logger, which fans
out to human-readable, JSON and CSV formats.

Result payloads never pass through here; this is for progress and counters.
Values may be exact rationals (written as "num/den") or numpy scalars.
"""

import csv
import json
import numbers
import os
import os.path as osp
import sys
import time
from collections import defaultdict
from contextlib import contextmanager
from fractions import Fraction

DEBUG = 10
INFO = 20
WARN = 30
ERROR = 40

LOGDIR_ENV = "UIPT_LOGDIR"
FORMAT_ENV = "UIPT_LOG_FORMAT"

RANK_ENV_VARS = ("PMI_RANK", "OMPI_COMM_WORLD_RANK")


def _plain(val):
    # JSON-friendly value: numpy scalars to Python numbers, rationals to text.
    if isinstance(val, Fraction):
        return f"{val.numerator}/{val.denominator}"
    if isinstance(val, bool):
        return val
    if isinstance(val, numbers.Integral):
        return int(val)
    if isinstance(val, numbers.Real):
        return float(val)
    return val


def _format_value(val):
    val = _plain(val)
    if isinstance(val, float):
        return f"{val:.6g}"
    return str(val)


class KVWriter(object):
    def writekvs(self, kvs):
        raise NotImplementedError

    def close(self):
        pass


class SeqWriter(object):
    def writeseq(self, seq):
        raise NotImplementedError


class HumanOutputFormat(KVWriter, SeqWriter):
    """
    Messages as plain lines; key/value dumps as an aligned two-column block.
    """

    def __init__(self, file, own_file=False):
        self.file = file
        self.own_file = own_file

    @classmethod
    def open(cls, path):
        return cls(open(path, "wt"), own_file=True)

    def writekvs(self, kvs):
        rows = [(key, _format_value(val)) for key, val in sorted(kvs.items())]
        width = max(len(key) for key, _ in rows)
        for key, text in rows:
            self.file.write(f"  {key:<{width}}  {text}\n")
        self.file.flush()

    def writeseq(self, seq):
        self.file.write(" ".join(seq) + "\n")
        self.file.flush()

    def close(self):
        if self.own_file:
            self.file.close()


class JSONOutputFormat(KVWriter):
    def __init__(self, path):
        self.file = open(path, "wt")

    def writekvs(self, kvs):
        record = {key: _plain(val) for key, val in kvs.items()}
        self.file.write(json.dumps(record, sort_keys=True) + "\n")
        self.file.flush()

    def close(self):
        self.file.close()


class CSVOutputFormat(KVWriter):
    """
    One row per dump. A dump that brings new keys widens the header and the
    file is rewritten, earlier rows getting empty cells for those keys.
    """

    def __init__(self, path):
        self.path = path
        self.keys = []
        self.rows = []
        open(path, "wt").close()

    def _writer(self, f):
        return csv.DictWriter(f, fieldnames=self.keys, restval="", lineterminator="\n")

    def writekvs(self, kvs):
        row = {key: _format_value(val) for key, val in kvs.items()}
        self.rows.append(row)
        new_keys = sorted(set(row) - set(self.keys))
        if new_keys:
            self.keys.extend(new_keys)
            with open(self.path, "wt", newline="") as f:
                writer = self._writer(f)
                writer.writeheader()
                writer.writerows(self.rows)
        else:
            with open(self.path, "at", newline="") as f:
                self._writer(f).writerow(row)


_FILE_FORMATS = {
    "log": ("log{}.txt", HumanOutputFormat.open),
    "json": ("progress{}.json", JSONOutputFormat),
    "csv": ("progress{}.csv", CSVOutputFormat),
}


def make_output_format(format, ev_dir, log_suffix=""):
    if format in ("stdout", "stderr"):
        return HumanOutputFormat(getattr(sys, format))
    if format not in _FILE_FORMATS:
        raise ValueError(f"unknown log format: {format}")
    if ev_dir is None:
        raise ValueError(f"format {format!r} needs a log directory (set {LOGDIR_ENV})")
    os.makedirs(ev_dir, exist_ok=True)
    name, factory = _FILE_FORMATS[format]
    return factory(osp.join(ev_dir, name.format(log_suffix)))


# ================================================================
# API
# ================================================================


def logkv(key, val):
    """
    Log a value of some diagnostic. If called many times, last value is used.
    """
    get_current().logkv(key, val)


def logkv_mean(key, val):
    """
    The same as logkv(), but if called many times, values are averaged.
    """
    get_current().logkv_mean(key, val)


def dumpkvs():
    """
    Write all of the diagnostics collected since the last dump.
    """
    return get_current().dumpkvs()


def log(*args, level=INFO):
    get_current().log(*args, level=level)


def debug(*args):
    log(*args, level=DEBUG)


def warn(*args):
    log(*args, level=WARN)


def error(*args):
    log(*args, level=ERROR)


@contextmanager
def profile_kv(scopename):
    """
    Add the wall time of the block to the "wait_<scopename>" counter.
    """
    key = "wait_" + scopename
    tstart = time.time()
    try:
        yield
    finally:
        get_current().values[key] += time.time() - tstart


# ================================================================
# Backend
# ================================================================


def get_current():
    if Logger.CURRENT is None:
        configure()
    return Logger.CURRENT


class Logger(object):
    CURRENT = None

    def __init__(self, dir, output_formats):
        self.values = defaultdict(float)
        self.counts = defaultdict(int)
        self.level = INFO
        self.dir = dir
        self.output_formats = output_formats

    def logkv(self, key, val):
        self.values[key] = val

    def logkv_mean(self, key, val):
        cnt = self.counts[key]
        self.values[key] = (self.values[key] * cnt + val) / (cnt + 1)
        self.counts[key] = cnt + 1

    def dumpkvs(self):
        out = dict(self.values)
        if out and self.level <= INFO:
            for fmt in self.output_formats:
                if isinstance(fmt, KVWriter):
                    fmt.writekvs(out)
        self.values.clear()
        self.counts.clear()
        return out

    def log(self, *args, level=INFO):
        if self.level > level:
            return
        for fmt in self.output_formats:
            if isinstance(fmt, SeqWriter):
                fmt.writeseq(map(str, args))

    def close(self):
        for fmt in self.output_formats:
            fmt.close()


def get_rank_without_mpi_import():
    # read the rank from the launcher's environment so that importing this
    # module never initializes MPI
    for varname in RANK_ENV_VARS:
        if varname in os.environ:
            return int(os.environ[varname])
    return 0


def configure(dir=None, format_strs=None, log_suffix=""):
    """
    Install a new current logger.

    :param dir: directory for file formats; defaults to $UIPT_LOGDIR.
    :param format_strs: list of formats; defaults to $UIPT_LOG_FORMAT, or
                        "stderr" (plus "log,csv" when a directory is set).
                        Ranks other than 0 only write log files.
    """
    if dir is None:
        dir = os.getenv(LOGDIR_ENV)
    if dir is not None:
        dir = osp.expanduser(dir)

    rank = get_rank_without_mpi_import()
    if rank > 0:
        log_suffix = f"{log_suffix}-rank{rank:03d}"

    if format_strs is None:
        if rank > 0:
            default = "log" if dir is not None else ""
        else:
            default = "stderr,log,csv" if dir is not None else "stderr"
        format_strs = os.getenv(FORMAT_ENV, default).split(",")
    output_formats = [make_output_format(f, dir, log_suffix) for f in format_strs if f]

    Logger.CURRENT = Logger(dir=dir, output_formats=output_formats)
    if dir is not None and output_formats:
        debug(f"logging to {dir}")


@contextmanager
def scoped_configure(dir=None, format_strs=None):
    prevlogger = Logger.CURRENT
    configure(dir=dir, format_strs=format_strs)
    try:
        yield
    finally:
        Logger.CURRENT.close()
        Logger.CURRENT = prevlogger
