"""Machine-readable outputs: ``report.json`` and per-sweep CSV curves."""

import csv
import json
import os
from logging import getLogger

from .errors import FieldFileError
from .utils import canonical_json, jsonable, sha256_hex

LOGGER = getLogger(__name__)

FLOAT_FORMAT = "%.17g"
REPORT_NAME = "report.json"


def config_hash(config):
    """SHA-256 of the canonical JSON text of an effective config."""
    return sha256_hex(canonical_json(config))


def ensure_directory(directory):
    try:
        os.makedirs(directory, exist_ok=True)
    except OSError as error:
        raise FieldFileError("cannot create output directory {}: {}".format(directory, error)) from error
    return directory


def write_json(path, data):
    try:
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(jsonable(data), handle, sort_keys=True, indent=2)
            handle.write("\n")
    except OSError as error:
        raise FieldFileError("cannot write {}: {}".format(path, error)) from error
    LOGGER.debug("wrote %s", path)
    return path


def _format(value):
    if isinstance(value, float):
        return FLOAT_FORMAT % value
    return value


def write_csv(path, fieldnames, rows):
    """Write ``rows`` (dicts) under a header row, floats at full precision."""
    try:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            writer = csv.DictWriter(handle, fieldnames=list(fieldnames))
            writer.writeheader()
            for row in rows:
                writer.writerow({k: _format(jsonable(v)) for k, v in row.items()})
    except OSError as error:
        raise FieldFileError("cannot write {}: {}".format(path, error)) from error
    LOGGER.debug("wrote %s (%d rows)", path, len(rows))
    return path


def curve_table(scales, values, term_values, labels):
    """Rows of (scale, value, one column per term) for a sweep."""
    fieldnames = ["scale", "value"] + list(labels)
    rows = []
    for scale, value, terms in zip(scales, values, term_values):
        row = {"scale": float(scale), "value": float(value)}
        row.update({label: float(t) for label, t in zip(labels, terms)})
        rows.append(row)
    return fieldnames, rows


def read_csv(path):
    """Rows of a CSV written by :func:`write_csv`, numbers parsed as floats."""
    with open(path, encoding="utf-8", newline="") as handle:
        return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(handle)]


class RunReport(object):
    """Collects the outputs of one subcommand run into one directory."""

    def __init__(self, directory, formats=("json", "csv")):
        self.directory = ensure_directory(directory)
        self.formats = {f.lower() for f in formats}
        self.payload = {}
        self.files = []

    def path(self, name):
        return os.path.join(self.directory, name)

    def add(self, **values):
        self.payload.update(values)

    def add_curve(self, name, scales, values, term_values, labels):
        if "csv" not in self.formats:
            return None
        fieldnames, rows = curve_table(scales, values, term_values, labels)
        self.files.append(write_csv(self.path(name), fieldnames, rows))
        return self.files[-1]

    def add_table(self, name, fieldnames, rows):
        if "csv" not in self.formats:
            return None
        self.files.append(write_csv(self.path(name), fieldnames, rows))
        return self.files[-1]

    def write(self):
        if "json" not in self.formats:
            return None
        self.payload["outputs"] = sorted(os.path.basename(f) for f in self.files)
        path = write_json(self.path(REPORT_NAME), self.payload)
        LOGGER.info("report written to %s", path)
        return path
