# Copyright 2024 The lindket Authors - All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#    http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import csv
import hashlib
import json
import logging
import os

logger = logging.getLogger(__name__)

MANIFEST_SUFFIX = ".manifest.json"


def format_value(value):
    """Full double precision for floats, empty cell for `None`."""
    if value is None:
        return ""
    if isinstance(value, float):
        return "%.17g" % value
    return str(value)


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def config_hash(config_dict):
    """sha256 of the canonical (sorted-key) JSON of a configuration."""
    return hashlib.sha256(canonical_json(config_dict).encode("utf-8")).hexdigest()


def manifest_path(csv_path):
    return str(csv_path) + MANIFEST_SUFFIX


class CsvOutputWriter(object):
    """
    Writes rows of numbers to a CSV file with a fixed header.

    Args:
        path: Output path; parent directories are created.
        columns: Header names.

    Examples:
        ```python
        >>> from lindket.output import CsvOutputWriter
        >>> with CsvOutputWriter("/tmp/a.csv", ["t", "value"]) as out:
        ...     out.write_row([0.0, 0.1])
        >>> out.rows
        1
        ```
    """

    def __init__(self, path, columns):
        self._path = str(path)
        self._columns = list(columns)
        self._file = None
        self._writer = None
        self.rows = 0

    @property
    def path(self):
        return self._path

    def __enter__(self):
        directory = os.path.dirname(os.path.abspath(self._path))
        os.makedirs(directory, exist_ok=True)
        self._file = open(self._path, "w", newline="")
        self._writer = csv.writer(self._file, lineterminator="\n")
        self._writer.writerow(self._columns)
        return self

    def write_row(self, values):
        if len(values) != len(self._columns):
            raise ValueError(
                "row has {} values, header has {}".format(len(values), len(self._columns))
            )
        self._writer.writerow([format_value(v) for v in values])
        self.rows += 1

    def __exit__(self, exc_type, exc, tb):
        self._file.close()
        self._file = None
        if exc_type is None:
            logger.info("wrote %d rows to %s", self.rows, self._path)
        return False


def write_manifest(csv_path, command, config_dict, seed, version, rows, summary=None):
    """
    Writes `<csv_path>.manifest.json` describing how a CSV was produced.

    The manifest holds no timestamps, so reruns produce identical files.

    Returns:
        str: The manifest path.
    """
    manifest = {
        "Command": command,
        "Config": config_dict,
        "ConfigHash": config_hash(config_dict),
        "Seed": int(seed),
        "Version": version,
        "Rows": int(rows),
    }
    if summary is not None:
        manifest["Summary"] = summary
    path = manifest_path(csv_path)
    with open(path, "w") as f:
        f.write(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    logger.info("wrote manifest %s", path)
    return path
