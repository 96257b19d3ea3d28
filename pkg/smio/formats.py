"""Text forms of vectors and matrices used in INI documents and tables.

Vectors are comma separated; matrix rows are separated by semicolons.
"""

from __future__ import annotations

import numpy as np

from smio.errors import InvalidInputError

FLOAT_FORMAT = "{:.17g}"


def format_vector(values, fmt=FLOAT_FORMAT):
    return ", ".join(fmt.format(float(v)) for v in np.asarray(values).reshape(-1))


def format_matrix(values, fmt=FLOAT_FORMAT):
    values = np.atleast_2d(np.asarray(values))
    return "; ".join(format_vector(row, fmt) for row in values)


def parse_vector(text):
    text = text.strip().strip("\"'")
    if not text:
        return np.zeros(0)
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise InvalidInputError(f"not a vector: {text!r}") from None


def parse_matrix(text):
    rows = [parse_vector(row) for row in text.strip().strip("\"'").split(";")]
    if len({row.size for row in rows}) > 1:
        raise InvalidInputError(f"matrix rows differ in length: {text!r}")
    return np.array(rows)
