"""
Sequence files: line-oriented UTF-8 text with LF endings.

    # sequence: <id>
    # objects: name1,name2,...,nameN
    x y r1 ... rN [label]

Other lines starting with `#` and blank lines are ignored. Floats are written
with six decimals.
"""

import logging
import math
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from Errors import InputValidationError, SequenceFormatError
from Records import DatasetRecord, ObjectEvidence, PositionSample, SequenceFile

SEQUENCE_KEY = "sequence"
OBJECTS_KEY = "objects"

logger = logging.getLogger(__name__)


def _header(line: str) -> Optional[Tuple[str, str]]:
    body = line[1:].strip()
    key, sep, value = body.partition(":")
    if not sep:
        return None
    return key.strip().lower(), value.strip()


def _parse_record(tokens: List[str], n_objects: int, line_no: int) -> DatasetRecord:
    if len(tokens) == n_objects + 2:
        label = None
    elif len(tokens) == n_objects + 3:
        label = tokens[-1]
    else:
        raise SequenceFormatError(
            f"expected {n_objects + 2} or {n_objects + 3} fields, found {len(tokens)}", line_no
        )
    try:
        x, y = float(tokens[0]), float(tokens[1])
        values = [float(t) for t in tokens[2 : 2 + n_objects]]
    except ValueError as e:
        raise SequenceFormatError(f"non-numeric field: {e}", line_no) from e
    if not (math.isfinite(x) and math.isfinite(y)):
        raise SequenceFormatError(f"non-finite position ({tokens[0]}, {tokens[1]})", line_no)
    for index, value in enumerate(values):
        if not (0.0 <= value <= 1.0):
            raise SequenceFormatError(f"certainty {tokens[2 + index]} of object {index + 1} outside [0,1]", line_no)
    return DatasetRecord(PositionSample(x, y), ObjectEvidence(np.array(values)), label)


def _check_id(sequence_id: str, line_no: int) -> str:
    # ids name output files
    if any(sep in sequence_id for sep in ("/", "\\")) or sequence_id in (".", ".."):
        raise SequenceFormatError(f"sequence id '{sequence_id}' cannot be used as a file name", line_no)
    return sequence_id


def parse_sequence_file(document: str, default_id: str = "sequence") -> SequenceFile:
    """Parse a whole document, header included."""
    sequence_id = default_id
    object_names: Optional[List[str]] = None
    records: List[DatasetRecord] = []
    for line_no, raw in enumerate(document.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            header = _header(line)
            if header is None:
                continue
            key, value = header
            if key == SEQUENCE_KEY:
                sequence_id = _check_id(value, line_no) if value else default_id
            elif key == OBJECTS_KEY:
                if records:
                    raise SequenceFormatError("objects header after the first record", line_no)
                object_names = [name.strip() for name in value.split(",") if name.strip()]
                if not object_names:
                    raise SequenceFormatError("objects header lists no objects", line_no)
            continue
        if object_names is None:
            raise SequenceFormatError("record before the '# objects:' header", line_no)
        record = _parse_record(line.split(), len(object_names), line_no)
        if records and (record.label is None) != (records[0].label is None):
            first = "unlabeled" if records[0].label is None else "labeled"
            raise SequenceFormatError(f"labeled and unlabeled records mixed, the first record is {first}", line_no)
        records.append(record)
    return SequenceFile(sequence_id, object_names or [], records)


def parse_sequence(document: str) -> List[DatasetRecord]:
    """Records of a sequence document, in file order."""
    return parse_sequence_file(document).records


def format_sequence(sequence: SequenceFile, precision: int = 6) -> str:
    """Render a sequence in the documented text format."""
    lines = [f"# {SEQUENCE_KEY}: {sequence.sequence_id}", f"# {OBJECTS_KEY}: {','.join(sequence.object_names)}"]
    for record in sequence.records:
        if len(record.evidence) != sequence.n_objects:
            raise InputValidationError(
                f"record has {len(record.evidence)} certainties, header lists {sequence.n_objects} objects"
            )
        fields = [f"{record.position.x:.{precision}f}", f"{record.position.y:.{precision}f}"]
        fields.extend(f"{v:.{precision}f}" for v in record.evidence.r)
        if record.label is not None:
            fields.append(record.label)
        lines.append(" ".join(fields))
    return "".join(f"{line}\n" for line in lines)


def read_sequence(path: Path) -> SequenceFile:
    """Read and validate a sequence file; the file stem is the fallback id."""
    path = Path(path)
    try:
        document = path.read_text(encoding="utf-8")
    except OSError as e:
        raise InputValidationError(f"could not read sequence {path}: {e}") from e
    try:
        sequence = parse_sequence_file(document, default_id=path.stem)
    except SequenceFormatError as e:
        error = SequenceFormatError(f"{path}: {e}")
        error.line = e.line
        raise error from e
    logger.info(f"read {len(sequence.records)} records of sequence '{sequence.sequence_id}' from {path}")
    return sequence


def write_sequence(sequence: SequenceFile, path: Path) -> Path:
    path = Path(path)
    try:
        path.write_text(format_sequence(sequence), encoding="utf-8", newline="\n")
    except OSError as e:
        raise InputValidationError(f"could not write sequence {path}: {e}") from e
    logger.info(f"wrote {len(sequence.records)} records to {path}")
    return path
