import json
import logging
from pathlib import Path

from pydantic import ValidationError

from app.core.errors import DataError
from app.schemas.counts import CountsFile, CountsRecord, Phase, RejectedRecord

logger = logging.getLogger(__name__)


def _describe(error: ValidationError) -> str:
    first = error.errors()[0]
    location = ".".join(str(part) for part in first.get("loc", ()))
    return f"{location}: {first['msg']}" if location else first["msg"]


def _input_id_of(line: str, line_number: int) -> str:
    """Best-effort input id of a rejected line"""
    try:
        value = json.loads(line).get("input_id")
    except (ValueError, AttributeError):
        value = None
    return value if isinstance(value, str) and value else f"<line {line_number}>"


def parse_counts_line(line: str, line_number: int) -> CountsRecord:
    """Parse one JSON record; invalid records raise DataError naming the line"""
    try:
        return CountsRecord.model_validate_json(line)
    except ValidationError as e:
        raise DataError(_describe(e), line=line_number, record=_input_id_of(line, line_number)) from e


def read_counts_file(path: str | Path) -> CountsFile:
    """
    Read a line-oriented JSON counts file, keeping going past invalid records.

    Blank lines and lines starting with '#' are skipped. Each invalid record
    is logged and listed in ``rejected`` with its line and input id. Only a
    file that cannot be read raises DataError.
    """
    counts_file = Path(path)
    if not counts_file.is_file():
        raise DataError(f"counts file not found: {counts_file}")

    result = CountsFile()
    try:
        with counts_file.open(encoding="utf-8") as handle:
            for line_number, raw in enumerate(handle, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                try:
                    result.records.append(parse_counts_line(line, line_number))
                except DataError as e:
                    logger.error(f"Rejected {counts_file.name}: {e}")
                    result.rejected.append(RejectedRecord(line=line_number, input_id=e.record, message=e.detail))
    except (OSError, UnicodeDecodeError) as e:
        raise DataError(f"cannot read counts file {counts_file}: {e}") from e

    if result.rejected:
        logger.warning(f"{len(result.rejected)} of {len(result.records) + len(result.rejected)} "
                       f"records in {counts_file.name} were rejected")
    return result


def ingest_counts_file(path: str | Path) -> list[CountsRecord]:
    """Strict read: the first invalid record raises a DataError carrying its line number"""
    result = read_counts_file(path)
    if result.rejected:
        first = result.rejected[0]
        raise DataError(first.message, line=first.line, record=first.input_id)
    return result.records


def enforce_round_sizes(counts: CountsFile, n0: int | None = None, n: int | None = None) -> CountsFile:
    """Reject records whose declared n differs from the expected selection (n0) or estimation (n) size"""
    expected: dict[Phase, int | None] = {"selection": n0, "estimation": n}
    kept, rejected = [], list(counts.rejected)
    for record in counts.records:
        size = expected[record.phase]
        if size is not None and record.n != size:
            entry = RejectedRecord(input_id=record.input_id,
                                   message=f"{record.phase} n={record.n} differs from the requested {size}")
            logger.error(f"Rejected {entry.describe()}")
            rejected.append(entry)
        else:
            kept.append(record)
    return CountsFile(records=kept, rejected=rejected)


def group_by_input(records: list[CountsRecord]) -> dict[str, dict[Phase, CountsRecord]]:
    """Map input id -> phase -> record; a repeated (input, phase) pair is a DataError"""
    grouped: dict[str, dict[Phase, CountsRecord]] = {}
    for record in records:
        phases = grouped.setdefault(record.input_id, {})
        if record.phase in phases:
            raise DataError(f"duplicate {record.phase} record", record=record.input_id)
        phases[record.phase] = record
    return grouped
