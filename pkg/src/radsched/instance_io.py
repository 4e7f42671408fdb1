"""Line-oriented, tab-separated instance file format.

This is the interchange contract between the generator, the simulator and
the command-line driver.  Layout (one record per line, fields tab-separated):

    radsched-instance  1  <instance-id>  <origin-weekday>  <span-days>  <warmup-end-day>
    linac  <id>  <A|B|C>
    capacity  <linac-id>  <mon> ... <sun>            (minutes per weekday)
    patient  <id> <status> <intent> <radiation> <weight> <booking> <release>
             <breach> <jcco-max> <jcco-good> <sessions> <durations-csv>
             <days-per-week> <sessions-per-day> <anchor|-> <chart 0|1>
             <min-before-weekend> <doctor-days-csv|-> <weekend-ok 0|1>

Writing is deterministic: the same instance always serialises to the same
bytes.
"""

from __future__ import annotations

from pathlib import Path
from typing import Union

from .datagen import Instance
from .domain import (
    Anchor,
    DomainError,
    Linac,
    MachineType,
    PatientCase,
    RadiationNeed,
    SessionPattern,
    TreatmentIntent,
    WaitingListStatus,
)

SCHEMA_VERSION = "1"


class DataError(DomainError):
    """Malformed instance or outcome file."""


def _pattern_fields(pattern: SessionPattern) -> list[str]:
    anchor = pattern.anchor.value if pattern.anchor else "-"
    return [str(pattern.days_per_week), str(pattern.sessions_per_day),
            anchor, "1" if pattern.chart else "0"]


def write_instance(instance: Instance) -> str:
    lines = ["\t".join([
        "radsched-instance", SCHEMA_VERSION, instance.id,
        str(instance.origin_weekday), str(instance.span_days),
        str(instance.warmup_end_day),
    ])]
    for linac in instance.fleet:
        lines.append(f"linac\t{linac.id}\t{linac.machine_type.value}")
    for linac in instance.fleet:
        week = instance.capacity_template[linac.id]
        lines.append("capacity\t" + str(linac.id) + "\t"
                     + "\t".join(str(m) for m in week))
    for p in instance.patients:
        doctor = ",".join(str(d) for d in sorted(p.doctor_days)) \
            if p.doctor_days else "-"
        fields = [
            "patient", p.id, p.status.name, p.intent.name, p.radiation.name,
            str(p.weight), str(p.booking_date), str(p.release_date),
            str(p.breach_date), str(p.jcco_max_date), str(p.jcco_good_date),
            str(p.num_sessions), ",".join(str(d) for d in p.durations),
            *_pattern_fields(p.pattern),
            str(p.min_sessions_before_weekend), doctor,
            "1" if p.weekend_ok else "0",
        ]
        lines.append("\t".join(fields))
    return "\n".join(lines) + "\n"


def save_instance(instance: Instance, path: Union[str, Path]) -> None:
    Path(path).write_text(write_instance(instance), encoding="utf-8")


def _parse_patient(fields: list[str], lineno: int) -> PatientCase:
    if len(fields) != 20:
        raise DataError(f"line {lineno}: patient record needs 20 fields, "
                        f"got {len(fields)}")
    try:
        anchor = None if fields[15] == "-" else Anchor(fields[15])
        pattern = SessionPattern(
            days_per_week=int(fields[13]),
            sessions_per_day=int(fields[14]),
            anchor=anchor,
            chart=fields[16] == "1",
        )
        doctor = None if fields[18] == "-" else frozenset(
            int(d) for d in fields[18].split(","))
        return PatientCase(
            id=fields[1],
            status=WaitingListStatus[fields[2]],
            intent=TreatmentIntent[fields[3]],
            radiation=RadiationNeed[fields[4]],
            weight=int(fields[5]),
            booking_date=int(fields[6]),
            release_date=int(fields[7]),
            breach_date=int(fields[8]),
            jcco_max_date=int(fields[9]),
            jcco_good_date=int(fields[10]),
            num_sessions=int(fields[11]),
            durations=tuple(int(d) for d in fields[12].split(",")),
            pattern=pattern,
            min_sessions_before_weekend=int(fields[17]),
            doctor_days=doctor,
            weekend_ok=fields[19] == "1",
        )
    except (KeyError, ValueError, DomainError) as exc:
        raise DataError(f"line {lineno}: {exc}") from exc


def read_instance(text: str) -> Instance:
    lines = text.splitlines()
    if not lines:
        raise DataError("empty instance file")
    header = lines[0].split("\t")
    if len(header) != 6 or header[0] != "radsched-instance":
        raise DataError("line 1: bad header")
    if header[1] != SCHEMA_VERSION:
        raise DataError(f"line 1: unsupported schema version {header[1]}")
    try:
        instance_id = header[2]
        origin = int(header[3])
        span = int(header[4])
        warmup = int(header[5])
    except ValueError as exc:
        raise DataError(f"line 1: {exc}") from exc

    fleet: list[Linac] = []
    capacity: dict[int, tuple[int, ...]] = {}
    patients: list[PatientCase] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split("\t")
        kind = fields[0]
        if kind == "linac":
            if len(fields) != 3:
                raise DataError(f"line {lineno}: linac record needs 3 fields")
            try:
                fleet.append(Linac(int(fields[1]), MachineType(fields[2])))
            except ValueError as exc:
                raise DataError(f"line {lineno}: {exc}") from exc
        elif kind == "capacity":
            if len(fields) != 9:
                raise DataError(f"line {lineno}: capacity record needs 9 fields")
            try:
                capacity[int(fields[1])] = tuple(int(m) for m in fields[2:])
            except ValueError as exc:
                raise DataError(f"line {lineno}: {exc}") from exc
        elif kind == "patient":
            patients.append(_parse_patient(fields, lineno))
        else:
            raise DataError(f"line {lineno}: unknown record type {kind!r}")
    if not fleet:
        raise DataError("instance file declares no linacs")
    missing = [m.id for m in fleet if m.id not in capacity]
    if missing:
        raise DataError(f"no capacity template for linacs {missing}")
    return Instance(
        id=instance_id,
        origin_weekday=origin,
        span_days=span,
        warmup_end_day=warmup,
        fleet=tuple(fleet),
        capacity_template=capacity,
        patients=tuple(patients),
    )


def load_instance(path: Union[str, Path]) -> Instance:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read instance file: {exc}") from exc
    return read_instance(text)
