"""File formats: network/hardware JSON loaders, schedule round-tripping, and
deterministic JSON/CSV writers."""

from __future__ import annotations

import csv
import io as _io
import json
import os
from dataclasses import fields
from pathlib import Path

from .errors import ParseError
from .model import (
    ClusterAssignment,
    HardwareConfig,
    LayerDesc,
    LayerKind,
    Network,
    Partition,
    Schedule,
    SegmentAssignment,
    most_square_mesh,
)

_HW_FIELDS = {f.name for f in fields(HardwareConfig)}


def _read_json(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc.msg}", line=exc.lineno) from exc
    if not isinstance(data, dict):
        raise ParseError(f"{path}: top-level value must be an object")
    return data


def _require(spec: dict, key: str, where: str) -> object:
    if key not in spec:
        raise ParseError(f"{where}: missing required field", field=key)
    return spec[key]


def _as_int(value, where: str, key: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ParseError(f"{where}: expected an integer, got {value!r}", field=key)
    return value


def load_network(path) -> Network:
    """Read a network description; layer invariants and the layer-to-layer
    shape chain are validated on construction."""
    data = _read_json(path)
    name = data.get("name", Path(path).stem)
    raw_layers = _require(data, "layers", str(path))
    if not isinstance(raw_layers, list) or not raw_layers:
        raise ParseError(f"{path}: 'layers' must be a non-empty list", field="layers")
    layers = []
    for i, spec in enumerate(raw_layers):
        where = f"{path}: layers[{i}]"
        if not isinstance(spec, dict):
            raise ParseError(f"{where}: expected an object")
        kind_raw = _require(spec, "kind", where)
        try:
            kind = LayerKind(kind_raw)
        except ValueError:
            raise ParseError(f"{where}: kind must be 'conv' or 'fc'", field="kind") from None
        c_in = _as_int(_require(spec, "c_in", where), where, "c_in")
        c_out = _as_int(_require(spec, "c_out", where), where, "c_out")
        lname = spec.get("name", f"layer{i}")
        if kind is LayerKind.FC:
            layers.append(LayerDesc(kind=kind, c_in=c_in, c_out=c_out, name=lname))
            continue
        k = _as_int(spec.get("k", 1), where, "k")
        layers.append(
            LayerDesc(
                kind=kind,
                c_in=c_in,
                c_out=c_out,
                h_in=_as_int(_require(spec, "h_in", where), where, "h_in"),
                w_in=_as_int(_require(spec, "w_in", where), where, "w_in"),
                k_h=k,
                k_w=k,
                stride=_as_int(spec.get("stride", 1), where, "stride"),
                padding=_as_int(spec.get("pad", 0), where, "pad"),
                pool=_as_int(spec.get("pool", 1), where, "pool"),
                name=lname,
            )
        )
    return Network(layers=tuple(layers), name=name)


def load_hardware(path) -> HardwareConfig:
    """Read a hardware description; omitted fields take the defaults."""
    data = _read_json(path)
    unknown = set(data) - _HW_FIELDS
    if unknown:
        raise ParseError(f"{path}: unknown field", field=sorted(unknown)[0])
    if "num_chiplets" in data and ("mesh_rows" in data) != ("mesh_cols" in data):
        raise ParseError(f"{path}: mesh_rows and mesh_cols must be given together")
    kwargs = dict(data)
    if "num_chiplets" in kwargs and "mesh_rows" not in kwargs:
        rows, cols = most_square_mesh(kwargs["num_chiplets"])
        kwargs["mesh_rows"], kwargs["mesh_cols"] = rows, cols
    return HardwareConfig(**kwargs)


# ---------------------------------------------------------------------------
# Schedule round-tripping


def schedule_to_dict(
    schedule: Schedule, *, network_ref: dict, hw: HardwareConfig, m: int, method: str
) -> dict:
    return {
        "network": network_ref,
        "num_chiplets": hw.num_chiplets,
        "mesh": [hw.mesh_rows, hw.mesh_cols],
        "m_samples": m,
        "method": method,
        "segments": [
            {
                "clusters": [
                    {
                        "start": cl.start,
                        "end": cl.end,
                        "region_size": cl.region_size,
                        "placement": [list(c) for c in cl.placement],
                        "partitions": [p.value for p in cl.partitions],
                        "streaming": cl.streaming,
                    }
                    for cl in seg.clusters
                ]
            }
            for seg in schedule.segments
        ],
    }


def schedule_from_dict(data: dict) -> tuple[Schedule, dict]:
    """Rebuild a schedule; returns it with the surrounding metadata."""
    segments = []
    for seg in _require(data, "segments", "schedule"):
        clusters = tuple(
            ClusterAssignment(
                start=cl["start"],
                end=cl["end"],
                region_size=cl["region_size"],
                placement=tuple((r, c) for r, c in cl["placement"]),
                partitions=tuple(Partition(p) for p in cl["partitions"]),
                streaming=cl.get("streaming", False),
            )
            for cl in seg["clusters"]
        )
        segments.append(SegmentAssignment(clusters))
    meta = {k: v for k, v in data.items() if k != "segments"}
    return Schedule(tuple(segments)), meta


def load_schedule(path) -> tuple[Schedule, dict]:
    try:
        return schedule_from_dict(_read_json(path))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: malformed schedule: {exc}") from exc


# ---------------------------------------------------------------------------
# Deterministic writers


def write_text(path, text: str) -> None:
    """Atomic write: the file appears complete or not at all."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def write_json(path, obj) -> None:
    write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def write_csv(path, header: list[str], rows) -> None:
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    write_text(path, buf.getvalue())
