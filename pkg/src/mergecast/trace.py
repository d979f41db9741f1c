"""Line-delimited step traces.

Format (one physical line per record, UTF-8, space-separated):

* ``#`` lines are comments (config echo, seed, field list).
* ``S`` lines carry one step each, fields in this exact order::

    S step action kind u e n_expired base quality shape total n_pairs
      n_completed n_missed served_dests expired_dests
      [completed_ids missed_ids]          # verbose only

  ``kind`` is one of coded / unicast / erased. The three dest/id list
  fields are comma-joined integers or ``-`` when empty. Floats are written
  with repr, which round-trips bit-exactly.
* one ``E`` line closes the episode with the flat metric map as
  ``key=value`` pairs (absent metrics serialize as ``none``).

The sweep and fairness tooling reparses these files, so the field order
above is a compatibility contract.
"""

from __future__ import annotations

from .engine import StepOutcome
from .config import SystemConfig, config_summary

TRACE_HEADER = "# mergecast-trace v1"

STEP_FIELDS = ("step action kind u e n_expired base quality shape total "
               "n_pairs n_completed n_missed served_dests expired_dests")


def _ids(values) -> str:
    items = sorted(values)
    return ",".join(str(v) for v in items) if items else "-"


def step_line(outcome: StepOutcome, verbose: bool = False) -> str:
    r = outcome.reward
    fields = [
        "S", str(outcome.step), str(outcome.action), outcome.kind,
        str(outcome.u), str(outcome.e), str(len(outcome.expired_records)),
        repr(r.base), repr(r.quality), repr(r.shape), repr(r.total),
        str(outcome.n_pairs),
        str(len(outcome.newly_completed)), str(len(outcome.newly_missed)),
        _ids(outcome.served_dests),
        _ids(rec.dest for rec in outcome.expired_records),
    ]
    if verbose:
        fields.append(_ids(outcome.newly_completed))
        fields.append(_ids(outcome.newly_missed))
    return " ".join(fields)


def _scalar(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def episode_line(metric_map: dict) -> str:
    parts = ["E"]
    for key, value in metric_map.items():
        if isinstance(value, list):
            parts.append(f"{key}={','.join(str(v) for v in value)}")
        else:
            parts.append(f"{key}={_scalar(value)}")
    return " ".join(parts)


def header_lines(cfg: SystemConfig, seed: int, verbose: bool = False) -> list[str]:
    fields = STEP_FIELDS + (" completed_ids missed_ids" if verbose else "")
    return [
        TRACE_HEADER,
        f"# cfg {config_summary(cfg)}",
        f"# seed {seed}",
        f"# fields: {fields}",
    ]


def write_trace(path: str, cfg: SystemConfig, seed: int,
                outcomes, metric_map: dict, verbose: bool = False) -> None:
    lines = header_lines(cfg, seed, verbose)
    lines.extend(step_line(o, verbose) for o in outcomes)
    lines.append(episode_line(metric_map))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def parse_value(text: str):
    if text == "none":
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def parse_trace(path: str) -> dict:
    """Reload a trace file into step dicts and the episode metric map."""
    steps = []
    episode: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split(" ")
            if parts[0] == "S":
                steps.append({
                    "step": int(parts[1]), "action": int(parts[2]),
                    "kind": parts[3], "u": int(parts[4]), "e": int(parts[5]),
                    "n_expired": int(parts[6]), "base": float(parts[7]),
                    "quality": float(parts[8]), "shape": float(parts[9]),
                    "total": float(parts[10]), "n_pairs": int(parts[11]),
                    "n_completed": int(parts[12]), "n_missed": int(parts[13]),
                    "served_dests": parts[14], "expired_dests": parts[15],
                })
            elif parts[0] == "E":
                for kv in parts[1:]:
                    key, _, value = kv.partition("=")
                    if "," in value:
                        episode[key] = [parse_value(v) for v in value.split(",")]
                    else:
                        episode[key] = parse_value(value)
    return {"steps": steps, "episode": episode}
