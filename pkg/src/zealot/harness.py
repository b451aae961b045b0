"""Experiment configuration, dispatch, sweeps and result files.

A config is a JSON object with a ``schema`` field.  ``run`` dispatches on
``kind``, returns :class:`ResultRecord` objects and, when ``out`` is set,
writes a CSV grid plus a JSON summary next to it.  Both files are written
through a temporary file and renamed, so readers never see partial output.
"""

from __future__ import annotations

import copy
import csv
import dataclasses
import hashlib
import io
import json
import logging
import math
import os
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import cobra, forward, graphical, thresholds
from .model import Estimate, ModelParams
from .rng import CounterRNG, derive_key, replicate_seed
from .trees import DegreeDist, TreeSpec

log = logging.getLogger(__name__)

SCHEMA = "zealot-experiment/1"
KINDS = ("forward", "cobra", "duality-check", "thresholds", "nu0-scan", "pc-scan", "table-43")
TRUNCATION_WARNING = 0.2

TABLE_MUS = (1.6, 1.7, 1.8, 1.9)
TABLE_Q3 = tuple(round(0.80 + 0.01 * i, 2) for i in range(20)) + (0.995, 0.996, 0.997, 0.998, 0.999)

# Reference nu(0) values for degrees {3, 4}, keyed by (q3, mu).
REFERENCE_NU0: dict[tuple[float, float], float] = {}
_REFERENCE_ROWS = {
    0.80: (2.2, 2.014149722, 1.597069414, 1.074539921),
    0.81: (2.19, 1.979137551, 1.549560204, 1.030929768),
    0.82: (2.179999993, 1.942042353, 1.500601354, 0.896331678),
    0.83: (2.169035962, 1.902724759, 1.450116162, 0.941977346),
    0.88: (2.079229445, 1.666138794, 1.171184237, 0.708137684),
    0.89: (2.052259329, 1.608953028, 1.109102792, 0.659079066),
    0.90: (2.021286727, 1.547575636, 1.044453965, 0.609119574),
    0.91: (1.985646496, 1.481425138, 0.976943138, 0.558174592),
    0.92: (1.944464056, 1.409753116, 0.906197761, 0.506138592),
    0.93: (1.896552634, 1.331568175, 0.831734216, 0.452876792),
    0.94: (1.840236437, 1.245508443, 0.752903513, 0.398211752),
    0.95: (1.773023132, 1.14961228, 0.668796138, 0.341900422),
    0.96: (1.690934707, 1.040865809, 0.578059943, 0.283591365),
    0.97: (1.586938026, 0.914185487, 0.478505588, 0.222735055),
    0.98: (1.446391322, 0.759622966, 0.366073412, 0.158358633),
    0.99: (1.227510494, 0.551306428, 0.23102478, 0.088284998),
    0.995: (1.037752234,),
    0.996: (0.98268267,),
    0.997: (0.915774891,),
    0.998: (0.828879261,),
}
for _q, _row in _REFERENCE_ROWS.items():
    for _mu, _v in zip(TABLE_MUS, _row):
        REFERENCE_NU0[(_q, _mu)] = _v

# Reference read-offs of the q3 where m'(0) changes sign.
REFERENCE_PCRIT = {1.6: 0.85, 1.7: 0.65, 1.8: 0.45, 1.9: 0.25}
REFERENCE_MATCH_TOL = 1e-4


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass
class ExperimentConfig:
    kind: str
    seed: int
    schema: str = SCHEMA
    tree: dict | None = None
    params: dict | None = None
    init: Any = "root"
    horizon: float | None = None
    replicas: int = 1
    dt: float | None = None
    window: float = 0.5
    mu: list | None = None
    q3: list | None = None
    out: str | None = None

    def __post_init__(self):
        if self.schema != SCHEMA:
            raise ConfigError(f"unsupported schema {self.schema!r}; expected {SCHEMA!r}")
        if self.kind not in KINDS:
            raise ConfigError(f"unknown kind {self.kind!r}; choose from {', '.join(KINDS)}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        if not isinstance(self.replicas, int) or self.replicas < 1:
            raise ConfigError("replicas must be an integer >= 1")
        if self.horizon is not None and not self.horizon > 0:
            raise ConfigError("horizon must be positive")
        if not 0 < self.window <= 1:
            raise ConfigError("window must lie in (0, 1]")
        try:
            if self.tree is not None:
                self.tree_spec()
            if self.params is not None:
                self.model_params()
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError(str(exc)) from exc
        if self.kind in ("forward", "cobra", "duality-check", "thresholds") and self.tree is None:
            raise ConfigError(f"kind {self.kind} needs a tree")
        if self.kind in ("forward", "cobra") and (self.params is None or self.horizon is None):
            raise ConfigError(f"kind {self.kind} needs params and horizon")
        if self.kind == "thresholds" and self.params is None:
            raise ConfigError("kind thresholds needs params")

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentConfig:
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        for key in ("kind", "seed", "schema"):
            if key not in data:
                raise ConfigError(f"missing required key {key!r}")
        return cls(**data)

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> ExperimentConfig:
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, **changes) -> ExperimentConfig:
        data = self.to_dict()
        data.update(changes)
        return ExperimentConfig.from_dict(data)

    def digest(self) -> str:
        """sha256 of the canonical JSON of every field except the output path."""
        data = self.to_dict()
        data.pop("out")
        blob = json.dumps(data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def tree_spec(self) -> TreeSpec:
        t = dict(self.tree)
        kind = t.pop("type", "regular")
        depth = int(t.pop("depth"))
        if kind == "regular":
            spec = TreeSpec(depth, d=int(t.pop("d")))
        elif kind == "gw":
            spec = TreeSpec(depth, dist=DegreeDist({int(j): q for j, q in t.pop("dist").items()}))
        else:
            raise ConfigError(f"unknown tree type {kind!r}")
        if t:
            raise ConfigError(f"unknown tree keys: {', '.join(sorted(t))}")
        return spec

    def model_params(self) -> ModelParams:
        return ModelParams.from_mapping({int(k): v for k, v in self.params.items()})


@dataclass
class ResultRecord:
    digest: str
    metric: str
    value: Any
    cell: dict = field(default_factory=dict)
    flags: list[str] = field(default_factory=list)
    wall_time: float = 0.0

    def to_dict(self) -> dict:
        value = self.value.to_dict() if hasattr(self.value, "to_dict") else self.value
        return {"digest": self.digest, "metric": self.metric, "cell": self.cell, "value": value,
                "flags": list(self.flags), "wall_time": self.wall_time}


def replicate_seeds(master: int, index: int) -> int:
    """Seed of replica or sweep cell ``index``; see :func:`zealot.rng.replicate_seed`."""
    return replicate_seed(master, index)


def _flags(est: Estimate) -> list[str]:
    if est.boundary_fraction > TRUNCATION_WARNING:
        log.warning("%.0f%% of replicas touched the truncation boundary", 100 * est.boundary_fraction)
        return ["truncation-dominated"]
    return []


def _grid_mean(rows: list[list[float]]) -> list[float]:
    return np.mean(np.asarray(rows, dtype=np.float64), axis=0).tolist()


def _run_forward(cfg: ExperimentConfig):
    spec, params = cfg.tree_spec(), cfg.model_params()
    dt = cfg.dt or cfg.horizon / 100
    counts, alive, roots, survived, touched, times = [], [], [], 0, 0, None
    for _, s, tree in forward._replicas(spec, cfg.replicas, cfg.seed):
        traj = forward.simulate_forward(tree, params, forward._resolve_init(tree, cfg.init),
                                        cfg.horizon, s, dt=dt)
        times = traj.times
        counts.append(traj.counts)
        alive.append([c > 0 for c in traj.counts])
        roots.append(traj.root_states)
        survived += traj.survived
        touched += traj.boundary_touched
    est = Estimate.of_proportion(survived, cfg.replicas, cfg.seed, touched)
    header = ["t", "mean_count", "survival_fraction", "root_fraction"]
    rows = list(zip(times, _grid_mean(counts), _grid_mean(alive), _grid_mean(roots)))
    return [("survival_probability", est, {}, _flags(est))], header, rows


def _run_cobra(cfg: ExperimentConfig):
    spec, params = cfg.tree_spec(), cfg.model_params()
    dt = cfg.dt or cfg.horizon / 100
    ws = cfg.horizon * (1 - cfg.window)
    counts, alive, visits, times = [], [], [], None
    survived = hits = killed = 0
    for _, s, tree in forward._replicas(spec, cfg.replicas, cfg.seed):
        traj = cobra.simulate_cobra(tree, params, forward._resolve_init(tree, cfg.init),
                                    cfg.horizon, s, dt=dt, window_start=ws)
        times = traj.times
        counts.append(traj.counts)
        alive.append([c > 0 for c in traj.counts])
        visits.append(traj.root_visits)
        survived += traj.survived
        hits += traj.window_hit
        killed += traj.boundary_kills > 0
    surv = Estimate.of_proportion(survived, cfg.replicas, cfg.seed, killed)
    local = Estimate.of_proportion(hits, cfg.replicas, cfg.seed, killed)
    header = ["t", "mean_particle_count", "survival_fraction", "mean_root_visits"]
    rows = list(zip(times, _grid_mean(counts), _grid_mean(alive), _grid_mean(visits)))
    return ([("survival_probability", surv, {}, _flags(surv)),
             ("local_survival_frequency", local, {}, _flags(local))], header, rows)


def random_params(rng: CounterRNG, kmax: int) -> ModelParams:
    """Random pick law on {0..kmax}; the last entry absorbs rounding."""
    w = [-math.log(1.0 - rng.random()) for _ in range(kmax + 1)]
    total = sum(w)
    p = [v / total for v in w]
    p[-1] = 1.0 - sum(p[:-1])
    return ModelParams(tuple(max(v, 0.0) for v in p))


def duality_instance(spec: TreeSpec, seed: int, *, params: ModelParams | None = None,
                     horizon: float | None = None, margin: int = 2):
    """One random duality/additivity instance.

    A and B are drawn from vertices at least ``margin`` levels above the
    boundary.  Returns (log, A, B, parts, t).
    """
    rng = CounterRNG(derive_key(seed, 0xD0A1))
    tree = spec.build(seed)
    params = params or random_params(rng, tree.d_min)
    h = horizon if horizon is not None else 0.2 + 1.3 * rng.random()
    ev = graphical.sample_event_log(tree, params, h, derive_key(seed, 0xE7))
    inner = np.flatnonzero(tree.level <= max(tree.depth_limit - margin, 0)).tolist()
    inner = [v for v in inner if not tree.boundary[v]] or [tree.root]

    def draw():
        size = 1 + rng.below(min(4, len(inner)))
        return {inner[i] for i in rng.sample_distinct(len(inner), size)}

    A, B = draw(), draw()
    parts = [draw() for _ in range(1 + rng.below(3))]
    t = h * (0.5 + 0.5 * rng.random())
    return ev, A, B, parts, t


def _run_duality(cfg: ExperimentConfig):
    spec = cfg.tree_spec()
    params = cfg.model_params() if cfg.params is not None else None
    rows = []
    dual_ok = add_ok = truncated = 0
    for i in range(cfg.replicas):
        s = replicate_seed(cfg.seed, i)
        ev, A, B, parts, t = duality_instance(spec, s, params=params, horizon=cfg.horizon)
        d = graphical.check_duality(ev, A, B, t, strict=False)
        a = graphical.check_additivity(ev, parts, t, strict=False)
        trunc = graphical.dual_truncated(ev, B, t, t)
        dual_ok += d
        add_ok += a
        truncated += trunc
        rows.append((i, s, len(ev), repr(t), int(d), int(a), int(trunc)))
    header = ["instance", "seed", "n_events", "t", "duality", "additivity", "dual_truncated"]
    n = cfg.replicas
    recs = [("duality_pass", {"passed": dual_ok, "instances": n}, {}, []),
            ("additivity_pass", {"passed": add_ok, "instances": n}, {}, []),
            ("dual_truncated", {"count": truncated, "instances": n}, {}, [])]
    return recs, header, rows


def _run_thresholds(cfg: ExperimentConfig):
    spec = cfg.tree_spec()
    target = spec.d if spec.d is not None else spec.dist
    report = thresholds.classify(target, cfg.model_params())
    header = ["criterion", "margin", "status", "regime"]
    rows = [(k, c.margin, c.status, c.to_dict()["regime"]) for k, c in report.criteria.items()]
    return [("classification", report, {}, [])], header, rows


def _nu_value(q3: float, mu: float) -> thresholds.NuReport:
    return thresholds.nu0(DegreeDist.two_point(q3), mu)


def crossing(q3s: Sequence[float], mu: float) -> float | None:
    """First q3 in ascending ``q3s`` with nu(0) < 1."""
    for q in sorted(q3s):
        if _nu_value(q, mu).nu0 < 1:
            return q
    return None


def _run_nu0_scan(cfg: ExperimentConfig):
    mus = cfg.mu or list(TABLE_MUS)
    q3s = cfg.q3 or [round(0.8 + 0.001 * i, 3) for i in range(200)]
    rows, recs = [], []
    for mu in mus:
        first = None
        for q in q3s:
            r = _nu_value(q, mu)
            rows.append((q, mu, r.nu0, int(r.local_survival)))
            if first is None and r.local_survival:
                first = q
        recs.append(("nu0_crossing", first, {"mu": mu}, []))
    return recs, ["q3", "mu", "nu0", "flag"], rows


def _run_pc_scan(cfg: ExperimentConfig):
    mus = cfg.mu or list(TABLE_MUS)
    rows, recs = [], []
    for mu in mus:
        pc = thresholds.p_crit(mu)
        rows.append((mu, pc))
        cell = {"mu": mu}
        if mu in REFERENCE_PCRIT:
            cell["reference"] = REFERENCE_PCRIT[mu]
        recs.append(("p_crit", pc, cell, []))
    return recs, ["mu", "p_crit"], rows


def discrepancy_report(tol: float = REFERENCE_MATCH_TOL) -> list[dict]:
    """Compare each reference nu(0) entry with the minimization."""
    out = []
    for (q, mu), ref in sorted(REFERENCE_NU0.items()):
        v = _nu_value(q, mu).nu0
        out.append({"q3": q, "mu": mu, "reference": ref, "computed": v, "abs_diff": abs(v - ref),
                    "status": "match" if abs(v - ref) <= tol else "mismatch"})
    return out


def _run_table(cfg: ExperimentConfig):
    mus = cfg.mu or list(TABLE_MUS)
    q3s = cfg.q3 or list(TABLE_Q3)
    header = ["q3"] + [f"mu_{mu:g}" for mu in mus]
    rows = [[q] + [_nu_value(q, mu).nu0 for mu in mus] for q in q3s]
    report = discrepancy_report()
    n_bad = sum(r["status"] == "mismatch" for r in report)
    recs = [("nu0_table", {"q3": list(q3s), "mu": list(mus)}, {}, []),
            ("reference_discrepancies", {"mismatches": n_bad, "entries": report}, {},
             ["reference-mismatch"] if n_bad else [])]
    return recs, header, rows


_DISPATCH = {
    "forward": _run_forward,
    "cobra": _run_cobra,
    "duality-check": _run_duality,
    "thresholds": _run_thresholds,
    "nu0-scan": _run_nu0_scan,
    "pc-scan": _run_pc_scan,
    "table-43": _run_table,
}


def execute(cfg: ExperimentConfig) -> tuple[list[ResultRecord], list[str], list]:
    """Run one config without writing files; returns (records, csv header, csv rows)."""
    start = time.perf_counter()
    raw, header, rows = _DISPATCH[cfg.kind](cfg)
    wall = time.perf_counter() - start
    digest = cfg.digest()
    records = [ResultRecord(digest, m, v, cell, flags, wall) for m, v, cell, flags in raw]
    return records, header, rows


def run(cfg: ExperimentConfig) -> list[ResultRecord]:
    records, header, rows = execute(cfg)
    if cfg.out:
        write_outputs(cfg, records, header, rows)
    return records


def csv_text(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def atomic_write(path: str | os.PathLike, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def summary_path(out: str | os.PathLike) -> Path:
    return Path(out).with_suffix(".json")


def write_outputs(cfg: ExperimentConfig, records: list[ResultRecord], header, rows) -> None:
    atomic_write(cfg.out, csv_text(header, rows))
    summary = {"config": cfg.to_dict(), "digest": cfg.digest(),
               "records": [r.to_dict() for r in records]}
    atomic_write(summary_path(cfg.out), json.dumps(summary, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, (np.integer, np.floating)):
        return obj.item()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


_AXES = {
    "seed", "horizon", "replicas", "window", "dt", "init", "mu", "q3", "depth", "d",
}


def _set_axis(data: dict, axis: str, value) -> None:
    if axis in ("mu", "q3"):
        data[axis] = [value]
    elif axis in ("depth", "d"):
        if data.get("tree") is None:
            raise ConfigError(f"axis {axis} needs a tree in the base config")
        data["tree"] = dict(data["tree"], **{axis: value})
    elif axis.startswith("p") and axis[1:].isdigit():
        if data.get("params") is None:
            raise ConfigError(f"axis {axis} needs params in the base config")
        params = dict(data["params"])
        params[axis[1:]] = value
        data["params"] = params
    else:
        data[axis] = value


def sweep(base: ExperimentConfig, axis: str, values: Sequence) -> list[list[ResultRecord]]:
    """Run ``base`` once per value of ``axis``; returns one record list per cell.

    Axes are config fields (``horizon``, ``replicas``, ...), the tree fields
    ``d`` and ``depth``, the scan axes ``mu`` and ``q3``, or a pick
    probability ``pK``.  Each cell runs with seed
    ``replicate_seeds(base.seed, index)``.  Pick-probability axes leave
    normalization to the caller: the other entries must already make the
    cell sum to 1.
    """
    if not (axis in _AXES or (axis.startswith("p") and axis[1:].isdigit())):
        raise ConfigError(f"unknown sweep axis {axis!r}")
    out = []
    for i, v in enumerate(values):
        data = copy.deepcopy(base.to_dict())
        _set_axis(data, axis, v)
        if axis != "seed":
            data["seed"] = replicate_seeds(base.seed, i)
        data["out"] = None
        cfg = ExperimentConfig.from_dict(data)
        recs = run(cfg)
        for r in recs:
            r.cell = {axis: v, **r.cell}
        out.append(recs)
    return out


def sweep_rows(grid: list[list[ResultRecord]]) -> tuple[list[str], list]:
    """Flatten a sweep into CSV rows, one per (cell, metric) with scalar or estimate values."""
    keys: list[str] = []
    for recs in grid:
        for r in recs:
            for k in r.cell:
                if k not in keys:
                    keys.append(k)
    header = keys + ["metric", "point", "half_width"]
    rows = []
    for recs in grid:
        for r in recs:
            if isinstance(r.value, Estimate):
                point, hw = r.value.point, r.value.half_width
            elif isinstance(r.value, (int, float)) or r.value is None:
                point, hw = r.value, ""
            else:
                continue
            rows.append([r.cell.get(k, "") for k in keys] + [r.metric, point, hw])
    return header, rows
