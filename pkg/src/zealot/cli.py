"""Command-line entry point: ``zealot <subcommand> --config cfg.json [overrides]``.

Each subcommand fixes the config ``kind``; the flags override the
corresponding config fields.  A CSV goes to ``--out`` and a JSON summary
next to it.  Invalid configs exit with status 2 and a JSON diagnostic on
stderr.

CSV columns by subcommand:

    simulate-forward  t, mean_count, survival_fraction, root_fraction
    simulate-dual     t, mean_particle_count, survival_fraction, mean_root_visits
    check-duality     instance, seed, n_events, t, duality, additivity, dual_truncated
    thresholds        criterion, margin, status, regime
    scan-nu0          q3, mu, nu0, flag
    scan-pc           mu, p_crit
    table-43          q3, mu_1.6, mu_1.7, mu_1.8, mu_1.9
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import harness

SUBCOMMANDS = {
    "simulate-forward": "forward",
    "simulate-dual": "cobra",
    "check-duality": "duality-check",
    "thresholds": "thresholds",
    "scan-nu0": "nu0-scan",
    "scan-pc": "pc-scan",
    "table-43": "table-43",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zealot", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, kind in SUBCOMMANDS.items():
        p = sub.add_parser(name, help=f"run a {kind} experiment")
        p.add_argument("--config", help="JSON experiment config")
        p.add_argument("--seed", type=int)
        p.add_argument("--replicas", type=int)
        p.add_argument("--horizon", type=float)
        p.add_argument("--out", help="CSV output path; the JSON summary is written alongside")
    return parser


def load_config(args: argparse.Namespace) -> harness.ExperimentConfig:
    kind = SUBCOMMANDS[args.command]
    if args.config:
        with open(args.config) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise harness.ConfigError(f"{args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise harness.ConfigError("config must be a JSON object")
        if data.get("kind", kind) != kind:
            raise harness.ConfigError(f"config kind {data['kind']!r} does not match {args.command}")
    else:
        data = {"schema": harness.SCHEMA}
    data["kind"] = kind
    for key in ("seed", "replicas", "horizon", "out"):
        value = getattr(args, key)
        if value is not None:
            data[key] = value
    return harness.ExperimentConfig.from_dict(data)


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        records = harness.run(cfg)
    except (harness.ConfigError, OSError) as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 2
    if not cfg.out:
        for r in records:
            print(json.dumps(r.to_dict(), sort_keys=True, default=harness._json_default))
    return 0


if __name__ == "__main__":
    sys.exit(main())
