"""Command line entry point.

    solver --config run.toml [--output-dir out] [--override key=value ...]

Exit codes: 0 success, 1 configuration error, 2 numerical blow-up.
"""

import argparse
import sys

from .config import ConfigError, parse_config
from .runner import run


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="solver",
        description="Low-rank and full-grid Vlasov-Poisson runs with conservation corrections.",
    )
    parser.add_argument("--config", required=True, help="TOML run configuration")
    parser.add_argument("--output-dir", default="out", help="directory for CSVs and snapshots")
    parser.add_argument(
        "--override",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a config key (repeatable)",
    )
    args = parser.parse_args(argv)
    try:
        config = parse_config(args.config, overrides=args.override)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    return run(config, args.output_dir)


if __name__ == "__main__":
    sys.exit(main())
