"""Command-line entry point: converts source datasets and prints the
conversion report as JSON."""
from __future__ import annotations

import argparse
import logging
import sys

from .lyft import convert_lyft
from .waymo import convert_waymo


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(
        prog="avconflict-adapter",
        description="Convert motion datasets to the avconflict interchange format")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    waymo = sub.add_parser("waymo", help="Waymo Open Motion tfrecord shard(s)")
    waymo.add_argument("--src", required=True,
                       help="tfrecord file or directory of shards")
    waymo.add_argument("--dst", required=True, help="output directory")

    lyft = sub.add_parser("lyft", help="Lyft Level 5 dataset root or .zarr store")
    lyft.add_argument("--src", required=True)
    lyft.add_argument("--dst", required=True)

    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)

    try:
        if args.command == "waymo":
            report = convert_waymo(args.src, args.dst)
        else:
            report = convert_lyft(args.src, args.dst)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        sys.exit(3)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        sys.exit(3)

    print(report.to_json())


if __name__ == "__main__":
    main()
