"""Command-line entry point: dump a dataset from a segmenter checkpoint."""

from __future__ import annotations

import argparse
import sys

from .export import SPLITS, ExportError, ExportSpec, export_dataset


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        raise UsageError(message)


def build_parser() -> _Parser:
    parser = _Parser(prog="oodseg-export", description=__doc__)
    sub = parser.add_subparsers(dest="command")
    exp = sub.add_parser("export", help="run the model and write manifest + NPY arrays")
    exp.add_argument("--checkpoint", required=True, help="pickled nn.Module (torch.save(model, path))")
    exp.add_argument("--layer", required=True, help="named module whose output becomes the feature map")
    exp.add_argument("--images", required=True, help="image dir; split subdirs (val_id/, test/) are honored")
    exp.add_argument("--labels", required=True, help="label mask dir mirroring --images")
    exp.add_argument("--out", required=True, help="dataset output directory")
    exp.add_argument("--size", nargs=2, type=int, default=(256, 512), metavar=("H", "W"),
                     help="model input / output grid (default 256 512)")
    exp.add_argument("--num-classes", type=int, default=19)
    exp.add_argument("--ignore-label", type=int, default=255)
    exp.add_argument("--split", default="test", choices=SPLITS,
                     help="split for every image when --images is flat (default test)")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command != "export":
            raise UsageError("a subcommand is required (try: export --help)")
        spec = ExportSpec(
            checkpoint=args.checkpoint,
            layer=args.layer,
            input_size=tuple(args.size),
            num_classes=args.num_classes,
            ignore_label=args.ignore_label,
            split=args.split,
        )
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        manifest = export_dataset(spec, args.images, args.labels, args.out)
    except (ExportError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {manifest}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
