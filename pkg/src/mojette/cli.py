"""``mojette`` command line: encode, decode, verify and bench.

Exit codes: 0 success, 1 usage error, 2 data error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import bench
from .code import CodeParams, decode_block, encode_block, storage_overhead
from .errors import FormatError, HeaderMismatch, MojetteError, NotEnoughProjections
from .fileformat import ProjectionFileHeader, read_file, write_file

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _block_key(h: ProjectionFileHeader):
    return (h.n, h.k, h.width, h.P, h.payload_len, h.dirset)


def cmd_encode(args) -> int:
    src = Path(args.input)
    data = src.read_bytes()
    if not data:
        raise UsageError(f"{src}: input file is empty")
    try:
        params = CodeParams(args.n, args.k, args.w)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    block = encode_block(data, params)
    out_dir = Path(args.output) if args.output else src.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    dirset = tuple(d.p for d in params.directions)
    for i, pr in enumerate(block.projections):
        hdr = ProjectionFileHeader(
            params.n, params.k, params.width, i, pr.direction.p, pr.direction.q,
            block.P, block.payload_len, dirset,
        )
        path = out_dir / f"{src.name}.p{i}.mjec"
        write_file(path, hdr, pr.bins)
        print(f"wrote {path} ({len(pr)} bins)")
    ov = storage_overhead(params, block.P)
    print(f"storage overhead: {ov.numerator}/{ov.denominator} ({float(ov):.4f})")
    return EXIT_OK


def _load_group(paths):
    headers, projs = [], []
    for path in paths:
        hdr, pr = read_file(path)
        if headers and _block_key(hdr) != _block_key(headers[0]):
            raise HeaderMismatch(f"{path}: header describes a different block than {paths[0]}")
        if any(h.proj_index == hdr.proj_index for h in headers):
            raise HeaderMismatch(f"{path}: duplicate projection index {hdr.proj_index}")
        headers.append(hdr)
        projs.append(pr)
    return headers, projs


def cmd_decode(args) -> int:
    headers, projs = _load_group(args.files)
    h = headers[0]
    if len(projs) < h.k:
        raise NotEnoughProjections(f"{len(projs)} projection files supplied, {h.k} needed")
    params = CodeParams(h.n, h.k, h.width, tuple((p, 1) for p in h.dirset))
    data = decode_block(projs, params, h.payload_len)
    Path(args.output).write_bytes(data)
    print(f"decoded {len(data)} bytes from {len(projs)} of {h.n} projections to {args.output}")
    return EXIT_OK


def cmd_verify(args) -> int:
    ok = True
    reference = None
    indices = set()
    for path in args.files:
        try:
            hdr, pr = read_file(path)
        except FormatError as exc:
            print(f"{path}: INVALID ({type(exc).__name__}: {exc})")
            ok = False
            continue
        expected = hdr.bin_count
        status = "ok"
        if reference is None:
            reference = hdr
        elif _block_key(hdr) != _block_key(reference):
            status, ok = "MISMATCH (different block)", False
        elif hdr.proj_index in indices:
            status, ok = "DUPLICATE", False
        if status == "ok":
            indices.add(hdr.proj_index)
        print(
            f"{path}: {status} crc=ok index={hdr.proj_index} direction=({hdr.p},{hdr.q}) "
            f"bins={len(pr)}/{expected}"
        )
    if reference is None:
        print("decodable: no (0 valid projections)")
    else:
        verdict = "yes" if len(indices) >= reference.k else "no"
        print(f"decodable: {verdict} ({len(indices)}/{reference.k})")
    return EXIT_OK if ok else EXIT_DATA


def cmd_bench(args) -> int:
    if args.reps < 1 or args.warmup < 0:
        raise UsageError("--reps must be positive and --warmup non-negative")
    scenarios = bench.default_scenarios(reps=args.reps, warmup=args.warmup)
    with bench.pinned_cpu() as note:
        reports = bench.run_suite(scenarios, seed=args.seed, pin=False)
    text = bench.emit_report(reports, args.format, note=note)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    print(note, file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mojette", description="Mojette erasure code tool")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("encode", help="encode a file into n projection files")
    p.add_argument("input")
    p.add_argument("-o", "--output", help="output directory (default: next to input)")
    p.add_argument("-n", type=int, default=6)
    p.add_argument("-k", type=int, default=4)
    p.add_argument("-w", type=int, default=16, help="symbol width in bytes")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="rebuild a file from any k projection files")
    p.add_argument("files", nargs="+")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("verify", help="check projection files and decodability")
    p.add_argument("files", nargs="+")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="run the encode/decode micro-benchmark suite")
    p.add_argument("--format", choices=("csv", "markdown"), default="csv")
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--warmup", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", help="write the report here instead of stdout")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"mojette: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MojetteError as exc:
        print(f"mojette: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"mojette: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
