"""Main CLI entry point for microlang"""

import sys
import argparse
import asyncio
from typing import List, Optional

from dotenv import load_dotenv

from ..utils.exceptions import ValidationError
from ..utils.logger import Logger, logger
from .commands import (
    EXIT_USAGE,
    RunConfig,
    cmd_call,
    cmd_check,
    cmd_trace,
    parse_bindings,
    parse_execution,
    run_services,
)

load_dotenv(override=True)


def create_parser() -> argparse.ArgumentParser:
    """Create argument parser for CLI"""

    parser = argparse.ArgumentParser(
        prog='microlang',
        description='microlang - microservice orchestration language',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Check service files
  microlang check services/shop.ml.svc

  # Run the shop with its stubs and stream the event log
  microlang run --trace --seed 7 services/shop.ml.svc services/catalog.ml.svc services/auth.ml.svc

  # Invoke an operation
  microlang call socket://localhost:8080 http login '{}'
"""
    )
    parser.add_argument(
        '--log-level',
        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'],
        help='Diagnostic log level (default: MICROLANG_LOG_LEVEL or INFO)'
    )

    subparsers = parser.add_subparsers(dest='command', help='Available commands')

    # === check command ===
    check_parser = subparsers.add_parser(
        'check',
        help='Parse and statically check service files'
    )
    check_parser.add_argument(
        'files',
        nargs='+',
        help='Service source files'
    )

    # === run command ===
    run_parser = subparsers.add_parser(
        'run',
        help='Run one or more services until interrupted'
    )
    run_parser.add_argument(
        'files',
        nargs='*',
        help='Service source files'
    )
    run_parser.add_argument(
        '--config',
        help='YAML run configuration (services, bind, trace, seed, execution)'
    )
    run_parser.add_argument(
        '--trace',
        action='store_true',
        help='Stream the event log to standard output as line-delimited JSON'
    )
    run_parser.add_argument(
        '--trace-file',
        help='Append the event log to this file'
    )
    run_parser.add_argument(
        '--seed',
        type=int,
        help='Seed for process ids, fresh tokens and scheduling'
    )
    run_parser.add_argument(
        '--bind',
        action='append',
        dest='bindings',
        help='Port location override (format: PORT=LOCATION, can be specified multiple times)'
    )
    mode = run_parser.add_mutually_exclusive_group()
    mode.add_argument(
        '--sequential',
        action='store_const',
        const='sequential',
        dest='execution',
        help='Force sequential execution'
    )
    mode.add_argument(
        '--concurrent',
        action='store_const',
        const='concurrent',
        dest='execution',
        help='Force concurrent execution'
    )

    # === call command ===
    call_parser = subparsers.add_parser(
        'call',
        help='Invoke one operation on a running service'
    )
    call_parser.add_argument('location', help='socket://host:port or local://name')
    call_parser.add_argument('protocol', help='http or sodep-lite')
    call_parser.add_argument('operation', help='Operation name')
    call_parser.add_argument('payload', help='Request payload as JSON')
    call_parser.add_argument(
        '--oneway',
        action='store_true',
        help='One-way invocation: only the acknowledgement is awaited'
    )
    call_parser.add_argument(
        '--timeout',
        type=float,
        help='Timeout in seconds'
    )

    # === trace command ===
    trace_parser = subparsers.add_parser(
        'trace',
        help='Render a recorded event log as a table'
    )
    trace_parser.add_argument('file', help='Line-delimited JSON event log')
    trace_parser.add_argument('--pid', help='Only events of this process')
    trace_parser.add_argument(
        '--kind',
        choices=['spawn', 'recv', 'send', 'buffer', 'fault', 'terminate', 'call'],
        help='Only events of this kind'
    )

    return parser


def build_run_config(args: argparse.Namespace) -> RunConfig:
    """Merge the optional YAML configuration with command-line flags"""
    base = RunConfig.from_yaml(args.config) if args.config else RunConfig()
    return base.merge(
        files=args.files,
        bindings=parse_bindings(args.bindings),
        trace=args.trace,
        trace_file=args.trace_file,
        seed=args.seed,
        execution=parse_execution(args.execution) if args.execution else None,
    )


def main(argv: Optional[List[str]] = None) -> None:
    """Main CLI entry point"""
    parser = create_parser()
    args = parser.parse_args(argv)

    if args.log_level:
        Logger.set_level(args.log_level)

    if not args.command:
        parser.print_help()
        sys.exit(0)

    try:
        # Route to command handlers
        if args.command == 'check':
            code = cmd_check(args.files)

        elif args.command == 'run':
            try:
                config = build_run_config(args)
            except ValidationError as e:
                print(f"error: {e}", file=sys.stderr)
                sys.exit(EXIT_USAGE)
            code = asyncio.run(run_services(config))

        elif args.command == 'call':
            code = asyncio.run(cmd_call(
                location=args.location,
                protocol=args.protocol,
                operation=args.operation,
                payload_json=args.payload,
                oneway=args.oneway,
                timeout=args.timeout
            ))

        elif args.command == 'trace':
            code = cmd_trace(args.file, pid=args.pid, kind=args.kind)

        else:
            parser.print_help()
            code = EXIT_USAGE

    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        sys.exit(130)

    sys.exit(code)


if __name__ == '__main__':
    main()
