import argparse
import json
import os
import sys

from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Add project root to Python path (so `src` is importable)
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src import __version__
from src.experiments.config import (
    COMMANDS,
    FORMATS,
    SWEEP_AXES,
    apply_overrides,
    default_config,
    from_document,
    read_config_file,
)
from src.experiments.output import write_output
from src.experiments.runner import plan, run
from src.utils.errors import LabError
from src.utils.logger import get_main_logger

EXIT_OK = 0
EXIT_UNEXPECTED = 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="norming-lab",
        description="Concentration-operator experiments for polynomial sections on CP^1.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="JSON experiment document")
    parser.add_argument("--k", help="comma-separated degrees, e.g. 4,8,16 (the N list for fock)")
    parser.add_argument("--R", type=float, help="ball scale R in R/sqrt(k)")
    parser.add_argument("--eps", type=float, help="epsilon for lemma32 / lemma34")
    parser.add_argument("--quad", help="quadrature orders RADIALxAZIMUTHAL, e.g. 128x256")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--probes", type=int, help="probe count (default: 8 per ball of radius R/sqrt(k))")
    parser.add_argument("--samples", type=int, help="random sections per k for lemma32")
    parser.add_argument("--sweep", choices=SWEEP_AXES, help="sweep axis")
    parser.add_argument("--values", help="comma-separated sweep values")
    parser.add_argument("--out", help="output path (stdout when omitted)")
    parser.add_argument("--format", choices=FORMATS)
    parser.add_argument("--threads", type=int)
    parser.add_argument("--dry-run", action="store_true", help="validate and print the resolved plan")
    return parser


def resolve_config(args):
    """Environment defaults, then the config file, then command-line flags."""
    defaults = default_config(args.command)
    document = {
        "quad_radial": defaults.quad_radial,
        "quad_azimuthal": defaults.quad_azimuthal,
        "threads": defaults.threads,
    }
    if args.config:
        document.update(read_config_file(args.config))
    document["command"] = args.command
    return apply_overrides(from_document(document), args)


def main(argv=None) -> int:
    """CLI entry point."""
    logger = get_main_logger()
    args = build_parser().parse_args(argv)

    try:
        config = resolve_config(args)
        if args.dry_run:
            print(json.dumps(plan(config), indent=2, sort_keys=True))
            return EXIT_OK
        rows = run(config)
        write_output(rows, config.output_path, config.format)
        if config.output_path:
            print(f"✅ {config.command}: {len(rows)} rows written to {config.output_path}", file=sys.stderr)
        return EXIT_OK
    except LabError as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"❌ {e}", file=sys.stderr)
        return e.exit_code
    except Exception as e:
        logger.exception("Unexpected failure")
        print(f"❌ Error during execution: {e}", file=sys.stderr)
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    sys.exit(main())
