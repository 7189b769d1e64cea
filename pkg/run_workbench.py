#!/usr/bin/env python3
"""
Tiling Reduction Workbench - Main Script

This script drives the tiling-to-modal-logic reduction pipeline:
1. Generating the reduction formulas of a variant from a tile set
2. Building the witness model from a recurrent periodic tiling
3. Checking the formulas on the model with three-valued verdicts
4. Running the arithmetic property suites
5. Extracting the tiling window back out of the model
6. Searching small frames for separating countermodels

Usage:
    python run_workbench.py gen --tiles tilesets/stripes.tiles --variant Aprime
    python run_workbench.py pipeline --tiles tilesets/checker.tiles --variant A
    python run_workbench.py sep --formula boxnref:2 --frame gn:3

Environment Variables:
    TILING_WORKBENCH_OUTPUT: Output directory (default: output/ next to this script)
    TILING_WORKBENCH_SEARCH_CAP: Countermodel enumeration cap (default: 2**20)
    TILING_WORKBENCH_STEP_LIMIT: Evaluator step limit (default: 50000000)

Exit codes:
    0 ok, 1 unexpected failure, 2 input error, 3 False verdict or mismatch, 4 guard exceeded
"""

import sys
import argparse
from pathlib import Path

from workbench import run
from workbench_types import (
    EXIT_GUARD, EXIT_INPUT, OUTPUT_DIR, SUBCOMMANDS, VARIANTS, GuardExceeded, InputError, RunConfig,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='Tiling reduction workbench')
    parser.add_argument('subcommand', choices=SUBCOMMANDS,
                        help='Pipeline stage to run')
    parser.add_argument('--tiles', type=str,
                        help='Tile set file, or random:<k> for a random set drawn with --seed')
    parser.add_argument('--variant', type=str, default='A', choices=VARIANTS,
                        help='Reduction variant (default: A)')
    parser.add_argument('--frame', type=str,
                        help='Frame spec: natle, natlt, natrefl:<set>, gn:<n>, hn:<n>, ord:<m>,<k>, dense:<n>, refl, irrefl')
    parser.add_argument('--horizon', type=int,
                        help='Prefix length H (default: (2s+8)*(rows+2))')
    parser.add_argument('--domain-bound', type=int,
                        help='Domain bound K (default: max(rows, cols)+2)')
    parser.add_argument('--blocks', type=int,
                        help='Number of blocks in the starred model (default: rows+2)')
    parser.add_argument('--rows', type=int, default=8,
                        help='Rows of the extracted window (default: 8)')
    parser.add_argument('--cols', type=int, default=8,
                        help='Columns of the extracted window (default: 8)')
    parser.add_argument('--out', type=Path, default=OUTPUT_DIR,
                        help='Output directory')
    parser.add_argument('--report', type=str, default='text', choices=('text', 'structured'),
                        help='Report format (default: text)')
    parser.add_argument('--seed', type=int, default=0,
                        help='Seed for random tile sets (default: 0)')
    parser.add_argument('--quiet', action='store_true',
                        help='Silence status lines')
    parser.add_argument('-v', '--verbose', action='store_true',
                        help='Add per-conjunct timing lines')
    parser.add_argument('--model', type=str,
                        help='Model file for check/extract (default: build one)')
    parser.add_argument('--artifact', type=str,
                        help='Artifact file for check (default: generate one)')
    parser.add_argument('--width', type=int, default=4,
                        help='Grid width for solve (default: 4)')
    parser.add_argument('--height', type=int, default=4,
                        help='Grid height for solve (default: 4)')
    parser.add_argument('--wrap', action='store_true',
                        help='Require a torus tiling in solve')
    parser.add_argument('--t0-col0', action='store_true',
                        help='Require tile 0 in column 0 in solve')
    parser.add_argument('--formula', type=str, default='Z',
                        help='Separation formula: Z, ref, boxnref:<n>, xboxnz:<n> (default: Z)')
    parser.add_argument('--len', type=int, default=5, dest='length',
                        help='Chain length for sep (default: 5)')
    parser.add_argument('--max-domain', type=int, default=1,
                        help='Domain size for sep (default: 1)')
    parser.add_argument('--expect', choices=['refuted', 'none'], default=None,
                        help='Exit with status 3 when the sep outcome differs')
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    verbosity = 0 if args.quiet else (2 if args.verbose else 1)
    return RunConfig(
        subcommand=args.subcommand,
        tiles=args.tiles,
        variant=args.variant,
        frame=args.frame,
        horizon=args.horizon,
        domain_bound=args.domain_bound,
        blocks=args.blocks,
        rows=args.rows,
        cols=args.cols,
        out=args.out,
        report=args.report,
        seed=args.seed,
        verbosity=verbosity,
        model_path=args.model,
        artifact_path=args.artifact,
        width=args.width,
        height=args.height,
        wrap=args.wrap,
        t0_col0=args.t0_col0,
        formula=args.formula,
        length=args.length,
        max_domain=args.max_domain,
        expect=args.expect,
    )


def main(argv=None):
    args = build_parser().parse_args(argv)
    config = config_from_args(args)

    if config.verbosity:
        print("🧩 Tiling Reduction Workbench")
        print("=" * 50)
        print(f"📂 Output directory: {config.out}")
        print()

    try:
        return run(config)
    except InputError as e:
        print(f"✗ Input error: {e}")
        return EXIT_INPUT
    except GuardExceeded as e:
        print(f"✗ Bound exceeded: {e}")
        print("💡 Raise TILING_WORKBENCH_STEP_LIMIT / TILING_WORKBENCH_SEARCH_CAP or shrink the bounds")
        return EXIT_GUARD
    except KeyboardInterrupt:
        print("\n✗ Run cancelled by user")
        return 1
    except Exception as e:
        print(f"\n✗ Error running {config.subcommand}: {str(e)}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
