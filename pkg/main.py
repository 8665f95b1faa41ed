#!/usr/bin/env python3
"""
Main entry point for the motion forecasting benchmark.
"""

import argparse
import logging
import os
import sys
from typing import Any, Dict, List, Optional

application_path = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, application_path)

from cli.commands import COMMANDS
from cli.run_config import RunConfig
from utils.config_manager import ConfigManager
from utils.error_handler import ErrorHandler
from utils.logger import log_configuration, log_system_info, setup_logging

# command-line flag -> dotted configuration key
FLAG_KEYS = {
    'seed': 'seed',
    'deterministic': 'deterministic',
    'output_dir': 'output_dir',
    'log_level': 'log_level',
    'quiet': 'quiet',
    'model': 'model',
    'corpus_dir': 'corpus_dir',
    'checkpoint': 'checkpoint',
    'source_dir': 'import.source_dir',
    'pair_with': 'import.pair_with',
    'paired_dir': 'eval.paired_dir',
    'dual': 'eval.dual',
    'split': 'eval.split',
    'reports': 'compare.reports',
    'switch': 'ablation.switch',
    'frames': 'render.frames',
    'window_index': 'render.window_index',
    'noise_kind': 'noise.kind',
}


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help="JSON configuration file (schema_version 1)")
    common.add_argument('--seed', type=int, help="Seed for every stochastic choice")
    common.add_argument('--deterministic', action='store_true', default=None,
                        help="Single-threaded deterministic kernels; timing left out of reports")
    common.add_argument('--output-dir', help="Output root (default: $MOTIONBENCH_OUTPUT_ROOT or 'runs')")
    common.add_argument('--log-level', choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    common.add_argument('--quiet', action='store_true', default=None, help="Warnings only, no progress bars")
    common.add_argument('--corpus-dir', help="SMF corpus directory (default: <output-dir>/corpus)")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="motionbench", description="3D absolute pose forecasting benchmark")
    sub = parser.add_subparsers(dest='command', required=True)

    model_args = argparse.ArgumentParser(add_help=False)
    model_args.add_argument('--model', choices=["repeat_last", "last_delta", "ridge", "motion_conformer"])
    model_args.add_argument('--checkpoint', help="Checkpoint to evaluate, resume or finetune from")

    sub.add_parser('synth', parents=[common], help="Generate a synthetic corpus")

    p = sub.add_parser('import', parents=[common], help="Import an external SMF corpus")
    p.add_argument('--source-dir')
    p.add_argument('--pair-with', help="Clean corpus to pair the imported estimator output with")

    sub.add_parser('train', parents=[common, model_args], help="Fit ridge or train the MotionConformer")

    p = sub.add_parser('finetune', parents=[common, model_args], help="Unsupervised finetuning on noisy data")
    p.add_argument('--paired-dir')
    p.add_argument('--noise-kind', choices=["gaussian", "structured", "import"])

    p = sub.add_parser('eval', parents=[common, model_args], help="Evaluate a model")
    p.add_argument('--dual', action='store_true', default=None, help="Measurable and real error on a paired corpus")
    p.add_argument('--paired-dir')
    p.add_argument('--split', choices=["train", "val", "test"])

    sub.add_parser('bench', parents=[common, model_args], help="Measure latency and throughput")

    p = sub.add_parser('compare', parents=[common], help="Merge report files into one table")
    p.add_argument('reports', nargs='*', help="MetricReport JSON files")

    p = sub.add_parser('render', parents=[common, model_args], help="Render a forecast")
    p.add_argument('--frames', type=int)
    p.add_argument('--window-index', type=int)

    p = sub.add_parser('ablate', parents=[common], help="Run an ablation switch")
    p.add_argument('--switch', choices=["spec_aug", "reduction_position", "geo_aug"])

    p = sub.add_parser('noise-study', parents=[common], help="Run the noise robustness study")
    p.add_argument('--noise-kind', choices=["none", "gaussian", "structured", "import"])
    return parser


def overrides_from(args: argparse.Namespace) -> Dict[str, Any]:
    values = vars(args)
    overrides = {key: values[flag] for flag, key in FLAG_KEYS.items() if values.get(flag) is not None}
    if overrides.get('compare.reports') == []:
        del overrides['compare.reports']
    return overrides


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, set up logging and configuration, run one command; returns the exit code."""
    args = build_parser().parse_args(argv)
    error_handler = ErrorHandler()

    @error_handler.with_error_handling(args.command)
    def run():
        config_manager = ConfigManager(args.config, overrides_from(args))
        config_manager.validate_config()

        quiet = config_manager.get_setting('quiet', False)
        log_dir = os.path.join(config_manager.get_setting('output_dir'), "logs")
        setup_logging("WARNING" if quiet else config_manager.get_setting('log_level', "INFO"), log_dir)
        error_handler.error_log_file = os.path.join(log_dir, "error_analysis.json")

        logging.info(f"Starting motionbench {args.command}")
        log_system_info()
        log_configuration(config_manager.get_config())
        COMMANDS[args.command](RunConfig(config_manager, args.command))

    return run()


if __name__ == "__main__":
    sys.exit(main())
