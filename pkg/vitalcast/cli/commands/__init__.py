"""
CLI subcommands, one module per command. Each exposes register(subparsers) and run(args).
"""

from vitalcast.cli.commands import experiment, gen_data, mi_report, predict, train, validate

COMMANDS = (gen_data, validate, experiment, mi_report, train, predict)
