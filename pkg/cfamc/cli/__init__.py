""" Command-line interface: ``python -m cfamc <command>`` """

from cfamc.cli.config import RunConfig, ModelGrid, PRESETS, DESK, PAPER
from cfamc.cli.commands import main, build_parser, exit_code
from cfamc.cli.commands import cmd_gen_data, cmd_train, cmd_flops, cmd_eval, cmd_report
