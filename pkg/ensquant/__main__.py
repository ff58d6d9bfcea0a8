"""
ensquant module entry point.

Usage
-----
$ python -m ensquant <command> [options]

Forwards to the Typer CLI in `ensquant/cli/cli.py`.
"""

from ensquant.cli.cli import app as _cli_app


def main() -> None:
    _cli_app()


if __name__ == "__main__":
    main()
