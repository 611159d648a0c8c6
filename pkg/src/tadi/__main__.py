#!/usr/bin/env python3
"""Entry point for tadi package execution."""

from tadi.cli import cli

if __name__ == "__main__":
    cli()
