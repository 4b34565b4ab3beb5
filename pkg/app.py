#!/usr/bin/env python3
"""
Entry point for the 6DMA secure beamforming experiments

PURPOSE: Command-line entry that dispatches to the harness subcommands

**Key Components**:

python app.py run --config configs/toy.cfg
python app.py sweep --config configs/default.cfg --param power --values 1,3,10,30 --out out/power.csv
python app.py check --config configs/default.cfg

CODE STRUCTURE:
1. Import the CLI main function
2. Exit with its status code
"""
import sys

from src.cli import main

if __name__ == "__main__":
    sys.exit(main())
