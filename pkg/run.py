#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
Local entrypoint for the jointee command line.

    python run.py train --train data/train.jsonl --dev data/dev.jsonl --out model.ckpt
    python run.py diag gradcheck

Equivalent to `python -m jointee ...`. Settings such as JOINTEE_SEED and
JOINTEE_LOG_LEVEL may come from a .env file in the working directory.
"""
import sys

from jointee.cli import main

if __name__ == "__main__":
    sys.exit(main())
