"""
Command-line entry points.

Run them as modules from the repository root (``python -m scripts.itrpower``)
or through the ``itrpower`` console script.
"""
