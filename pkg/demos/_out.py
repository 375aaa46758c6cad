import sys
from pathlib import Path


def output_dir() -> Path:
    """First command-line argument, or ./demo_output."""
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("demo_output")
    out.mkdir(parents=True, exist_ok=True)
    return out
