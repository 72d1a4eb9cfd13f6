"""Rewrite the CLI reference block in README.md from the argparse definitions."""
from pathlib import Path

from sms_handover.cli import cli_reference

START, END = "<!-- cli-reference:start -->", "<!-- cli-reference:end -->"

readme = Path(__file__).resolve().parents[1] / "README.md"
text = readme.read_text()
head, rest = text.split(START, 1)
_, tail = rest.split(END, 1)
readme.write_text(f"{head}{START}\n```text\n{cli_reference()}```\n{END}{tail}")
