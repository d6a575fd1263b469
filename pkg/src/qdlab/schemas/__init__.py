"""JSON schemas for the command-line outputs."""
import json
from importlib import resources

NAMES = ("matrix", "correlation_report", "witness_report", "tomography_result", "preparation")


def load_schema(name: str) -> dict:
    return json.loads(resources.files(__name__).joinpath(f"{name}.schema.json").read_text(encoding="utf-8"))
