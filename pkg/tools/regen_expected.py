"""Rewrite the expected-output fixtures beside each built-in scenario and the published schema."""
import json
from pathlib import Path

from loopline.runner import expected_output
from loopline.scenarios import BUILTINS, builtin
from loopline.scenarios.schema import SCENARIO_SCHEMA

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "src" / "loopline" / "scenarios" / "data"


def dump(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


for name in BUILTINS:
    (DATA / f"{name}.expected.json").write_text(dump(expected_output(builtin(name))), encoding="utf-8")
    print(name)
(ROOT / "docs" / "scenario.schema.json").write_text(dump(SCENARIO_SCHEMA), encoding="utf-8")
print("docs/scenario.schema.json")
