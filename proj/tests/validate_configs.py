"""Validate every shipped config against configs/schema.json."""
import json
import pathlib
import sys

try:
    import jsonschema
except ImportError:
    print("jsonschema not installed; skipping")
    sys.exit(77)

root = pathlib.Path(sys.argv[1])
schema = json.loads((root / "schema.json").read_text())
jsonschema.Draft202012Validator.check_schema(schema)
validator = jsonschema.Draft202012Validator(schema)
failed = 0
for path in sorted(root.glob("*.json")):
    if path.name == "schema.json":
        continue
    errors = list(validator.iter_errors(json.loads(path.read_text())))
    for e in errors:
        print(f"{path.name}: {'/'.join(map(str, e.path))}: {e.message}")
    failed += bool(errors)
    print(f"{path.name}: {'FAIL' if errors else 'ok'}")
sys.exit(1 if failed else 0)
