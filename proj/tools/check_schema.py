"""Validates JSON configs against the run-config schema."""
import json
import sys

import jsonschema


def main(argv):
    schema = json.load(open(argv[1]))
    validator = jsonschema.Draft202012Validator(schema)
    bad = 0
    for path in argv[2:]:
        errors = list(validator.iter_errors(json.load(open(path))))
        for e in errors:
            print(f"{path}: {'/'.join(map(str, e.path))}: {e.message}")
        bad += bool(errors)
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
