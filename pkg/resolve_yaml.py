#!/usr/bin/env python3

import json
import logging
from pathlib import Path

import yaml

logger = logging.getLogger(__name__)

SCHEMA_DIR = Path(__file__).parent / "resources" / "schemas"


def resolve_refs(data, base_path):
    if isinstance(data, dict):
        if "$ref" in data and len(data) == 1:
            ref_path = data["$ref"]
            if ref_path.startswith("./") or ref_path.startswith("../"):
                file_path = (base_path / ref_path).resolve()
                if file_path.exists():
                    with open(file_path, "r", encoding="utf-8") as f:
                        ref_data = yaml.safe_load(f)
                    return resolve_refs(ref_data, file_path.parent)
                logger.warning("could not find referenced file: %s", file_path)
                return data
            # Internal reference, kept as is
            return data
        return {key: resolve_refs(value, base_path) for key, value in data.items()}
    if isinstance(data, list):
        return [resolve_refs(item, base_path) for item in data]
    return data


def resolve_schema(input_file: Path = SCHEMA_DIR / "result.yaml") -> dict:
    with open(input_file, "r", encoding="utf-8") as f:
        data = yaml.safe_load(f)
    return resolve_refs(data, input_file.parent)


def main():
    output_file = SCHEMA_DIR / "result-resolved.json"
    resolved_data = resolve_schema()
    with open(output_file, "w", encoding="utf-8") as f:
        json.dump(resolved_data, f, indent=2, ensure_ascii=False)
        f.write("\n")
    print(f"Schema resolved: {output_file}")


if __name__ == "__main__":
    main()
