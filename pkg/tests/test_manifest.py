import re
import sys
import unittest
from pathlib import Path

# Setup path
sys.path.append(".")

ROOT = Path(__file__).resolve().parent.parent
IMPORT_NAMES = {"python-dotenv": "dotenv"}


def declared_packages():
    names = []
    for line in (ROOT / "requirements.txt").read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            names.append(re.split(r"[<>=!~\[; ]", line, maxsplit=1)[0])
    return names


def imported_modules():
    found = set()
    for path in list((ROOT / "src").rglob("*.py")) + list((ROOT / "tests").rglob("*.py")):
        for match in re.finditer(r"^\s*(?:import|from)\s+([A-Za-z_]\w*)", path.read_text(), re.M):
            found.add(match.group(1))
    return found


class TestRequirements(unittest.TestCase):
    def test_every_requirement_is_imported(self):
        modules = imported_modules()
        unused = [p for p in declared_packages() if IMPORT_NAMES.get(p, p.replace("-", "_")) not in modules]
        self.assertEqual(unused, [])

    def test_core_stack_declared(self):
        declared = set(declared_packages())
        for package in ("numpy", "gmpy2", "numba", "pandas", "pydantic", "python-dotenv"):
            self.assertIn(package, declared)


if __name__ == "__main__":
    unittest.main()
