import unittest
import sys
import os

# Add parent directory to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.core.models import CountMode, GroupFamily, KRegionKind, LatticeKind, OutputFormat, SolutionSign


class TestEnums(unittest.TestCase):

    def test_group_family(self):
        self.assertEqual(GroupFamily.SL2R.value, "sl2r")
        self.assertEqual(GroupFamily.SL2C.value, "sl2c")
        self.assertEqual(GroupFamily("so1n"), GroupFamily.SO1N)

    def test_solution_sign(self):
        self.assertEqual(SolutionSign.POSITIVE.value, "positive")
        self.assertEqual(SolutionSign.NEGATIVE.value, "negative")
        self.assertEqual(SolutionSign.BOUNDARY.value, "boundary")

    def test_lattice_kind(self):
        self.assertEqual([k.value for k in LatticeKind], ["sl2z", "sl2od", "so1nz"])

    def test_modes_and_formats(self):
        self.assertEqual(CountMode.HOROSPHERE.value, "horosphere")
        self.assertEqual(OutputFormat("json"), OutputFormat.JSON)
        self.assertEqual(KRegionKind.CAP.value, "cap")


if __name__ == '__main__':
    unittest.main()
