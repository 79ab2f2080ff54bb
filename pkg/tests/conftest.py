import sys
from pathlib import Path

# test modules import shared helpers from each other (e.g. test_core.make_model)
sys.path.insert(0, str(Path(__file__).parent))
