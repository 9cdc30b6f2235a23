import sys
from pathlib import Path

# make tests/ importable as a plain directory (gradcheck, oracles)
sys.path.insert(0, str(Path(__file__).parent))
