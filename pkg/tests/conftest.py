import sys
from pathlib import Path

# make the oracles module and (uninstalled) package importable
sys.path.insert(0, str(Path(__file__).parent))
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))
