import sys
from pathlib import Path

# Make the plain test helpers (oracle etc.) importable when pytest is run
# from the repository root without installing the tests as a package.
sys.path.insert(0, str(Path(__file__).parent))
