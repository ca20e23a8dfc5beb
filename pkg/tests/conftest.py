import pathlib
import sys

# oracle scripts live next to the tests, not in the package
sys.path.insert(0, str(pathlib.Path(__file__).parent))
