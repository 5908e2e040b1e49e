"""Pattern-level peer-to-peer overlay simulator.

Unstructured flooding, a Chord ring, hybrid index/tracker actors and a
BitTorrent-style swarm, all on one deterministic discrete-event engine.
"""

from .engine import Simulator
from .runner import PRESETS, preset, run
from .scenario import Scenario, load_scenario, loads_scenario

__all__ = ["PRESETS", "Scenario", "Simulator", "load_scenario", "loads_scenario", "preset", "run"]
__version__ = "0.1.0"
