"""Scenery reconstruction from branching random walk observations."""

from .brw import ObservationTree, SimLimits, expected_population, simulate_brw, visit_statistics
from .lattice import (Box, Isometry, PartialScenery, Scenery, Word, apply_isometry,
                      enumerate_words, find_equivalence, generate_scenery, read_line)
from .observations import coverage_source, tree_source
from .reconstruct import (Params, PlacedWord, WordBag, neighbor_test, phase1_short_words,
                          phase2_long_words, phase3_seed, phase4_tile, reconstruct_box,
                          stitch_levels)

__version__ = "0.1.0"
