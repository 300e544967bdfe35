"""Figure rendering for simulator run directories.

Reads only the documented output formats (comma-separated tables with one
header line, KQFT1 binary matrices, key = value manifests) and regenerates
the standard figures: pair-density heatmaps with and without exchange,
pair-number families over barrier widths for fermions and bosons, and the
Klein-tunneling snapshot panels.  No simulation logic lives here.
"""

__version__ = "0.1.0"

from .readers import read_manifest, read_matrix, read_table
from .recipes import RECIPES, FigureRecipe, render
