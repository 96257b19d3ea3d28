#
# smio documentation build configuration file.
#
# This file is execfile()d with the current directory set to its containing dir.

import os
import sys
import time

# The package is importable from the repository root when not installed.
sys.path.insert(0, os.path.abspath(".."))

# -- General configuration -----------------------------------------------------

extensions = ["sphinx.ext.autodoc", "sphinx.ext.viewcode", "sphinx.ext.mathjax"]

templates_path = ["_templates"]
source_suffix = ".rst"
master_doc = "index"

project = "smio"
copyright = "%d, the smio developers, licensed under MIT" % (time.gmtime().tm_year,)

# The short X.Y version is release.
from smio.version import version as release
from smio.version import version_tuple

version = ".".join(str(v) for v in version_tuple[:2])

autodoc_member_order = "bysource"

exclude_patterns = ["_build"]

add_function_parentheses = True

pygments_style = "sphinx"

# -- Options for HTML output ---------------------------------------------------

html_theme = "sphinx_rtd_theme"
html_title = "smio: interval observer for states and unknown inputs"
htmlhelp_basename = "smiodoc"

# -- Options for LaTeX output --------------------------------------------------

latex_documents = [
    ("index", "smio.tex", "smio Documentation", "the smio developers", "manual"),
]

# -- Options for manual page output --------------------------------------------

man_pages = [("index", "smio", "smio Documentation", ["the smio developers"], 1)]
