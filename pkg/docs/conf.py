# Configuration file for the Sphinx documentation builder.
#
# This file only contains a selection of the most common options. For a full
# list see the documentation:
# https://www.sphinx-doc.org/en/master/usage/configuration.html

# -- Path setup --------------------------------------------------------------

import os
import sys

sys.path.insert(0, os.path.abspath(".."))  # isort:skip
import mvnmt  # isort:skip


# -- Project information -----------------------------------------------------

project = "mvnmt"
copyright = "2022, Deltares"
author = "Deltares"


# -- General configuration ---------------------------------------------------

# Add any Sphinx extension module names here, as strings. They can be
# extensions coming with Sphinx (named 'sphinx.ext.*') or your custom
# ones.
extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.todo",
    "sphinx.ext.coverage",
    "sphinx.ext.napoleon",
    "sphinx.ext.imgmath",
    "releases",
]

# Add any paths that contain templates here, relative to this directory.
templates_path = ["_templates"]

language = "en"

# List of patterns, relative to source directory, that match files and
# directories to ignore when looking for source files.
exclude_patterns = []


# -- Options for HTML output -------------------------------------------------

html_theme = "alabaster"

version = mvnmt.__version__
release = mvnmt.__version__
add_module_names = True

html_theme_options = {
    "logo_name": True,
    "show_powered_by": False,
    "show_related": False,
    "note_bg": "#FFF59C",
    "show_relbars": True,
}
html_show_sourcelink = False
html_show_sphinx = False
todo_include_todos = True

releases_unstable_prehistory = True
