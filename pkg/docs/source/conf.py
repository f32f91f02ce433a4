# -*- coding: utf-8 -*-
#
# cfamc documentation build configuration file
#
# This file is execfile()d with the current directory set to its
# containing dir.

import sys
import os

source_dir = os.path.dirname(__file__)
doc_dir = os.path.dirname(source_dir)
root_dir = os.path.dirname(doc_dir)
sys.path.append(source_dir)
sys.path.append(doc_dir)
sys.path.append(root_dir)

napoleon_google_docstring = True
napoleon_include_private_with_doc = True

project = 'cfamc'
copyright = '2026, cfamc developers'
author = 'cfamc developers'

from cfamc import __version__
version = __version__
release = __version__

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.githubpages',
    'sphinx.ext.napoleon',
]

# Heavy runtime deps are not needed to render the API pages
autodoc_mock_imports = ['torch', 'matplotlib']

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'
language = 'en'
exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']
pygments_style = 'sphinx'
todo_include_todos = True

import sphinx_rtd_theme
html_theme = "sphinx_rtd_theme"
html_theme_path = [sphinx_rtd_theme.get_html_theme_path()]
htmlhelp_basename = 'cfamcdoc'

latex_documents = [
    (master_doc, 'cfamc.tex', 'cfamc Documentation', author, 'manual'),
]

man_pages = [
    (master_doc, 'cfamc', 'cfamc Documentation', [author], 1)
]
