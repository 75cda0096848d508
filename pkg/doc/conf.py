"""
Configuration of the sparse-seq2seq documentation.
"""

import sphinx_rtd_theme

from sparseseq import __version__

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.autosummary',
    'sphinx.ext.doctest',
    'sphinx.ext.intersphinx',
    'sphinx.ext.viewcode',
    'sphinx.ext.imgmath',
    'numpydoc',
]
numpydoc_show_class_members = False
autodoc_default_options = {'members': True}
autosummary_generate = True
templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

# Project
project = 'sparse-seq2seq'
copyright = '2020, sparse-seq2seq developers'
version = __version__
release = __version__
exclude_patterns = ['_build', '_templates']
pygments_style = 'sphinx'

# HTML output
html_theme = 'sphinx_rtd_theme'
html_theme_path = [sphinx_rtd_theme.get_html_theme_path()]
htmlhelp_basename = 'sparse-seq2seqdoc'

intersphinx_mapping = {
    'python': ('https://docs.python.org/3', None),
    'numpy': ('https://numpy.org/doc/stable/', None),
    'scipy': ('https://docs.scipy.org/doc/scipy/reference', None),
    'pandas': ('https://pandas.pydata.org/pandas-docs/stable/', None),
    'sklearn': ('http://scikit-learn.org/stable', None)
}
