#! /usr/bin/env python
"""Sparse sequence to sequence toolbox with Fenchel-Young label smoothing."""

import codecs
import os

from setuptools import find_packages, setup

ver_file = os.path.join('sparseseq', '_version.py')
with open(ver_file) as f:
    exec(f.read())

DISTNAME = 'sparse-seq2seq'
DESCRIPTION = 'Sparse sequence to sequence toolbox with Fenchel-Young label smoothing.'
with codecs.open('README.rst', encoding='utf-8-sig') as f:
    LONG_DESCRIPTION = f.read()
MAINTAINER = 'sparse-seq2seq developers'
MAINTAINER_EMAIL = ''
URL = ''
LICENSE = 'MIT'
DOWNLOAD_URL = ''
VERSION = __version__
INSTALL_REQUIRES = ['scipy>=1.2', 'numpy>=1.16', 'pandas>=0.24.2', 'scikit-learn>=0.21', 'joblib>=0.13.2', 'tqdm>=4.28.1']
CLASSIFIERS = ['Intended Audience :: Science/Research',
               'Intended Audience :: Developers',
               'License :: OSI Approved',
               'Programming Language :: Python',
               'Topic :: Software Development',
               'Topic :: Scientific/Engineering',
               'Operating System :: Microsoft :: Windows',
               'Operating System :: POSIX',
               'Operating System :: Unix',
               'Operating System :: MacOS',
               'Programming Language :: Python :: 3.7',
               'Programming Language :: Python :: 3.8']
EXTRAS_REQUIRE = {
    'tests': [
        'pytest',
        'pytest-cov'],
    'docs': [
        'sphinx',
        'sphinx_rtd_theme',
        'numpydoc'
    ]
}
ENTRY_POINTS = {
    'console_scripts': [
        'sparseseq=sparseseq.seq2seq.experiment:main'
    ]
}

setup(
    name=DISTNAME,
    maintainer=MAINTAINER,
    maintainer_email=MAINTAINER_EMAIL,
    description=DESCRIPTION,
    license=LICENSE,
    url=URL,
    version=VERSION,
    download_url=DOWNLOAD_URL,
    long_description=LONG_DESCRIPTION,
    zip_safe=False,
    classifiers=CLASSIFIERS,
    packages=find_packages(),
    python_requires='>=3.7',
    install_requires=INSTALL_REQUIRES,
    extras_require=EXTRAS_REQUIRE,
    entry_points=ENTRY_POINTS
)
