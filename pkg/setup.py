#!/usr/bin/env python

import os

from setuptools import setup
from setuptools import find_packages

here = os.path.abspath(os.path.dirname(__file__))

with open("requirements.txt", "r", encoding="UTF-8") as f:
    requires = [line for line in f.read().split("\n") if line.strip()]

meta_data = {}

with open(os.path.join(here, 'bcmlab', '__version__.py'), 'r', encoding='utf-8') as f:
    exec(f.read(), meta_data)

with open('README.rst', 'r', encoding='utf-8') as f:
    readme = f.read()

setup(
    name=meta_data['__title__'],
    version=meta_data['__version__'],
    description=meta_data['__description__'],
    long_description=readme,
    long_description_content_type="text/x-rst",
    author=meta_data['__author__'],
    license=meta_data['__license__'],
    packages=find_packages(),
    package_dir={'bcmlab': 'bcmlab'},
    include_package_data=True,

    install_requires=requires,
    python_requires='>=3.7',
    entry_points={
        'console_scripts': ['bcmlab = bcmlab.io.cli:main'],
    },

    classifiers=[
        'Development Status :: 3 - Alpha',

        'Intended Audience :: Science/Research',
        'Intended Audience :: Education',

        'Topic :: Scientific/Engineering :: Artificial Intelligence',
        'Topic :: Scientific/Engineering :: Mathematics',

        'License :: OSI Approved :: GNU General Public License v3 (GPLv3)',

        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.7',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
    ],

)
