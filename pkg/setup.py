# Copyright (c) 2023 CechCollapse Team
# Licensed under The MIT License [see LICENSE for details]

from io import open

from setuptools import find_packages, setup

setup(
    name="cechcollapse",
    version="0.1.0",
    author="CechCollapse Team",
    description="Cech complexes of sampled shapes simplified by certified collapses",
    long_description=open("README.md", "r", encoding="utf-8").read(),
    long_description_content_type="text/markdown",
    keywords="Cech complex, collapse, nerve, triangulation, topological data analysis",
    license="MIT",
    packages=find_packages(exclude=["*.tests", "*.tests.*", "tests.*", "tests"]),
    install_requires=[
        "torch>=1.8",
        "numpy>=1.21",
        "scipy>=1.7",
        "networkx>=2.6",
        "matplotlib>=3.5",
        'tomli>=1.1; python_version < "3.11"',
    ],
    extras_require={"test": ["pytest"]},
    entry_points={"console_scripts": ["cechcollapse=cechcollapse.cli:main"]},
    python_requires=">=3.8.0",
    classifiers=[
        "Programming Language :: Python :: 3",
    ],
)
