#!/usr/bin/env python3
"""
dckit package setup.
Installs the library, the ``dckit`` command and the HTTP app.
"""

from pathlib import Path

from setuptools import find_packages, setup


def read_requirements():
    """Runtime requirements; test tools are left to requirements.txt."""
    lines = Path(__file__).with_name("requirements.txt").read_text().splitlines()
    return [line for line in lines
            if line and not line.startswith(("pytest", "hypothesis"))]


setup(
    name="dckit",
    version="1.0.0",
    description="Numerical checks for Denjoy-Carleman classes",
    long_description=Path(__file__).with_name("README.md").read_text(),
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=("tests", "tests.*")),
    python_requires=">=3.10",
    install_requires=read_requirements(),
    entry_points={"console_scripts": ["dckit=dckit.cli:main"]},
)
