"""
Setup script for the Lubin-Tate action toolkit
"""

from setuptools import find_packages, setup

setup(
    name="lubin-tate-action",
    version="0.1.0",
    packages=find_packages(where="src"),
    package_dir={"": "src"},
    python_requires=">=3.9",
    entry_points={"console_scripts": ["lubin-tate=lubin_tate.cli:main"]},
)
