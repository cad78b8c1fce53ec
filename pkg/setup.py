import os
from setuptools import setup
from setuptools import find_packages
from geomappy import __version__
import pathlib


__status__ = "Package"
__copyright__ = "Copyright 2024"
__license__ = "MIT License"
__author__ = "geomappy contributors"


this_directory = os.path.abspath(os.path.dirname(__file__))
with open(os.path.join(this_directory, "readme.md"), encoding="utf-8") as f:
    long_description = f.read()


def versions_in_requirements(file):
    lines = file.read().splitlines()
    versions = [line for line in lines if not line.isspace() and "--" not in line]
    return list(versions)


HERE = pathlib.Path(__file__).parent
with open(HERE / "requirements.txt") as f:
    required_list = versions_in_requirements(f)

setup(
    name="geomappy",
    version=__version__,
    description="Map NLP datasets onto countries and measure their geographic representativeness",
    long_description=long_description,
    long_description_content_type="text/markdown",
    keywords="nlp datasets geography wikidata entity-linking",
    author="geomappy contributors",
    license="MIT License",
    packages=find_packages(include=["geomappy", "geomappy.*"]),
    package_data={"geomappy": ["data/*.jsonl"]},
    install_requires=required_list,
    setup_requires=["pytest-runner", "flake8"],
    tests_require=["pytest"],
    include_package_data=True,
    zip_safe=False,
    entry_points={"console_scripts": ["geomappy = geomappy.cli:main"]},
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Topic :: Scientific/Engineering :: Information Analysis",
    ],
)
