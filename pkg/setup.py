from pathlib import Path

from setuptools import find_packages, setup

setup(
    name="ensquant",
    version="0.1.0",
    packages=find_packages(include=["ensquant", "ensquant.*"], exclude=["docs", "tests*", "examples*"]),
    package_data={"ensquant.config": ["default.yaml"]},
    install_requires=[
        "pydantic>=2.7.0,<3.0.0",
        "typer[all]>=0.12.0",
        "rich",
        "loguru",
        "numpy>=1.23",
        "scipy>=1.9",  # linprog(method="highs-ds")
        "pandas>=1.5",
        "PyYAML",
    ],
    extras_require={"test": ["pytest>=7"]},
    entry_points={
        "console_scripts": [
            "ensquant = ensquant.cli.cli:app",
        ],
    },
    python_requires=">=3.9",
    description="ensquant: ensemble post-processing of sister predictions into quantile forecasts, with the toy-study harness.",
    long_description=(Path(__file__).parent / "README.md").read_text() if (Path(__file__).parent / "README.md").exists() else "",
    long_description_content_type="text/markdown",
    classifiers=[
        "Programming Language :: Python :: 3",
        "Operating System :: OS Independent",
    ],
)
