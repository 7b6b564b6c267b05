from setuptools import find_packages
from setuptools import setup


def read_requirements():
    with open("requirements.txt") as f:
        return [line.strip() for line in f if line.strip() and not line.startswith("#")]


setup(
    name="green_complexity",
    version="0.1",
    include_package_data=True,
    packages=find_packages(exclude=["tests", "examples", "examples.*"]),
    install_requires=[r for r in read_requirements() if not r.startswith("pytest")],
    extras_require={"test": ["pytest"]},
    entry_points={
        "console_scripts": [
            "green-complexity=green_complexity.pipeline.task:main",
        ],
    },
    description="Economic complexity and green transition metrics from geography x activity counts",
)
