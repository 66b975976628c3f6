"""
Setup configuration for the cluster-as-distribution toolkit.
"""
from setuptools import setup, find_packages
from pathlib import Path

# Read README
readme = Path("README.md").read_text(encoding="utf-8")

# Read requirements
requirements = Path("requirements.txt").read_text().splitlines()
requirements = [r.strip() for r in requirements if r.strip() and not r.startswith("#")]
requirements = [r for r in requirements if not r.startswith("pytest")]

setup(
    name="cad-cluster",
    version="1.0.0",
    description="Kernel Bounded Clustering over the Isolation distributional kernel, with a k-means baseline and benchmark harness",
    long_description=readme,
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=["tests", "tests.*", "examples", "examples.*"]),
    py_modules=["main"],
    include_package_data=True,
    install_requires=requirements,
    extras_require={"test": ["pytest>=7.4.0"]},
    python_requires=">=3.9",
    entry_points={
        "console_scripts": [
            "bench=app.cli.bench:main",
        ],
    },
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Topic :: Scientific/Engineering :: Artificial Intelligence",
    ],
    keywords="clustering isolation-kernel distributional-kernel kmeans benchmark",
)
