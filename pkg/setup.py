import setuptools
from setuptools import setup
requirements = ["numpy>=1.22", "scipy>=1.12", "pyyaml>=5.4"]

with open("README.md") as f:
    readme = f.read()

setup(
    name="wavecharge",
    version="0.1.0",
    description="Numerical laboratory for wave equations with moving "
                "potentials",
    long_description=readme,
    long_description_content_type="text/markdown",
    scripts=[],
    packages=['wavecharge'],
    package_data={"wavecharge": ["configs/*.json"]},
    license="Apache 2.0",
    platforms="Posix; MacOS X; Windows",
    install_requires=requirements,
    extras_require={"test": ["pytest"]},
    entry_points={
        "console_scripts": ["wavecharge = wavecharge.cli:main"],
    },
    classifiers=[
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: Apache Software License",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Topic :: Scientific/Engineering :: Physics",
    ],
    python_requires='>=3.9'
)
