from setuptools import setup

setup(
    name="uipt-percolation",
    version="0.1.0",
    packages=["uipt_percolation"],
    package_data={"uipt_percolation": ["configs/*.yaml"]},
    install_requires=[
        "blobfile>=1.0.5",
        "numpy",
        "scipy",
        "omegaconf",
        "tqdm",
    ],
    extras_require={
        "mpi": ["mpi4py"],
        "test": ["pytest"],
    },
    entry_points={
        "console_scripts": ["uipt-percolation=uipt_percolation.cli:main"],
    },
)
