from setuptools import setup

setup(
    name="lindket",
    version="0.1.0",
    author="The lindket Authors",
    license="Apache 2.0",
    packages=["lindket"],
    long_description="""lindket solves the Lindblad master equation of small open
         quantum systems with truncated Taylor series, superoperator
         vectorization, Runge-Kutta and quantum-jump trajectories.""",
    zip_safe=False,
    python_requires=">=3.8",
    install_requires=["numpy>=1.17", "scipy>=1.4"],
    extras_require={"test": ["pytest", "pytest-cov"]},
    entry_points={"console_scripts": ["lindket=lindket.cli:main"]},
)
