from setuptools import setup, find_packages

setup(
    name="sim2lang",
    version="0.1.0",
    description="Language-grounded image representations for sim2sim policy transfer",
    packages=find_packages(exclude=["tests", "tests.*"]),
    package_data={"src.language": ["templates.json"]},
    python_requires=">=3.10",
    install_requires=[
        "numpy",
        "torch",
        "scipy",
        "matplotlib",
        "pandas",
        "tabulate<0.10",
        "python-dotenv",
    ],
    extras_require={
        "language": ["sentence-transformers"],
        "test": ["pytest", "pytest-cov", "coverage"],
    },
    entry_points={
        "console_scripts": [
            "s2l=src.main:main",
        ],
    },
)
