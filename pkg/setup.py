from setuptools import setup, find_packages

setup(
    name="cdn-defect-aligner",
    version="0.1.0",
    packages=find_packages(exclude=["tests", "tests.*"]),
    entry_points={
        'console_scripts': [
            'cvdp=src.main:main',
        ],
    },
    install_requires=[
        "numpy>=1.24",
        "scipy>=1.10",
        "scikit-learn>=1.3",
        "pandas>=1.5",
        "gensim>=4.3",
        "numba>=0.58",
        "networkx>=3.0",
        "javalang>=0.13.0",
        "joblib>=1.3",
        "python-dotenv>=1.0.0",
        "PyYAML>=6.0",
        "pydantic>=2.5.0",
    ],
)
