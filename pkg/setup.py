import setuptools

with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

requirements = []
with open("requirements.txt", "r") as fh:
    for line in fh:
        requirements.append(line.strip())

setuptools.setup(
    name="vgang",
    version="0.1.0",
    author="Zonda Yang",
    author_email="u226699@gmail.com",
    description="virtual gang formation and schedulability toolkit",
    license="MIT",
    long_description=long_description,
    long_description_content_type="text/markdown",
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: MIT License",
    ],
    keywords="real-time scheduling gang multicore",
    packages=["vgang"],
    python_requires=">=3.8",
    entry_points={
        "console_scripts": [
            "vgang=vgang.cli:main",
        ],
    },
    install_requires=requirements,
    extras_require={
        "test": ["scipy>=1.4"],
    },
)
