from setuptools import find_namespace_packages, setup

packages = find_namespace_packages(include=["anderson_lab*"])

extras_require = {
    "test": ["pytest", "pytest-xdist", "pytest-timeout"],
}
extras_require["all"] = sorted(set(sum(extras_require.values(), [])))


with open("requirements.txt") as f:
    requirements = [
        line.strip() for line in f.read().splitlines() if not line.strip().startswith("#")
    ]

setup(
    name="anderson_lab",
    version="0.1.0",
    description=(
        "Numerical lab for the Anderson Hamiltonian and the parabolic Anderson model with "
        "vanishing-correlation Gaussian noise."
    ),
    packages=packages,
    python_requires=">=3.9",
    install_requires=requirements,
    extras_require=extras_require,
    entry_points={"console_scripts": ["anderson-lab=anderson_lab.cli.main:main"]},
    package_data={"anderson_lab.configs": ["*.ini"]},
    include_package_data=True,
)
