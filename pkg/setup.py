from setuptools import setup

setup(
    name="connected-kmedian",
    version="0.1",
    py_modules=[
        "assign_nd",
        "bench",
        "centers_nd",
        "config_manager",
        "core",
        "cuts",
        "errors",
        "generators",
        "lp",
        "main",
        "oracle",
        "steiner",
        "tree_dp",
        "ui_manager",
    ],
    package_data={"": ["config/default_config.json"]},
    include_package_data=True,
    install_requires=[
        "rich>=10.0.0",
        "numpy>=1.22.0",
        "scipy>=1.9.0",
        "networkx>=2.8",
        "pytest>=7.0.0",
        "mypy>=0.950",
    ],
    entry_points={"console_scripts": ["ckm=main:main"]},
)
