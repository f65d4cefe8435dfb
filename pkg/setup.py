from setuptools import find_packages, setup

# Subject to change as project progresses.

setup(
    name='cadec',
    license='GPL 3.0',
    version='0.1.0',
    packages=find_packages(exclude=('test',)),
    include_package_data=True,
    python_requires='>=3.8',
    install_requires=[
        'numpy>=1.20',
        'scipy>=1.7',
    ],
    entry_points={
        'console_scripts': ['cadec=cadec.cli:main'],
    },
    long_description=open('README.md').read()
)
