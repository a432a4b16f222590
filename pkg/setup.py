import os
from setuptools import setup

with open(os.path.join(os.path.dirname(__file__), 'README.rst')) as readme:
    README = readme.read()

# allow setup.py to be run from any path
os.chdir(os.path.normpath(os.path.join(os.path.abspath(__file__), os.pardir)))

setup(
    name='indefinite-graph-spectra',
    version='0.1.0',
    packages=[
        'graph_spectra',
        'graph_spectra.graphs',
        'graph_spectra.assembly',
        'graph_spectra.spectra',
        'graph_spectra.krein',
        'graph_spectra.bracketing',
        'graph_spectra.oracle',
        'graph_spectra.verification',
        'graph_spectra.management',
        'graph_spectra.management.commands',
    ],
    include_package_data=True,
    install_requires=[
        'numpy>=1.20',
        'scipy>=1.7',
        'networkx>=2.5',
        'Django>=3.2',
    ],
    extras_require={
        'test': ['pytest', 'hypothesis'],
    },
    entry_points={
        'console_scripts': [
            'graph-spectra = graph_spectra.management.commands.graph_spectra:main',
        ],
    },
    license='MIT License',
    description='Spectra of indefinite Sturm-Liouville problems on metric graphs with co-normal vertex conditions',
    long_description=README,
    classifiers=[
        'Environment :: Console',
        'Framework :: Django',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: MIT License',
        'Operating System :: OS Independent',
        'Programming Language :: Python',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Topic :: Scientific/Engineering :: Mathematics',
    ],
)
