from setuptools import setup, find_packages

setup(
    name='tdlab',
    packages=find_packages('src'),
    package_dir={'': 'src'},
    version='0.1.0',
    description='True online TD(lambda) experiment lab: environments, '
                'learners, sweeps and equivalence checks',
    long_description=open('README.rst').read(),
    license='GPLv3',
    keywords=[
        'reinforcement-learning',
        'temporal-difference',
        'eligibility-traces',
        'command-line-app',
        'library python3'
    ],
    zip_safe=True,
    classifiers=[
        'Development Status :: 4 - Beta',
        'Environment :: Console',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: GNU General Public License v3 (GPLv3)',
        'Operating System :: OS Independent',
        'Programming Language :: Python :: 3 :: Only',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Topic :: Scientific/Engineering :: Artificial Intelligence',
        'Topic :: Software Development :: Libraries :: Python Modules',
        'Topic :: Utilities'
    ],
    python_requires='>=3.8',
    install_requires=['numpy',
                      'pyparsing>=3'],
    tests_require=['codecov',
                   'coverage',
                   'hypothesis',
                   'pytest-cov',
                   'pytest',
                   'scipy'],
    test_suite='tests',
    entry_points={
        'console_scripts': [
            'tdlab=tdlab.__main__:main',
        ],
    },
)
