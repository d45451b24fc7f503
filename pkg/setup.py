from setuptools import find_packages, setup


install_requires = [
    'numpy',
    'Pillow',
    'scipy',
]

setup(
    name='posepick',
    version='0.1.0-dev',
    description=('Value-based selection of synthetic camera poses for pose '
                 'regression data augmentation'),
    url='https://github.com/praekeltorg/posepick',
    author='Jamie Hewland',
    author_email='jamie@praekelt.org',
    license='BSD-3-Clause',
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: BSD License',
        'Natural Language :: English',
        'Operating System :: OS Independent',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3 :: Only',
        'Programming Language :: Python :: Implementation :: CPython',
        'Topic :: Scientific/Engineering :: Image Recognition',
    ],
    packages=find_packages(),
    python_requires='>=3.8',
    install_requires=install_requires,
    entry_points={
        'console_scripts': ['posepick = posepick.cli:main'],
    }
)
