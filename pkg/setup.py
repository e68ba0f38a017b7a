from setuptools import setup

try:
    from Cython.Build import cythonize
    ext_modules = cythonize(["src/dagrammar/_climb_cy.pyx"],
                            language_level=3)
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules,
      package_dir={"": "src"},
      packages=["dagrammar"])
