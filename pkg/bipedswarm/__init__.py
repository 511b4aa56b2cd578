"""bipedswarm - statically stable biped gaits from hierarchical particle swarms"""

__version__ = "1.0.0"
