"""Graph-induced neural networks, graph sampling, Shapley attribution, pruning and graph search."""
__version__ = "0.1.0"
