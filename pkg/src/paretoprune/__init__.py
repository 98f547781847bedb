"""Biobjective training of sparse dense networks."""
from . import kernels
from .net import NetworkSpec, forward, init_weights, loss_and_grad

__version__ = "0.1.0"
__all__ = ["NetworkSpec", "forward", "init_weights", "loss_and_grad", "kernels"]
