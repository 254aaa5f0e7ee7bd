#
# 8888888b.   .d8888b.  888b    888  .d8888b.  8888888 888b     d888 
# 888  "Y88b d88P  Y88b 8888b   888 d88P  Y88b   888   8888b   d8888 
# 888    888 888    888 88888b  888 Y88b.        888   88888b.d88888 
# 888    888 888        888Y88b 888  "Y888b.     888   888Y88888P888 
# 888    888 888        888 Y88b888     "Y88b.   888   888 Y888P 888 
# 888    888 888    888 888  Y88888       "888   888   888  Y8P  888 
# 888  .d88P Y88b  d88P 888   Y8888 Y88b  d88P   888   888   "   888 
# 8888888P"   "Y8888P"  888    Y888  "Y8888P"  8888888 888       888 
#
# Copyright (c) 2025, Abe Mishler
# Licensed under the Universal Permissive License v 1.0
# as shown at https://oss.oracle.com/licenses/upl/. 
# 

"""
Algorithm registry for managing optimizers and Hessian exchange backends.
"""

import logging
from typing import Callable, Dict, List, Type

from .base import BaseOptimizer, ConfigError
from .consensus import DenseHessianBackend, HessianBackend

logger = logging.getLogger(__name__)


class AlgorithmRegistry:
    """Registry for managing optimizers and Hessian backends"""

    def __init__(self):
        self._algorithms: Dict[str, Type[BaseOptimizer]] = {}
        self._backends: Dict[str, Callable[..., HessianBackend]] = {}

    def register(self, name: str, optimizer_class: Type[BaseOptimizer]) -> None:
        """
        Register an optimizer class.

        Args:
            name: Name used on the command line and in configs
            optimizer_class: The optimizer class to register
        """
        self._algorithms[name] = optimizer_class

    def unregister(self, name: str) -> None:
        """Remove an optimizer; unknown names are ignored"""
        if name in self._algorithms:
            del self._algorithms[name]

    def register_backend(self, name: str, factory: Callable[..., HessianBackend]) -> None:
        """
        Register a Hessian backend factory.

        Args:
            name: Backend name; "name:K" specs pass K to the factory
            factory: Callable returning a fresh backend
        """
        self._backends[name] = factory

    def get_algorithm(self, name: str) -> Type[BaseOptimizer]:
        """
        Raises:
            ConfigError: If no optimizer is registered under name
        """
        try:
            return self._algorithms[name]
        except KeyError:
            raise ConfigError(f"unknown algorithm '{name}' "
                              f"(available: {', '.join(self.list_algorithms())})") from None

    def make_backend(self, spec: str) -> HessianBackend:
        """
        Build a backend from a spec such as "dense", "glm" or "glm-topk:8".

        Raises:
            ConfigError: If the name is unknown or the argument is not an integer
        """
        name, _, arg = spec.partition(":")
        factory = self._backends.get(name)
        if factory is None:
            raise ConfigError(f"unknown backend '{spec}' "
                              f"(available: {', '.join(self.list_backends())})")
        try:
            return factory(int(arg)) if arg else factory()
        except ValueError:
            raise ConfigError(f"backend argument must be an integer, got '{arg}'") from None
        except TypeError:
            raise ConfigError(f"wrong argument for backend '{spec}'") from None

    def list_algorithms(self) -> List[str]:
        return list(self._algorithms.keys())

    def list_backends(self) -> List[str]:
        return list(self._backends.keys())


# Global registry instance
registry = AlgorithmRegistry()


def register_algorithm(name: str, optimizer_class: Type[BaseOptimizer]) -> None:
    """Convenience function to register an optimizer with the global registry"""
    registry.register(name, optimizer_class)


def get_algorithm(name: str) -> Type[BaseOptimizer]:
    """Convenience function to look up an optimizer in the global registry"""
    return registry.get_algorithm(name)


def make_backend(spec: str) -> HessianBackend:
    """Convenience function to build a backend from the global registry"""
    return registry.make_backend(spec)


# Register built-in algorithms
def _register_builtin_algorithms():
    """Register all built-in optimizers and backends"""
    from .dcn import DcnConvex, DcnStronglyConvex
    from .adcn import AcceleratedDecentralizedCubicNewton
    register_algorithm("dcn-convex", DcnConvex)
    register_algorithm("dcn-sc", DcnStronglyConvex)
    register_algorithm("adcn", AcceleratedDecentralizedCubicNewton)

    registry.register_backend("dense", DenseHessianBackend)
    try:
        from .glm import GlmHessianBackend
        registry.register_backend("glm", GlmHessianBackend)
        registry.register_backend("glm-topk", lambda k: GlmHessianBackend(topk=k))
    except ImportError as e:
        logger.warning("GLM backend not available (%s)", e)


# Auto-register built-in algorithms when module is imported
_register_builtin_algorithms()
