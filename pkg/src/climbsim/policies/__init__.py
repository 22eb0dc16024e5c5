from ..core import Policy, PolicyConfig, PolicyName
from .adaptive import AdaptiveClimb
from .baseline import CLIMB, CLOCK, FIFO, LFU, LRU, SIEVE
from .dynamic import DynamicAdaptiveClimb, ResizeEvent

REGISTRY: dict[PolicyName, type[Policy]] = {
    cls.name: cls
    for cls in (FIFO, LRU, CLIMB, LFU, CLOCK, SIEVE, AdaptiveClimb, DynamicAdaptiveClimb)
}


def make_policy(config: PolicyConfig | str, capacity: int | None = None) -> Policy:
    """Build a fresh policy instance.

    Accepts either a :class:`PolicyConfig` or a policy name plus capacity.
    """
    if not isinstance(config, PolicyConfig):
        if capacity is None:
            raise TypeError("capacity is required when passing a policy name")
        config = PolicyConfig(PolicyName.parse(config), capacity)
    if config.policy is PolicyName.DYNAMIC_ADAPTIVE_CLIMB:
        return DynamicAdaptiveClimb(config.capacity, config.epsilon, config.k_min, config.k_max)
    return REGISTRY[config.policy](config.capacity)


__all__ = [
    "AdaptiveClimb", "CLIMB", "CLOCK", "DynamicAdaptiveClimb", "FIFO", "LFU", "LRU",
    "REGISTRY", "ResizeEvent", "SIEVE", "make_policy",
]
