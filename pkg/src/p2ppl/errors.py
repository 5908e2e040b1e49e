"""Exception hierarchy shared by every module of the package."""


class P2PError(Exception):
    """Base class for all errors raised by p2ppl."""


# identifiers
class IdCollision(P2PError):
    pass


class InvalidKeySpace(P2PError):
    pass


# engine
class SchedulingInPast(P2PError):
    pass


# topology
class InvalidParams(P2PError):
    pass


class EmptyGraph(P2PError):
    pass


class DegenerateFit(P2PError):
    pass


class DomainError(P2PError):
    pass


# membership
class BootstrapFailed(P2PError):
    pass


class MediatorUnavailable(P2PError):
    pass


class AlreadyMember(P2PError):
    pass


# routing
class PathLost(P2PError):
    pass


class EmptyRing(P2PError):
    pass


class JoinFailed(P2PError):
    pass


class LookupTimeout(P2PError):
    pass


# hybrid overlay
class NotRegistered(P2PError):
    pass


class UnknownTorrent(P2PError):
    pass


# swarm
class NothingWanted(P2PError):
    pass


class CorruptPiece(P2PError):
    pass


class AmbiguousVersion(P2PError):
    pass


class InsufficientPeers(P2PError):
    pass


# reputation
class NegativeInput(P2PError):
    pass


# scenario / harness
class ConfigError(P2PError):
    """Raised for scenario problems; ``key`` names the offending entry."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


class ParseError(ConfigError):
    pass


class UnknownKey(ConfigError):
    pass


class InvalidValue(ConfigError):
    pass


class NoSnapshot(P2PError):
    pass


class InvariantViolation(P2PError):
    pass
