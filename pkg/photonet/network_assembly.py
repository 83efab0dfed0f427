"""
Global scattering matrix Ŝ, connection matrix Ĝ and the amplitude transfer
function Ĥ = (Ŝ⁻¹ − Ĝ)⁻¹ of an arbitrarily connected network.

Coordinate convention: global port p (1-based) owns coordinate rows 2p−1 and
2p (x then y); in 0-based numpy indices that is 2p−2 and 2p−1.

Ĥ is obtained from (I − Ŝ·Ĝ)·Ĥ = Ŝ, which equals the literal inverse form
whenever Ŝ is invertible and stays defined for ideal polarizers and absorbers.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike

from photonet.component_library import ScatteringBlock, is_reciprocal
from photonet.errors import DimensionError, NetlistValidationError
from photonet.matrix_core import (
    ComplexMatrix,
    ComplexVector,
    as_matrix,
    as_vector,
    identity,
    invert,
    solve_with_condition,
)

logger = logging.getLogger(__name__)


def port_coordinates(port: int) -> Tuple[int, int]:
    """0-based (x, y) coordinate indices of 1-based global port `port`."""
    return 2 * port - 2, 2 * port - 1


@dataclass(frozen=True)
class PortMap:
    """
    Global port numbering. components holds (component_id, global ports in
    local-port order) in declaration order; global ports are a bijection onto 1..m.
    """
    components: Tuple[Tuple[str, Tuple[int, ...]], ...]
    _lookup: Dict[Tuple[str, int], int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        lookup: Dict[Tuple[str, int], int] = {}
        seen: List[int] = []
        for name, ports in self.components:
            for local, glob in enumerate(ports, start=1):
                if (name, local) in lookup:
                    raise NetlistValidationError("component listed twice in port map", instance=name)
                lookup[(name, local)] = glob
                seen.append(glob)
        if sorted(seen) != list(range(1, len(seen) + 1)):
            raise NetlistValidationError(f"global ports {sorted(seen)} are not a bijection onto 1..{len(seen)}")
        object.__setattr__(self, "_lookup", lookup)

    @classmethod
    def from_port_counts(cls, counts: Sequence[Tuple[str, int]]) -> "PortMap":
        """Number ports consecutively in declaration order."""
        comps = []
        nxt = 1
        for name, count in counts:
            comps.append((name, tuple(range(nxt, nxt + count))))
            nxt += count
        return cls(tuple(comps))

    @property
    def total_ports_m(self) -> int:
        return len(self._lookup)

    @property
    def assignments(self) -> Dict[Tuple[str, int], int]:
        return dict(self._lookup)

    def global_port(self, component_id: str, local_port: int) -> int:
        try:
            return self._lookup[(component_id, local_port)]
        except KeyError:
            raise NetlistValidationError(f"no port {local_port}", instance=component_id) from None

    def ports_of(self, component_id: str) -> Tuple[int, ...]:
        for name, ports in self.components:
            if name == component_id:
                return ports
        raise NetlistValidationError("unknown component", instance=component_id)

    def has_port(self, component_id: str, local_port: int) -> bool:
        return (component_id, local_port) in self._lookup


@dataclass(frozen=True)
class ConnectionMap:
    """Unordered global-port pairs; each port appears in at most one pair."""
    pairs: FrozenSet[Tuple[int, int]] = frozenset()

    def __post_init__(self):
        used = set()
        for a, b in self.pairs:
            if a == b:
                raise NetlistValidationError(f"port {a} connected to itself")
            if a > b:
                raise NetlistValidationError(f"pair ({a}, {b}) is not in canonical order")
            for p in (a, b):
                if p in used:
                    raise NetlistValidationError(f"port {p} used in more than one connection")
                used.add(p)

    @classmethod
    def from_pairs(cls, pairs: Iterable[Tuple[int, int]]) -> "ConnectionMap":
        canonical = []
        for a, b in pairs:
            if a == b:
                raise NetlistValidationError(f"port {a} connected to itself")
            canonical.append((min(a, b), max(a, b)))
        if len(set(canonical)) != len(canonical):
            raise NetlistValidationError("duplicate connection")
        return cls(frozenset(canonical))

    def connected_ports(self) -> FrozenSet[int]:
        return frozenset(p for pair in self.pairs for p in pair)


@dataclass(frozen=True)
class NetworkSystem:
    """Assembled network at one optical frequency."""
    S: ComplexMatrix
    G: ComplexMatrix
    port_map: PortMap
    H: Optional[ComplexMatrix] = None
    condition: Optional[float] = None


def assemble_global_scattering(blocks: Sequence[ScatteringBlock], port_map: PortMap) -> ComplexMatrix:
    """
    Place each component block on the 2m×2m diagonal at the coordinates of its
    global ports. blocks[i] belongs to port_map.components[i].
    """
    if len(blocks) != len(port_map.components):
        raise DimensionError(f"{len(blocks)} blocks for {len(port_map.components)} components")
    m = port_map.total_ports_m
    S = np.zeros((2 * m, 2 * m), dtype=np.complex128)
    filled = np.zeros(2 * m, dtype=bool)
    for block, (name, ports) in zip(blocks, port_map.components):
        if block.port_count != len(ports):
            raise DimensionError(f"component '{name}' has {len(ports)} ports but a {block.port_count}-port block")
        coords = np.array([c for p in ports for c in port_coordinates(p)])
        if np.any(filled[coords]):
            raise DimensionError(f"component '{name}' overlaps another component's ports")
        filled[coords] = True
        if not is_reciprocal(block, tol=1e-9):
            logger.warning("component '%s' has a non-reciprocal scattering block", name)
        S[np.ix_(coords, coords)] = block.matrix
    return S


def assemble_connection_matrix(connections: ConnectionMap, m: int) -> ComplexMatrix:
    """
    2m×2m topology matrix: for each pair (a, b) a 2×2 identity routes the
    output of a into the input of b and vice versa.
    """
    G = np.zeros((2 * m, 2 * m), dtype=np.complex128)
    for a, b in sorted(connections.pairs):
        if not (1 <= a <= m and 1 <= b <= m):
            raise DimensionError(f"connection ({a}, {b}) outside ports 1..{m}")
        for ca, cb in zip(port_coordinates(a), port_coordinates(b)):
            G[ca, cb] = 1.0
            G[cb, ca] = 1.0
    logger.debug("assembled connection matrix: m=%d, %d connections", m, len(connections.pairs))
    return G


def _check_pair(S: ComplexMatrix, G: ComplexMatrix) -> None:
    if S.shape[0] != S.shape[1] or S.shape != G.shape:
        raise DimensionError(f"S {S.shape} and G {G.shape} must be square and equal in size")


def solve_transfer_with_condition(S: ArrayLike, G: ArrayLike) -> Tuple[ComplexMatrix, float]:
    """Solve (I − S·G)·H = S; returns (H, condition estimate of I − S·G)."""
    S, G = as_matrix(S), as_matrix(G)
    _check_pair(S, G)
    return solve_with_condition(identity(S.shape[0]) - S @ G, S)


def solve_transfer(S: ArrayLike, G: ArrayLike) -> ComplexMatrix:
    """Amplitude transfer function H with E_out = H·E_o."""
    H, _ = solve_transfer_with_condition(S, G)
    return H


def solve_transfer_literal(S: ArrayLike, G: ArrayLike) -> ComplexMatrix:
    """H = (S⁻¹ − G)⁻¹ exactly as written; needs an invertible S."""
    S, G = as_matrix(S), as_matrix(G)
    _check_pair(S, G)
    return invert(invert(S) - G)


def build_system(blocks: Sequence[ScatteringBlock], port_map: PortMap, G: ArrayLike) -> NetworkSystem:
    """Assemble S for one frequency and solve for H against a prebuilt G."""
    S = assemble_global_scattering(blocks, port_map)
    G = as_matrix(G)
    H, cond = solve_transfer_with_condition(S, G)
    return NetworkSystem(S=S, G=G, port_map=port_map, H=H, condition=cond)


def chain_product(jones_list: Sequence[ArrayLike]) -> ComplexMatrix:
    """Ĵ_N···Ĵ₂·Ĵ₁ for a list given in propagation order (Ĵ₁ first)."""
    if len(jones_list) == 0:
        raise DimensionError("chain product of an empty list")
    result = identity(2)
    for j in jones_list:
        j = as_matrix(j)
        if j.shape != (2, 2):
            raise DimensionError(f"Jones matrices must be 2x2, got {j.shape}")
        result = j @ result
    return result


def propagate(H: ArrayLike, E_o: ArrayLike) -> ComplexVector:
    """E_out = H·E_o."""
    H, E_o = as_matrix(H), as_vector(E_o)
    if H.shape[1] != E_o.shape[0]:
        raise DimensionError(f"H is {H.shape[0]}x{H.shape[1]} but E_o has {E_o.shape[0]} entries")
    return H @ E_o
