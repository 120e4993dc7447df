"""Spin-lattice geometry: species pattern, donor placement, logical cells and frames.

Sites are integer triples ``(i, j, k)``. Every active axis holds ``3 * N`` sites
(``N`` ABC periods) with cyclic boundaries; an axis with a single unit is
degenerate and collapses to length 1. The donor spin ``D`` is off-lattice and
sits next to the home A site ``(0, 0, 0)``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator

AXES = ("x", "y", "z")
PAIRS = ("AB", "BC", "CA")
SPECIES = "ABC"
DONOR = "D"
HOME_CELL = (0, 0, 0)

Cell = tuple[int, int, int]
Site = tuple[int, int, int]


class LatticeError(ValueError):
    """Invalid geometry, axis, or coordinate."""


def axis_index(axis: str | int) -> int:
    if isinstance(axis, int) and 0 <= axis < 3:
        return axis
    try:
        return AXES.index(axis)
    except ValueError:
        raise LatticeError(f"unknown axis {axis!r}") from None


@dataclass(frozen=True)
class LatticeSpec:
    units: Cell
    detune_radius: int = 1
    # Number of pulse sets billed per global stage when the detuned region is non-empty.
    pulse_sets: int = 2

    def __post_init__(self) -> None:
        units = tuple(self.units)
        if len(units) != 3 or not all(isinstance(n, int) and not isinstance(n, bool) for n in units):
            raise LatticeError(f"units must be three integers, got {self.units!r}")
        if any(n < 1 for n in units):
            raise LatticeError(f"units must be positive, got {units}")
        if not isinstance(self.detune_radius, int) or self.detune_radius < 0:
            raise LatticeError(f"detune_radius must be a non-negative integer, got {self.detune_radius!r}")
        if not isinstance(self.pulse_sets, int) or self.pulse_sets < 1:
            raise LatticeError(f"pulse_sets must be a positive integer, got {self.pulse_sets!r}")
        object.__setattr__(self, "units", units)

    @property
    def shape(self) -> Site:
        """Sites per axis: ``3 * N`` on active axes, 1 on degenerate ones."""
        return tuple(3 * n if n >= 2 else 1 for n in self.units)

    @property
    def active_axes(self) -> tuple[str, ...]:
        return tuple(a for a, n in zip(AXES, self.units) if n >= 2)

    def is_active(self, axis: str | int) -> bool:
        return self.units[axis_index(axis)] >= 2

    @property
    def num_sites(self) -> int:
        lx, ly, lz = self.shape
        return lx * ly * lz

    @property
    def num_cells(self) -> int:
        nx, ny, nz = self.units
        return nx * ny * nz

    def to_dict(self) -> dict:
        return {"units": list(self.units), "detune_radius": self.detune_radius, "pulse_sets": self.pulse_sets}

    @classmethod
    def from_dict(cls, data: dict) -> "LatticeSpec":
        try:
            units = tuple(data["units"])
        except (KeyError, TypeError):
            raise LatticeError("lattice spec requires a 'units' array") from None
        return cls(units, data.get("detune_radius", 1), data.get("pulse_sets", 2))


def logical_capacity(spec: LatticeSpec) -> int:
    """Addressable cells minus the reserved home cell."""
    return spec.num_cells - 1


def total_spins(spec: LatticeSpec) -> int:
    return spec.num_sites + 1


def species(site: Site) -> str:
    return SPECIES[sum(site) % 3]


def sites(spec: LatticeSpec) -> Iterator[Site]:
    """All lattice sites in lexicographic order."""
    return itertools.product(*(range(n) for n in spec.shape))


def site_bit(spec: LatticeSpec, site: Site | str) -> int:
    """State-vector bit of a site; bit 0 is the donor."""
    if site == DONOR:
        return 0
    lx, ly, lz = spec.shape
    i, j, k = site
    if not (0 <= i < lx and 0 <= j < ly and 0 <= k < lz):
        raise LatticeError(f"site {site} outside lattice of shape {spec.shape}")
    return 1 + (i * ly + j) * lz + k


def bit_site(spec: LatticeSpec, bit: int) -> Site | str:
    if bit == 0:
        return DONOR
    _, ly, lz = spec.shape
    idx = bit - 1
    if not 0 <= idx < spec.num_sites:
        raise LatticeError(f"bit {bit} outside lattice")
    return (idx // (ly * lz), (idx // lz) % ly, idx % lz)


def cells(spec: LatticeSpec) -> Iterator[Cell]:
    """Logical cells in lexicographic order, home cell first."""
    return itertools.product(*(range(n) for n in spec.units))


def validate_cell(spec: LatticeSpec, cell) -> Cell:
    cell = tuple(cell)
    if len(cell) != 3 or not all(isinstance(c, int) and 0 <= c < n for c, n in zip(cell, spec.units)):
        raise LatticeError(f"cell {cell} outside cell grid {spec.units}")
    return cell


def cell_site(cell: Cell) -> Site:
    """A site storing a cell's qubit (degenerate axes only ever hold coordinate 0)."""
    return tuple(3 * c for c in cell)


def logical_sites(spec: LatticeSpec) -> set[Site]:
    return {cell_site(c) for c in cells(spec)}


def stage_pairs(spec: LatticeSpec, axis: str | int, pair: str) -> list[tuple[Site, Site]]:
    """Site pairs swapped by one global stage.

    A stage for pair ``ST`` couples every ``S`` site with its ``+axis`` neighbour,
    which is always a ``T`` site. The pairs are disjoint.
    """
    a = axis_index(axis)
    if not spec.is_active(a):
        raise LatticeError(f"axis {AXES[a]} is degenerate for units {spec.units}")
    if pair not in PAIRS:
        raise LatticeError(f"unknown species pair {pair!r}")
    s = SPECIES.index(pair[0])
    length = spec.shape[a]
    out = []
    for p in sites(spec):
        if sum(p) % 3 == s:
            q = list(p)
            q[a] = (q[a] + 1) % length
            out.append((p, tuple(q)))
    return out


def detuned_sites(spec: LatticeSpec) -> set[Site]:
    """Sites within cyclic Chebyshev distance ``detune_radius`` of the home site."""
    r = spec.detune_radius

    def near(c: int, length: int) -> bool:
        return min(c, length - c) <= r

    return {p for p in sites(spec) if all(near(c, n) for c, n in zip(p, spec.shape))}


@dataclass(frozen=True)
class Frame:
    """Cyclic offset, in cells, between logical and physical cell positions."""

    offset: Cell = (0, 0, 0)

    @property
    def is_identity(self) -> bool:
        return self.offset == (0, 0, 0)


IDENTITY_FRAME = Frame()


def physical_cell(frame: Frame, cell: Cell, spec: LatticeSpec) -> Cell:
    return tuple((u + o) % n for u, o, n in zip(cell, frame.offset, spec.units))


def shift_frame(frame: Frame, axis: str | int, direction: int, spec: LatticeSpec) -> Frame:
    a = axis_index(axis)
    if not spec.is_active(a):
        raise LatticeError(f"cannot shift along degenerate axis {AXES[a]}")
    if direction not in (1, -1):
        raise LatticeError(f"direction must be +1 or -1, got {direction!r}")
    offset = list(frame.offset)
    offset[a] = (offset[a] + direction) % spec.units[a]
    return Frame(tuple(offset))


def _cyclic_steps(position: int, n: int) -> int:
    # signed s with position + s == 0 (mod n), |s| minimal, ties toward +
    s = (-position) % n
    return s if 2 * s <= n else s - n


def route_steps(target_cell: Cell, frame: Frame, spec: LatticeSpec) -> Cell:
    """Signed per-axis shift counts bringing ``target_cell``'s content to the home cell.

    A positive step is one ``macro_shift(axis, +1)``, which moves contents one
    cell toward increasing coordinate.
    """
    target_cell = validate_cell(spec, target_cell)
    here = physical_cell(frame, target_cell, spec)
    return tuple(_cyclic_steps(c, n) for c, n in zip(here, spec.units))
