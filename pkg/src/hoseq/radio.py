"""Random base-station deployments and the received-power model.

A deployment drops base stations uniformly at random in a rectangular
area. Every station carries identical sector antennas with a parabolic
(3GPP-style) gain pattern; received power at a UE position is transmit
power plus sector gain minus log-distance LOS path loss. There is no
fading or shadowing: received power is a pure function of geometry, so
the whole radio layer is deterministic given the deployment seed.

Cell and base station are synonymous here; sectors only shape the gain
of their station and are not cells of their own.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyDeployment, InvalidArea, ParseError


@dataclass(frozen=True)
class AreaConfig:
    """Rectangular service area with its origin at (0, 0), extents in meters."""

    width: float = 1000.0
    height: float = 1000.0

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise InvalidArea(f"area extents must be positive, got {self.width} x {self.height}")
        object.__setattr__(self, "width", float(self.width))
        object.__setattr__(self, "height", float(self.height))

    def contains(self, x: float, y: float) -> bool:
        return 0.0 <= x <= self.width and 0.0 <= y <= self.height


@dataclass(frozen=True)
class RadioConfig:
    """Transmit power, path-loss law, and sector antenna pattern.

    path_loss_exponent is the alpha of 10*alpha*log10(d/d0) LOS loss;
    distances below reference_distance_m are clamped to it. The antenna
    pattern is parabolic in the angle off boresight: attenuation
    12*(theta/beamwidth_3db_deg)^2, clamped at front_back_ratio_db.
    """

    tx_power_dbm: float = 43.0
    path_loss_exponent: float = 3.1
    reference_distance_m: float = 1.0
    max_gain_dbi: float = 14.0
    beamwidth_3db_deg: float = 65.0
    front_back_ratio_db: float = 30.0

    def __post_init__(self):
        if self.path_loss_exponent <= 0:
            raise ValueError("path_loss_exponent must be positive")
        if self.reference_distance_m <= 0:
            raise ValueError("reference_distance_m must be positive")
        if not (0 < self.beamwidth_3db_deg <= 180):
            raise ValueError("beamwidth_3db_deg must lie in (0, 180]")
        if self.front_back_ratio_db <= 0:
            raise ValueError("front_back_ratio_db must be positive")
        for name in (
            "tx_power_dbm",
            "path_loss_exponent",
            "reference_distance_m",
            "max_gain_dbi",
            "beamwidth_3db_deg",
            "front_back_ratio_db",
        ):
            object.__setattr__(self, name, float(getattr(self, name)))


@dataclass(frozen=True)
class BaseStation:
    """One base station: 1-based cell ID, position, and sector boresights."""

    cell_id: int
    position: tuple[float, float]
    sector_orientations: tuple[float, ...]

    def __post_init__(self):
        if len(set(self.sector_orientations)) != len(self.sector_orientations):
            raise ValueError(f"station {self.cell_id} has duplicate sector orientations")
        for o in self.sector_orientations:
            if not (0.0 <= o < 360.0):
                raise ValueError(f"sector orientation {o} outside [0, 360)")
        object.__setattr__(
            self, "position", (float(self.position[0]), float(self.position[1]))
        )
        object.__setattr__(
            self, "sector_orientations", tuple(float(o) for o in self.sector_orientations)
        )


@dataclass
class Deployment:
    """Immutable set of base stations inside an area, plus its seed.

    Station IDs are exactly {1..L} in order. Treat instances as frozen;
    cached geometry arrays are attached lazily for the vectorized power
    computation.
    """

    area: AreaConfig
    radio: RadioConfig
    stations: tuple[BaseStation, ...]
    seed: int

    _geom: tuple[np.ndarray, np.ndarray] | None = field(
        default=None, init=False, repr=False, compare=False
    )

    def __post_init__(self):
        if len(self.stations) == 0:
            raise EmptyDeployment("deployment needs at least one base station")
        ids = [bs.cell_id for bs in self.stations]
        if ids != list(range(1, len(ids) + 1)):
            raise ValueError("station IDs must be exactly 1..L in order")
        for bs in self.stations:
            if not self.area.contains(*bs.position):
                raise ValueError(f"station {bs.cell_id} lies outside the area")

    @property
    def n_cells(self) -> int:
        return len(self.stations)

    def geometry(self) -> tuple[np.ndarray, np.ndarray]:
        """(L, 2) positions and (L, S) boresight matrix for vector math.

        Stations with fewer sectors than the widest one are padded by
        repeating their first boresight, which leaves per-station maxima
        unchanged.
        """
        if self._geom is None:
            pos = np.array([bs.position for bs in self.stations], dtype=np.float64)
            n_sec = max(len(bs.sector_orientations) for bs in self.stations)
            bore = np.empty((len(self.stations), n_sec), dtype=np.float64)
            for i, bs in enumerate(self.stations):
                row = list(bs.sector_orientations)
                row += [row[0]] * (n_sec - len(row))
                bore[i] = row
            self._geom = (pos, bore)
        return self._geom


def generate_deployment(
    seed: int,
    area: AreaConfig,
    n_bs: int,
    radio: RadioConfig,
    n_sectors: int = 3,
) -> Deployment:
    """Drop n_bs stations uniformly at random in the area.

    Sector boresights are evenly spaced starting at 0 degrees. The same
    arguments always produce a bit-identical deployment.
    """
    if n_bs < 1:
        raise EmptyDeployment("n_bs must be at least 1")
    if n_sectors < 1:
        raise ValueError("n_sectors must be at least 1")
    rng = np.random.default_rng(seed)
    xy = rng.uniform(size=(n_bs, 2)) * np.array([area.width, area.height])
    orientations = tuple(360.0 * j / n_sectors for j in range(n_sectors))
    stations = tuple(
        BaseStation(cell_id=i + 1, position=(float(x), float(y)), sector_orientations=orientations)
        for i, (x, y) in enumerate(xy)
    )
    return Deployment(area=area, radio=radio, stations=stations, seed=seed)


def path_loss(distance_m, radio: RadioConfig):
    """LOS path loss in dB: 10*alpha*log10(d/d0), clamped below d0.

    Accepts scalars or arrays; the clamp keeps the loss at 0 dB for
    distances at or below the reference distance.
    """
    d = np.maximum(distance_m, radio.reference_distance_m)
    return 10.0 * radio.path_loss_exponent * np.log10(d / radio.reference_distance_m)


def sector_gain(boresight_deg, ue_azimuth_deg, radio: RadioConfig):
    """Antenna gain in dBi at the given UE azimuth.

    theta is the smallest absolute angle between boresight and azimuth,
    in [0, 180]; attenuation is min(12*(theta/bw)^2, front_back_ratio).
    Accepts scalars or arrays.
    """
    theta = np.abs(
        (np.asarray(ue_azimuth_deg, dtype=np.float64) - boresight_deg + 180.0) % 360.0 - 180.0
    )
    att = np.minimum(
        12.0 * (theta / radio.beamwidth_3db_deg) ** 2, radio.front_back_ratio_db
    )
    return radio.max_gain_dbi - att


def rsrp(
    bs: BaseStation,
    sector_index: int,
    ue_pos: tuple[float, float],
    radio: RadioConfig,
) -> float:
    """Received power in dBm from one sector of one station at ue_pos."""
    dx = ue_pos[0] - bs.position[0]
    dy = ue_pos[1] - bs.position[1]
    dist = math.hypot(dx, dy)
    azimuth = math.degrees(math.atan2(dy, dx)) % 360.0
    gain = sector_gain(bs.sector_orientations[sector_index], azimuth, radio)
    return float(radio.tx_power_dbm + gain - path_loss(dist, radio))


def cell_powers(deployment: Deployment, ue_pos: tuple[float, float]) -> np.ndarray:
    """Best-sector RSRP per cell at ue_pos; index i holds cell-ID i+1."""
    pos, bore = deployment.geometry()
    radio = deployment.radio
    dx = ue_pos[0] - pos[:, 0]
    dy = ue_pos[1] - pos[:, 1]
    dist = np.hypot(dx, dy)
    azimuth = np.degrees(np.arctan2(dy, dx)) % 360.0
    gain = sector_gain(bore, azimuth[:, None], radio)  # (L, S)
    return radio.tx_power_dbm + gain.max(axis=1) - path_loss(dist, radio)


def best_cell(deployment: Deployment, ue_pos: tuple[float, float]) -> tuple[int, float]:
    """Cell-ID and RSRP of the strongest cell at ue_pos.

    Ties go to the lowest cell-ID (and, inside a station, the lowest
    sector index, which argmax picks by construction).
    """
    powers = cell_powers(deployment, ue_pos)
    idx = int(np.argmax(powers))
    return idx + 1, float(powers[idx])


# --- deployment files ------------------------------------------------------
#
# Plain-text sections with one key = value per line; [stations] rows are
# "<cell_id> = <x> <y> <o1,o2,...>". Floats are written with repr() so a
# load/save round trip is byte-exact.


def save_deployment(deployment: Deployment, path, provenance: str | None = None) -> None:
    lines = []
    if provenance:
        lines.append(f"# {provenance}")
    lines.append("[deployment]")
    lines.append(f"seed = {deployment.seed}")
    lines.append("")
    lines.append("[area]")
    lines.append(f"width_m = {deployment.area.width!r}")
    lines.append(f"height_m = {deployment.area.height!r}")
    lines.append("")
    lines.append("[radio]")
    r = deployment.radio
    lines.append(f"tx_power_dbm = {r.tx_power_dbm!r}")
    lines.append(f"path_loss_exponent = {r.path_loss_exponent!r}")
    lines.append(f"reference_distance_m = {r.reference_distance_m!r}")
    lines.append(f"max_gain_dbi = {r.max_gain_dbi!r}")
    lines.append(f"beamwidth_3db_deg = {r.beamwidth_3db_deg!r}")
    lines.append(f"front_back_ratio_db = {r.front_back_ratio_db!r}")
    lines.append("")
    lines.append("[stations]")
    for bs in deployment.stations:
        orient = ",".join(repr(o) for o in bs.sector_orientations)
        lines.append(f"{bs.cell_id} = {bs.position[0]!r} {bs.position[1]!r} {orient}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_deployment(path) -> Deployment:
    import configparser

    parser = configparser.ConfigParser()
    parser.optionxform = str  # keep station keys verbatim
    with open(path, encoding="utf-8") as fh:
        parser.read_file(fh)
    try:
        seed = parser.getint("deployment", "seed")
        area = AreaConfig(
            width=parser.getfloat("area", "width_m"),
            height=parser.getfloat("area", "height_m"),
        )
        radio = RadioConfig(
            tx_power_dbm=parser.getfloat("radio", "tx_power_dbm"),
            path_loss_exponent=parser.getfloat("radio", "path_loss_exponent"),
            reference_distance_m=parser.getfloat("radio", "reference_distance_m"),
            max_gain_dbi=parser.getfloat("radio", "max_gain_dbi"),
            beamwidth_3db_deg=parser.getfloat("radio", "beamwidth_3db_deg"),
            front_back_ratio_db=parser.getfloat("radio", "front_back_ratio_db"),
        )
        stations = []
        for key, value in parser.items("stations"):
            parts = value.split()
            if len(parts) != 3:
                raise ParseError(f"bad station row for cell {key!r}: {value!r}")
            x, y = float(parts[0]), float(parts[1])
            orientations = tuple(float(tok) for tok in parts[2].split(","))
            stations.append(
                BaseStation(cell_id=int(key), position=(x, y), sector_orientations=orientations)
            )
    except (configparser.Error, ValueError) as exc:
        raise ParseError(f"invalid deployment file {path}: {exc}") from exc
    stations.sort(key=lambda bs: bs.cell_id)
    return Deployment(area=area, radio=radio, stations=tuple(stations), seed=seed)
