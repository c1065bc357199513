"""Trajectory sampling error, nearest-neighbor search and sample-based quality assessment."""

from .errors import (
    CoordinateError,
    DataError,
    EmptyIndexError,
    EmptyTrajectoryError,
    GeodesicConvergenceError,
    ParseError,
    TrajqualError,
)
from .geodesy import (
    WGS84,
    Ellipsoid,
    GeoPoint,
    Mode,
    Trajectory,
    geodesic_distance,
    point_polyline_distance,
    point_segment_distance,
    polyline_length,
)
from .ingest import Poi, ReferenceRecord, parse_geonames, parse_plt, parse_reference
from .nnindex import NnResult, build_index, nn_bruteforce, nn_indexed
from .quality import assess, combine_selection, combine_union, completeness, updateness_report
from .sampling import SamplingRate, periodic_sample, required_sample_size, uniform_sample

__version__ = "0.1.0"
