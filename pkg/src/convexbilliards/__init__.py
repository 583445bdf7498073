"""Numerical toolkit for planar convex billiards.

Curves are represented by trigonometric-polynomial curvature profiles in
the tangent angle; on top of that sit the billiard map with its exact
tangent map, diameter (2-periodic orbit) location and stability, normal
perturbations, and the Birkhoff normal form / twist coefficient at
elliptic diameters.
"""

__version__ = "0.1.0"

from .curves import (ConvexCurve, CurvatureProfile, ParametricSpec,
                     angle_of_arclength, arclength, build_from_curvature,
                     build_from_parametric, curvature_derivatives, ellipse,
                     ellipse_spec, evaluate, fig2_curve, fig2_spec, unit_circle)
from .diameters import (Diameter, StabilityClass, chord_function, classify,
                        dt2_matrix, find_diameters, is_resonant,
                        resonance_distance, rotation_angle, second_derivative_at)
from .dynamics import (Orbit, PeriodicOrbit, PhaseState, SPState, chord,
                       find_periodic_orbit, find_periodic_orbits, from_sp,
                       invariant_density, iterate, iterate_batch, next_impact,
                       tangent_map, to_sp)
from .normalform import (ComplexNormalCoeffs, IslandProbe, Jet2D, TwistResult,
                         complexify, island_probe, jet3_t2, jet3_t2_fd,
                         jet_difference, tau1, tau1_contact_slope, tau1_slope,
                         twist_pipeline)
from .perturbations import (ContactData, PerturbationField, PerturbedCurve,
                            TwistCertificate, admissible, antipodal_deviation,
                            apply, break_resonance, c2_norm, ensure_twist,
                            h_inverse, h_map, resonance_gap_function,
                            resonance_gap_partials, third_order_contact)
from .trigpoly import TrigPoly
