import math

import pytest

from hwbench.core import (
    CONSTANTS,
    CellGeometry,
    DomainError,
    PhysicalConstants,
    ReferenceAtmosphere,
    conductivity_from_derivative,
    nernst_activity,
    nernst_voltage,
    spreading_resistance,
)

REF = ReferenceAtmosphere(a_o2_reversible=0.21, temperature_k=973.15)
GEOM = CellGeometry(contact_radius_m=100e-6)


def test_constants_values():
    c = PhysicalConstants()
    assert c.faraday == 96485.332
    assert c.gas_constant == 8.31446
    assert c.z_electrons == 4


def test_constants_immutable():
    with pytest.raises(Exception):
        CONSTANTS.faraday = 1.0


def test_geometry_rejects_wide_contact():
    with pytest.raises(DomainError):
        CellGeometry(contact_radius_m=1e-3, electrolyte_thickness_m=2e-3)
    with pytest.raises(DomainError):
        CellGeometry(contact_radius_m=0.0)


def test_reference_atmosphere_invariants():
    with pytest.raises(DomainError):
        ReferenceAtmosphere(a_o2_reversible=0.0)
    with pytest.raises(DomainError):
        ReferenceAtmosphere(temperature_k=-1.0)


def test_nernst_activity_zero_voltage():
    assert nernst_activity(0.0, REF) == 0.21


def test_nernst_activity_100mV():
    # frozen from a 50-digit mpmath evaluation of 0.21*exp(4*0.1*F/(R*T))
    assert nernst_activity(0.1, REF) == pytest.approx(24.760068976149473, rel=1e-12)


def test_nernst_activity_symmetry():
    # a(+e) * a(-e) == a2^2 by symmetry of exp
    for e in (0.05, 0.1, 0.37, 0.6):
        prod = nernst_activity(e, REF) * nernst_activity(-e, REF)
        assert prod == pytest.approx(0.21**2, rel=1e-12)


def test_nernst_activity_strictly_increasing():
    voltages = [-0.6 + 0.05 * i for i in range(25)]
    acts = [nernst_activity(v, REF) for v in voltages]
    assert all(a > 0 for a in acts)
    assert all(b > a for a, b in zip(acts, acts[1:]))


def test_nernst_activity_overflow_rejected():
    with pytest.raises(DomainError):
        nernst_activity(20.0, REF)
    with pytest.raises(DomainError):
        nernst_activity(-20.0, REF)


def test_nernst_voltage_identity_at_reference():
    assert nernst_voltage(0.21, REF) == 0.0


def test_nernst_voltage_forced_unit_case():
    # a1 = a2 * e^4 with R*T/F = 1 gives exactly 1 V
    c = PhysicalConstants()
    ref = ReferenceAtmosphere(a_o2_reversible=1.0,
                              temperature_k=c.faraday / c.gas_constant)
    assert nernst_voltage(math.exp(4.0), ref) == pytest.approx(1.0, rel=1e-12)


def test_nernst_voltage_rejects_nonpositive():
    with pytest.raises(DomainError):
        nernst_voltage(0.0, REF)
    with pytest.raises(DomainError):
        nernst_voltage(-1.0, REF)


def test_nernst_round_trip():
    for e in (-0.6, -0.31, -0.001, 0.0, 0.002, 0.123, 0.6):
        back = nernst_voltage(nernst_activity(e, REF), REF)
        assert back == pytest.approx(e, rel=1e-12, abs=1e-15)


def test_activity_span_exceeds_24_decades():
    lo = nernst_activity(-0.6, REF)
    hi = nernst_activity(0.6, REF)
    decades = math.log10(hi / lo)
    # analytic value 2*4*0.6*F/(R*T*ln10) = 24.8584 (mpmath)
    assert decades > 24.0
    assert decades == pytest.approx(24.858390665586108, rel=1e-12)


def test_spreading_resistance_value():
    # frozen from mpmath: 1/(2*pi*1e-4)
    assert spreading_resistance(GEOM, 1.0) == pytest.approx(
        1591.5494309189533, rel=1e-12)


def test_spreading_resistance_scales_inversely_with_radius():
    r1 = spreading_resistance(CellGeometry(contact_radius_m=100e-6), 2.0)
    r2 = spreading_resistance(CellGeometry(contact_radius_m=200e-6), 2.0)
    assert r2 == pytest.approx(r1 / 2, rel=1e-12)


def test_spreading_resistance_algebraic_identity():
    sigma = 0.037
    r = spreading_resistance(GEOM, sigma)
    assert r * (2 * math.pi * GEOM.contact_radius_m * sigma) == pytest.approx(
        1.0, rel=1e-15)


def test_spreading_resistance_rejects_nonpositive_sigma():
    with pytest.raises(DomainError):
        spreading_resistance(GEOM, 0.0)


def test_conductivity_from_derivative_trivials():
    assert conductivity_from_derivative(0.0, GEOM) == 0.0
    di = 2 * math.pi * GEOM.contact_radius_m
    assert conductivity_from_derivative(di, GEOM) == pytest.approx(1.0, rel=1e-15)


def test_conductivity_inverts_spreading_resistance():
    # an ohmic cell I(E) = E / R(sigma0) must give back sigma0 exactly
    sigma0 = 3.7e-4
    g = 1.0 / spreading_resistance(GEOM, sigma0)
    assert conductivity_from_derivative(g, GEOM) == pytest.approx(sigma0, rel=1e-15)


def test_conductivity_accepts_negative_slope():
    assert conductivity_from_derivative(-1e-9, GEOM) < 0.0
