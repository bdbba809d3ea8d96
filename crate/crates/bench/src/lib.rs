//! Shared fixtures for the benchmarks.

use gfmc_core::control::{solve_operating_point, OperatingPoint};
use gfmc_core::small_signal::{
    characteristic_polynomial, transfer_coefficients, TransferCoefficients,
};
use gfmc_core::{profile, CircuitParams, ModelVariant, Polynomial, VsmParams};

pub struct Fixture {
    pub circuit: CircuitParams,
    pub control: VsmParams,
    pub op: OperatingPoint,
}

pub fn table1() -> Fixture {
    let circuit = profile::table1_circuit();
    let control = profile::table1_control();
    let op = solve_operating_point(&circuit, &control).expect("Table I has an operating point");
    Fixture {
        circuit,
        control,
        op,
    }
}

pub fn gains(f: &Fixture, variant: ModelVariant) -> TransferCoefficients {
    transfer_coefficients(&f.op, &f.circuit, f.circuit.quarter_period(), variant)
        .expect("gains assemble for Table I")
}

/// Cleared characteristic polynomial of `variant` at Table I.
pub fn characteristic(f: &Fixture, variant: ModelVariant) -> Polynomial {
    characteristic_polynomial(&gains(f, variant), &f.control)
        .expect("characteristic polynomial assembles")
        .poly
}
