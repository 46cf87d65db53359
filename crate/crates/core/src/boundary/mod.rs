//! Boundary behaviour of solved fields (decay exponents, Hopf ratios,
//! Hölder seminorms of quotients, expansions, tail functionals) and the
//! dyadic calculus of moduli of continuity.

pub mod dyadic;
pub mod fields;
pub mod modulus;

pub use dyadic::{gronwall_mk, hopf_mk, DyadicSchedule, GronwallReport, HopfReport};
pub use fields::*;
pub use modulus::{dini_integral, dini_integral_below, DiniResult, Modulus};
