//! Numeric support: compensated summation, adaptive quadrature, special
//! functions.

pub mod kahan;
pub mod quad;
pub mod special;
