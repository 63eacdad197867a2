//! Spherical buildings over small finite fields.

pub mod building;
pub mod coxeter;
pub mod extender;
pub mod field;
pub mod flag;
pub mod group_homs;
pub mod matrix;
pub mod region;
pub mod roots;
