#![no_std]
extern crate alloc;

pub mod algebra;
pub mod cylinders;
pub mod ech;
pub mod error;
pub mod lattice;
pub mod linsolve;
pub mod models;
pub mod operator;
pub mod primitive;
pub mod reeb;
pub mod surface;
pub mod torsion;

pub use error::{Error, ErrorKind, Result};

pub type Rational = num_rational::BigRational;
