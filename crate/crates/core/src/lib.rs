pub mod error;
pub mod galois;
pub mod index;
pub mod instances;
pub mod indexcode;
pub mod netcode;
pub mod network;
pub mod reduction;
pub mod solver;
