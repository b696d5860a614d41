pub mod asymptotics;
pub mod density;
pub mod elliptic;
pub mod error;
pub mod grid;
pub mod io;
pub mod operators;
pub mod pme;
