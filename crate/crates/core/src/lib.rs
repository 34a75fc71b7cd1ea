pub mod classify;
pub mod dataset;
pub mod error;
pub mod fft;
pub mod grid;
pub mod io;
pub mod preprocess;
pub mod riesz;
pub mod representation;
pub mod verify;
pub mod table;
