//! Scene-driven front end for the path transport library.
//!
//! A scene file declares a chart, a path, a transport law, and a task; the
//! binary turns that into calls against `pathlift-core` and prints
//! trajectories, matrices, or law reports. Everything lives behind a library
//! interface so the integration tests can parse and rebuild scenes directly.

pub mod builder;
pub mod checks;
pub mod expr;
pub mod output;
pub mod runner;
pub mod scene;

pub use runner::run;
