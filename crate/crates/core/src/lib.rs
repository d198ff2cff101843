pub mod ced;
pub mod diagnostic;
pub mod exec;
pub mod msl;
pub mod templates;
pub mod partition;
pub mod derive;
pub mod lint;
pub mod workspace;
pub mod render;
pub mod synthetic;
pub mod cli;
