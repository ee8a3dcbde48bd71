pub mod chem;
pub mod experiment;
pub mod gnn;
pub mod gradsuite;
pub mod gwm;
pub mod model;
pub mod tensor;
pub mod train;
