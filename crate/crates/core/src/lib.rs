pub mod bleu;
pub mod chart;
pub mod cli;
pub mod corpus;
pub mod model;
pub mod symbolizer;
pub mod synthetic;
pub mod tensor;
