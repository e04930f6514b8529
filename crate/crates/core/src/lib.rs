pub mod diff;
pub mod tokenize;
pub mod align;
pub mod annotate;
pub mod similarity;
pub mod html;
pub mod corpus;
pub mod analyzers;
pub mod synth;
