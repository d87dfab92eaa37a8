pub mod dock;
pub mod fields;
pub mod fixture;
pub mod spectrum;
