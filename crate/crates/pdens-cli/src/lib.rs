pub mod dsl;
pub mod run;
