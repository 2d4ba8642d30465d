mod concurrency;
pub mod engine;
pub mod experiment;
pub mod gateway;
pub mod persona;
pub mod psychometrics;
pub mod scheduler;
pub mod seeding;
pub mod stats;
