//! Robustness auditing for ordinary least squares: bounds on the minimum
//! number of samples whose removal flips the sign of a chosen coefficient.

pub mod certificate;
pub mod data;
pub mod linalg;
pub mod exact_binary;
pub mod exact_did;
pub mod oracle;
pub mod influence;
pub mod spectral;
pub mod miqcp;
pub mod report;
