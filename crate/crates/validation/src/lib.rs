//! Acceptance checks live in the test targets.
