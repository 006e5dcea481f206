//! End-to-end pipeline.
