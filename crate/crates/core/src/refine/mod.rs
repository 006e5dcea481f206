//! Provider-driven completion and refinement.
