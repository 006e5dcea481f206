//! PoC sketch assembly.
