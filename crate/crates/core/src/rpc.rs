//! Optional online front end.
