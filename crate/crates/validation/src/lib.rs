//! Holds the `acceptance` test target, which runs the library's end-to-end
//! numerical checks and prints one line per check.
